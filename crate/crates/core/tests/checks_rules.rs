//! One test per well-formedness rule, plus determinism and the
//! totality-of-simulation property on checked models.

use rcml_core::model::*;
use rcml_core::parser::Severity;
use rcml_core::{check, parse, resolve, testgen};

fn check_src(src: &str) -> rcml_core::CheckReport {
    check(&resolve(&parse(src, "t.rcml").unwrap()).unwrap())
}

fn rules(report: &rcml_core::CheckReport) -> Vec<&'static str> {
    report.findings.iter().map(|f| f.rule).collect()
}

#[test]
fn corpus_has_no_findings() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    for name in ["coffee.rcml", "avoidcrash_v1.rcml", "avoidcrash_v2.rcml", "avoidcrash_v3.rcml", "pingpong.rcml"] {
        let text = std::fs::read_to_string(format!("{root}/{name}")).unwrap();
        let report = check(&resolve(&parse(&text, name).unwrap()).unwrap());
        assert!(report.is_empty(), "{name}:\n{report}");
    }
}

#[test]
fn r1_connector_type_mismatch() {
    let src = "enum MotorCmd { fwd } enum LineStatus { ok }\n\
        component P { port out MotorCmd o; }\n\
        component Q { port in LineStatus i; }\n\
        component S { instance P p; instance Q q; connect p.o -> q.i; }";
    let report = check_src(src);
    assert!(rules(&report).contains(&"R1"), "{report}");
}

#[test]
fn r2_direction_legality() {
    // Composite in-port wired straight to a composite out-port.
    let src = "component S { port in bool x; port out bool y; instance I i; connect x -> y; }\n\
        component I { port in bool a; }";
    let report = check_src(src);
    assert!(rules(&report).contains(&"R2"), "{report}");
    // Reading from a subcomponent in-port is also illegal.
    let src = "component I { port in bool a; }\n\
        component S { port out bool y; instance I i; connect i.a -> y; }";
    assert!(rules(&check_src(src)).contains(&"R2"));
}

#[test]
fn r3_single_incoming_per_target() {
    let src = "component I { port in bool a; }\n\
        component S { port in bool x; port in bool y; instance I i;\n\
        connect x -> i.a; connect y -> i.a; }";
    let report = check_src(src);
    assert!(rules(&report).contains(&"R3"), "{report}");
}

#[test]
fn r4_value_typing() {
    // Pattern literal outside the port domain.
    let src = "enum A { a } enum B { b }\n\
        component C { port in A p; automaton m { state s; initial s; s -> s {p: b}; } }";
    assert!(rules(&check_src(src)).contains(&"R4"));
    // Output message outside the port domain.
    let src = "enum A { a } enum B { b }\n\
        component C { port in A p; port out A o; automaton m { state s; initial s; s -> s {p: a} / {o: b}; } }";
    assert!(rules(&check_src(src)).contains(&"R4"));
    // Variable initial value outside its domain.
    let src = "component C { var int(0..3) x = 7; }";
    assert!(rules(&check_src(src)).contains(&"R4"));
    // Assignment type mismatch.
    let src = "enum A { a }\n\
        component C { port in A p; var bool v = false; automaton m { state s; initial s; s -> s {p: _} / {v = p}; } }";
    assert!(rules(&check_src(src)).contains(&"R4"));
    // Writing an in-port.
    let src = "enum A { a }\n\
        component C { port in A p; automaton m { state s; initial s; s -> s / {p: a}; } }";
    assert!(rules(&check_src(src)).contains(&"R4"));
}

#[test]
fn r5_guard_typing() {
    // Non-boolean guard.
    let src = "component C { var int(0..3) x = 0; automaton m { state s; initial s; s -> s [x + 1]; } }";
    assert!(rules(&check_src(src)).contains(&"R5"));
    // Reading a port without requiring a message on it.
    let src = "component C { port in bool p; automaton m { state s; initial s; s -> s [p]; } }";
    assert!(rules(&check_src(src)).contains(&"R5"));
    // Reading a port matched `none`.
    let src = "component C { port in bool p; automaton m { state s; initial s; s -> s {p: none} [p]; } }";
    assert!(rules(&check_src(src)).contains(&"R5"));
    // Cross-enum comparison.
    let src = "enum A { a } enum B { b }\n\
        component C { port in A p; port in B q; automaton m { state s; initial s; s -> s {p: _, q: _} [p == q]; } }";
    assert!(rules(&check_src(src)).contains(&"R5"));
    // A wildcard pattern makes the read legal.
    let src = "component C { port in bool p; automaton m { state s; initial s; s -> s {p: _} [p]; } }";
    assert!(check_src(src).is_empty());
}

/// R6 and R7 defend against hand-built IR; the resolver cannot produce
/// dangling indices, so the violating model is constructed directly.
#[test]
fn r6_foreign_port_reference() {
    let src = "enum A { a } component C { port in A p; automaton m { state s; initial s; s -> s {p: a}; } }";
    let mut model = resolve(&parse(src, "t.rcml").unwrap()).unwrap();
    // Point the pattern at a port index the component does not declare.
    model.components[0].automata[0].transitions[0].input_pattern[0].0 = PortId(7);
    let report = check(&model);
    assert!(rules(&report).contains(&"R6"), "{report}");
}

#[test]
fn r7_initial_state_declared() {
    let src = "component C { automaton m { state s; initial s; } }";
    let mut model = resolve(&parse(src, "t.rcml").unwrap()).unwrap();
    model.components[0].automata[0].initial_state = StateId(5);
    let report = check(&model);
    assert!(rules(&report).contains(&"R7"), "{report}");
}

#[test]
fn r8_unreachable_state_warning() {
    let src = "enum A { a }\n\
        component C { port in A p; automaton m { state s, t, orphan; initial s; s -> t {p: a}; } }";
    let report = check_src(src);
    let finding = report
        .findings
        .iter()
        .find(|f| f.rule == "R8")
        .expect("R8 warning");
    assert_eq!(finding.severity, Severity::Warning);
    assert!(finding.message.contains("orphan"));
}

/// Every state R8 reports is genuinely unreachable and every unreported
/// state is reachable, against an independent fixpoint computation.
#[test]
fn r8_matches_reachability_oracle() {
    for seed in 400..440u64 {
        let src = testgen::random_automata_source(seed, &testgen::AutomatonGenConfig::default(), 1);
        let model = resolve(&parse(&src, "gen.rcml").unwrap()).unwrap();
        let report = check(&model);
        let comp = &model.components[0];
        let aut = &comp.automata[0];

        let mut reachable = vec![false; aut.states.len()];
        reachable[aut.initial_state.idx()] = true;
        loop {
            let mut changed = false;
            for t in &aut.transitions {
                if reachable[t.source.idx()] && !reachable[t.target.idx()] {
                    reachable[t.target.idx()] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (i, state) in aut.states.iter().enumerate() {
            let reported = report
                .findings
                .iter()
                .any(|f| f.rule == "R8" && f.message.contains(&format!("`{state}`")));
            assert_eq!(reported, !reachable[i], "seed {seed} state {state}");
        }
    }
}

#[test]
fn r9_single_executable_automaton() {
    let src = "component C {\n\
        automaton a { state s; initial s; }\n\
        automaton b { state s; initial s; }\n}";
    let report = check_src(src);
    assert!(rules(&report).contains(&"R9"), "{report}");
    // One executable plus monitors is fine.
    let src = "component C {\n\
        automaton a { state s; initial s; }\n\
        automaton b monitor { state s; initial s; }\n}";
    assert!(check_src(src).is_empty());
}

#[test]
fn r10_executable_on_decomposed_component() {
    let src = "component I { port in bool a; }\n\
        component S { port in bool x; instance I i; connect x -> i.a;\n\
        automaton req { state s; initial s; } }";
    let report = check_src(src);
    let finding = report.findings.iter().find(|f| f.rule == "R10").unwrap();
    assert_eq!(finding.severity, Severity::Warning);
}

#[test]
fn r11_recursive_composition() {
    let src = "component A { port in bool x; instance B b; connect x -> b.x; }\n\
        component B { port in bool x; instance A a; connect x -> a.x; }";
    let report = check_src(src);
    assert!(rules(&report).contains(&"R11"), "{report}");
}

#[test]
fn r12_unconnected_in_port_warning() {
    let src = "component I { port in bool a; port in bool b; }\n\
        component S { port in bool x; instance I i; connect x -> i.a; }";
    let report = check_src(src);
    let finding = report.findings.iter().find(|f| f.rule == "R12").unwrap();
    assert_eq!(finding.severity, Severity::Warning);
    assert!(finding.message.contains("i.b"));
}

#[test]
fn check_is_deterministic() {
    let src = "enum A { a } enum B { b }\n\
        component P { port out A o; }\n\
        component Q { port in B i; port in B j; }\n\
        component S { instance P p; instance Q q; connect p.o -> q.i; }";
    let model = resolve(&parse(src, "t.rcml").unwrap()).unwrap();
    let a = check(&model);
    let b = check(&model);
    assert_eq!(format!("{a}"), format!("{b}"));
    assert!(a.findings.len() >= 2);
}

/// Any model that passes check simulates on any input without internal
/// failures.
#[test]
fn checked_models_simulate_totally() {
    use rcml_core::sim::{simulate, Completion, SimConfig, Strategy};
    let config = testgen::AutomatonGenConfig::default();
    for seed in 500..560u64 {
        let src = testgen::random_automata_source(seed, &config, 1);
        // Promote the generated monitor to the executable automaton.
        let src = src.replace("automaton a0 monitor", "automaton a0");
        let model = resolve(&parse(&src, "gen.rcml").unwrap()).unwrap();
        let report = check(&model);
        assert!(!report.has_errors(), "seed {seed}:\n{report}");
        let comp_id = model.component_by_name("C").unwrap();
        let comp = model.component(comp_id);
        let bundle = testgen::random_bundle(&model, comp, seed ^ 0xffff, 8);
        let trace = simulate(
            &model,
            comp_id,
            &bundle,
            &SimConfig {
                completion: Completion::Ignore,
                strategy: Strategy::Random { seed },
                max_rounds: 8,
            },
        )
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(trace.rounds, 8);
    }
}
