//! Parser and pretty-printer properties: canonical round-trips, error
//! recovery, and purity.

use rcml_core::{parse, pretty_print, testgen};

fn corpus_files() -> Vec<(String, String)> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    ["coffee.rcml", "avoidcrash_v1.rcml", "avoidcrash_v2.rcml", "avoidcrash_v3.rcml", "pingpong.rcml"]
        .iter()
        .map(|name| {
            (
                name.to_string(),
                std::fs::read_to_string(format!("{root}/{name}")).expect("corpus file"),
            )
        })
        .collect()
}

#[test]
fn corpus_round_trips() {
    for (name, text) in corpus_files() {
        let model = parse(&text, &name).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let printed = pretty_print(&model);
        let reparsed = parse(&printed, &name).unwrap_or_else(|e| panic!("{name} reprint: {e:?}"));
        assert_eq!(model, reparsed, "{name} round trip");
        // Printing is a fixpoint after one canonicalization.
        assert_eq!(printed, pretty_print(&reparsed), "{name} print fixpoint");
    }
}

#[test]
fn random_models_round_trip() {
    for seed in 0..60u64 {
        let src = testgen::random_model_source(seed);
        let model = parse(&src, "gen.rcml").unwrap_or_else(|e| panic!("seed {seed}: {e:?}"));
        let reparsed = parse(&pretty_print(&model), "gen.rcml").expect("reparses");
        assert_eq!(model, reparsed, "seed {seed}");
    }
}

#[test]
fn parsing_is_pure() {
    let (_, text) = &corpus_files()[0];
    let a = parse(text, "x.rcml").unwrap();
    let b = parse(text, "x.rcml").unwrap();
    assert_eq!(a, b);
    assert_eq!(pretty_print(&a), pretty_print(&b));
}

#[test]
fn enum_decl_parses() {
    let model = parse("enum MotorCmd { fwd, stop, backRight }", "m.rcml").unwrap();
    assert_eq!(model.enums.len(), 1);
    let e = &model.enums[0].node;
    assert_eq!(e.name.node, "MotorCmd");
    let lits: Vec<&str> = e.literals.iter().map(|l| l.node.as_str()).collect();
    assert_eq!(lits, ["fwd", "stop", "backRight"]);
}

#[test]
fn empty_component_parses() {
    let model = parse("component Empty { }", "m.rcml").unwrap();
    assert_eq!(model.components.len(), 1);
    let c = &model.components[0].node;
    assert!(c.ports.is_empty() && c.instances.is_empty() && c.automata.is_empty());
}

#[test]
fn missing_semicolon_reports_at_closing_brace() {
    let errs = parse("component A { port in MotorCmd cmd }", "m.rcml").unwrap_err();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].message.contains("expected `;`"), "{}", errs[0].message);
    // The diagnostic points at the `}` token.
    assert_eq!(errs[0].span.start_line, 1);
    assert_eq!(errs[0].span.start_col, 36);
}

#[test]
fn recovery_reports_every_statement_error() {
    let src = "component A {\n  port cmd;\n  var int(0..3) x 0;\n  instance ;\n}";
    let errs = parse(src, "m.rcml").unwrap_err();
    assert!(errs.len() >= 3, "expected 3+ diagnostics, got {errs:#?}");
    let lines: Vec<u32> = errs.iter().map(|e| e.span.start_line).collect();
    assert!(lines.contains(&2) && lines.contains(&3) && lines.contains(&4), "{lines:?}");
}

#[test]
fn pretty_print_trivial_cases() {
    assert_eq!(pretty_print(&rcml_core::ast::Model::default()), "");
    let model = parse("enum E{a}", "m.rcml").unwrap();
    assert_eq!(pretty_print(&model), "enum E { a }\n");
}

#[test]
fn expression_precedence_round_trips() {
    let cases = [
        "a -> b [x + 1 < 3 && !flag || y == ok] / {p: v};",
        "a -> b [(x + 1) - 2 >= 0] / {p: v};",
        "a -> b [x == (y == z)] / {p: v};",
        "a -> b [!(f && g)] / {p: v};",
    ];
    for case in cases {
        let src = format!(
            "enum T {{ v, ok }}\ncomponent C {{\n  port in T q;\n  port out T p;\n  automaton m monitor {{\n    state a, b;\n    initial a;\n    {case}\n  }}\n}}"
        );
        let model = parse(&src, "m.rcml").unwrap_or_else(|e| panic!("{case}: {e:?}"));
        let reparsed = parse(&pretty_print(&model), "m.rcml").unwrap();
        assert_eq!(model, reparsed, "{case}");
    }
}

#[test]
fn comments_are_skipped() {
    let src = "// line\nenum E { a } /* block\nspanning */ component C { }";
    let model = parse(src, "m.rcml").unwrap();
    assert_eq!(model.enums.len(), 1);
    assert_eq!(model.components.len(), 1);
    let errs = parse("/* never closed", "m.rcml").unwrap_err();
    assert!(errs[0].message.contains("unterminated block comment"));
}

#[test]
fn fan_out_connector_expands() {
    let src = "component M { port in bool i; }\ncomponent S {\n  port in bool x;\n  instance M a;\n  instance M b;\n  connect x -> a.i, b.i;\n}";
    let model = parse(src, "m.rcml").unwrap();
    let sys = &model.components[1].node;
    assert_eq!(sys.connectors.len(), 2);
    // One connect per pair reprints and reparses to the same expansion.
    let reparsed = parse(&pretty_print(&model), "m.rcml").unwrap();
    assert_eq!(model, reparsed);
}
