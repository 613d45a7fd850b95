//! Core model and resolution properties: name binding, domains, and the
//! idempotence / no-dangling-reference invariants.

use rcml_core::model::*;
use rcml_core::resolve::ResolveErrorKind;
use rcml_core::{parse, resolve, testgen};

fn load(name: &str) -> ResolvedModel {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models");
    let text = std::fs::read_to_string(format!("{root}/{name}")).expect("corpus file");
    resolve(&parse(&text, name).unwrap()).unwrap()
}

#[test]
fn port_type_binds_to_enum_declaration() {
    let src = "enum MotorCmd { fwd, stop, backRight }\ncomponent M { port out MotorCmd cmd; }";
    let model = resolve(&parse(src, "m.rcml").unwrap()).unwrap();
    let comp = model.component(model.component_by_name("M").unwrap());
    let cmd = comp.port(comp.port_by_name("cmd").unwrap());
    let ValueType::Enum(id) = cmd.ty else {
        panic!("cmd should have an enum type")
    };
    assert_eq!(model.enum_type(id).name, "MotorCmd");
}

#[test]
fn empty_model_resolves() {
    let model = resolve(&parse("", "m.rcml").unwrap()).unwrap();
    assert!(model.enums.is_empty() && model.components.is_empty());
}

#[test]
fn undeclared_instance_in_connector_is_unresolved() {
    let src = "enum T { a }\ncomponent M { port in T i; }\ncomponent S {\n  port in T x;\n  instance M motor;\n  connect x -> motorX.cmd;\n}";
    let errs = resolve(&parse(src, "m.rcml").unwrap()).unwrap_err();
    assert!(errs
        .iter()
        .any(|e| e.kind == ResolveErrorKind::UnresolvedName && e.message.contains("motorX")));
}

#[test]
fn domain_sizes() {
    let model = load("coffee.rcml");
    assert_eq!(model.domain_size(ValueType::Bool), 2);
    assert_eq!(model.domain_size(ValueType::Int { lo: 0, hi: 10 }), 11);
    let motor_cmd = model
        .enums
        .iter()
        .position(|e| e.name == "MotorCmd")
        .map(|i| EnumId(i as u32))
        .unwrap();
    assert_eq!(model.domain_size(ValueType::Enum(motor_cmd)), 3);
}

#[test]
fn domain_size_strictly_positive_everywhere() {
    for file in ["coffee.rcml", "pingpong.rcml"] {
        let model = load(file);
        for comp in &model.components {
            for p in &comp.ports {
                assert!(model.domain_size(p.ty) > 0);
            }
            for v in &comp.variables {
                assert!(model.domain_size(v.ty) > 0);
            }
        }
        for e in 0..model.enums.len() {
            assert!(model.domain_size(ValueType::Enum(EnumId(e as u32))) > 0);
        }
    }
}

#[test]
fn resolve_is_idempotent() {
    for file in ["coffee.rcml", "pingpong.rcml", "avoidcrash_v2.rcml"] {
        let resolved = load(file);
        let again = resolve(&resolved.to_model()).expect("reconstruction resolves");
        assert_eq!(resolved, again, "{file}");
    }
    for seed in 200..230u64 {
        let src = testgen::random_model_source(seed);
        let resolved = resolve(&parse(&src, "gen.rcml").unwrap()).unwrap();
        let again = resolve(&resolved.to_model()).unwrap();
        assert_eq!(resolved, again, "seed {seed}");
    }
}

/// Full-walk check that every index stored in a resolved model points at a
/// declaration of the same model.
fn assert_no_dangling(model: &ResolvedModel) {
    let enum_ok = |id: EnumId| id.idx() < model.enums.len();
    let ty_ok = |ty: ValueType| match ty {
        ValueType::Enum(id) => enum_ok(id),
        _ => true,
    };
    let value_ok = |v: Value| match v {
        Value::Enum { ty, literal } => {
            enum_ok(ty) && (literal as usize) < model.enum_type(ty).literals.len()
        }
        _ => true,
    };
    fn expr_ok(
        e: &Expr,
        comp: &Component,
        value_ok: &dyn Fn(Value) -> bool,
    ) -> bool {
        match e {
            Expr::Const(v) => value_ok(*v),
            Expr::Var(id) => id.idx() < comp.variables.len(),
            Expr::Param(id) => id.idx() < comp.params.len(),
            Expr::Port(id) => id.idx() < comp.ports.len(),
            Expr::Not(inner) => expr_ok(inner, comp, value_ok),
            Expr::Binary { lhs, rhs, .. } => {
                expr_ok(lhs, comp, value_ok) && expr_ok(rhs, comp, value_ok)
            }
        }
    }

    for comp in &model.components {
        for p in &comp.ports {
            assert!(ty_ok(p.ty));
        }
        for v in &comp.variables {
            assert!(ty_ok(v.ty) && value_ok(v.init));
        }
        for p in &comp.params {
            assert!(ty_ok(p.ty) && p.default.map(value_ok).unwrap_or(true));
        }
        for inst in &comp.instances {
            assert!(inst.component.idx() < model.components.len());
            assert!(inst.args.iter().all(|v| value_ok(*v)));
        }
        for conn in &comp.connectors {
            for ep in [&conn.source, &conn.target] {
                match ep.instance {
                    None => assert!(ep.port.idx() < comp.ports.len()),
                    Some(i) => {
                        let inst = &comp.instances[i as usize];
                        let target = model.component(inst.component);
                        assert!(ep.port.idx() < target.ports.len());
                    }
                }
            }
        }
        for aut in &comp.automata {
            assert!(aut.initial_state.idx() < aut.states.len());
            for (p, v) in &aut.initial_outputs {
                assert!(p.idx() < comp.ports.len() && value_ok(*v));
            }
            for t in &aut.transitions {
                assert!(t.source.idx() < aut.states.len());
                assert!(t.target.idx() < aut.states.len());
                for (p, pat) in &t.input_pattern {
                    assert!(p.idx() < comp.ports.len());
                    if let InputPattern::Literal(v) = pat {
                        assert!(value_ok(*v));
                    }
                }
                for (p, msgs) in &t.outputs {
                    assert!(p.idx() < comp.ports.len());
                    assert!(msgs.iter().all(|v| value_ok(*v)));
                }
                if let Some(g) = &t.guard {
                    assert!(expr_ok(g, comp, &value_ok));
                }
                for (v, e) in &t.assignments {
                    assert!(v.idx() < comp.variables.len());
                    assert!(expr_ok(e, comp, &value_ok));
                }
            }
        }
    }
}

#[test]
fn no_dangling_references() {
    for file in ["coffee.rcml", "pingpong.rcml"] {
        assert_no_dangling(&load(file));
    }
    for seed in 300..330u64 {
        let src = testgen::random_model_source(seed);
        assert_no_dangling(&resolve(&parse(&src, "gen.rcml").unwrap()).unwrap());
    }
}

#[test]
fn duplicate_names_rejected() {
    let cases = [
        "enum E { a } enum E { b }",
        "enum E { a, a }",
        "component C { } component C { }",
        "enum T { a } component C { port in T x; port out T x; }",
        "enum T { a } component C { port in T x; var bool x = false; }",
        "enum T { a } component C { automaton m { state s, s; initial s; } }",
    ];
    for src in cases {
        let errs = resolve(&parse(src, "m.rcml").unwrap()).unwrap_err();
        assert!(
            errs.iter().any(|e| e.kind == ResolveErrorKind::DuplicateName),
            "{src}: {errs:?}"
        );
    }
}

#[test]
fn ambiguous_bare_literal_needs_typed_context() {
    // `a` exists in two enums; a guard equating two bare literals cannot
    // pick a type.
    let src = "enum E1 { a } enum E2 { a, b }\ncomponent C {\n  port in E1 p;\n  automaton m { state s; initial s; s -> s {p: _} [a == a]; }\n}";
    let errs = resolve(&parse(src, "m.rcml").unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("ambiguous")), "{errs:?}");
    // With one side typed, the other side resolves against it.
    let src_ok = "enum E1 { a } enum E2 { a, b }\ncomponent C {\n  port in E2 p;\n  automaton m { state s; initial s; s -> s {p: _} [p == a]; }\n}";
    resolve(&parse(src_ok, "m.rcml").unwrap()).expect("typed side disambiguates");
}

#[test]
fn instance_argument_arity() {
    let base = "component P(int(0..4) n) { port in bool i; }\ncomponent S { port in bool x; instance P p{ARGS}; connect x -> p.i; }";
    let errs = resolve(&parse(&base.replace("{ARGS}", "(1, 2)"), "m.rcml").unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("argument")), "{errs:?}");
    let errs = resolve(&parse(&base.replace("{ARGS}", ""), "m.rcml").unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("missing argument")), "{errs:?}");
    resolve(&parse(&base.replace("{ARGS}", "(3)"), "m.rcml").unwrap()).expect("exact arity");
}

#[test]
fn initial_output_restrictions() {
    let src = "enum T { a }\ncomponent C {\n  port out T o;\n  var bool v = false;\n  automaton m { state s; initial s / {v = true}; }\n}";
    let errs = resolve(&parse(src, "m.rcml").unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("initial output")), "{errs:?}");
    let src = "enum T { a }\ncomponent C {\n  port out T o;\n  automaton m { state s; initial s / {o: [a, a]}; }\n}";
    let errs = resolve(&parse(src, "m.rcml").unwrap()).unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("exactly one message")), "{errs:?}");
}

#[test]
fn empty_int_range_rejected() {
    let errs = resolve(&parse("component C { var int(3..1) x = 2; }", "m.rcml").unwrap())
        .unwrap_err();
    assert!(errs.iter().any(|e| e.message.contains("empty integer range")));
}
