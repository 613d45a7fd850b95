use rcml_core::refine::{check_refinement, AutomatonSide, ExploreConfig};
use rcml_core::sim::{bundle::StreamBundle, simulate, Completion, SimConfig, Strategy};
use rcml_core::{check, parse, resolve};

fn load(path: &str) -> rcml_core::ResolvedModel {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    let text = std::fs::read_to_string(format!("{root}/models/{path}")).expect("read");
    let model = parse(&text, path).unwrap_or_else(|e| panic!("{path}: {e:?}"));
    resolve(&model).unwrap_or_else(|e| panic!("{path}: {e:?}"))
}

#[test]
fn corpus_is_clean() {
    for path in ["coffee.rcml", "avoidcrash_v1.rcml", "avoidcrash_v2.rcml", "avoidcrash_v3.rcml", "pingpong.rcml"] {
        let resolved = load(path);
        let report = check(&resolved);
        assert!(report.is_empty(), "{path} findings:\n{report}");
    }
}

#[test]
fn refinement_chain_quick() {
    let model = load("coffee.rcml");
    let config = ExploreConfig::default();
    let q = |abs: &str, conc: &str, k: usize| {
        let a = AutomatonSide::new(&model, "AvoidCrash", abs, Completion::Chaos).unwrap();
        let c = AutomatonSide::new(&model, "AvoidCrash", conc, Completion::Ignore).unwrap();
        check_refinement(&a, &c, None, k, &config).unwrap()
    };
    let v = q("v1", "v2", 6);
    assert!(v.refines(), "v2 should refine v1: {v:?}");
    let v = q("v2", "v3", 6);
    assert!(v.refines(), "v3 should refine v2: {v:?}");
    let v = q("v3", "v1", 3);
    assert!(!v.refines(), "v1 should NOT refine v3");
    eprintln!("reversed counterexample: {:?}", v.counterexample);
}

#[test]
fn scenario_waiting() {
    let model = load("coffee.rcml");
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    let text = std::fs::read_to_string(format!("{root}/models/scenarios/coffee_waiting.json")).unwrap();
    let bundle = StreamBundle::from_json(&model, &text).unwrap();
    let main = model.component_by_name("CoffeeBot").unwrap();
    let trace = simulate(&model, main, &bundle, &SimConfig {
        completion: Completion::Ignore, strategy: Strategy::First, max_rounds: 16,
    }).unwrap();
    for e in &trace.events {
        if e.instance == "avoid" {
            eprintln!("{}", e.to_json_line(&model));
        }
    }
    eprintln!("outputs: {}", serde_json::to_string_pretty(&trace.outputs.to_json(&model)).unwrap());
    for v in &trace.monitor_verdicts {
        eprintln!("monitor {} on {}: {:?}", v.monitor, v.instance, v.violation);
        assert!(v.violation.is_none(), "monitor {} violated at {:?}", v.monitor, v.violation);
    }
}
