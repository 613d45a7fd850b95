use rcml_core::{check, parse, pretty_print, resolve};

#[test]
fn pipeline_smoke() {
    let src = r#"
enum MotorCmd { fwd, stop, backRight }
enum UltraSonic { tooClose, clear }

component AvoidCrash {
  port in UltraSonic frontUS;
  port in bool gotCoffee;
  port out MotorCmd cmd;
  var bool coffee = false;
  automaton v1 monitor {
    state driving, evading, waiting;
    initial driving / {cmd: fwd};
    driving -> evading {frontUS: tooClose} / {cmd: backRight};
    driving -> waiting {frontUS: tooClose} / {cmd: stop};
    waiting -> driving {frontUS: clear} / {cmd: fwd};
  }
  automaton v3 {
    state driving, waiting;
    initial driving / {cmd: fwd};
    driving -> driving {gotCoffee: _, frontUS: none} / {coffee = gotCoffee};
    driving -> waiting {frontUS: tooClose} [coffee] / {cmd: stop};
    waiting -> driving {frontUS: clear} / {cmd: fwd};
  }
}
"#;
    let model = parse(src, "smoke.rcml").expect("parses");
    let printed = pretty_print(&model);
    eprintln!("{printed}");
    let reparsed = parse(&printed, "smoke2.rcml").expect("reparses");
    assert_eq!(model, reparsed, "round trip");
    let resolved = resolve(&model).expect("resolves");
    let report = check(&resolved);
    eprintln!("{report}");
    assert!(!report.has_errors());
    // resolve idempotence via reconstruction
    let again = resolve(&resolved.to_model()).expect("re-resolves");
    assert_eq!(resolved, again);
}

#[test]
fn parse_errors_recover() {
    let src = "component A { port in MotorCmd cmd }";
    let errs = parse(src, "bad.rcml").unwrap_err();
    assert_eq!(errs.len(), 1);
    assert!(errs[0].message.contains("expected `;`"), "{}", errs[0].message);
    // two independent errors -> two diagnostics
    let src2 = "component A { port cmd; instance ; }";
    let errs2 = parse(src2, "bad2.rcml").unwrap_err();
    assert!(errs2.len() >= 2, "got {errs2:?}");
}

#[test]
fn generated_sources_are_well_formed() {
    use rcml_core::testgen;
    let config = testgen::AutomatonGenConfig::default();
    for seed in 0..50u64 {
        let src = testgen::random_automaton_pair_source(seed, &config);
        let model = parse(&src, "gen.rcml").unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        let resolved = resolve(&model).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        let report = check(&resolved);
        assert!(!report.has_errors(), "seed {seed}:\n{report}\n{src}");
    }
    for seed in 0..50u64 {
        let src = testgen::random_model_source(seed);
        let model = parse(&src, "gen.rcml").unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        let resolved = resolve(&model).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        let report = check(&resolved);
        assert!(!report.has_errors(), "seed {seed}:\n{report}\n{src}");
        // round trip while we are here
        let printed = rcml_core::pretty_print(&model);
        let reparsed = parse(&printed, "gen2.rcml").expect("reparses");
        assert_eq!(model, reparsed, "seed {seed}");
    }
}
