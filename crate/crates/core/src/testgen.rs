//! Seeded generators for models, automata, and input bundles.
//!
//! Conformance and acceptance testing need reproducible random instances:
//! round-trip checks over whole models, refinement queries over small
//! automata, and random stream bundles. Everything here is driven by
//! [`SplitMix64`], so a seed pins the instance exactly.

use crate::model::{Component, ResolvedModel};
use crate::sim::bundle::StreamBundle;
use crate::sim::rng::SplitMix64;
use std::collections::BTreeMap;
use std::fmt::Write;

/// Shape limits for generated automata.
#[derive(Debug, Clone)]
pub struct AutomatonGenConfig {
    pub max_states: usize,
    pub max_literals: usize,
    pub max_ports_per_dir: usize,
    /// Variable domain size; 0 generates no variable, 2 generates a bool,
    /// anything else a bounded int with that many values.
    pub var_domain: usize,
    pub max_transitions: usize,
    pub allow_sequences: bool,
    pub allow_initial_outputs: bool,
}

impl Default for AutomatonGenConfig {
    fn default() -> Self {
        AutomatonGenConfig {
            max_states: 4,
            max_literals: 3,
            max_ports_per_dir: 2,
            var_domain: 3,
            max_transitions: 6,
            allow_sequences: true,
            allow_initial_outputs: true,
        }
    }
}

pub struct Gen {
    rng: SplitMix64,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: SplitMix64::new(seed),
        }
    }

    /// Uniform value in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.rng.pick(hi - lo + 1)
    }

    /// True with probability `p` percent.
    pub fn pct(&mut self, p: usize) -> bool {
        self.rng.pick(100) < p
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.pick(items.len())]
    }
}

/// Interface shape shared by a generated component and its automata.
struct Shape {
    literals: Vec<String>,
    in_ports: Vec<String>,
    out_ports: Vec<String>,
    var: Option<(String, usize)>,
}

fn shape(g: &mut Gen, config: &AutomatonGenConfig) -> Shape {
    let literal_count = g.range(1, config.max_literals);
    let literals: Vec<String> = (0..literal_count).map(|i| format!("v{i}")).collect();
    let in_ports: Vec<String> = (0..g.range(1, config.max_ports_per_dir))
        .map(|i| format!("i{i}"))
        .collect();
    let out_ports: Vec<String> = (0..g.range(1, config.max_ports_per_dir))
        .map(|i| format!("o{i}"))
        .collect();
    let var = match config.var_domain {
        0 => None,
        n if g.pct(70) => Some(("x".to_string(), n)),
        _ => None,
    };
    Shape {
        literals,
        in_ports,
        out_ports,
        var,
    }
}

fn write_component_header(out: &mut String, shape: &Shape) {
    let _ = writeln!(out, "enum E {{ {} }}", shape.literals.join(", "));
    let _ = writeln!(out, "component C {{");
    for p in &shape.in_ports {
        let _ = writeln!(out, "  port in E {p};");
    }
    for p in &shape.out_ports {
        let _ = writeln!(out, "  port out E {p};");
    }
    if let Some((name, domain)) = &shape.var {
        if *domain == 2 {
            let _ = writeln!(out, "  var bool {name} = false;");
        } else {
            let _ = writeln!(out, "  var int(0..{}) {name} = 0;", domain - 1);
        }
    }
}

fn write_automaton(
    out: &mut String,
    g: &mut Gen,
    shape: &Shape,
    config: &AutomatonGenConfig,
    name: &str,
) {
    let state_count = g.range(1, config.max_states);
    let states: Vec<String> = (0..state_count).map(|i| format!("s{i}")).collect();
    let _ = writeln!(out, "  automaton {name} monitor {{");
    let _ = writeln!(out, "    state {};", states.join(", "));
    if config.allow_initial_outputs && g.pct(40) {
        let port = g.pick(&shape.out_ports).clone();
        let lit = g.pick(&shape.literals).clone();
        let _ = writeln!(out, "    initial s0 / {{{port}: {lit}}};");
    } else {
        let _ = writeln!(out, "    initial s0;");
    }

    let transitions = g.range(0, config.max_transitions);
    for _ in 0..transitions {
        let src = g.pick(&states).clone();
        let tgt = g.pick(&states).clone();

        // Input pattern per port: skip, literal, wildcard, or absence.
        let mut patterns: BTreeMap<String, String> = BTreeMap::new();
        for p in &shape.in_ports {
            match g.range(0, 3) {
                0 => {}
                1 => {
                    let lit = g.pick(&shape.literals).clone();
                    patterns.insert(p.clone(), lit);
                }
                2 => {
                    patterns.insert(p.clone(), "_".to_string());
                }
                _ => {
                    patterns.insert(p.clone(), "none".to_string());
                }
            }
        }

        // Guards read the variable, or a port the pattern makes present.
        let mut guard = None;
        if g.pct(35) {
            if let Some((var, domain)) = &shape.var {
                guard = Some(if *domain == 2 {
                    if g.pct(50) {
                        var.clone()
                    } else {
                        format!("!{var}")
                    }
                } else {
                    let op = *g.pick(&["==", "<", ">="]);
                    format!("{var} {op} {}", g.range(0, domain - 1))
                });
            } else if !shape.in_ports.is_empty() {
                let port = g.pick(&shape.in_ports).clone();
                let lit = g.pick(&shape.literals).clone();
                let readable = matches!(patterns.get(&port), Some(p) if p != "none");
                if !readable {
                    patterns.insert(port.clone(), "_".to_string());
                }
                guard = Some(format!("{port} == {lit}"));
            }
        }

        let mut items: Vec<String> = Vec::new();
        for p in &shape.out_ports {
            if g.pct(50) {
                if config.allow_sequences && g.pct(20) {
                    let a = g.pick(&shape.literals).clone();
                    let b = g.pick(&shape.literals).clone();
                    items.push(format!("{p}: [{a}, {b}]"));
                } else {
                    items.push(format!("{p}: {}", g.pick(&shape.literals)));
                }
            }
        }
        if let Some((var, domain)) = &shape.var {
            if g.pct(40) {
                let rhs = if *domain == 2 {
                    (*g.pick(&[
                        "true".to_string(),
                        "false".to_string(),
                        format!("!{var}"),
                    ]))
                    .clone()
                } else {
                    match g.range(0, 2) {
                        0 => format!("{var} + 1"),
                        1 => format!("{var} - 1"),
                        _ => g.range(0, domain - 1).to_string(),
                    }
                };
                items.push(format!("{var} = {rhs}"));
            }
        }

        let _ = write!(out, "    {src} -> {tgt}");
        if !patterns.is_empty() {
            let parts: Vec<String> = patterns
                .iter()
                .map(|(p, pat)| format!("{p}: {pat}"))
                .collect();
            let _ = write!(out, " {{{}}}", parts.join(", "));
        }
        if let Some(guard) = guard {
            let _ = write!(out, " [{guard}]");
        }
        if !items.is_empty() {
            let _ = write!(out, " / {{{}}}", items.join(", "));
        }
        let _ = writeln!(out, ";");
    }
    let _ = writeln!(out, "  }}");
}

/// Source of a component `C` carrying two monitor automata `abs` and
/// `conc` over the same interface, for refinement queries.
pub fn random_automaton_pair_source(seed: u64, config: &AutomatonGenConfig) -> String {
    let mut g = Gen::new(seed);
    let shape = shape(&mut g, config);
    let mut out = String::new();
    write_component_header(&mut out, &shape);
    write_automaton(&mut out, &mut g, &shape, config, "abs");
    write_automaton(&mut out, &mut g, &shape, config, "conc");
    out.push_str("}\n");
    out
}

/// Source of a component `C` carrying automata named `a0..a{n-1}`.
pub fn random_automata_source(seed: u64, config: &AutomatonGenConfig, count: usize) -> String {
    let mut g = Gen::new(seed);
    let shape = shape(&mut g, config);
    let mut out = String::new();
    write_component_header(&mut out, &shape);
    for i in 0..count {
        write_automaton(&mut out, &mut g, &shape, config, &format!("a{i}"));
    }
    out.push_str("}\n");
    out
}

/// A random input bundle over the in-ports of `comp`: every port is
/// absent with probability one half each round, otherwise uniform over
/// its domain.
pub fn random_bundle(
    model: &ResolvedModel,
    comp: &Component,
    seed: u64,
    rounds: usize,
) -> StreamBundle {
    let mut g = Gen::new(seed);
    let ports: Vec<_> = comp
        .in_ports()
        .map(|(_, p)| (p.name.clone(), p.ty))
        .collect();
    let rounds = (0..rounds)
        .map(|_| {
            let mut round = BTreeMap::new();
            for (name, ty) in &ports {
                if g.pct(50) {
                    let domain = model.domain_values(*ty);
                    round.insert(name.clone(), *g.pick(&domain));
                }
            }
            round
        })
        .collect();
    StreamBundle { ports, rounds }
}

/// Source text of a random model with several enums and components, used
/// by round-trip and resolution tests. All references are well-formed.
pub fn random_model_source(seed: u64) -> String {
    let mut g = Gen::new(seed);
    let mut out = String::new();

    let enum_count = g.range(1, 3);
    let mut enums: Vec<(String, Vec<String>)> = Vec::new();
    for e in 0..enum_count {
        let name = format!("T{e}");
        let lits: Vec<String> = (0..g.range(1, 4)).map(|i| format!("t{e}x{i}")).collect();
        let _ = writeln!(out, "enum {name} {{ {} }}", lits.join(", "));
        enums.push((name, lits));
    }

    let atom_count = g.range(1, 3);
    let mut atoms: Vec<(String, Vec<(String, String)>, Vec<(String, String)>)> = Vec::new();
    for c in 0..atom_count {
        let name = format!("A{c}");
        let config = AutomatonGenConfig {
            max_states: 3,
            max_transitions: 4,
            ..AutomatonGenConfig::default()
        };
        let _ = writeln!(out, "component {name} {{");
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for i in 0..g.range(1, 2) {
            let (ename, _) = g.pick(&enums).clone();
            let pname = format!("in{i}");
            let _ = writeln!(out, "  port in {ename} {pname};");
            ins.push((pname, ename));
        }
        for i in 0..g.range(1, 2) {
            let (ename, _) = g.pick(&enums).clone();
            let pname = format!("out{i}");
            let _ = writeln!(out, "  port out {ename} {pname};");
            outs.push((pname, ename));
        }
        if g.pct(50) {
            let states: Vec<String> = (0..g.range(1, config.max_states))
                .map(|i| format!("q{i}"))
                .collect();
            let _ = writeln!(out, "  automaton behavior {{");
            let _ = writeln!(out, "    state {};", states.join(", "));
            let _ = writeln!(out, "    initial q0;");
            for _ in 0..g.range(0, config.max_transitions) {
                let src = g.pick(&states).clone();
                let tgt = g.pick(&states).clone();
                let (port, ename) = g.pick(&ins).clone();
                let lits = &enums.iter().find(|(n, _)| *n == ename).unwrap().1;
                let lit = g.pick(lits).clone();
                let mut line = format!("    {src} -> {tgt} {{{port}: {lit}}}");
                if g.pct(60) && !outs.is_empty() {
                    let (oport, oename) = g.pick(&outs).clone();
                    let olits = &enums.iter().find(|(n, _)| *n == oename).unwrap().1;
                    let olit = g.pick(olits).clone();
                    line.push_str(&format!(" / {{{oport}: {olit}}}"));
                }
                line.push(';');
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "  }}");
        }
        let _ = writeln!(out, "}}");
        atoms.push((name, ins, outs));
    }

    // One composite wiring the atoms: every instance in-port gets exactly
    // one source, either a fresh boundary port or a type-matching
    // instance out-port.
    let _ = writeln!(out, "component Sys {{");
    let mut body = String::new();
    let mut boundary = 0usize;
    let mut connects = Vec::new();
    let instances: Vec<(String, usize)> = atoms
        .iter()
        .enumerate()
        .map(|(i, (cname, _, _))| {
            let iname = format!("u{i}");
            let _ = writeln!(body, "  instance {cname} {iname};");
            (iname, i)
        })
        .collect();
    for (iname, ci) in &instances {
        let (_, ins, _) = &atoms[*ci];
        for (pname, ename) in ins {
            let feeders: Vec<(String, String)> = instances
                .iter()
                .flat_map(|(other, oc)| {
                    atoms[*oc]
                        .2
                        .iter()
                        .filter(|(_, oename)| oename == ename)
                        .map(move |(oport, _)| (other.clone(), oport.clone()))
                })
                .collect();
            if !feeders.is_empty() && g.pct(50) {
                let (other, oport) = g.pick(&feeders).clone();
                connects.push(format!("  connect {other}.{oport} -> {iname}.{pname};"));
            } else {
                let bname = format!("ext{boundary}");
                boundary += 1;
                let _ = writeln!(body, "  port in {ename} {bname};");
                connects.push(format!("  connect {bname} -> {iname}.{pname};"));
            }
        }
    }
    // Boundary outs for the first instance's out-ports.
    if let Some((iname, ci)) = instances.first() {
        for (pname, ename) in &atoms[*ci].2 {
            let bname = format!("sink_{pname}");
            let _ = writeln!(body, "  port out {ename} {bname};");
            connects.push(format!("  connect {iname}.{pname} -> {bname};"));
        }
    }
    // Reorder declarations so ports precede instances in the body text.
    let mut ports_first: Vec<&str> = body.lines().filter(|l| l.contains("port")).collect();
    ports_first.extend(body.lines().filter(|l| !l.contains("port")));
    for line in ports_first {
        let _ = writeln!(out, "{line}");
    }
    for line in connects {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "}}");
    out
}
