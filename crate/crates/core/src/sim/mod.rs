//! Round-based execution of checked models.
//!
//! Time advances in synchronous rounds carrying at most one message per
//! channel. Connector forwarding is instantaneous within a round; the
//! single one-round delay sits at each atomic component's output, so a
//! message emitted in round `t` arrives at connected in-ports in round
//! `t + 1`. Messages reaching the main component's out-ports are observed
//! in the emission round itself.
//!
//! Transition outputs are queued per out-port and drained one message per
//! round, which realizes per-transition message sequences within the
//! channel discipline. When no transition is enabled, the configured
//! completion policy decides: `ignore` freezes state and variables,
//! `chaos` records that the model leaves the behavior unspecified (the
//! round is flagged, never executed), and `error` aborts the run.

pub mod bundle;
pub mod monitor;
pub mod rng;

use crate::model::*;
use bundle::StreamBundle;
use rng::SplitMix64;
use std::collections::BTreeMap;
use std::fmt;

pub type RoundIn = BTreeMap<PortId, Value>;
pub type RoundOut = BTreeMap<PortId, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Chaos,
    Ignore,
    Error,
}

impl fmt::Display for Completion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Completion::Chaos => write!(f, "chaos"),
            Completion::Ignore => write!(f, "ignore"),
            Completion::Error => write!(f, "error"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Declaration-order head of the enabled set.
    First,
    /// Uniform choice through a seeded splitmix64 generator.
    Random { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub completion: Completion,
    pub strategy: Strategy,
    pub max_rounds: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            completion: Completion::Ignore,
            strategy: Strategy::First,
            max_rounds: 64,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("round {round}: instance `{instance}` received an input with no enabled transition (completion = error)")]
    AbortUnspecified { round: usize, instance: String },
    #[error("maxRounds must be at least 1")]
    InvalidConfig,
    #[error("component `{0}` has no value bound for parameter `{1}`")]
    UnboundParam(String, String),
    #[error("input bundle: {0}")]
    Bundle(#[from] bundle::BundleError),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// Evaluation environment for guards and assignment expressions.
pub struct EvalEnv<'a> {
    pub vars: &'a [Value],
    pub params: &'a [Value],
    pub inputs: &'a RoundIn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    AbsentPortRead(PortId),
    TypeMismatch,
}

/// Evaluates a resolved expression. On checked models the only failure
/// mode is reading a port the transition did not match, which the check
/// pass rules out statically. Integer arithmetic saturates at the i64
/// bounds; domain clamping happens at variable stores.
pub fn eval_expr(e: &Expr, env: &EvalEnv) -> Result<Value, EvalError> {
    match e {
        Expr::Const(v) => Ok(*v),
        Expr::Var(id) => Ok(env.vars[id.idx()]),
        Expr::Param(id) => Ok(env.params[id.idx()]),
        Expr::Port(id) => env
            .inputs
            .get(id)
            .copied()
            .ok_or(EvalError::AbsentPortRead(*id)),
        Expr::Not(inner) => match eval_expr(inner, env)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            _ => Err(EvalError::TypeMismatch),
        },
        Expr::Binary { op, lhs, rhs } => {
            let l = eval_expr(lhs, env)?;
            let r = eval_expr(rhs, env)?;
            match op {
                BinOp::Eq => Ok(Value::Bool(l == r)),
                BinOp::Ne => Ok(Value::Bool(l != r)),
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match (l, r) {
                    (Value::Int(a), Value::Int(b)) => Ok(Value::Bool(match op {
                        BinOp::Lt => a < b,
                        BinOp::Le => a <= b,
                        BinOp::Gt => a > b,
                        _ => a >= b,
                    })),
                    _ => Err(EvalError::TypeMismatch),
                },
                BinOp::And | BinOp::Or => match (l, r) {
                    (Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(if *op == BinOp::And {
                        a && b
                    } else {
                        a || b
                    })),
                    _ => Err(EvalError::TypeMismatch),
                },
                BinOp::Add | BinOp::Sub => match (l, r) {
                    (Value::Int(a), Value::Int(b)) => Ok(Value::Int(if *op == BinOp::Add {
                        a.saturating_add(b)
                    } else {
                        a.saturating_sub(b)
                    })),
                    _ => Err(EvalError::TypeMismatch),
                },
            }
        }
    }
}

/// Execution context for one automaton: its component, parameter values,
/// and the automaton itself.
#[derive(Clone, Copy)]
pub struct AutomatonCtx<'m> {
    pub model: &'m ResolvedModel,
    pub comp: &'m Component,
    pub automaton: &'m Automaton,
    pub params: &'m [Value],
}

pub fn resolve_params(comp: &Component, args: &[Value]) -> Result<Vec<Value>, SimError> {
    comp.params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            args.get(i)
                .copied()
                .or(p.default)
                .ok_or_else(|| SimError::UnboundParam(comp.name.clone(), p.name.clone()))
        })
        .collect()
}

/// Control state of one atomic instance: current state, variable values,
/// and the per-port FIFO of messages awaiting emission. The outbox is
/// indexed by raw port index; in-port slots stay empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceState {
    pub state: StateId,
    pub vars: Vec<Value>,
    pub outbox: Vec<Vec<Value>>,
}

impl InstanceState {
    /// Initial state with the automaton's initial outputs already queued.
    pub fn initial(ctx: &AutomatonCtx) -> InstanceState {
        let mut st = InstanceState {
            state: ctx.automaton.initial_state,
            vars: ctx.comp.initial_vars(),
            outbox: vec![Vec::new(); ctx.comp.ports.len()],
        };
        for (port, value) in &ctx.automaton.initial_outputs {
            st.outbox[port.idx()].push(*value);
        }
        st
    }

    /// Removes and returns the head message of every port queue.
    pub fn drain(&mut self) -> RoundOut {
        let mut out = BTreeMap::new();
        for (i, queue) in self.outbox.iter_mut().enumerate() {
            if !queue.is_empty() {
                out.insert(PortId(i as u32), queue.remove(0));
            }
        }
        out
    }
}

/// Transitions of the current state whose input pattern matches
/// `inputs` and whose guard holds, in declaration order.
pub fn enabled<'m>(
    ctx: &AutomatonCtx<'m>,
    state: StateId,
    vars: &[Value],
    inputs: &RoundIn,
) -> Vec<(usize, &'m Transition)> {
    ctx.automaton
        .transitions
        .iter()
        .enumerate()
        .filter(|(_, t)| t.source == state && pattern_matches(t, inputs))
        .filter(|(_, t)| match &t.guard {
            None => true,
            Some(g) => {
                let env = EvalEnv {
                    vars,
                    params: ctx.params,
                    inputs,
                };
                // Evaluation failures only arise on unchecked models; such
                // transitions are treated as disabled.
                matches!(eval_expr(g, &env), Ok(Value::Bool(true)))
            }
        })
        .collect()
}

fn pattern_matches(t: &Transition, inputs: &RoundIn) -> bool {
    t.input_pattern.iter().all(|(port, pat)| match pat {
        InputPattern::Literal(v) => inputs.get(port) == Some(v),
        InputPattern::Present => inputs.contains_key(port),
        InputPattern::Absent => !inputs.contains_key(port),
    })
}

/// Result of applying one transition: successor state, the round's
/// emission, and the variables that had to be clamped into their domain.
pub struct Applied {
    pub next: InstanceState,
    pub emission: RoundOut,
    pub clamped: Vec<String>,
}

/// Fires `transition` from `st`: assignments run left to right against the
/// incrementally updated variables, output sequences are enqueued, and one
/// message per port is drained as this round's emission.
pub fn apply_transition(
    ctx: &AutomatonCtx,
    st: &InstanceState,
    transition: &Transition,
    inputs: &RoundIn,
) -> Result<Applied, EvalError> {
    let mut next = st.clone();
    let mut clamped = Vec::new();
    for (var, expr) in &transition.assignments {
        let value = {
            let env = EvalEnv {
                vars: &next.vars,
                params: ctx.params,
                inputs,
            };
            eval_expr(expr, &env)?
        };
        let decl = &ctx.comp.variables[var.idx()];
        let stored = match (value, decl.ty) {
            (Value::Int(v), ValueType::Int { lo, hi }) if v < lo || v > hi => {
                clamped.push(decl.name.clone());
                Value::Int(v.clamp(lo, hi))
            }
            _ => value,
        };
        next.vars[var.idx()] = stored;
    }
    for (port, messages) in &transition.outputs {
        next.outbox[port.idx()].extend(messages.iter().copied());
    }
    next.state = transition.target;
    let emission = next.drain();
    Ok(Applied {
        next,
        emission,
        clamped,
    })
}

/// Drains pending messages without touching state or variables; the
/// ignore-completion step and the step of an automaton-free instance.
pub fn apply_stutter(st: &InstanceState) -> (InstanceState, RoundOut) {
    let mut next = st.clone();
    let emission = next.drain();
    (next, emission)
}

/// What happened to one instance in one round.
#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    /// Fired the transition with this declaration index.
    Step(usize),
    /// No transition enabled; input ignored, state frozen.
    IgnoredInput,
    /// No transition enabled; behavior unspecified here (flagged only).
    ChaosUnspecified,
}

pub struct StepResult {
    pub next: InstanceState,
    pub emission: RoundOut,
    pub kind: StepKind,
    pub clamped: Vec<String>,
}

/// Steps a single instance for one round. `round` and `instance` are only
/// used for the abort diagnostic.
#[allow(clippy::too_many_arguments)]
pub fn step_instance(
    ctx: &AutomatonCtx,
    st: &InstanceState,
    inputs: &RoundIn,
    completion: Completion,
    strategy: Strategy,
    rng: &mut SplitMix64,
    round: usize,
    instance: &str,
) -> Result<StepResult, SimError> {
    let candidates = enabled(ctx, st.state, &st.vars, inputs);
    if candidates.is_empty() {
        return match completion {
            Completion::Error => Err(SimError::AbortUnspecified {
                round,
                instance: instance.to_string(),
            }),
            Completion::Ignore | Completion::Chaos => {
                let (next, emission) = apply_stutter(st);
                Ok(StepResult {
                    next,
                    emission,
                    kind: if completion == Completion::Chaos {
                        StepKind::ChaosUnspecified
                    } else {
                        StepKind::IgnoredInput
                    },
                    clamped: Vec::new(),
                })
            }
        };
    }
    let pick = match strategy {
        Strategy::First => 0,
        Strategy::Random { .. } => rng.pick_among(candidates.len()),
    };
    let (index, transition) = candidates[pick];
    let applied = apply_transition(ctx, st, transition, inputs)
        .map_err(|e| SimError::Eval(format!("{e:?} in instance `{instance}`")))?;
    Ok(StepResult {
        next: applied.next,
        emission: applied.emission,
        kind: StepKind::Step(index),
        clamped: applied.clamped,
    })
}

/// One atomic instance in the elaborated system.
#[derive(Debug, Clone)]
pub struct Atom {
    /// Dotted instance path from the main component; empty when the main
    /// component itself is atomic.
    pub path: String,
    pub comp: CompId,
    pub params: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    External(PortId),
    AtomOut { atom: usize, port: PortId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sink {
    AtomIn { atom: usize, port: PortId },
    ExternalOut(PortId),
}

/// The flattened routing structure of a model under a main component:
/// atomic instances plus the closure of connector chains from every
/// source endpoint to the atomic in-ports and boundary out-ports it feeds.
#[derive(Debug, Clone)]
pub struct Topology {
    pub main: CompId,
    pub atoms: Vec<Atom>,
    pub routes: BTreeMap<Source, Vec<Sink>>,
}

/// A node in the routing graph: the instance path owning the port, and
/// the port itself. The empty path is the main component boundary.
type Node = (String, PortId);

impl Topology {
    /// Elaborates the instance tree under `main`. Requires an acyclic
    /// instantiation graph (rule R11) and closed parameters.
    pub fn build(model: &ResolvedModel, main: CompId) -> Result<Topology, SimError> {
        let mut atoms = Vec::new();
        let mut edges: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
        elaborate(model, main, String::new(), &[], &mut atoms, &mut edges)?;

        let atom_index: BTreeMap<String, usize> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.path.clone(), i))
            .collect();

        let main_comp = model.component(main);
        let mut routes: BTreeMap<Source, Vec<Sink>> = BTreeMap::new();

        if main_comp.is_atomic() {
            // Degenerate system: the boundary is the single atom itself.
            for (idx, p) in main_comp.ports.iter().enumerate() {
                let port = PortId(idx as u32);
                match p.direction {
                    Direction::In => {
                        routes.insert(Source::External(port), vec![Sink::AtomIn { atom: 0, port }]);
                    }
                    Direction::Out => {
                        routes.insert(
                            Source::AtomOut { atom: 0, port },
                            vec![Sink::ExternalOut(port)],
                        );
                    }
                }
            }
            return Ok(Topology {
                main,
                atoms,
                routes,
            });
        }

        let resolve_sinks = |start: Node| -> Vec<Sink> {
            let mut sinks = Vec::new();
            let mut stack = vec![start];
            while let Some(node) = stack.pop() {
                for next in edges.get(&node).into_iter().flatten() {
                    match atom_index.get(&next.0) {
                        Some(&atom) => sinks.push(Sink::AtomIn { atom, port: next.1 }),
                        None if next.0.is_empty() => sinks.push(Sink::ExternalOut(next.1)),
                        None => stack.push(next.clone()),
                    }
                }
            }
            sinks.sort();
            sinks.dedup();
            sinks
        };

        for (port, _) in main_comp.in_ports() {
            let sinks = resolve_sinks((String::new(), port));
            if !sinks.is_empty() {
                routes.insert(Source::External(port), sinks);
            }
        }
        for (i, atom) in atoms.iter().enumerate() {
            for (port, _) in model.component(atom.comp).out_ports() {
                let sinks = resolve_sinks((atom.path.clone(), port));
                if !sinks.is_empty() {
                    routes.insert(Source::AtomOut { atom: i, port }, sinks);
                }
            }
        }

        Ok(Topology {
            main,
            atoms,
            routes,
        })
    }
}

fn elaborate(
    model: &ResolvedModel,
    comp_id: CompId,
    path: String,
    args: &[Value],
    atoms: &mut Vec<Atom>,
    edges: &mut BTreeMap<Node, Vec<Node>>,
) -> Result<(), SimError> {
    let comp = model.component(comp_id);
    let params = resolve_params(comp, args)?;
    if comp.is_atomic() {
        atoms.push(Atom {
            path,
            comp: comp_id,
            params,
        });
        return Ok(());
    }
    let child_path = |inst: &Instance| {
        if path.is_empty() {
            inst.name.clone()
        } else {
            format!("{path}.{}", inst.name)
        }
    };
    for conn in &comp.connectors {
        let node = |ep: &Endpoint| -> Node {
            match ep.instance {
                None => (path.clone(), ep.port),
                Some(i) => (child_path(&comp.instances[i as usize]), ep.port),
            }
        };
        edges
            .entry(node(&conn.source))
            .or_default()
            .push(node(&conn.target));
    }
    for inst in &comp.instances {
        elaborate(
            model,
            inst.component,
            child_path(inst),
            &inst.args,
            atoms,
            edges,
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemState {
    /// Parallel to `Topology::atoms`; `None` for instances whose component
    /// has no executable automaton.
    pub instances: Vec<Option<InstanceState>>,
    /// Connector deliveries scheduled for the next round.
    pub pending: Vec<BTreeMap<PortId, Value>>,
}

impl SystemState {
    pub fn initial(model: &ResolvedModel, topology: &Topology) -> SystemState {
        let instances = topology
            .atoms
            .iter()
            .map(|atom| {
                let comp = model.component(atom.comp);
                comp.executable_automaton().map(|(_, automaton)| {
                    let ctx = AutomatonCtx {
                        model,
                        comp,
                        automaton,
                        params: &atom.params,
                    };
                    InstanceState::initial(&ctx)
                })
            })
            .collect();
        SystemState {
            instances,
            pending: vec![BTreeMap::new(); topology.atoms.len()],
        }
    }
}

/// Outcome of stepping the whole system for one round.
pub struct SystemStep {
    pub state: SystemState,
    pub external_out: RoundOut,
    /// Per-atom round observations: inputs seen and messages emitted.
    pub observations: Vec<(RoundIn, RoundOut)>,
    pub events: Vec<TraceEvent>,
}

/// Routes external inputs into per-atom input maps (instantaneous) and
/// boundary pass-through values, on top of the pending deliveries.
pub fn route_external(
    topology: &Topology,
    pending: &[BTreeMap<PortId, Value>],
    external: &RoundIn,
) -> (Vec<RoundIn>, RoundOut) {
    let mut inputs: Vec<RoundIn> = pending.to_vec();
    let mut external_out: RoundOut = BTreeMap::new();
    for (port, value) in external {
        if let Some(sinks) = topology.routes.get(&Source::External(*port)) {
            for sink in sinks {
                match sink {
                    Sink::AtomIn { atom, port } => {
                        inputs[*atom].insert(*port, *value);
                    }
                    Sink::ExternalOut(p) => {
                        external_out.insert(*p, *value);
                    }
                }
            }
        }
    }
    (inputs, external_out)
}

/// Routes this round's atom emissions: connected in-ports receive them
/// next round (returned as pending buffers), boundary out-ports this round.
pub fn route_emissions(
    topology: &Topology,
    emissions: &[RoundOut],
    external_out: &mut RoundOut,
) -> Vec<BTreeMap<PortId, Value>> {
    let mut pending = vec![BTreeMap::new(); topology.atoms.len()];
    for (i, emission) in emissions.iter().enumerate() {
        for (port, value) in emission {
            if let Some(sinks) = topology.routes.get(&Source::AtomOut {
                atom: i,
                port: *port,
            }) {
                for sink in sinks {
                    match sink {
                        Sink::AtomIn { atom, port } => {
                            pending[*atom].insert(*port, *value);
                        }
                        Sink::ExternalOut(p) => {
                            external_out.insert(*p, *value);
                        }
                    }
                }
            }
        }
    }
    pending
}

/// Advances every atomic instance by one round. Inputs are the pending
/// connector deliveries plus external inputs routed through the boundary;
/// emissions are loaded into the delay buffers for round `round + 1` and
/// forwarded to the boundary out-ports of this round.
pub fn step_system(
    model: &ResolvedModel,
    topology: &Topology,
    state: &SystemState,
    external: &RoundIn,
    config: &SimConfig,
    rng: &mut SplitMix64,
    round: usize,
) -> Result<SystemStep, SimError> {
    let (inputs, mut external_out) = route_external(topology, &state.pending, external);

    let mut next = SystemState {
        instances: Vec::with_capacity(state.instances.len()),
        pending: vec![BTreeMap::new(); topology.atoms.len()],
    };
    let mut observations = Vec::with_capacity(topology.atoms.len());
    let mut events = Vec::new();
    let mut emissions: Vec<RoundOut> = Vec::with_capacity(topology.atoms.len());

    for (i, atom) in topology.atoms.iter().enumerate() {
        let comp = model.component(atom.comp);
        let atom_inputs = &inputs[i];
        match &state.instances[i] {
            None => {
                // No executable behavior: inputs are ignored, nothing is
                // ever emitted, and completion policies do not apply.
                events.push(TraceEvent {
                    round,
                    instance: atom.path.clone(),
                    kind: TraceEventKind::IgnoredInput,
                    state: None,
                    vars: BTreeMap::new(),
                    inputs: named_values(comp, atom_inputs),
                    outputs: BTreeMap::new(),
                });
                observations.push((atom_inputs.clone(), BTreeMap::new()));
                emissions.push(BTreeMap::new());
                next.instances.push(None);
            }
            Some(st) => {
                let (_, automaton) = comp.executable_automaton().expect("instance state");
                let ctx = AutomatonCtx {
                    model,
                    comp,
                    automaton,
                    params: &atom.params,
                };
                if round == 0 {
                    events.push(TraceEvent {
                        round,
                        instance: atom.path.clone(),
                        kind: TraceEventKind::InitialOutput,
                        state: Some(automaton.states[automaton.initial_state.idx()].clone()),
                        vars: named_vars(comp, &st.vars),
                        inputs: BTreeMap::new(),
                        outputs: automaton
                            .initial_outputs
                            .iter()
                            .map(|(p, v)| (comp.port(*p).name.clone(), *v))
                            .collect(),
                    });
                }
                let result = step_instance(
                    &ctx,
                    st,
                    atom_inputs,
                    config.completion,
                    config.strategy,
                    rng,
                    round,
                    &atom.path,
                )?;
                for var in &result.clamped {
                    events.push(TraceEvent {
                        round,
                        instance: atom.path.clone(),
                        kind: TraceEventKind::ClampWarning(var.clone()),
                        state: Some(automaton.states[result.next.state.idx()].clone()),
                        vars: named_vars(comp, &result.next.vars),
                        inputs: BTreeMap::new(),
                        outputs: BTreeMap::new(),
                    });
                }
                events.push(TraceEvent {
                    round,
                    instance: atom.path.clone(),
                    kind: match result.kind {
                        StepKind::Step(i) => TraceEventKind::Step(i),
                        StepKind::IgnoredInput => TraceEventKind::IgnoredInput,
                        StepKind::ChaosUnspecified => TraceEventKind::ChaosUnspecified,
                    },
                    state: Some(automaton.states[result.next.state.idx()].clone()),
                    vars: named_vars(comp, &result.next.vars),
                    inputs: named_values(comp, atom_inputs),
                    outputs: named_values(comp, &result.emission),
                });
                observations.push((atom_inputs.clone(), result.emission.clone()));
                emissions.push(result.emission);
                next.instances.push(Some(result.next));
            }
        }
    }

    next.pending = route_emissions(topology, &emissions, &mut external_out);

    Ok(SystemStep {
        state: next,
        external_out,
        observations,
        events,
    })
}

fn named_values(comp: &Component, values: &BTreeMap<PortId, Value>) -> BTreeMap<String, Value> {
    values
        .iter()
        .map(|(p, v)| (comp.port(*p).name.clone(), *v))
        .collect()
}

fn named_vars(comp: &Component, values: &[Value]) -> BTreeMap<String, Value> {
    comp.variables
        .iter()
        .zip(values.iter())
        .map(|(decl, v)| (decl.name.clone(), *v))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEventKind {
    InitialOutput,
    Step(usize),
    IgnoredInput,
    ChaosUnspecified,
    ClampWarning(String),
    MonitorViolation(String),
}

impl fmt::Display for TraceEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEventKind::InitialOutput => write!(f, "initial-output"),
            TraceEventKind::Step(i) => write!(f, "step({i})"),
            TraceEventKind::IgnoredInput => write!(f, "ignored-input"),
            TraceEventKind::ChaosUnspecified => write!(f, "chaos-unspecified"),
            TraceEventKind::ClampWarning(v) => write!(f, "clamp-warning({v})"),
            TraceEventKind::MonitorViolation(m) => write!(f, "monitor-violation({m})"),
        }
    }
}

/// One recorded simulation event. Maps are keyed by port and variable
/// names so a serialized trace is self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub round: usize,
    pub instance: String,
    pub kind: TraceEventKind,
    pub state: Option<String>,
    pub vars: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
}

impl TraceEvent {
    /// JSON object with the fixed field order round, instance, kind,
    /// state, vars, in, out.
    pub fn to_json_line(&self, model: &ResolvedModel) -> String {
        let values = |m: &BTreeMap<String, Value>| -> String {
            let fields: Vec<String> = m
                .iter()
                .map(|(k, v)| {
                    format!(
                        "{}:{}",
                        serde_json::Value::String(k.clone()),
                        model.value_json(*v)
                    )
                })
                .collect();
            format!("{{{}}}", fields.join(","))
        };
        format!(
            "{{\"round\":{},\"instance\":{},\"kind\":{},\"state\":{},\"vars\":{},\"in\":{},\"out\":{}}}",
            self.round,
            serde_json::Value::String(self.instance.clone()),
            serde_json::Value::String(self.kind.to_string()),
            match &self.state {
                Some(s) => serde_json::Value::String(s.clone()).to_string(),
                None => "null".to_string(),
            },
            values(&self.vars),
            values(&self.inputs),
            values(&self.outputs),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorVerdict {
    pub instance: String,
    pub monitor: String,
    pub violation: Option<usize>,
}

/// Full record of a simulation run: every event, the boundary output
/// bundle, and the verdict of every monitor automaton.
#[derive(Debug, Clone)]
pub struct Trace {
    pub rounds: usize,
    pub events: Vec<TraceEvent>,
    pub outputs: StreamBundle,
    pub monitor_verdicts: Vec<MonitorVerdict>,
}

impl Trace {
    pub fn to_jsonl(&self, model: &ResolvedModel) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&event.to_json_line(model));
            out.push('\n');
        }
        out
    }
}

/// Runs `min(config.max_rounds, bundle.len())` rounds of the system under
/// `main`. With `Strategy::Random`, identical inputs and seed give a
/// byte-identical serialized trace. Monitor automata of every atomic
/// instance are evaluated inline; the first violating round of each is
/// recorded as an event and a verdict.
pub fn simulate(
    model: &ResolvedModel,
    main: CompId,
    input: &StreamBundle,
    config: &SimConfig,
) -> Result<Trace, SimError> {
    if config.max_rounds == 0 {
        return Err(SimError::InvalidConfig);
    }
    let topology = Topology::build(model, main)?;
    let main_comp = model.component(main);
    let bound_inputs = input.bind(model, main_comp)?;
    let rounds = config.max_rounds.min(bound_inputs.len());

    let mut rng = match config.strategy {
        Strategy::First => SplitMix64::new(0),
        Strategy::Random { seed } => SplitMix64::new(seed),
    };

    let mut monitors = monitor::collect_monitors(model, &topology, config.completion);
    let mut state = SystemState::initial(model, &topology);
    let mut events = Vec::new();
    let mut out_rounds = Vec::new();

    for round in 0..rounds {
        let external = &bound_inputs[round];
        let step = step_system(model, &topology, &state, external, config, &mut rng, round)?;
        events.extend(step.events);
        for m in monitors.iter_mut() {
            let (inputs, outputs) = &step.observations[m.atom];
            if let Some(event) = m.observe(round, inputs, outputs) {
                events.push(event);
            }
        }
        out_rounds.push(named_values(main_comp, &step.external_out));
        state = step.state;
    }

    let outputs = StreamBundle {
        ports: main_comp
            .out_ports()
            .map(|(_, p)| (p.name.clone(), p.ty))
            .collect(),
        rounds: out_rounds,
    };
    Ok(Trace {
        rounds,
        events,
        outputs,
        monitor_verdicts: monitors.into_iter().map(|m| m.verdict()).collect(),
    })
}

/// The in-ports and out-ports an automaton actually mentions: patterns and
/// port reads on the input side, outputs and initial outputs on the output
/// side. Ports outside this set never constrain the automaton's behavior.
pub fn used_interface(comp: &Component, aut: &Automaton) -> (Vec<PortId>, Vec<PortId>) {
    fn add(set: &mut Vec<PortId>, p: PortId) {
        if !set.contains(&p) {
            set.push(p);
        }
    }
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for (p, _) in &aut.initial_outputs {
        add(&mut outs, *p);
    }
    for t in &aut.transitions {
        for (p, _) in &t.input_pattern {
            add(&mut ins, *p);
        }
        for (p, _) in &t.outputs {
            add(&mut outs, *p);
        }
        let mut stack: Vec<&Expr> = t.guard.iter().collect();
        stack.extend(t.assignments.iter().map(|(_, e)| e));
        while let Some(e) = stack.pop() {
            match e {
                Expr::Port(p) => add(&mut ins, *p),
                Expr::Not(inner) => stack.push(inner),
                Expr::Binary { lhs, rhs, .. } => {
                    stack.push(lhs);
                    stack.push(rhs);
                }
                _ => {}
            }
        }
    }
    let keep = |set: Vec<PortId>, dir: Direction| -> Vec<PortId> {
        let mut set: Vec<PortId> = set
            .into_iter()
            .filter(|p| comp.ports.get(p.idx()).map(|q| q.direction) == Some(dir))
            .collect();
        set.sort();
        set
    };
    (keep(ins, Direction::In), keep(outs, Direction::Out))
}
