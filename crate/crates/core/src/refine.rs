//! Bounded refinement checking: trace inclusion over round-aligned
//! input/output prefixes.
//!
//! The concrete side refines the abstract side up to bound `k` when, for
//! every input trace of length at most `k` over the shared in-alphabet
//! (message or absence per port per round), every output trace the
//! concrete side can produce lies in the abstract side's trace set under
//! its completion. Chaos completion turns an undefined input into "every
//! continuation is allowed"; ignore completion contributes the round's
//! drained (usually empty) output with frozen state.
//!
//! The checker runs an on-the-fly subset construction: each explored node
//! pairs one concrete configuration with the set of abstract
//! configurations consistent with the observations so far. Exploration is
//! breadth-first over rounds in canonical input order, so a reported
//! counterexample has the earliest possible divergence round and, within
//! that, the lexicographically smallest input sequence. Ports of either
//! automaton outside the shared interface are treated as hidden: hidden
//! inputs are enumerated as extra nondeterminism, hidden outputs are
//! projected away.

use crate::model::*;
use crate::sim::{
    apply_stutter, apply_transition, enabled, resolve_params, route_emissions, route_external,
    used_interface, AutomatonCtx, Completion, InstanceState, RoundIn, RoundOut, SystemState,
    Topology,
};
use std::collections::{BTreeMap, BTreeSet};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_MAX_TRACE_BOUND: usize = 8;

#[derive(Debug, Clone)]
pub struct ExploreConfig {
    pub node_budget: u64,
    pub max_trace_bound: usize,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            node_budget: DEFAULT_NODE_BUDGET,
            max_trace_bound: DEFAULT_MAX_TRACE_BOUND,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExploreError {
    #[error("exploration exceeded the node budget of {0} nodes")]
    BoundTooLarge(u64),
    #[error("invalid query: {0}")]
    BadQuery(String),
}

struct Budget {
    remaining: u64,
    limit: u64,
}

impl Budget {
    fn new(limit: u64) -> Budget {
        Budget {
            remaining: limit,
            limit,
        }
    }

    fn charge(&mut self, n: u64) -> Result<(), ExploreError> {
        if self.remaining < n {
            Err(ExploreError::BoundTooLarge(self.limit))
        } else {
            self.remaining -= n;
            Ok(())
        }
    }
}

/// One automaton together with its completion, closed over parameter
/// values.
pub struct AutomatonSide<'m> {
    pub model: &'m ResolvedModel,
    pub comp: &'m Component,
    pub automaton: &'m Automaton,
    pub params: Vec<Value>,
    pub completion: Completion,
}

impl<'m> AutomatonSide<'m> {
    /// Looks up `component.automaton` and closes parameters over their
    /// defaults. `Completion::Error` is not a refinement completion.
    pub fn new(
        model: &'m ResolvedModel,
        component: &str,
        automaton: &str,
        completion: Completion,
    ) -> Result<AutomatonSide<'m>, ExploreError> {
        if completion == Completion::Error {
            return Err(ExploreError::BadQuery(
                "refinement completions are `chaos` or `ignore`".into(),
            ));
        }
        let comp_id = model
            .component_by_name(component)
            .ok_or_else(|| ExploreError::BadQuery(format!("unknown component `{component}`")))?;
        let comp = model.component(comp_id);
        let (_, aut) = comp.automaton_by_name(automaton).ok_or_else(|| {
            ExploreError::BadQuery(format!(
                "component `{component}` has no automaton `{automaton}`"
            ))
        })?;
        let params =
            resolve_params(comp, &[]).map_err(|e| ExploreError::BadQuery(e.to_string()))?;
        Ok(AutomatonSide {
            model,
            comp,
            automaton: aut,
            params,
            completion,
        })
    }

    fn ctx(&self) -> AutomatonCtx<'_> {
        AutomatonCtx {
            model: self.model,
            comp: self.comp,
            automaton: self.automaton,
            params: &self.params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementResult {
    RefinesUpToBound,
    Violation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    /// Concrete-side inputs per round, including hidden ports, keyed by
    /// port name. Replaying them through the concrete automaton can
    /// reproduce an output trace outside the abstract trace set.
    pub inputs: Vec<BTreeMap<String, Value>>,
    /// Concrete-side emissions per round, keyed by port name.
    pub outputs: Vec<BTreeMap<String, Value>>,
    pub divergence_round: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementVerdict {
    pub result: RefinementResult,
    pub bound: usize,
    pub counterexample: Option<Counterexample>,
}

impl RefinementVerdict {
    pub fn refines(&self) -> bool {
        self.result == RefinementResult::RefinesUpToBound
    }

    pub fn to_json(&self, model: &ResolvedModel) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert(
            "result".into(),
            serde_json::Value::String(
                match self.result {
                    RefinementResult::RefinesUpToBound => "refines-up-to-bound",
                    RefinementResult::Violation => "violation",
                }
                .to_string(),
            ),
        );
        obj.insert("bound".into(), serde_json::Value::from(self.bound));
        if let Some(ce) = &self.counterexample {
            let rounds = |rs: &[BTreeMap<String, Value>]| -> serde_json::Value {
                serde_json::Value::Array(
                    rs.iter()
                        .map(|r| {
                            serde_json::Value::Object(
                                r.iter()
                                    .map(|(k, v)| (k.clone(), model.value_json(*v)))
                                    .collect(),
                            )
                        })
                        .collect(),
                )
            };
            let mut ce_obj = serde_json::Map::new();
            ce_obj.insert("inputs".into(), rounds(&ce.inputs));
            ce_obj.insert("outputs".into(), rounds(&ce.outputs));
            ce_obj.insert(
                "divergenceRound".into(),
                serde_json::Value::from(ce.divergence_round),
            );
            obj.insert("counterexample".into(), serde_json::Value::Object(ce_obj));
        }
        serde_json::Value::Object(obj)
    }
}

/// A projection slot: one shared port with its id on each side.
#[derive(Debug, Clone)]
struct SharedPort {
    ty: ValueType,
    abstract_id: PortId,
    concrete_id: PortId,
}

/// A per-round valuation over an ordered port list; `None` is absence.
pub type Valuation = Vec<Option<Value>>;

/// All valuations over `tys` in canonical order: absence before domain
/// values, earlier slots most significant.
fn valuations(model: &ResolvedModel, tys: &[ValueType]) -> Vec<Valuation> {
    let mut result: Vec<Valuation> = vec![Vec::new()];
    for ty in tys {
        let mut options: Vec<Option<Value>> = vec![None];
        options.extend(model.domain_values(*ty).into_iter().map(Some));
        result = result
            .iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(*o);
                    v
                })
            })
            .collect();
    }
    result
}

/// Tracks the set of abstract configurations consistent with the
/// observed shared-interface trace. `Chaos` is absorbing: some run of the
/// abstract automaton hit an undefined input under chaos completion, so
/// every continuation is allowed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum AbsSet {
    Chaos,
    Configs(Vec<InstanceState>),
}

struct AbstractTracker<'m, 'q> {
    side: &'q AutomatonSide<'m>,
    /// Shared slots mapped to this side's in-port ids.
    shared_in: Vec<PortId>,
    /// Shared slots mapped to this side's out-port ids.
    shared_out: Vec<PortId>,
    /// Hidden in-ports this automaton mentions; enumerated as extra
    /// nondeterminism.
    hidden_ports: Vec<PortId>,
    hidden_in: Vec<Valuation>,
    /// Output alphabet over the shared out slots, for universality checks.
    out_alphabet: Vec<Valuation>,
    covers_memo: BTreeMap<(AbsSet, usize), bool>,
}

impl<'m, 'q> AbstractTracker<'m, 'q> {
    fn initial(&self) -> AbsSet {
        AbsSet::Configs(vec![InstanceState::initial(&self.side.ctx())])
    }

    fn build_inputs(&self, shared: &Valuation, hidden: &Valuation) -> RoundIn {
        let mut inputs = RoundIn::new();
        for (slot, value) in shared.iter().enumerate() {
            if let Some(v) = value {
                inputs.insert(self.shared_in[slot], *v);
            }
        }
        for (slot, value) in hidden.iter().enumerate() {
            if let Some(v) = value {
                inputs.insert(self.hidden_ports[slot], *v);
            }
        }
        inputs
    }

    fn project_out(&self, emission: &RoundOut) -> Valuation {
        self.shared_out
            .iter()
            .map(|p| emission.get(p).copied())
            .collect()
    }

    /// Advances the abstract set by one observed round.
    fn step(
        &self,
        aset: &AbsSet,
        shared_in: &Valuation,
        observed_out: &Valuation,
        budget: &mut Budget,
    ) -> Result<AbsSet, ExploreError> {
        let AbsSet::Configs(configs) = aset else {
            return Ok(AbsSet::Chaos);
        };
        let ctx = self.side.ctx();
        let mut next: BTreeSet<InstanceState> = BTreeSet::new();
        for cfg in configs {
            for hidden in &self.hidden_in {
                budget.charge(1)?;
                let inputs = self.build_inputs(shared_in, hidden);
                let candidates = enabled(&ctx, cfg.state, &cfg.vars, &inputs);
                if candidates.is_empty() {
                    match self.side.completion {
                        Completion::Chaos => return Ok(AbsSet::Chaos),
                        _ => {
                            let (stuttered, emission) = apply_stutter(cfg);
                            if self.project_out(&emission) == *observed_out {
                                next.insert(stuttered);
                            }
                        }
                    }
                } else {
                    for (_, transition) in candidates {
                        if let Ok(applied) = apply_transition(&ctx, cfg, transition, &inputs) {
                            if self.project_out(&applied.emission) == *observed_out {
                                next.insert(applied.next);
                            }
                        }
                    }
                }
            }
        }
        Ok(AbsSet::Configs(next.into_iter().collect()))
    }

    /// True when the abstract set accepts every input/output continuation
    /// of length `rounds`; needed exactly when the concrete side escapes
    /// to chaos.
    fn covers_all(
        &mut self,
        aset: &AbsSet,
        rounds: usize,
        in_alphabet: &[Valuation],
        budget: &mut Budget,
    ) -> Result<bool, ExploreError> {
        if matches!(aset, AbsSet::Chaos) || rounds == 0 {
            return Ok(true);
        }
        let key = (aset.clone(), rounds);
        if let Some(&hit) = self.covers_memo.get(&key) {
            return Ok(hit);
        }
        budget.charge(1)?;
        let out_alphabet = self.out_alphabet.clone();
        let mut covered = true;
        'outer: for shared_in in in_alphabet {
            for out in &out_alphabet {
                let next = self.step(aset, shared_in, out, budget)?;
                let dead = matches!(&next, AbsSet::Configs(c) if c.is_empty());
                if dead || !self.covers_all(&next, rounds - 1, in_alphabet, budget)? {
                    covered = false;
                    break 'outer;
                }
            }
        }
        self.covers_memo.insert(key, covered);
        Ok(covered)
    }
}

/// One possible concrete move under a fixed shared input valuation.
struct ConcreteStep<C> {
    next: C,
    shared_out: Valuation,
    /// Full input valuation (including hidden ports) for the
    /// counterexample record.
    input_record: BTreeMap<String, Value>,
    output_record: BTreeMap<String, Value>,
}

enum ConcreteMoves<C> {
    /// The concrete side may do anything from here (chaos completion at an
    /// undefined input).
    Chaos,
    Steps(Vec<ConcreteStep<C>>),
}

trait ConcreteSystem {
    type Cfg: Ord + Clone;
    fn initial(&self) -> Self::Cfg;
    fn moves(
        &self,
        cfg: &Self::Cfg,
        shared: &Valuation,
        budget: &mut Budget,
    ) -> Result<ConcreteMoves<Self::Cfg>, ExploreError>;
}

struct AutomatonConcrete<'m, 'q> {
    side: &'q AutomatonSide<'m>,
    shared_in: Vec<PortId>,
    shared_out: Vec<PortId>,
    hidden_ports: Vec<PortId>,
    hidden_in: Vec<Valuation>,
}

impl<'m, 'q> AutomatonConcrete<'m, 'q> {
    fn project_out(&self, emission: &RoundOut) -> Valuation {
        self.shared_out
            .iter()
            .map(|p| emission.get(p).copied())
            .collect()
    }
}

impl<'m, 'q> ConcreteSystem for AutomatonConcrete<'m, 'q> {
    type Cfg = InstanceState;

    fn initial(&self) -> InstanceState {
        InstanceState::initial(&self.side.ctx())
    }

    fn moves(
        &self,
        cfg: &InstanceState,
        shared: &Valuation,
        budget: &mut Budget,
    ) -> Result<ConcreteMoves<InstanceState>, ExploreError> {
        let ctx = self.side.ctx();
        let mut steps: Vec<ConcreteStep<InstanceState>> = Vec::new();
        let mut seen: BTreeSet<(InstanceState, Valuation)> = BTreeSet::new();
        for hidden in &self.hidden_in {
            budget.charge(1)?;
            let mut inputs = RoundIn::new();
            for (slot, value) in shared.iter().enumerate() {
                if let Some(v) = value {
                    inputs.insert(self.shared_in[slot], *v);
                }
            }
            for (slot, value) in hidden.iter().enumerate() {
                if let Some(v) = value {
                    inputs.insert(self.hidden_ports[slot], *v);
                }
            }
            let candidates = enabled(&ctx, cfg.state, &cfg.vars, &inputs);
            if candidates.is_empty() {
                match self.side.completion {
                    Completion::Chaos => return Ok(ConcreteMoves::Chaos),
                    _ => {
                        let (next, emission) = apply_stutter(cfg);
                        let shared_out = self.project_out(&emission);
                        if seen.insert((next.clone(), shared_out.clone())) {
                            steps.push(ConcreteStep {
                                next,
                                shared_out,
                                input_record: named_round(self.side.comp, &inputs),
                                output_record: named_round(self.side.comp, &emission),
                            });
                        }
                    }
                }
            } else {
                for (_, transition) in candidates {
                    let applied =
                        apply_transition(&ctx, cfg, transition, &inputs).map_err(|e| {
                            ExploreError::BadQuery(format!("evaluation failed: {e:?}"))
                        })?;
                    let shared_out = self.project_out(&applied.emission);
                    if seen.insert((applied.next.clone(), shared_out.clone())) {
                        steps.push(ConcreteStep {
                            next: applied.next,
                            shared_out,
                            input_record: named_round(self.side.comp, &inputs),
                            output_record: named_round(self.side.comp, &applied.emission),
                        });
                    }
                }
            }
        }
        Ok(ConcreteMoves::Steps(steps))
    }
}

fn named_round(comp: &Component, round: &BTreeMap<PortId, Value>) -> BTreeMap<String, Value> {
    round
        .iter()
        .map(|(p, v)| (comp.port(*p).name.clone(), *v))
        .collect()
}

/// Checks bounded trace inclusion of one automaton in another.
///
/// The shared interface defaults to the ports the abstract automaton
/// mentions; both components must declare each shared port with an equal
/// type and direction. Inputs range over message-or-absence per shared
/// in-port per round; the verdict is `refines-up-to-bound` exactly when no
/// input trace of length `<= bound` lets the concrete side produce an
/// observation outside the abstract side's completed trace set.
pub fn check_refinement(
    abstract_side: &AutomatonSide,
    concrete_side: &AutomatonSide,
    shared: Option<&[String]>,
    bound: usize,
    config: &ExploreConfig,
) -> Result<RefinementVerdict, ExploreError> {
    if bound == 0 {
        return Err(ExploreError::BadQuery("bound must be at least 1".into()));
    }
    let shared_ports = shared_interface(abstract_side, concrete_side, shared)?;
    let mut budget = Budget::new(config.node_budget);

    let shared_in: Vec<&SharedPort> = shared_ports
        .iter()
        .filter(|p| abstract_side.comp.port(p.abstract_id).direction == Direction::In)
        .collect();
    let shared_out: Vec<&SharedPort> = shared_ports
        .iter()
        .filter(|p| abstract_side.comp.port(p.abstract_id).direction == Direction::Out)
        .collect();

    let in_tys: Vec<ValueType> = shared_in.iter().map(|p| p.ty).collect();
    let out_tys: Vec<ValueType> = shared_out.iter().map(|p| p.ty).collect();
    let in_alphabet = valuations(abstract_side.model, &in_tys);
    let out_alphabet = valuations(abstract_side.model, &out_tys);
    budget.charge((in_alphabet.len() + out_alphabet.len()) as u64)?;

    let hidden = |side: &AutomatonSide, shared_ids: &[PortId]| -> (Vec<PortId>, Vec<Valuation>) {
        let (used_in, _) = used_interface(side.comp, side.automaton);
        let ports: Vec<PortId> = used_in
            .into_iter()
            .filter(|p| !shared_ids.contains(p))
            .collect();
        let tys: Vec<ValueType> = ports.iter().map(|p| side.comp.port(*p).ty).collect();
        let vals = valuations(side.model, &tys);
        (ports, vals)
    };

    let abs_in_ids: Vec<PortId> = shared_in.iter().map(|p| p.abstract_id).collect();
    let abs_out_ids: Vec<PortId> = shared_out.iter().map(|p| p.abstract_id).collect();
    let (abs_hidden_ports, abs_hidden_vals) = hidden(abstract_side, &abs_in_ids);
    let mut abs_tracker = AbstractTracker {
        side: abstract_side,
        shared_in: abs_in_ids,
        shared_out: abs_out_ids,
        hidden_ports: abs_hidden_ports,
        hidden_in: abs_hidden_vals,
        out_alphabet,
        covers_memo: BTreeMap::new(),
    };

    let conc_in_ids: Vec<PortId> = shared_in.iter().map(|p| p.concrete_id).collect();
    let conc_out_ids: Vec<PortId> = shared_out.iter().map(|p| p.concrete_id).collect();
    let (conc_hidden_ports, conc_hidden_vals) = hidden(concrete_side, &conc_in_ids);
    let concrete = AutomatonConcrete {
        side: concrete_side,
        shared_in: conc_in_ids,
        shared_out: conc_out_ids,
        hidden_ports: conc_hidden_ports,
        hidden_in: conc_hidden_vals,
    };

    run_inclusion(&concrete, &mut abs_tracker, &in_alphabet, bound, &mut budget)
}

fn shared_interface(
    abstract_side: &AutomatonSide,
    concrete_side: &AutomatonSide,
    shared: Option<&[String]>,
) -> Result<Vec<SharedPort>, ExploreError> {
    let names: Vec<String> = match shared {
        Some(names) => names.to_vec(),
        None => {
            let (ins, outs) = used_interface(abstract_side.comp, abstract_side.automaton);
            ins.iter()
                .chain(outs.iter())
                .map(|p| abstract_side.comp.port(*p).name.clone())
                .collect()
        }
    };
    let mut ports = Vec::new();
    for name in names {
        let Some(abstract_id) = abstract_side.comp.port_by_name(&name) else {
            return Err(ExploreError::BadQuery(format!(
                "shared port `{name}` is not declared by component `{}`",
                abstract_side.comp.name
            )));
        };
        let Some(concrete_id) = concrete_side.comp.port_by_name(&name) else {
            return Err(ExploreError::BadQuery(format!(
                "shared port `{name}` is not declared by component `{}`",
                concrete_side.comp.name
            )));
        };
        let (a, c) = (
            abstract_side.comp.port(abstract_id),
            concrete_side.comp.port(concrete_id),
        );
        if a.ty != c.ty || a.direction != c.direction {
            return Err(ExploreError::BadQuery(format!(
                "shared port `{name}` differs between the two components"
            )));
        }
        ports.push(SharedPort {
            ty: a.ty,
            abstract_id,
            concrete_id,
        });
    }
    Ok(ports)
}

/// Core product exploration shared by automaton refinement and
/// decomposition checking.
fn run_inclusion<C: ConcreteSystem>(
    concrete: &C,
    abs: &mut AbstractTracker,
    in_alphabet: &[Valuation],
    bound: usize,
    budget: &mut Budget,
) -> Result<RefinementVerdict, ExploreError> {
    struct NodeRecord<Cfg> {
        cfg: Cfg,
        aset: AbsSet,
        inputs: Vec<BTreeMap<String, Value>>,
        outputs: Vec<BTreeMap<String, Value>>,
    }

    let mut frontier = vec![NodeRecord {
        cfg: concrete.initial(),
        aset: abs.initial(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    }];
    let mut visited: BTreeSet<(C::Cfg, AbsSet)> = BTreeSet::new();
    visited.insert((frontier[0].cfg.clone(), frontier[0].aset.clone()));

    for round in 0..bound {
        let mut next_frontier = Vec::new();
        for node in &frontier {
            for shared_in in in_alphabet {
                budget.charge(1)?;
                match concrete.moves(&node.cfg, shared_in, budget)? {
                    ConcreteMoves::Chaos => {
                        // Everything the concrete side might still do must
                        // lie inside the abstract's remaining language.
                        if !abs.covers_all(&node.aset, bound - round, in_alphabet, budget)? {
                            let mut inputs = node.inputs.clone();
                            inputs.push(BTreeMap::new());
                            return Ok(RefinementVerdict {
                                result: RefinementResult::Violation,
                                bound,
                                counterexample: Some(Counterexample {
                                    inputs,
                                    outputs: node.outputs.clone(),
                                    divergence_round: round,
                                }),
                            });
                        }
                    }
                    ConcreteMoves::Steps(steps) => {
                        for step in steps {
                            let next_aset =
                                abs.step(&node.aset, shared_in, &step.shared_out, budget)?;
                            let dead = matches!(&next_aset, AbsSet::Configs(c) if c.is_empty());
                            if dead {
                                let mut inputs = node.inputs.clone();
                                inputs.push(step.input_record.clone());
                                let mut outputs = node.outputs.clone();
                                outputs.push(step.output_record.clone());
                                return Ok(RefinementVerdict {
                                    result: RefinementResult::Violation,
                                    bound,
                                    counterexample: Some(Counterexample {
                                        inputs,
                                        outputs,
                                        divergence_round: round,
                                    }),
                                });
                            }
                            if round + 1 < bound
                                && visited.insert((step.next.clone(), next_aset.clone()))
                            {
                                let mut inputs = node.inputs.clone();
                                inputs.push(step.input_record);
                                let mut outputs = node.outputs.clone();
                                outputs.push(step.output_record);
                                next_frontier.push(NodeRecord {
                                    cfg: step.next,
                                    aset: next_aset,
                                    inputs,
                                    outputs,
                                });
                            }
                        }
                    }
                }
            }
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }

    Ok(RefinementVerdict {
        result: RefinementResult::RefinesUpToBound,
        bound,
        counterexample: None,
    })
}

/// One output trace over an ordered list of out-ports; element `r` is the
/// valuation emitted in round `r`.
pub type OutTrace = Vec<Valuation>;

/// Materializes the full set of output traces of `side` on `input_trace`,
/// projected onto `out_ports`, resolving all nondeterminism. Chaos
/// completion expands to every continuation, so the result can be large;
/// the node budget guards against blow-up and `bound` may not exceed
/// `config.max_trace_bound`.
pub fn trace_set(
    side: &AutomatonSide,
    input_trace: &[RoundIn],
    bound: usize,
    out_ports: &[PortId],
    config: &ExploreConfig,
) -> Result<BTreeSet<OutTrace>, ExploreError> {
    if bound > config.max_trace_bound {
        return Err(ExploreError::BadQuery(format!(
            "bound {bound} exceeds the trace-set maximum {}",
            config.max_trace_bound
        )));
    }
    let mut budget = Budget::new(config.node_budget);
    let ctx = side.ctx();
    let out_tys: Vec<ValueType> = out_ports.iter().map(|p| side.comp.port(*p).ty).collect();
    let alphabet = valuations(side.model, &out_tys);
    let project = |emission: &RoundOut| -> Valuation {
        out_ports.iter().map(|p| emission.get(p).copied()).collect()
    };

    let mut results: BTreeSet<OutTrace> = BTreeSet::new();
    let mut frontier: BTreeSet<(InstanceState, OutTrace)> = BTreeSet::new();
    frontier.insert((InstanceState::initial(&ctx), Vec::new()));

    for round in 0..bound {
        let inputs = input_trace.get(round).cloned().unwrap_or_default();
        let mut next: BTreeSet<(InstanceState, OutTrace)> = BTreeSet::new();
        for (cfg, prefix) in frontier {
            budget.charge(1)?;
            let candidates = enabled(&ctx, cfg.state, &cfg.vars, &inputs);
            if candidates.is_empty() {
                match side.completion {
                    Completion::Chaos => {
                        // Rounds `round..bound` are arbitrary, including
                        // any messages still queued.
                        let remaining = bound - round;
                        let count = (alphabet.len() as u64).saturating_pow(remaining as u32);
                        budget.charge(count)?;
                        append_all(&mut results, &prefix, &alphabet, remaining);
                    }
                    _ => {
                        let (stuttered, emission) = apply_stutter(&cfg);
                        let mut trace = prefix.clone();
                        trace.push(project(&emission));
                        next.insert((stuttered, trace));
                    }
                }
            } else {
                for (_, transition) in candidates {
                    let applied =
                        apply_transition(&ctx, &cfg, transition, &inputs).map_err(|e| {
                            ExploreError::BadQuery(format!("evaluation failed: {e:?}"))
                        })?;
                    let mut trace = prefix.clone();
                    trace.push(project(&applied.emission));
                    next.insert((applied.next, trace));
                }
            }
        }
        frontier = next;
    }
    results.extend(frontier.into_iter().map(|(_, trace)| trace));
    Ok(results)
}

fn append_all(
    results: &mut BTreeSet<OutTrace>,
    prefix: &OutTrace,
    alphabet: &[Valuation],
    rounds: usize,
) {
    if rounds == 0 {
        results.insert(prefix.clone());
        return;
    }
    for value in alphabet {
        let mut next = prefix.clone();
        next.push(value.clone());
        append_all(results, &next, alphabet, rounds - 1);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecompositionError {
    #[error("component `{0}` is not decomposed; decomposition checking needs subcomponents")]
    NotDecomposed(String),
    #[error("component `{0}` has no requirement automaton; nothing to check")]
    NoRequirementAutomaton(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("elaboration failed: {0}")]
    Elaboration(String),
}

struct CompositionConcrete<'m> {
    model: &'m ResolvedModel,
    topology: Topology,
    /// Shared slots as boundary port ids of the composite.
    shared_in: Vec<PortId>,
    shared_out: Vec<PortId>,
    boundary: &'m Component,
    inner_completion: Completion,
}

impl<'m> ConcreteSystem for CompositionConcrete<'m> {
    type Cfg = SystemState;

    fn initial(&self) -> SystemState {
        SystemState::initial(self.model, &self.topology)
    }

    fn moves(
        &self,
        cfg: &SystemState,
        shared: &Valuation,
        budget: &mut Budget,
    ) -> Result<ConcreteMoves<SystemState>, ExploreError> {
        let mut external = RoundIn::new();
        for (slot, value) in shared.iter().enumerate() {
            if let Some(v) = value {
                external.insert(self.shared_in[slot], *v);
            }
        }
        let (inputs, external_out_base) = route_external(&self.topology, &cfg.pending, &external);

        // Per-atom choice lists, then the cartesian product of picks.
        let mut choices: Vec<Vec<Option<(InstanceState, RoundOut)>>> = Vec::new();
        for (i, atom) in self.topology.atoms.iter().enumerate() {
            let comp = self.model.component(atom.comp);
            match &cfg.instances[i] {
                None => choices.push(vec![None]),
                Some(st) => {
                    let (_, automaton) = comp.executable_automaton().expect("instance state");
                    let ctx = AutomatonCtx {
                        model: self.model,
                        comp,
                        automaton,
                        params: &atom.params,
                    };
                    let candidates = enabled(&ctx, st.state, &st.vars, &inputs[i]);
                    if candidates.is_empty() {
                        if self.inner_completion == Completion::Chaos {
                            return Ok(ConcreteMoves::Chaos);
                        }
                        let (next, emission) = apply_stutter(st);
                        choices.push(vec![Some((next, emission))]);
                    } else {
                        let mut list = Vec::new();
                        for (_, transition) in candidates {
                            let applied = apply_transition(&ctx, st, transition, &inputs[i])
                                .map_err(|e| {
                                    ExploreError::BadQuery(format!("evaluation failed: {e:?}"))
                                })?;
                            list.push(Some((applied.next, applied.emission)));
                        }
                        choices.push(list);
                    }
                }
            }
        }

        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for list in &choices {
            combos = combos
                .iter()
                .flat_map(|prefix| {
                    (0..list.len()).map(move |i| {
                        let mut c = prefix.clone();
                        c.push(i);
                        c
                    })
                })
                .collect();
        }

        let mut steps = Vec::new();
        let mut seen: BTreeSet<(SystemState, Valuation)> = BTreeSet::new();
        for combo in combos {
            budget.charge(1)?;
            let mut instances = Vec::with_capacity(choices.len());
            let mut emissions: Vec<RoundOut> = Vec::with_capacity(choices.len());
            for (i, pick) in combo.iter().enumerate() {
                match &choices[i][*pick] {
                    None => {
                        instances.push(None);
                        emissions.push(RoundOut::new());
                    }
                    Some((next, emission)) => {
                        instances.push(Some(next.clone()));
                        emissions.push(emission.clone());
                    }
                }
            }
            let mut external_out = external_out_base.clone();
            let pending = route_emissions(&self.topology, &emissions, &mut external_out);
            let next = SystemState { instances, pending };
            let shared_out: Valuation = self
                .shared_out
                .iter()
                .map(|p| external_out.get(p).copied())
                .collect();
            if seen.insert((next.clone(), shared_out.clone())) {
                steps.push(ConcreteStep {
                    next,
                    shared_out,
                    input_record: named_round(self.boundary, &external),
                    output_record: named_round(self.boundary, &external_out),
                });
            }
        }
        Ok(ConcreteMoves::Steps(steps))
    }
}

/// Checks that the composed behavior of a decomposed component's
/// subsystem is included in one of its requirement automata, compared on
/// the externally observable rounds the composition produces. Inputs
/// range over the ports the requirement automaton mentions; other
/// boundary in-ports stay silent.
pub fn check_decomposition(
    model: &ResolvedModel,
    composite: CompId,
    automaton: Option<&str>,
    bound: usize,
    abstract_completion: Completion,
    config: &ExploreConfig,
) -> Result<RefinementVerdict, DecompositionError> {
    let comp = model.component(composite);
    if comp.is_atomic() {
        return Err(DecompositionError::NotDecomposed(comp.name.clone()));
    }
    let requirement = match automaton {
        Some(name) => comp
            .automaton_by_name(name)
            .map(|(_, a)| a)
            .ok_or_else(|| DecompositionError::NoRequirementAutomaton(comp.name.clone()))?,
        None => match comp.automata.first() {
            Some(a) => a,
            None => return Err(DecompositionError::NoRequirementAutomaton(comp.name.clone())),
        },
    };
    if abstract_completion == Completion::Error {
        return Err(DecompositionError::Explore(ExploreError::BadQuery(
            "refinement completions are `chaos` or `ignore`".into(),
        )));
    }
    if bound == 0 {
        return Err(DecompositionError::Explore(ExploreError::BadQuery(
            "bound must be at least 1".into(),
        )));
    }

    let params =
        resolve_params(comp, &[]).map_err(|e| DecompositionError::Elaboration(e.to_string()))?;
    let abstract_side = AutomatonSide {
        model,
        comp,
        automaton: requirement,
        params,
        completion: abstract_completion,
    };

    let (used_in, used_out) = used_interface(comp, requirement);
    let mut budget = Budget::new(config.node_budget);
    let in_tys: Vec<ValueType> = used_in.iter().map(|p| comp.port(*p).ty).collect();
    let out_tys: Vec<ValueType> = used_out.iter().map(|p| comp.port(*p).ty).collect();
    let in_alphabet = valuations(model, &in_tys);
    let out_alphabet = valuations(model, &out_tys);
    budget
        .charge((in_alphabet.len() + out_alphabet.len()) as u64)
        .map_err(DecompositionError::Explore)?;

    let mut abs_tracker = AbstractTracker {
        side: &abstract_side,
        shared_in: used_in.clone(),
        shared_out: used_out.clone(),
        hidden_ports: Vec::new(),
        hidden_in: vec![Vec::new()],
        out_alphabet,
        covers_memo: BTreeMap::new(),
    };

    let topology = Topology::build(model, composite)
        .map_err(|e| DecompositionError::Elaboration(e.to_string()))?;
    let concrete = CompositionConcrete {
        model,
        topology,
        shared_in: used_in,
        shared_out: used_out,
        boundary: comp,
        inner_completion: Completion::Ignore,
    };

    run_inclusion(&concrete, &mut abs_tracker, &in_alphabet, bound, &mut budget)
        .map_err(DecompositionError::Explore)
}
