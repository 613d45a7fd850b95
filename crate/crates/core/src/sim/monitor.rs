//! Monitor automata interpreted as trace acceptors.
//!
//! A monitor tracks the set of automaton configurations consistent with
//! the observed per-round input and output of its owning instance,
//! projected onto the ports the monitor mentions. A round that empties
//! the set is a violation. When a configuration has no enabled transition
//! the completion policy applies: chaos makes the monitor accept anything
//! from then on, ignore keeps the configuration if its drained emission
//! matches the observation.

use super::*;
use std::collections::BTreeSet;

/// Identifies one monitor automaton on one atomic instance.
#[derive(Debug, Clone)]
pub struct MonitorSelector {
    pub instance: String,
    pub component: CompId,
    pub automaton: String,
}

pub struct MonitorTracker<'m> {
    pub atom: usize,
    model: &'m ResolvedModel,
    comp: &'m Component,
    automaton: &'m Automaton,
    params: Vec<Value>,
    completion: Completion,
    used_in: Vec<PortId>,
    used_out: Vec<PortId>,
    configs: BTreeSet<InstanceState>,
    chaos: bool,
    violation: Option<usize>,
    instance: String,
}

/// Builds a tracker for every monitor automaton carried by an atomic
/// instance of the topology. `Completion::Error` behaves as ignore here;
/// monitors only distinguish the two incompleteness readings.
pub fn collect_monitors<'m>(
    model: &'m ResolvedModel,
    topology: &Topology,
    completion: Completion,
) -> Vec<MonitorTracker<'m>> {
    let mut trackers = Vec::new();
    for (i, atom) in topology.atoms.iter().enumerate() {
        let comp = model.component(atom.comp);
        for automaton in &comp.automata {
            if automaton.mode != AutomatonMode::Monitor {
                continue;
            }
            trackers.push(MonitorTracker::new(
                model,
                i,
                atom.path.clone(),
                comp,
                automaton,
                atom.params.clone(),
                completion,
            ));
        }
    }
    trackers
}

impl<'m> MonitorTracker<'m> {
    pub fn new(
        model: &'m ResolvedModel,
        atom: usize,
        instance: String,
        comp: &'m Component,
        automaton: &'m Automaton,
        params: Vec<Value>,
        completion: Completion,
    ) -> Self {
        let (used_in, used_out) = used_interface(comp, automaton);
        let ctx = AutomatonCtx {
            model,
            comp,
            automaton,
            params: &params,
        };
        let mut configs = BTreeSet::new();
        configs.insert(InstanceState::initial(&ctx));
        MonitorTracker {
            atom,
            model,
            comp,
            automaton,
            params,
            completion,
            used_in,
            used_out,
            configs,
            chaos: false,
            violation: None,
            instance,
        }
    }

    fn ctx(&self) -> AutomatonCtx<'_> {
        AutomatonCtx {
            model: self.model,
            comp: self.comp,
            automaton: self.automaton,
            params: &self.params,
        }
    }

    fn project_out(&self, out: &RoundOut) -> RoundOut {
        out.iter()
            .filter(|(p, _)| self.used_out.contains(p))
            .map(|(p, v)| (*p, *v))
            .collect()
    }

    fn project_in(&self, inputs: &RoundIn) -> RoundIn {
        inputs
            .iter()
            .filter(|(p, _)| self.used_in.contains(p))
            .map(|(p, v)| (*p, *v))
            .collect()
    }

    /// Feeds one observed round. Returns a violation event the first time
    /// the observation is inconsistent with every tracked configuration.
    pub fn observe(
        &mut self,
        round: usize,
        inputs: &RoundIn,
        outputs: &RoundOut,
    ) -> Option<TraceEvent> {
        if self.chaos || self.violation.is_some() {
            return None;
        }
        let inputs = self.project_in(inputs);
        let observed = self.project_out(outputs);

        let ctx = self.ctx();
        let mut next: BTreeSet<InstanceState> = BTreeSet::new();
        for cfg in &self.configs {
            let candidates = enabled(&ctx, cfg.state, &cfg.vars, &inputs);
            if candidates.is_empty() {
                match self.completion {
                    Completion::Chaos => {
                        // Undefined input under the open reading: anything
                        // is acceptable from here on.
                        self.chaos = true;
                        return None;
                    }
                    Completion::Ignore | Completion::Error => {
                        let (stuttered, emission) = apply_stutter(cfg);
                        if self.project_out(&emission) == observed {
                            next.insert(stuttered);
                        }
                    }
                }
            } else {
                for (_, transition) in candidates {
                    if let Ok(applied) = apply_transition(&ctx, cfg, transition, &inputs) {
                        if self.project_out(&applied.emission) == observed {
                            next.insert(applied.next);
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            self.violation = Some(round);
            Some(TraceEvent {
                round,
                instance: self.instance.clone(),
                kind: TraceEventKind::MonitorViolation(self.automaton.name.clone()),
                state: None,
                vars: BTreeMap::new(),
                inputs: named(self.comp, &inputs),
                outputs: named(self.comp, &observed),
            })
        } else {
            self.configs = next;
            None
        }
    }

    pub fn verdict(&self) -> MonitorVerdict {
        MonitorVerdict {
            instance: self.instance.clone(),
            monitor: self.automaton.name.clone(),
            violation: self.violation,
        }
    }
}

fn named(comp: &Component, values: &BTreeMap<PortId, Value>) -> BTreeMap<String, Value> {
    values
        .iter()
        .map(|(p, v)| (comp.port(*p).name.clone(), *v))
        .collect()
}

/// Replays the monitors selected by `monitors` against a recorded trace.
/// Observations are reconstructed from the per-round step events of each
/// instance. An empty trace yields no violations.
pub fn run_monitors(
    model: &ResolvedModel,
    trace: &Trace,
    monitors: &[MonitorSelector],
    completion: Completion,
) -> Vec<MonitorVerdict> {
    let mut verdicts = Vec::new();
    for selector in monitors {
        let comp = model.component(selector.component);
        let Some((_, automaton)) = comp.automaton_by_name(&selector.automaton) else {
            verdicts.push(MonitorVerdict {
                instance: selector.instance.clone(),
                monitor: selector.automaton.clone(),
                violation: None,
            });
            continue;
        };
        let params = comp
            .params
            .iter()
            .map(|p| p.default.unwrap_or(Value::Bool(false)))
            .collect::<Vec<_>>();
        let mut tracker = MonitorTracker::new(
            model,
            0,
            selector.instance.clone(),
            comp,
            automaton,
            params,
            completion,
        );
        for event in &trace.events {
            if event.instance != selector.instance {
                continue;
            }
            let is_round_event = matches!(
                event.kind,
                TraceEventKind::Step(_)
                    | TraceEventKind::IgnoredInput
                    | TraceEventKind::ChaosUnspecified
            );
            if !is_round_event {
                continue;
            }
            let to_ids = |m: &BTreeMap<String, Value>| -> RoundIn {
                m.iter()
                    .filter_map(|(name, v)| comp.port_by_name(name).map(|id| (id, *v)))
                    .collect()
            };
            tracker.observe(event.round, &to_ids(&event.inputs), &to_ids(&event.outputs));
        }
        verdicts.push(tracker.verdict());
    }
    verdicts
}
