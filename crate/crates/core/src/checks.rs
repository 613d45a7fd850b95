//! Well-formedness analysis over resolved models.
//!
//! Each rule has a stable identifier:
//!
//! - R1  connector endpoint types are identical
//! - R2  connector direction legality (in to sub-in, sub-out to out,
//!   sub-out to sub-in)
//! - R3  every connector target has at most one incoming connector
//! - R4  automaton patterns, outputs, initial outputs, assignments, and
//!   declared initial values are type-correct
//! - R5  guards are well-typed booleans and only read ports their
//!   transition matches with a non-absence pattern
//! - R6  automata reference only ports, variables, and parameters of the
//!   owning component
//! - R7  the initial state is a declared state
//! - R8  unreachable automaton states (warning)
//! - R9  at most one executable automaton per component
//! - R10 executable automaton on a decomposed component (warning; it is a
//!   requirement on the composition, not executed)
//! - R11 component instantiation graph is acyclic
//! - R12 unconnected subcomponent in-port (warning; behaves as a
//!   permanently absent channel)
//!
//! A model with no error findings can be simulated on any input without
//! resolver or type failures.

use crate::model::*;
use crate::parser::Severity;
use crate::span::SourceSpan;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub rule: &'static str,
    pub severity: Severity,
    pub message: String,
    #[serde(flatten)]
    pub span: SourceSpan,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}[{}]: {}",
            self.span, self.severity, self.rule, self.message
        )
    }
}

/// Result of a check run. Empty findings means the model is well-formed.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.findings).expect("findings serialize")
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Runs every rule over `model`. Pure and deterministic: findings are
/// ordered by position, then rule.
pub fn check(model: &ResolvedModel) -> CheckReport {
    let mut c = Checker {
        model,
        findings: Vec::new(),
    };
    for comp in &model.components {
        c.check_component(comp);
    }
    c.check_composition_acyclic();
    let mut findings = c.findings;
    findings.sort_by(|a, b| {
        (
            &a.span.file,
            a.span.start_line,
            a.span.start_col,
            a.rule,
            &a.message,
        )
            .cmp(&(
                &b.span.file,
                b.span.start_line,
                b.span.start_col,
                b.rule,
                &b.message,
            ))
    });
    CheckReport { findings }
}

struct Checker<'m> {
    model: &'m ResolvedModel,
    findings: Vec<Finding>,
}

impl<'m> Checker<'m> {
    fn report(
        &mut self,
        rule: &'static str,
        severity: Severity,
        span: &SourceSpan,
        message: String,
    ) {
        self.findings.push(Finding {
            rule,
            severity,
            message,
            span: span.clone(),
        });
    }

    fn error(&mut self, rule: &'static str, span: &SourceSpan, message: String) {
        self.report(rule, Severity::Error, span, message);
    }

    fn warn(&mut self, rule: &'static str, span: &SourceSpan, message: String) {
        self.report(rule, Severity::Warning, span, message);
    }

    fn check_component(&mut self, comp: &Component) {
        self.check_declared_values(comp);
        self.check_connectors(comp);
        self.check_unconnected_inputs(comp);

        let executables = comp
            .automata
            .iter()
            .filter(|a| a.mode == AutomatonMode::Executable)
            .count();
        if executables > 1 {
            let span = comp.span.0.clone();
            self.error(
                "R9",
                &span,
                format!(
                    "component `{}` has {executables} executable automata; mark all but one as `monitor`",
                    comp.name
                ),
            );
        }
        if !comp.is_atomic() {
            if let Some((_, aut)) = comp.executable_automaton() {
                let (span, name) = (aut.span.0.clone(), aut.name.clone());
                self.warn(
                    "R10",
                    &span,
                    format!(
                        "automaton `{}` on decomposed component `{}` is a requirement on the composition and is not executed",
                        name, comp.name
                    ),
                );
            }
        }
        for aut in &comp.automata {
            self.check_automaton(comp, aut);
        }
    }

    /// R4 for declared values: variable initials, parameter defaults, and
    /// instance arguments must lie in their declared domains.
    fn check_declared_values(&mut self, comp: &Component) {
        for v in &comp.variables {
            if !self.model.value_in_domain(v.init, v.ty) {
                let msg = format!(
                    "initial value {} of variable `{}` is not in the domain of {}",
                    self.model.value_text(v.init),
                    v.name,
                    self.model.type_name(v.ty)
                );
                let span = v.span.0.clone();
                self.error("R4", &span, msg);
            }
        }
        for p in &comp.params {
            if let Some(d) = p.default {
                if !self.model.value_in_domain(d, p.ty) {
                    let msg = format!(
                        "default value {} of parameter `{}` is not in the domain of {}",
                        self.model.value_text(d),
                        p.name,
                        self.model.type_name(p.ty)
                    );
                    let span = p.span.0.clone();
                    self.error("R4", &span, msg);
                }
            }
        }
        for inst in &comp.instances {
            let target = self.model.component(inst.component);
            for (arg, param) in inst.args.iter().zip(target.params.iter()) {
                if !self.model.value_in_domain(*arg, param.ty) {
                    let msg = format!(
                        "argument {} for parameter `{}` of `{}` is not in the domain of {}",
                        self.model.value_text(*arg),
                        param.name,
                        target.name,
                        self.model.type_name(param.ty)
                    );
                    let span = inst.span.0.clone();
                    self.error("R4", &span, msg);
                }
            }
        }
    }

    fn endpoint_port(&self, comp: &Component, ep: &Endpoint) -> Option<(Port, bool)> {
        match ep.instance {
            None => comp.ports.get(ep.port.idx()).map(|p| (p.clone(), false)),
            Some(i) => {
                let inst = comp.instances.get(i as usize)?;
                self.model
                    .component(inst.component)
                    .ports
                    .get(ep.port.idx())
                    .map(|p| (p.clone(), true))
            }
        }
    }

    fn endpoint_text(&self, comp: &Component, ep: &Endpoint) -> String {
        match ep.instance {
            None => comp
                .ports
                .get(ep.port.idx())
                .map(|p| p.name.clone())
                .unwrap_or_else(|| "<invalid>".to_string()),
            Some(i) => {
                let Some(inst) = comp.instances.get(i as usize) else {
                    return "<invalid>".to_string();
                };
                let port = self
                    .model
                    .component(inst.component)
                    .ports
                    .get(ep.port.idx())
                    .map(|p| p.name.clone())
                    .unwrap_or_else(|| "<invalid>".to_string());
                format!("{}.{}", inst.name, port)
            }
        }
    }

    fn check_connectors(&mut self, comp: &Component) {
        let mut incoming: BTreeMap<Endpoint, usize> = BTreeMap::new();
        for conn in &comp.connectors {
            let span = conn.span.0.clone();
            let (Some((src, src_sub)), Some((tgt, tgt_sub))) = (
                self.endpoint_port(comp, &conn.source),
                self.endpoint_port(comp, &conn.target),
            ) else {
                self.error(
                    "R1",
                    &span,
                    "connector references an invalid endpoint".to_string(),
                );
                continue;
            };

            if src.ty != tgt.ty {
                let msg = format!(
                    "connector type mismatch: `{}` has type {} but `{}` has type {}",
                    self.endpoint_text(comp, &conn.source),
                    self.model.type_name(src.ty),
                    self.endpoint_text(comp, &conn.target),
                    self.model.type_name(tgt.ty)
                );
                self.error("R1", &span, msg);
            }

            let src_ok = (!src_sub && src.direction == Direction::In)
                || (src_sub && src.direction == Direction::Out);
            let tgt_ok = (!tgt_sub && tgt.direction == Direction::Out)
                || (tgt_sub && tgt.direction == Direction::In);
            let shape_ok = src_ok && tgt_ok && (src_sub || tgt_sub);
            if !shape_ok {
                let msg = format!(
                    "illegal connector direction `{} -> {}`: allowed shapes are in -> sub.in, sub.out -> out, sub.out -> sub.in",
                    self.endpoint_text(comp, &conn.source),
                    self.endpoint_text(comp, &conn.target)
                );
                self.error("R2", &span, msg);
            }

            let count = incoming.entry(conn.target).or_insert(0);
            *count += 1;
            if *count == 2 {
                let msg = format!(
                    "target `{}` has more than one incoming connector",
                    self.endpoint_text(comp, &conn.target)
                );
                self.error("R3", &span, msg);
            }
        }
    }

    fn check_unconnected_inputs(&mut self, comp: &Component) {
        for (i, inst) in comp.instances.iter().enumerate() {
            let target = self.model.component(inst.component);
            for (port_id, port) in target.in_ports() {
                let wired = comp.connectors.iter().any(|c| {
                    c.target
                        == Endpoint {
                            instance: Some(i as u32),
                            port: port_id,
                        }
                });
                if !wired {
                    let msg = format!(
                        "in-port `{}.{}` is not connected and will never receive a message",
                        inst.name, port.name
                    );
                    let span = inst.span.0.clone();
                    self.warn("R12", &span, msg);
                }
            }
        }
    }

    fn check_automaton(&mut self, comp: &Component, aut: &Automaton) {
        // R7 and R6 guard against hand-constructed IR with dangling indices;
        // the resolver cannot produce them.
        if aut.initial_state.idx() >= aut.states.len() {
            let span = aut.span.0.clone();
            self.error(
                "R7",
                &span,
                format!("automaton `{}` has an undeclared initial state", aut.name),
            );
            return;
        }

        for (port, value) in &aut.initial_outputs {
            let Some(p) = comp.ports.get(port.idx()).cloned() else {
                self.report_foreign_port(comp, aut);
                continue;
            };
            let span = aut.span.0.clone();
            if p.direction != Direction::Out {
                self.error(
                    "R4",
                    &span,
                    format!(
                        "initial output writes in-port `{}` of component `{}`",
                        p.name, comp.name
                    ),
                );
            }
            if !self.model.value_in_domain(*value, p.ty) {
                let msg = format!(
                    "initial output {} is not in the domain of port `{}` ({})",
                    self.model.value_text(*value),
                    p.name,
                    self.model.type_name(p.ty)
                );
                self.error("R4", &span, msg);
            }
        }

        for t in &aut.transitions {
            self.check_transition(comp, aut, t);
        }

        self.check_reachability(aut);
    }

    fn report_foreign_port(&mut self, comp: &Component, aut: &Automaton) {
        let span = aut.span.0.clone();
        self.error(
            "R6",
            &span,
            format!(
                "automaton `{}` references a port that does not belong to component `{}`",
                aut.name, comp.name
            ),
        );
    }

    fn check_transition(&mut self, comp: &Component, aut: &Automaton, t: &Transition) {
        let span = t.span.0.clone();
        if t.source.idx() >= aut.states.len() || t.target.idx() >= aut.states.len() {
            self.error(
                "R6",
                &span,
                format!(
                    "transition in automaton `{}` references an undeclared state",
                    aut.name
                ),
            );
            return;
        }

        for (port, pattern) in &t.input_pattern {
            let Some(p) = comp.ports.get(port.idx()).cloned() else {
                self.report_foreign_port(comp, aut);
                continue;
            };
            if p.direction != Direction::In {
                self.error(
                    "R4",
                    &span,
                    format!("input pattern matches out-port `{}`", p.name),
                );
            }
            if let InputPattern::Literal(v) = pattern {
                if !self.model.value_in_domain(*v, p.ty) {
                    let msg = format!(
                        "pattern value {} is not in the domain of port `{}` ({})",
                        self.model.value_text(*v),
                        p.name,
                        self.model.type_name(p.ty)
                    );
                    self.error("R4", &span, msg);
                }
            }
        }

        for (port, messages) in &t.outputs {
            let Some(p) = comp.ports.get(port.idx()).cloned() else {
                self.report_foreign_port(comp, aut);
                continue;
            };
            if p.direction != Direction::Out {
                self.error(
                    "R4",
                    &span,
                    format!("output block writes in-port `{}`", p.name),
                );
            }
            for v in messages {
                if !self.model.value_in_domain(*v, p.ty) {
                    let msg = format!(
                        "output message {} is not in the domain of port `{}` ({})",
                        self.model.value_text(*v),
                        p.name,
                        self.model.type_name(p.ty)
                    );
                    self.error("R4", &span, msg);
                }
            }
        }

        if let Some(guard) = &t.guard {
            if let Some(ty) = self.check_expr(comp, guard, &span) {
                if ty != ExprType::Bool {
                    self.error("R5", &span, "guard expression is not boolean".to_string());
                }
            }
            self.check_port_reads(comp, guard, t);
        }

        for (var, expr) in &t.assignments {
            let Some(v) = comp.variables.get(var.idx()).cloned() else {
                self.error(
                    "R6",
                    &span,
                    format!(
                        "assignment in automaton `{}` references a variable that does not belong to component `{}`",
                        aut.name, comp.name
                    ),
                );
                continue;
            };
            if let Some(ty) = self.check_expr(comp, expr, &span) {
                if ty != ExprType::of_value_type(v.ty) {
                    let msg = format!(
                        "assignment to `{}` has type {} but the variable has type {}",
                        v.name,
                        self.type_text(ty),
                        self.model.type_name(v.ty)
                    );
                    self.error("R4", &span, msg);
                }
            }
            self.check_port_reads(comp, expr, t);
        }
    }

    fn type_text(&self, ty: ExprType) -> String {
        match ty {
            ExprType::Bool => "bool".to_string(),
            ExprType::Int => "int".to_string(),
            ExprType::Enum(id) => self.model.enum_type(id).name.clone(),
        }
    }

    /// Types an expression; reports R5/R6 findings and returns `None` if a
    /// sub-expression is already in error.
    fn check_expr(&mut self, comp: &Component, e: &Expr, span: &SourceSpan) -> Option<ExprType> {
        match e {
            Expr::Const(v) => Some(match v {
                Value::Bool(_) => ExprType::Bool,
                Value::Int(_) => ExprType::Int,
                Value::Enum { ty, .. } => ExprType::Enum(*ty),
            }),
            Expr::Var(id) => match comp.variables.get(id.idx()) {
                Some(v) => Some(ExprType::of_value_type(v.ty)),
                None => {
                    self.error(
                        "R6",
                        span,
                        "expression references a variable of another component".to_string(),
                    );
                    None
                }
            },
            Expr::Param(id) => match comp.params.get(id.idx()) {
                Some(p) => Some(ExprType::of_value_type(p.ty)),
                None => {
                    self.error(
                        "R6",
                        span,
                        "expression references a parameter of another component".to_string(),
                    );
                    None
                }
            },
            Expr::Port(id) => match comp.ports.get(id.idx()) {
                Some(p) => {
                    let ty = ExprType::of_value_type(p.ty);
                    if p.direction != Direction::In {
                        let msg = format!("expression reads out-port `{}`", p.name);
                        self.error("R5", span, msg);
                    }
                    Some(ty)
                }
                None => {
                    self.error(
                        "R6",
                        span,
                        "expression references a port of another component".to_string(),
                    );
                    None
                }
            },
            Expr::Not(inner) => {
                let ty = self.check_expr(comp, inner, span)?;
                if ty != ExprType::Bool {
                    self.error("R5", span, "operand of `!` is not boolean".to_string());
                }
                Some(ExprType::Bool)
            }
            Expr::Binary { op, lhs, rhs } => {
                let lt = self.check_expr(comp, lhs, span);
                let rt = self.check_expr(comp, rhs, span);
                let (lt, rt) = (lt?, rt?);
                match op {
                    BinOp::Eq | BinOp::Ne => {
                        if lt != rt {
                            let msg = format!(
                                "comparison between incompatible types {} and {}",
                                self.type_text(lt),
                                self.type_text(rt)
                            );
                            self.error("R5", span, msg);
                        }
                        Some(ExprType::Bool)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if lt != ExprType::Int || rt != ExprType::Int {
                            let msg = format!(
                                "ordering comparison requires integers, found {} and {}",
                                self.type_text(lt),
                                self.type_text(rt)
                            );
                            self.error("R5", span, msg);
                        }
                        Some(ExprType::Bool)
                    }
                    BinOp::And | BinOp::Or => {
                        if lt != ExprType::Bool || rt != ExprType::Bool {
                            let msg = format!(
                                "logical operator requires booleans, found {} and {}",
                                self.type_text(lt),
                                self.type_text(rt)
                            );
                            self.error("R5", span, msg);
                        }
                        Some(ExprType::Bool)
                    }
                    BinOp::Add | BinOp::Sub => {
                        if lt != ExprType::Int || rt != ExprType::Int {
                            let msg = format!(
                                "arithmetic requires integers, found {} and {}",
                                self.type_text(lt),
                                self.type_text(rt)
                            );
                            self.error("R5", span, msg);
                        }
                        Some(ExprType::Int)
                    }
                }
            }
        }
    }

    /// Reading a port whose pattern is `none` or missing is a static error:
    /// the read value would be undefined in rounds where the transition
    /// fires without a message on that port.
    fn check_port_reads(&mut self, comp: &Component, e: &Expr, t: &Transition) {
        let mut reads = Vec::new();
        collect_port_reads(e, &mut reads);
        for port in reads {
            let matched = t
                .input_pattern
                .iter()
                .any(|(p, pat)| *p == port && !matches!(pat, InputPattern::Absent));
            if !matched {
                let name = comp
                    .ports
                    .get(port.idx())
                    .map(|p| p.name.clone())
                    .unwrap_or_else(|| "<invalid>".to_string());
                let span = t.span.0.clone();
                self.error(
                    "R5",
                    &span,
                    format!(
                        "expression reads port `{name}` but the transition does not require a message on it; add `{name}: _` or a literal pattern"
                    ),
                );
            }
        }
    }

    /// R8: warn about states with no path from the initial state in the
    /// transition graph.
    fn check_reachability(&mut self, aut: &Automaton) {
        let n = aut.states.len();
        let mut reached = vec![false; n];
        let mut stack = vec![aut.initial_state.idx()];
        while let Some(s) = stack.pop() {
            if reached[s] {
                continue;
            }
            reached[s] = true;
            for t in &aut.transitions {
                let tgt = t.target.idx();
                if t.source.idx() == s && tgt < n && !reached[tgt] {
                    stack.push(tgt);
                }
            }
        }
        for (i, state) in aut.states.iter().enumerate() {
            if !reached[i] {
                let msg = format!(
                    "state `{state}` of automaton `{}` is unreachable from the initial state",
                    aut.name
                );
                let span = aut.span.0.clone();
                self.warn("R8", &span, msg);
            }
        }
    }

    /// R11: the instantiation graph must be acyclic, otherwise elaboration
    /// would not terminate.
    fn check_composition_acyclic(&mut self) {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let n = self.model.components.len();
        let mut marks = vec![Mark::White; n];
        let mut cycles: Vec<usize> = Vec::new();

        fn visit(model: &ResolvedModel, i: usize, marks: &mut [Mark], cycles: &mut Vec<usize>) {
            marks[i] = Mark::Grey;
            for inst in &model.components[i].instances {
                let j = inst.component.idx();
                match marks[j] {
                    Mark::White => visit(model, j, marks, cycles),
                    Mark::Grey => {
                        if !cycles.contains(&j) {
                            cycles.push(j);
                        }
                    }
                    Mark::Black => {}
                }
            }
            marks[i] = Mark::Black;
        }

        for i in 0..n {
            if marks[i] == Mark::White {
                visit(self.model, i, &mut marks, &mut cycles);
            }
        }
        for i in cycles {
            let comp = &self.model.components[i];
            let (span, name) = (comp.span.0.clone(), comp.name.clone());
            self.error(
                "R11",
                &span,
                format!("component `{name}` participates in a recursive instantiation cycle"),
            );
        }
    }
}

fn collect_port_reads(e: &Expr, out: &mut Vec<PortId>) {
    match e {
        Expr::Port(id) => out.push(*id),
        Expr::Not(inner) => collect_port_reads(inner, out),
        Expr::Binary { lhs, rhs, .. } => {
            collect_port_reads(lhs, out);
            collect_port_reads(rhs, out);
        }
        Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {}
    }
}
