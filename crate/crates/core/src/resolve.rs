//! Name resolution: binds a parsed [`ast::Model`] into a [`ResolvedModel`].
//!
//! Resolution runs in two phases. Phase one collects every component's
//! interface (parameters, ports, variables) so instances and connectors can
//! reference components declared later in the file. Phase two binds bodies.
//!
//! Resolution is pure name binding. Type agreement between bound entities
//! (connector ends, pattern values against port domains, guard typing) is
//! left to the check pass so that a single run can report every problem.
//! Bare names in literal positions are resolved against the expected type
//! first, then against the set of all enum literals if the name is unique
//! across enums.

use crate::ast;
use crate::model::*;
use crate::span::{SourceSpan, Spanned};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveErrorKind {
    UnresolvedName,
    DuplicateName,
    Invalid,
}

#[derive(Debug, Clone)]
pub struct ResolveError {
    pub kind: ResolveErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error: {}", self.span, self.message)
    }
}

impl ResolveError {
    fn unresolved(name: &str, what: &str, span: &SourceSpan) -> Self {
        ResolveError {
            kind: ResolveErrorKind::UnresolvedName,
            message: format!("unresolved {what} `{name}`"),
            span: span.clone(),
        }
    }

    fn duplicate(name: &str, what: &str, span: &SourceSpan) -> Self {
        ResolveError {
            kind: ResolveErrorKind::DuplicateName,
            message: format!("duplicate {what} `{name}`"),
            span: span.clone(),
        }
    }

    fn invalid(message: String, span: &SourceSpan) -> Self {
        ResolveError {
            kind: ResolveErrorKind::Invalid,
            message,
            span: span.clone(),
        }
    }
}

/// Component interface collected in phase one.
#[derive(Clone, Default)]
struct Scope {
    params: Vec<Param>,
    ports: Vec<Port>,
    variables: Vec<Variable>,
}

impl Scope {
    fn port_id(&self, name: &str) -> Option<PortId> {
        self.ports
            .iter()
            .position(|p| p.name == name)
            .map(|i| PortId(i as u32))
    }

    fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u32))
    }

    fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .map(|i| ParamId(i as u32))
    }

    fn expr_type(&self, e: &Expr) -> ExprType {
        match e {
            Expr::Const(v) => match v {
                Value::Bool(_) => ExprType::Bool,
                Value::Int(_) => ExprType::Int,
                Value::Enum { ty, .. } => ExprType::Enum(*ty),
            },
            Expr::Var(id) => ExprType::of_value_type(self.variables[id.idx()].ty),
            Expr::Param(id) => ExprType::of_value_type(self.params[id.idx()].ty),
            Expr::Port(id) => ExprType::of_value_type(self.ports[id.idx()].ty),
            Expr::Not(_) => ExprType::Bool,
            Expr::Binary { op, .. } => match op {
                BinOp::Add | BinOp::Sub => ExprType::Int,
                _ => ExprType::Bool,
            },
        }
    }
}

/// Binds every name in `model` to its declaration. Collects as many errors
/// as possible before giving up; declarations that fail to resolve are
/// dropped, which may cause follow-on unresolved-name errors.
pub fn resolve(model: &ast::Model) -> Result<ResolvedModel, Vec<ResolveError>> {
    let mut r = Resolver {
        errors: Vec::new(),
        enums: Vec::new(),
        enum_ids: BTreeMap::new(),
        comp_ids: BTreeMap::new(),
        scopes: Vec::new(),
    };

    for decl in &model.enums {
        r.declare_enum(decl);
    }
    for (i, decl) in model.components.iter().enumerate() {
        let name = &decl.node.name;
        if r.comp_ids.contains_key(&name.node) {
            r.errors
                .push(ResolveError::duplicate(&name.node, "component", &name.span));
        } else {
            r.comp_ids.insert(name.node.clone(), CompId(i as u32));
        }
    }
    for decl in &model.components {
        let scope = r.component_scope(&decl.node);
        r.scopes.push(scope);
    }

    let mut components = Vec::new();
    for (i, decl) in model.components.iter().enumerate() {
        components.push(r.resolve_component(CompId(i as u32), &decl.node, &decl.span));
    }

    let main = match &model.main {
        Some(name) => match r.comp_ids.get(name) {
            Some(&id) => Some(id),
            None => {
                r.errors.push(ResolveError::unresolved(
                    name,
                    "main component",
                    &SourceSpan::synthetic(),
                ));
                None
            }
        },
        None => None,
    };

    if r.errors.is_empty() {
        Ok(ResolvedModel {
            enums: r.enums,
            components,
            main,
        })
    } else {
        Err(r.errors)
    }
}

struct Resolver {
    errors: Vec<ResolveError>,
    enums: Vec<EnumType>,
    enum_ids: BTreeMap<String, EnumId>,
    comp_ids: BTreeMap<String, CompId>,
    scopes: Vec<Scope>,
}

impl Resolver {
    fn declare_enum(&mut self, decl: &Spanned<ast::EnumDecl>) {
        let name = &decl.node.name;
        if self.enum_ids.contains_key(&name.node) {
            self.errors
                .push(ResolveError::duplicate(&name.node, "enum", &name.span));
            return;
        }
        let mut literals = Vec::new();
        for lit in &decl.node.literals {
            if literals.contains(&lit.node) {
                self.errors
                    .push(ResolveError::duplicate(&lit.node, "enum literal", &lit.span));
            } else {
                literals.push(lit.node.clone());
            }
        }
        let id = EnumId(self.enums.len() as u32);
        self.enum_ids.insert(name.node.clone(), id);
        self.enums.push(EnumType {
            name: name.node.clone(),
            literals,
            span: decl.span.clone().into(),
        });
    }

    fn resolve_type(&mut self, ty: &ast::TypeRef) -> Option<ValueType> {
        match ty {
            ast::TypeRef::Bool(_) => Some(ValueType::Bool),
            ast::TypeRef::Int { lo, hi, span } => {
                if lo > hi {
                    self.errors.push(ResolveError::invalid(
                        format!("empty integer range int({lo}..{hi})"),
                        span,
                    ));
                    None
                } else {
                    Some(ValueType::Int { lo: *lo, hi: *hi })
                }
            }
            ast::TypeRef::Named(name) => match self.enum_ids.get(&name.node) {
                Some(&id) => Some(ValueType::Enum(id)),
                None => {
                    self.errors
                        .push(ResolveError::unresolved(&name.node, "type", &name.span));
                    None
                }
            },
        }
    }

    /// Binds a literal. The expected type is consulted first; a bare name
    /// outside it falls back to a model-wide unique enum literal so the
    /// check pass can report the type mismatch with full information.
    fn resolve_literal(&mut self, lit: &ast::LiteralAst, expected: ValueType) -> Option<Value> {
        match &lit.node {
            ast::LiteralNode::Int(v) => Some(Value::Int(*v)),
            ast::LiteralNode::Bool(b) => Some(Value::Bool(*b)),
            ast::LiteralNode::Name(name) => {
                if let ValueType::Enum(id) = expected {
                    if let Some(pos) = self.enums[id.idx()].literals.iter().position(|l| l == name)
                    {
                        return Some(Value::Enum {
                            ty: id,
                            literal: pos as u32,
                        });
                    }
                }
                self.global_enum_literal(name, &lit.span)
            }
        }
    }

    fn global_enum_literal(&mut self, name: &str, span: &SourceSpan) -> Option<Value> {
        let mut hits = Vec::new();
        for (i, e) in self.enums.iter().enumerate() {
            if let Some(pos) = e.literals.iter().position(|l| l == name) {
                hits.push(Value::Enum {
                    ty: EnumId(i as u32),
                    literal: pos as u32,
                });
            }
        }
        match hits.len() {
            1 => Some(hits[0]),
            0 => {
                self.errors
                    .push(ResolveError::unresolved(name, "name", span));
                None
            }
            _ => {
                self.errors.push(ResolveError::invalid(
                    format!("ambiguous enum literal `{name}`; use it in a typed position"),
                    span,
                ));
                None
            }
        }
    }

    /// Phase one: parameters, ports, and variables of one component.
    fn component_scope(&mut self, decl: &ast::ComponentDecl) -> Scope {
        let mut scope = Scope::default();
        for p in &decl.params {
            let Some(ty) = self.resolve_type(&p.ty) else {
                continue;
            };
            let default = p.default.as_ref().and_then(|d| self.resolve_literal(d, ty));
            scope.params.push(Param {
                name: p.name.node.clone(),
                ty,
                default,
                span: p.name.span.clone().into(),
            });
        }
        for p in &decl.ports {
            if scope.port_id(&p.name.node).is_some() {
                self.errors
                    .push(ResolveError::duplicate(&p.name.node, "port", &p.name.span));
                continue;
            }
            let Some(ty) = self.resolve_type(&p.ty) else {
                continue;
            };
            scope.ports.push(Port {
                name: p.name.node.clone(),
                direction: match p.direction {
                    ast::Direction::In => Direction::In,
                    ast::Direction::Out => Direction::Out,
                },
                ty,
                span: p.name.span.clone().into(),
            });
        }
        for v in &decl.vars {
            let Some(ty) = self.resolve_type(&v.ty) else {
                continue;
            };
            let Some(init) = self.resolve_literal(&v.init, ty) else {
                continue;
            };
            scope.variables.push(Variable {
                name: v.name.node.clone(),
                ty,
                init,
                span: v.name.span.clone().into(),
            });
        }
        scope
    }

    /// Phase two: bodies. `id` indexes the scope built in phase one.
    fn resolve_component(
        &mut self,
        id: CompId,
        decl: &ast::ComponentDecl,
        span: &SourceSpan,
    ) -> Component {
        let scope = self.scopes[id.idx()].clone();

        // Instance, variable, and parameter names are pairwise unique and
        // disjoint from port names.
        let mut seen: BTreeMap<String, SourceSpan> = BTreeMap::new();
        for p in &scope.ports {
            seen.insert(p.name.clone(), p.span.0.clone());
        }
        let named = scope
            .params
            .iter()
            .map(|p| (p.name.clone(), p.span.0.clone()))
            .chain(
                scope
                    .variables
                    .iter()
                    .map(|v| (v.name.clone(), v.span.0.clone())),
            )
            .chain(
                decl.instances
                    .iter()
                    .map(|i| (i.name.node.clone(), i.name.span.clone())),
            )
            .collect::<Vec<_>>();
        for (name, span) in named {
            if seen.contains_key(&name) {
                self.errors
                    .push(ResolveError::duplicate(&name, "name", &span));
            } else {
                seen.insert(name, span);
            }
        }

        let mut instances = Vec::new();
        for inst in &decl.instances {
            if let Some(resolved) = self.resolve_instance(inst) {
                instances.push(resolved);
            }
        }

        let mut connectors = Vec::new();
        for conn in &decl.connectors {
            if let Some(resolved) =
                self.resolve_connector(&conn.node, &conn.span, &scope, &instances)
            {
                connectors.push(resolved);
            }
        }

        let mut automata = Vec::new();
        for aut in &decl.automata {
            if let Some(resolved) = self.resolve_automaton(&aut.node, &aut.span, &scope) {
                automata.push(resolved);
            }
        }

        Component {
            name: decl.name.node.clone(),
            params: scope.params,
            ports: scope.ports,
            variables: scope.variables,
            instances,
            connectors,
            automata,
            span: span.clone().into(),
        }
    }

    fn resolve_instance(&mut self, inst: &ast::InstanceDecl) -> Option<Instance> {
        let Some(&comp_id) = self.comp_ids.get(&inst.component.node) else {
            self.errors.push(ResolveError::unresolved(
                &inst.component.node,
                "component",
                &inst.component.span,
            ));
            return None;
        };
        let params = self.scopes[comp_id.idx()].params.clone();
        if inst.args.len() > params.len() {
            self.errors.push(ResolveError::invalid(
                format!(
                    "component `{}` takes {} parameter(s), {} argument(s) given",
                    inst.component.node,
                    params.len(),
                    inst.args.len()
                ),
                &inst.name.span,
            ));
            return None;
        }
        let mut args = Vec::new();
        for (arg, param) in inst.args.iter().zip(params.iter()) {
            args.push(self.resolve_literal(arg, param.ty)?);
        }
        for param in params.iter().skip(inst.args.len()) {
            if param.default.is_none() {
                self.errors.push(ResolveError::invalid(
                    format!(
                        "missing argument for parameter `{}` of component `{}`",
                        param.name, inst.component.node
                    ),
                    &inst.name.span,
                ));
                return None;
            }
        }
        Some(Instance {
            name: inst.name.node.clone(),
            component: comp_id,
            args,
            span: inst.name.span.clone().into(),
        })
    }

    fn resolve_connector(
        &mut self,
        conn: &ast::ConnectorDecl,
        span: &SourceSpan,
        scope: &Scope,
        instances: &[Instance],
    ) -> Option<Connector> {
        let source = self.resolve_endpoint(&conn.source, scope, instances)?;
        let target = self.resolve_endpoint(&conn.target, scope, instances)?;
        Some(Connector {
            source,
            target,
            span: span.clone().into(),
        })
    }

    fn resolve_endpoint(
        &mut self,
        r: &ast::PortRef,
        scope: &Scope,
        instances: &[Instance],
    ) -> Option<Endpoint> {
        match &r.instance {
            None => match scope.port_id(&r.port.node) {
                Some(port) => Some(Endpoint {
                    instance: None,
                    port,
                }),
                None => {
                    self.errors
                        .push(ResolveError::unresolved(&r.port.node, "port", &r.port.span));
                    None
                }
            },
            Some(inst_name) => {
                let Some(idx) = instances.iter().position(|i| i.name == inst_name.node) else {
                    self.errors.push(ResolveError::unresolved(
                        &inst_name.node,
                        "instance",
                        &inst_name.span,
                    ));
                    return None;
                };
                let comp_id = instances[idx].component;
                match self.scopes[comp_id.idx()].port_id(&r.port.node) {
                    Some(port) => Some(Endpoint {
                        instance: Some(idx as u32),
                        port,
                    }),
                    None => {
                        self.errors.push(ResolveError::unresolved(
                            &format!("{}.{}", inst_name.node, r.port.node),
                            "port",
                            &r.port.span,
                        ));
                        None
                    }
                }
            }
        }
    }

    fn resolve_automaton(
        &mut self,
        a: &ast::AutomatonDecl,
        span: &SourceSpan,
        scope: &Scope,
    ) -> Option<Automaton> {
        let mut states = Vec::new();
        for s in &a.states {
            if states.contains(&s.node) {
                self.errors
                    .push(ResolveError::duplicate(&s.node, "state", &s.span));
            } else {
                states.push(s.node.clone());
            }
        }
        fn state_id(
            states: &[String],
            id: &crate::span::Ident,
            errs: &mut Vec<ResolveError>,
        ) -> Option<StateId> {
            match states.iter().position(|s| s == &id.node) {
                Some(i) => Some(StateId(i as u32)),
                None => {
                    errs.push(ResolveError::unresolved(&id.node, "state", &id.span));
                    None
                }
            }
        }

        let initial_state = state_id(&states, &a.initial_state, &mut self.errors)?;
        let initial_outputs = self.resolve_initial_outputs(&a.initial_outputs, scope);

        let mut transitions = Vec::new();
        for t in &a.transitions {
            let Some(source) = state_id(&states, &t.node.source, &mut self.errors) else {
                continue;
            };
            let Some(target) = state_id(&states, &t.node.target, &mut self.errors) else {
                continue;
            };
            let input_pattern = self.resolve_patterns(&t.node.inputs, scope);
            let guard = t
                .node
                .guard
                .as_ref()
                .and_then(|g| self.resolve_expr(g, scope, Some(ExprType::Bool)));
            let (outputs, assignments) = self.resolve_out_items(&t.node.outputs, scope);
            transitions.push(Transition {
                source,
                target,
                input_pattern,
                guard,
                outputs,
                assignments,
                span: t.span.clone().into(),
            });
        }

        Some(Automaton {
            name: a.name.node.clone(),
            mode: if a.monitor {
                AutomatonMode::Monitor
            } else {
                AutomatonMode::Executable
            },
            states,
            initial_state,
            initial_outputs,
            transitions,
            span: span.clone().into(),
        })
    }

    fn resolve_initial_outputs(
        &mut self,
        items: &[ast::OutItem],
        scope: &Scope,
    ) -> Vec<(PortId, Value)> {
        let mut outputs: Vec<(PortId, Value)> = Vec::new();
        for item in items {
            match item {
                ast::OutItem::Assign { var, .. } => {
                    self.errors.push(ResolveError::invalid(
                        "assignments are not allowed in an initial output block".to_string(),
                        &var.span,
                    ));
                }
                ast::OutItem::Port { port, messages } => {
                    let Some(port_id) = scope.port_id(&port.node) else {
                        self.errors
                            .push(ResolveError::unresolved(&port.node, "port", &port.span));
                        continue;
                    };
                    if messages.len() != 1 {
                        self.errors.push(ResolveError::invalid(
                            "an initial output carries exactly one message per port".to_string(),
                            &port.span,
                        ));
                        continue;
                    }
                    if outputs.iter().any(|(p, _)| *p == port_id) {
                        self.errors.push(ResolveError::duplicate(
                            &port.node,
                            "port in output block",
                            &port.span,
                        ));
                        continue;
                    }
                    let ty = scope.ports[port_id.idx()].ty;
                    if let Some(v) = self.resolve_literal(&messages[0], ty) {
                        outputs.push((port_id, v));
                    }
                }
            }
        }
        outputs
    }

    fn resolve_patterns(
        &mut self,
        inputs: &[(crate::span::Ident, ast::PatternAst)],
        scope: &Scope,
    ) -> Vec<(PortId, InputPattern)> {
        let mut pattern: Vec<(PortId, InputPattern)> = Vec::new();
        for (port, pat) in inputs {
            let Some(port_id) = scope.port_id(&port.node) else {
                self.errors
                    .push(ResolveError::unresolved(&port.node, "port", &port.span));
                continue;
            };
            if pattern.iter().any(|(p, _)| *p == port_id) {
                self.errors.push(ResolveError::duplicate(
                    &port.node,
                    "port in input block",
                    &port.span,
                ));
                continue;
            }
            let resolved = match pat {
                ast::PatternAst::Wildcard => Some(InputPattern::Present),
                ast::PatternAst::Absent => Some(InputPattern::Absent),
                ast::PatternAst::Literal(lit) => {
                    let ty = scope.ports[port_id.idx()].ty;
                    self.resolve_literal(lit, ty).map(InputPattern::Literal)
                }
            };
            if let Some(p) = resolved {
                pattern.push((port_id, p));
            }
        }
        pattern
    }

    fn resolve_out_items(
        &mut self,
        items: &[ast::OutItem],
        scope: &Scope,
    ) -> (Vec<(PortId, Vec<Value>)>, Vec<(VarId, Expr)>) {
        let mut outputs: Vec<(PortId, Vec<Value>)> = Vec::new();
        let mut assignments = Vec::new();
        for item in items {
            match item {
                ast::OutItem::Port { port, messages } => {
                    let Some(port_id) = scope.port_id(&port.node) else {
                        self.errors
                            .push(ResolveError::unresolved(&port.node, "port", &port.span));
                        continue;
                    };
                    if outputs.iter().any(|(p, _)| *p == port_id) {
                        self.errors.push(ResolveError::duplicate(
                            &port.node,
                            "port in output block",
                            &port.span,
                        ));
                        continue;
                    }
                    let ty = scope.ports[port_id.idx()].ty;
                    let values: Vec<Value> = messages
                        .iter()
                        .filter_map(|m| self.resolve_literal(m, ty))
                        .collect();
                    if values.len() == messages.len() {
                        outputs.push((port_id, values));
                    }
                }
                ast::OutItem::Assign { var, expr } => {
                    let Some(var_id) = scope.var_id(&var.node) else {
                        self.errors
                            .push(ResolveError::unresolved(&var.node, "variable", &var.span));
                        continue;
                    };
                    let hint = ExprType::of_value_type(scope.variables[var_id.idx()].ty);
                    if let Some(e) = self.resolve_expr(expr, scope, Some(hint)) {
                        assignments.push((var_id, e));
                    }
                }
            }
        }
        (outputs, assignments)
    }

    /// Resolves an expression; `hint` guides bare enum literal lookup.
    fn resolve_expr(
        &mut self,
        e: &ast::ExprAst,
        scope: &Scope,
        hint: Option<ExprType>,
    ) -> Option<Expr> {
        match &e.node {
            ast::ExprNode::Int(v) => Some(Expr::Const(Value::Int(*v))),
            ast::ExprNode::Bool(b) => Some(Expr::Const(Value::Bool(*b))),
            ast::ExprNode::Name(name) => self.resolve_name(name, &e.span, scope, hint),
            ast::ExprNode::Not(inner) => {
                let inner = self.resolve_expr(inner, scope, Some(ExprType::Bool))?;
                Some(Expr::Not(Box::new(inner)))
            }
            ast::ExprNode::Binary { op, lhs, rhs } => {
                let (lhs, rhs) = match op {
                    ast::BinOp::Eq | ast::BinOp::Ne => self.resolve_equality(lhs, rhs, scope)?,
                    ast::BinOp::And | ast::BinOp::Or => (
                        self.resolve_expr(lhs, scope, Some(ExprType::Bool))?,
                        self.resolve_expr(rhs, scope, Some(ExprType::Bool))?,
                    ),
                    _ => (
                        self.resolve_expr(lhs, scope, Some(ExprType::Int))?,
                        self.resolve_expr(rhs, scope, Some(ExprType::Int))?,
                    ),
                };
                Some(Expr::Binary {
                    op: *op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                })
            }
        }
    }

    /// For `==`/`!=`, the side that resolves in scope supplies the expected
    /// type for a bare enum literal on the other side.
    fn resolve_equality(
        &mut self,
        lhs: &ast::ExprAst,
        rhs: &ast::ExprAst,
        scope: &Scope,
    ) -> Option<(Expr, Expr)> {
        let lhs_bare = matches!(&lhs.node, ast::ExprNode::Name(n) if !in_scope(n, scope));
        let rhs_bare = matches!(&rhs.node, ast::ExprNode::Name(n) if !in_scope(n, scope));
        if lhs_bare && !rhs_bare {
            let r = self.resolve_expr(rhs, scope, None)?;
            let hint = scope.expr_type(&r);
            let l = self.resolve_expr(lhs, scope, Some(hint))?;
            Some((l, r))
        } else {
            let l = self.resolve_expr(lhs, scope, None)?;
            let hint = scope.expr_type(&l);
            let r = self.resolve_expr(rhs, scope, Some(hint))?;
            Some((l, r))
        }
    }

    fn resolve_name(
        &mut self,
        name: &str,
        span: &SourceSpan,
        scope: &Scope,
        hint: Option<ExprType>,
    ) -> Option<Expr> {
        if let Some(id) = scope.var_id(name) {
            return Some(Expr::Var(id));
        }
        if let Some(id) = scope.param_id(name) {
            return Some(Expr::Param(id));
        }
        if let Some(id) = scope.port_id(name) {
            return Some(Expr::Port(id));
        }
        if let Some(ExprType::Enum(enum_id)) = hint {
            if let Some(pos) = self.enums[enum_id.idx()]
                .literals
                .iter()
                .position(|l| l == name)
            {
                return Some(Expr::Const(Value::Enum {
                    ty: enum_id,
                    literal: pos as u32,
                }));
            }
        }
        self.global_enum_literal(name, span).map(Expr::Const)
    }
}

fn in_scope(name: &str, scope: &Scope) -> bool {
    scope.var_id(name).is_some()
        || scope.param_id(name).is_some()
        || scope.port_id(name).is_some()
}

impl ResolvedModel {
    /// Reconstructs an unresolved syntax tree from this model. Resolving
    /// the result yields a model structurally equal to `self`, making
    /// resolution idempotent, and gives resolved models access to the
    /// pretty-printer.
    pub fn to_model(&self) -> ast::Model {
        let lit = |v: Value| -> ast::LiteralAst {
            Spanned::synthetic(match v {
                Value::Int(i) => ast::LiteralNode::Int(i),
                Value::Bool(b) => ast::LiteralNode::Bool(b),
                Value::Enum { ty, literal } => {
                    ast::LiteralNode::Name(self.enums[ty.idx()].literals[literal as usize].clone())
                }
            })
        };
        let type_ref = |ty: ValueType| -> ast::TypeRef {
            match ty {
                ValueType::Bool => ast::TypeRef::Bool(SourceSpan::synthetic()),
                ValueType::Int { lo, hi } => ast::TypeRef::Int {
                    lo,
                    hi,
                    span: SourceSpan::synthetic(),
                },
                ValueType::Enum(id) => ast::TypeRef::Named(Spanned::synthetic(
                    self.enums[id.idx()].name.clone(),
                )),
            }
        };

        let enums = self
            .enums
            .iter()
            .map(|e| {
                Spanned::synthetic(ast::EnumDecl {
                    name: Spanned::synthetic(e.name.clone()),
                    literals: e.literals.iter().cloned().map(Spanned::synthetic).collect(),
                })
            })
            .collect();

        let components = self
            .components
            .iter()
            .map(|c| {
                let endpoint_ref = |ep: &Endpoint| -> ast::PortRef {
                    match ep.instance {
                        None => ast::PortRef {
                            instance: None,
                            port: Spanned::synthetic(c.ports[ep.port.idx()].name.clone()),
                        },
                        Some(i) => {
                            let inst = &c.instances[i as usize];
                            let target = &self.components[inst.component.idx()];
                            ast::PortRef {
                                instance: Some(Spanned::synthetic(inst.name.clone())),
                                port: Spanned::synthetic(target.ports[ep.port.idx()].name.clone()),
                            }
                        }
                    }
                };
                Spanned::synthetic(ast::ComponentDecl {
                    name: Spanned::synthetic(c.name.clone()),
                    params: c
                        .params
                        .iter()
                        .map(|p| ast::ParamDecl {
                            ty: type_ref(p.ty),
                            name: Spanned::synthetic(p.name.clone()),
                            default: p.default.map(lit),
                        })
                        .collect(),
                    ports: c
                        .ports
                        .iter()
                        .map(|p| ast::PortDecl {
                            direction: match p.direction {
                                Direction::In => ast::Direction::In,
                                Direction::Out => ast::Direction::Out,
                            },
                            ty: type_ref(p.ty),
                            name: Spanned::synthetic(p.name.clone()),
                        })
                        .collect(),
                    vars: c
                        .variables
                        .iter()
                        .map(|v| ast::VarDecl {
                            ty: type_ref(v.ty),
                            name: Spanned::synthetic(v.name.clone()),
                            init: lit(v.init),
                        })
                        .collect(),
                    instances: c
                        .instances
                        .iter()
                        .map(|i| ast::InstanceDecl {
                            component: Spanned::synthetic(
                                self.components[i.component.idx()].name.clone(),
                            ),
                            name: Spanned::synthetic(i.name.clone()),
                            args: i.args.iter().map(|&v| lit(v)).collect(),
                        })
                        .collect(),
                    connectors: c
                        .connectors
                        .iter()
                        .map(|conn| {
                            Spanned::synthetic(ast::ConnectorDecl {
                                source: endpoint_ref(&conn.source),
                                target: endpoint_ref(&conn.target),
                            })
                        })
                        .collect(),
                    automata: c
                        .automata
                        .iter()
                        .map(|a| Spanned::synthetic(self.automaton_to_ast(c, a)))
                        .collect(),
                })
            })
            .collect();

        ast::Model {
            enums,
            components,
            main: self.main.map(|id| self.components[id.idx()].name.clone()),
        }
    }

    fn automaton_to_ast(&self, c: &Component, a: &Automaton) -> ast::AutomatonDecl {
        let lit = |v: Value| -> ast::LiteralAst {
            Spanned::synthetic(match v {
                Value::Int(i) => ast::LiteralNode::Int(i),
                Value::Bool(b) => ast::LiteralNode::Bool(b),
                Value::Enum { ty, literal } => {
                    ast::LiteralNode::Name(self.enums[ty.idx()].literals[literal as usize].clone())
                }
            })
        };
        ast::AutomatonDecl {
            name: Spanned::synthetic(a.name.clone()),
            monitor: a.mode == AutomatonMode::Monitor,
            states: a.states.iter().cloned().map(Spanned::synthetic).collect(),
            initial_state: Spanned::synthetic(a.states[a.initial_state.idx()].clone()),
            initial_outputs: a
                .initial_outputs
                .iter()
                .map(|(p, v)| ast::OutItem::Port {
                    port: Spanned::synthetic(c.ports[p.idx()].name.clone()),
                    messages: vec![lit(*v)],
                })
                .collect(),
            transitions: a
                .transitions
                .iter()
                .map(|t| {
                    Spanned::synthetic(ast::TransitionDecl {
                        source: Spanned::synthetic(a.states[t.source.idx()].clone()),
                        target: Spanned::synthetic(a.states[t.target.idx()].clone()),
                        inputs: t
                            .input_pattern
                            .iter()
                            .map(|(p, pat)| {
                                let pat = match pat {
                                    InputPattern::Literal(v) => ast::PatternAst::Literal(lit(*v)),
                                    InputPattern::Present => ast::PatternAst::Wildcard,
                                    InputPattern::Absent => ast::PatternAst::Absent,
                                };
                                (Spanned::synthetic(c.ports[p.idx()].name.clone()), pat)
                            })
                            .collect(),
                        guard: t.guard.as_ref().map(|g| self.expr_to_ast(c, g)),
                        outputs: t
                            .outputs
                            .iter()
                            .map(|(p, msgs)| ast::OutItem::Port {
                                port: Spanned::synthetic(c.ports[p.idx()].name.clone()),
                                messages: msgs.iter().map(|&v| lit(v)).collect(),
                            })
                            .chain(t.assignments.iter().map(|(v, e)| ast::OutItem::Assign {
                                var: Spanned::synthetic(c.variables[v.idx()].name.clone()),
                                expr: self.expr_to_ast(c, e),
                            }))
                            .collect(),
                    })
                })
                .collect(),
        }
    }

    /// Converts a resolved expression back to syntax.
    pub fn expr_to_ast(&self, c: &Component, e: &Expr) -> ast::ExprAst {
        let node = match e {
            Expr::Const(v) => match v {
                Value::Int(i) => ast::ExprNode::Int(*i),
                Value::Bool(b) => ast::ExprNode::Bool(*b),
                Value::Enum { ty, literal } => ast::ExprNode::Name(
                    self.enums[ty.idx()].literals[*literal as usize].clone(),
                ),
            },
            Expr::Var(id) => ast::ExprNode::Name(c.variables[id.idx()].name.clone()),
            Expr::Param(id) => ast::ExprNode::Name(c.params[id.idx()].name.clone()),
            Expr::Port(id) => ast::ExprNode::Name(c.ports[id.idx()].name.clone()),
            Expr::Not(inner) => ast::ExprNode::Not(Box::new(self.expr_to_ast(c, inner))),
            Expr::Binary { op, lhs, rhs } => ast::ExprNode::Binary {
                op: *op,
                lhs: Box::new(self.expr_to_ast(c, lhs)),
                rhs: Box::new(self.expr_to_ast(c, rhs)),
            },
        };
        Spanned::synthetic(node)
    }
}
