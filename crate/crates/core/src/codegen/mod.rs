//! Machine-table generation: flattening a deterministic completion of an
//! executable automaton into a portable, platform-free table, plus a
//! reference interpreter that reproduces the simulator's semantics from
//! the table alone.
//!
//! The table is the stable contract between the model world and any
//! generation target; text targets are rendered from it with the
//! [`template`] engine. Two templates ship with the crate:
//! `table.json.tmpl` producing the canonical JSON table and
//! `report.md.tmpl` producing a human-readable summary.

pub mod template;

use crate::model::*;
use crate::parser::parse_expr_text;
use crate::printer::expr_text_parenthesized;
use crate::sim::Completion;
use std::collections::BTreeMap;

pub const TABLE_JSON_TEMPLATE: &str = include_str!("../../templates/table.json.tmpl");
pub const REPORT_MD_TEMPLATE: &str = include_str!("../../templates/report.md.tmpl");

#[derive(Debug, thiserror::Error)]
pub enum CodegenError {
    #[error("chaos completion is not executable; generate with `ignore` or `error`")]
    ChaosNotExecutable,
    #[error("component `{0}` has no executable automaton")]
    NoExecutableAutomaton(String),
    #[error("component `{0}` has no default for parameter `{1}`; tables carry no parameters")]
    UnboundParam(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TablePort {
    pub name: String,
    pub dir: String,
    pub ty: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableVarDomain {
    Int { lo: i64, hi: i64 },
    Literals(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableVar {
    pub name: String,
    pub domain: TableVarDomain,
    pub init: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub src: String,
    pub prio: usize,
    /// Pattern per in-port: a literal value, `_`, or `none`.
    pub inputs: BTreeMap<String, String>,
    /// Parenthesized infix expression, parameters substituted away.
    pub guard: Option<String>,
    pub tgt: String,
    /// Message sequence per out-port.
    pub outputs: BTreeMap<String, Vec<String>>,
    pub assigns: Vec<(String, String)>,
}

/// A flattened state machine. Rows that share a source state are totally
/// ordered by `prio` (lower fires first), so interpretation is
/// deterministic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineTable {
    pub component: String,
    pub completion: String,
    pub ports: Vec<TablePort>,
    pub variables: Vec<TableVar>,
    pub states: Vec<String>,
    pub initial_state: String,
    pub initial_outputs: BTreeMap<String, String>,
    pub rows: Vec<TableRow>,
}

/// Flattens the executable automaton of `comp`. Nondeterminism is
/// resolved by declaration order: the priority of a row is its transition
/// index, matching the simulator's `first` strategy. Parameter values are
/// baked into guards as literals. Chaos completion is rejected; it marks
/// unspecified behavior and cannot be executed.
pub fn flatten(
    model: &ResolvedModel,
    comp_id: CompId,
    completion: Completion,
) -> Result<MachineTable, CodegenError> {
    if completion == Completion::Chaos {
        return Err(CodegenError::ChaosNotExecutable);
    }
    let comp = model.component(comp_id);
    let Some((_, automaton)) = comp.executable_automaton() else {
        return Err(CodegenError::NoExecutableAutomaton(comp.name.clone()));
    };
    let params: Vec<Value> = comp
        .params
        .iter()
        .map(|p| {
            p.default
                .ok_or_else(|| CodegenError::UnboundParam(comp.name.clone(), p.name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let ports = comp
        .ports
        .iter()
        .map(|p| TablePort {
            name: p.name.clone(),
            dir: p.direction.to_string(),
            ty: model.type_name(p.ty),
            domain: model
                .domain_values(p.ty)
                .into_iter()
                .map(|v| model.value_text(v))
                .collect(),
        })
        .collect();

    let variables = comp
        .variables
        .iter()
        .map(|v| TableVar {
            name: v.name.clone(),
            domain: match v.ty {
                ValueType::Int { lo, hi } => TableVarDomain::Int { lo, hi },
                ty => TableVarDomain::Literals(
                    model
                        .domain_values(ty)
                        .into_iter()
                        .map(|v| model.value_text(v))
                        .collect(),
                ),
            },
            init: model.value_text(v.init),
        })
        .collect();

    let serialize_expr = |e: &Expr| -> String {
        let closed = substitute_params(e, &params);
        expr_text_parenthesized(&model.expr_to_ast(comp, &closed))
    };

    let rows = automaton
        .transitions
        .iter()
        .enumerate()
        .map(|(prio, t)| TableRow {
            src: automaton.states[t.source.idx()].clone(),
            prio,
            inputs: t
                .input_pattern
                .iter()
                .map(|(p, pat)| {
                    let text = match pat {
                        InputPattern::Literal(v) => model.value_text(*v),
                        InputPattern::Present => "_".to_string(),
                        InputPattern::Absent => "none".to_string(),
                    };
                    (comp.port(*p).name.clone(), text)
                })
                .collect(),
            guard: t.guard.as_ref().map(&serialize_expr),
            tgt: automaton.states[t.target.idx()].clone(),
            outputs: t
                .outputs
                .iter()
                .map(|(p, msgs)| {
                    (
                        comp.port(*p).name.clone(),
                        msgs.iter().map(|v| model.value_text(*v)).collect(),
                    )
                })
                .collect(),
            assigns: t
                .assignments
                .iter()
                .map(|(v, e)| (comp.variables[v.idx()].name.clone(), serialize_expr(e)))
                .collect(),
        })
        .collect();

    Ok(MachineTable {
        component: comp.name.clone(),
        completion: completion.to_string(),
        ports,
        variables,
        states: automaton.states.clone(),
        initial_state: automaton.states[automaton.initial_state.idx()].clone(),
        initial_outputs: automaton
            .initial_outputs
            .iter()
            .map(|(p, v)| (comp.port(*p).name.clone(), model.value_text(*v)))
            .collect(),
        rows,
    })
}

fn substitute_params(e: &Expr, params: &[Value]) -> Expr {
    match e {
        Expr::Param(id) => Expr::Const(params[id.idx()]),
        Expr::Not(inner) => Expr::Not(Box::new(substitute_params(inner, params))),
        Expr::Binary { op, lhs, rhs } => Expr::Binary {
            op: *op,
            lhs: Box::new(substitute_params(lhs, params)),
            rhs: Box::new(substitute_params(rhs, params)),
        },
        other => other.clone(),
    }
}

impl MachineTable {
    /// Canonical JSON form of the table.
    pub fn to_json(&self) -> serde_json::Value {
        self.json_value(false)
    }

    /// JSON context for template rendering: the canonical form plus
    /// helper fields (`is_int` on variables) that templates may branch on.
    pub fn template_context(&self) -> serde_json::Value {
        self.json_value(true)
    }

    fn json_value(&self, helpers: bool) -> serde_json::Value {
        use serde_json::{json, Value as J};
        let ports: Vec<J> = self
            .ports
            .iter()
            .map(|p| json!({"name": p.name, "dir": p.dir, "type": p.ty, "domain": p.domain}))
            .collect();
        let variables: Vec<J> = self
            .variables
            .iter()
            .map(|v| {
                let mut obj = serde_json::Map::new();
                obj.insert("name".into(), J::String(v.name.clone()));
                match &v.domain {
                    TableVarDomain::Int { lo, hi } => {
                        obj.insert("lo".into(), J::from(*lo));
                        obj.insert("hi".into(), J::from(*hi));
                        if helpers {
                            obj.insert("is_int".into(), J::Bool(true));
                        }
                    }
                    TableVarDomain::Literals(lits) => {
                        obj.insert(
                            "literals".into(),
                            J::Array(lits.iter().cloned().map(J::String).collect()),
                        );
                    }
                }
                obj.insert("init".into(), J::String(v.init.clone()));
                J::Object(obj)
            })
            .collect();
        let rows: Vec<J> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = serde_json::Map::new();
                row.insert("src".into(), J::String(r.src.clone()));
                row.insert("prio".into(), J::from(r.prio));
                row.insert("in".into(), json!(r.inputs));
                row.insert("guard".into(), json!(r.guard));
                row.insert("tgt".into(), J::String(r.tgt.clone()));
                row.insert("out".into(), json!(r.outputs));
                row.insert(
                    "assign".into(),
                    J::Array(
                        r.assigns
                            .iter()
                            .map(|(var, expr)| json!({"var": var, "expr": expr}))
                            .collect(),
                    ),
                );
                if helpers {
                    // Pre-encoded guard for JSON templates: a quoted string
                    // or the literal `null`.
                    row.insert(
                        "guard_json".into(),
                        J::String(match &r.guard {
                            Some(g) => J::String(g.clone()).to_string(),
                            None => "null".to_string(),
                        }),
                    );
                }
                J::Object(row)
            })
            .collect();
        json!({
            "component": self.component,
            "completion": self.completion,
            "ports": ports,
            "variables": variables,
            "states": self.states,
            "initial": {"state": self.initial_state, "outputs": self.initial_outputs},
            "rows": rows,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InterpretError {
    #[error("round {0}: no row matches and the table completion is `error`")]
    Abort(usize),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("bad table: {0}")]
    BadTable(String),
}

/// Table-level runtime value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum TValue {
    Bool(bool),
    Int(i64),
    Text(String),
}

impl TValue {
    fn to_json(&self) -> serde_json::Value {
        match self {
            TValue::Bool(b) => serde_json::Value::Bool(*b),
            TValue::Int(i) => serde_json::Value::from(*i),
            TValue::Text(s) => serde_json::Value::String(s.clone()),
        }
    }

    fn text(&self) -> String {
        match self {
            TValue::Bool(b) => b.to_string(),
            TValue::Int(i) => i.to_string(),
            TValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TType {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum,
}

fn parse_ttype(ty: &str) -> TType {
    if ty == "bool" {
        TType::Bool
    } else if let Some(rest) = ty.strip_prefix("int(").and_then(|r| r.strip_suffix(')')) {
        let (lo, hi) = rest.split_once("..").unwrap_or(("0", "0"));
        TType::Int {
            lo: lo.trim().parse().unwrap_or(0),
            hi: hi.trim().parse().unwrap_or(0),
        }
    } else {
        TType::Enum
    }
}

fn parse_tvalue(text: &str, ty: TType) -> TValue {
    match ty {
        TType::Bool => TValue::Bool(text == "true"),
        TType::Int { .. } => TValue::Int(text.parse().unwrap_or(0)),
        TType::Enum => TValue::Text(text.to_string()),
    }
}

/// Executes a machine table over a sequence of input rounds, mirroring
/// the simulator with the `first` strategy: one emission per port per
/// round drained from the output queues, declaration-order row selection,
/// sequential assignments with store-time clamping.
///
/// Inputs and outputs use the stream-bundle JSON value conventions.
pub fn interpret_table(
    table: &MachineTable,
    rounds: &[BTreeMap<String, serde_json::Value>],
    max_rounds: usize,
) -> Result<Vec<BTreeMap<String, serde_json::Value>>, InterpretError> {
    let port_types: BTreeMap<&str, (TType, &str)> = table
        .ports
        .iter()
        .map(|p| (p.name.as_str(), (parse_ttype(&p.ty), p.dir.as_str())))
        .collect();
    let var_types: BTreeMap<&str, TType> = table
        .variables
        .iter()
        .map(|v| {
            let ty = match &v.domain {
                TableVarDomain::Int { lo, hi } => TType::Int { lo: *lo, hi: *hi },
                TableVarDomain::Literals(lits)
                    if lits.len() == 2 && lits[0] == "false" && lits[1] == "true" =>
                {
                    TType::Bool
                }
                TableVarDomain::Literals(_) => TType::Enum,
            };
            (v.name.as_str(), ty)
        })
        .collect();

    // Guards and assignment expressions are parsed once per table.
    let parse_guard = |text: &str| {
        parse_expr_text(text)
            .map_err(|e| InterpretError::BadTable(format!("guard `{text}`: {}", e[0])))
    };
    let mut row_guards = Vec::new();
    let mut row_assigns = Vec::new();
    for row in &table.rows {
        row_guards.push(match &row.guard {
            Some(g) => Some(parse_guard(g)?),
            None => None,
        });
        let mut assigns = Vec::new();
        for (var, expr) in &row.assigns {
            assigns.push((var.clone(), parse_guard(expr)?));
        }
        row_assigns.push(assigns);
    }

    let mut state = table.initial_state.clone();
    let mut vars: BTreeMap<String, TValue> = table
        .variables
        .iter()
        .map(|v| (v.name.clone(), parse_tvalue(&v.init, var_types[v.name.as_str()])))
        .collect();
    let mut outbox: BTreeMap<String, Vec<TValue>> = BTreeMap::new();
    for (port, value) in &table.initial_outputs {
        let (ty, _) = port_types
            .get(port.as_str())
            .ok_or_else(|| InterpretError::BadTable(format!("unknown port `{port}`")))?;
        outbox
            .entry(port.clone())
            .or_default()
            .push(parse_tvalue(value, *ty));
    }

    let abort_on_miss = table.completion == "error";
    let mut result = Vec::new();
    for (round, raw_inputs) in rounds.iter().take(max_rounds).enumerate() {
        let mut inputs: BTreeMap<String, TValue> = BTreeMap::new();
        for (port, value) in raw_inputs {
            let Some((ty, dir)) = port_types.get(port.as_str()) else {
                return Err(InterpretError::BadInput(format!("unknown port `{port}`")));
            };
            if *dir != "in" {
                return Err(InterpretError::BadInput(format!(
                    "port `{port}` is not an in-port"
                )));
            }
            let v = match (value, ty) {
                (serde_json::Value::Bool(b), TType::Bool) => TValue::Bool(*b),
                (serde_json::Value::Number(n), TType::Int { .. }) => {
                    TValue::Int(n.as_i64().unwrap_or(0))
                }
                (serde_json::Value::String(s), TType::Enum) => TValue::Text(s.clone()),
                _ => {
                    return Err(InterpretError::BadInput(format!(
                        "port `{port}`: value {value} does not fit its type"
                    )))
                }
            };
            inputs.insert(port.clone(), v);
        }

        let mut fired = None;
        for (i, row) in table.rows.iter().enumerate() {
            if row.src != state {
                continue;
            }
            let matches = row.inputs.iter().all(|(port, pat)| match pat.as_str() {
                "_" => inputs.contains_key(port),
                "none" => !inputs.contains_key(port),
                lit => {
                    let ty = port_types.get(port.as_str()).map(|(t, _)| *t);
                    inputs.get(port) == ty.map(|t| parse_tvalue(lit, t)).as_ref()
                }
            });
            if !matches {
                continue;
            }
            if let Some(guard) = &row_guards[i] {
                match eval_texpr(guard, &vars, &inputs) {
                    Ok(TValue::Bool(true)) => {}
                    _ => continue,
                }
            }
            fired = Some(i);
            break;
        }

        match fired {
            Some(i) => {
                let row = &table.rows[i];
                for (var, expr) in &row_assigns[i] {
                    let value = eval_texpr(expr, &vars, &inputs)
                        .map_err(InterpretError::BadTable)?;
                    let clamped = match (var_types.get(var.as_str()), &value) {
                        (Some(TType::Int { lo, hi }), TValue::Int(v)) => {
                            TValue::Int((*v).clamp(*lo, *hi))
                        }
                        _ => value,
                    };
                    vars.insert(var.clone(), clamped);
                }
                for (port, messages) in &row.outputs {
                    let (ty, _) = port_types[port.as_str()];
                    outbox
                        .entry(port.clone())
                        .or_default()
                        .extend(messages.iter().map(|m| parse_tvalue(m, ty)));
                }
                state = row.tgt.clone();
            }
            None if abort_on_miss => return Err(InterpretError::Abort(round)),
            None => {}
        }

        let mut emission = BTreeMap::new();
        for (port, queue) in outbox.iter_mut() {
            if !queue.is_empty() {
                emission.insert(port.clone(), queue.remove(0).to_json());
            }
        }
        result.push(emission);
    }
    Ok(result)
}

/// Expression evaluation over table-level values. Bare names resolve to
/// variables, then matched in-ports, then themselves as enum literals.
fn eval_texpr(
    e: &crate::ast::ExprAst,
    vars: &BTreeMap<String, TValue>,
    inputs: &BTreeMap<String, TValue>,
) -> Result<TValue, String> {
    use crate::ast::{BinOp, ExprNode};
    match &e.node {
        ExprNode::Int(v) => Ok(TValue::Int(*v)),
        ExprNode::Bool(b) => Ok(TValue::Bool(*b)),
        ExprNode::Name(name) => {
            if let Some(v) = vars.get(name) {
                Ok(v.clone())
            } else if let Some(v) = inputs.get(name) {
                Ok(v.clone())
            } else {
                Ok(TValue::Text(name.clone()))
            }
        }
        ExprNode::Not(inner) => match eval_texpr(inner, vars, inputs)? {
            TValue::Bool(b) => Ok(TValue::Bool(!b)),
            other => Err(format!("`!` applied to {}", other.text())),
        },
        ExprNode::Binary { op, lhs, rhs } => {
            let l = eval_texpr(lhs, vars, inputs)?;
            let r = eval_texpr(rhs, vars, inputs)?;
            match op {
                BinOp::Eq => Ok(TValue::Bool(l == r)),
                BinOp::Ne => Ok(TValue::Bool(l != r)),
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match (&l, &r) {
                    (TValue::Int(a), TValue::Int(b)) => Ok(TValue::Bool(match op {
                        BinOp::Lt => a < b,
                        BinOp::Le => a <= b,
                        BinOp::Gt => a > b,
                        _ => a >= b,
                    })),
                    _ => Err("ordering comparison on non-integers".to_string()),
                },
                BinOp::And | BinOp::Or => match (&l, &r) {
                    (TValue::Bool(a), TValue::Bool(b)) => Ok(TValue::Bool(if *op == BinOp::And {
                        *a && *b
                    } else {
                        *a || *b
                    })),
                    _ => Err("logical operator on non-booleans".to_string()),
                },
                BinOp::Add | BinOp::Sub => match (&l, &r) {
                    (TValue::Int(a), TValue::Int(b)) => Ok(TValue::Int(if *op == BinOp::Add {
                        a.saturating_add(*b)
                    } else {
                        a.saturating_sub(*b)
                    })),
                    _ => Err("arithmetic on non-integers".to_string()),
                },
            }
        }
    }
}

/// JSON manifest of a decomposed component's wiring: instances and
/// connectors. Scheduling glue for composite targets is left to template
/// authors; this is the data they need.
pub fn connector_manifest(model: &ResolvedModel, comp_id: CompId) -> serde_json::Value {
    use serde_json::{json, Value as J};
    let comp = model.component(comp_id);
    let endpoint = |ep: &Endpoint| -> String {
        match ep.instance {
            None => comp.port(ep.port).name.clone(),
            Some(i) => {
                let inst = &comp.instances[i as usize];
                let target = model.component(inst.component);
                format!("{}.{}", inst.name, target.port(ep.port).name)
            }
        }
    };
    json!({
        "component": comp.name,
        "instances": comp.instances.iter().map(|i| {
            json!({
                "name": i.name,
                "type": model.component(i.component).name,
                "args": i.args.iter().map(|v| model.value_json(*v)).collect::<Vec<J>>(),
            })
        }).collect::<Vec<J>>(),
        "connectors": comp.connectors.iter().map(|c| {
            json!({"from": endpoint(&c.source), "to": endpoint(&c.target)})
        }).collect::<Vec<J>>(),
    })
}
