//! Typed in-memory representation of resolved models.
//!
//! Every name in a [`ResolvedModel`] is bound to an index: enums and
//! components are model-global, while ports, variables, parameters, and
//! states are scoped to their component or automaton. All message and
//! variable domains are finite, which keeps simulation and bounded
//! refinement checking decidable.
//!
//! A resolved model is immutable after construction and safe to share
//! across threads.

use crate::span::SpanTag;
use std::fmt;

macro_rules! index_id {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }
    };
}

index_id!(EnumId);
index_id!(CompId);
index_id!(PortId);
index_id!(VarId);
index_id!(ParamId);
index_id!(StateId);

#[derive(Debug, Clone, PartialEq)]
pub struct EnumType {
    pub name: String,
    pub literals: Vec<String>,
    pub span: SpanTag,
}

/// A finite message or variable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum(EnumId),
}

/// A single message or stored value. Ordering follows the natural order of
/// the domain (false < true, ascending integers, enum declaration order)
/// and is used wherever a canonical enumeration is required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum { ty: EnumId, literal: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    In,
    Out,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::In => write!(f, "in"),
            Direction::Out => write!(f, "out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub ty: ValueType,
    pub span: SpanTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ValueType,
    pub default: Option<Value>,
    pub span: SpanTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub ty: ValueType,
    pub init: Value,
    pub span: SpanTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub component: CompId,
    pub args: Vec<Value>,
    pub span: SpanTag,
}

/// One endpoint of a connector: a port of the enclosing component
/// (`instance == None`) or a port of one of its subcomponent instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Endpoint {
    pub instance: Option<u32>,
    pub port: PortId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    pub source: Endpoint,
    pub target: Endpoint,
    pub span: SpanTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutomatonMode {
    Executable,
    Monitor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    pub name: String,
    pub mode: AutomatonMode,
    pub states: Vec<String>,
    pub initial_state: StateId,
    pub initial_outputs: Vec<(PortId, Value)>,
    pub transitions: Vec<Transition>,
    pub span: SpanTag,
}

/// Input pattern for one port of a transition. Ports not mentioned by a
/// transition are unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputPattern {
    /// A specific message must be present.
    Literal(Value),
    /// Some message must be present (`_`).
    Present,
    /// No message may be present (`none`).
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: StateId,
    pub target: StateId,
    pub input_pattern: Vec<(PortId, InputPattern)>,
    pub guard: Option<Expr>,
    pub outputs: Vec<(PortId, Vec<Value>)>,
    pub assignments: Vec<(VarId, Expr)>,
    pub span: SpanTag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Value),
    Var(VarId),
    Param(ParamId),
    /// Value of the message matched on an in-port this round.
    Port(PortId),
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

pub use crate::ast::BinOp;

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub params: Vec<Param>,
    pub ports: Vec<Port>,
    pub variables: Vec<Variable>,
    pub instances: Vec<Instance>,
    pub connectors: Vec<Connector>,
    pub automata: Vec<Automaton>,
    pub span: SpanTag,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResolvedModel {
    pub enums: Vec<EnumType>,
    pub components: Vec<Component>,
    pub main: Option<CompId>,
}

impl Component {
    pub fn port(&self, id: PortId) -> &Port {
        &self.ports[id.idx()]
    }

    pub fn port_by_name(&self, name: &str) -> Option<PortId> {
        self.ports
            .iter()
            .position(|p| p.name == name)
            .map(|i| PortId(i as u32))
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u32))
    }

    pub fn is_atomic(&self) -> bool {
        self.instances.is_empty() && self.connectors.is_empty()
    }

    pub fn in_ports(&self) -> impl Iterator<Item = (PortId, &Port)> {
        self.ports
            .iter()
            .enumerate()
            .filter(|(_, p)| p.direction == Direction::In)
            .map(|(i, p)| (PortId(i as u32), p))
    }

    pub fn out_ports(&self) -> impl Iterator<Item = (PortId, &Port)> {
        self.ports
            .iter()
            .enumerate()
            .filter(|(_, p)| p.direction == Direction::Out)
            .map(|(i, p)| (PortId(i as u32), p))
    }

    pub fn executable_automaton(&self) -> Option<(usize, &Automaton)> {
        self.automata
            .iter()
            .enumerate()
            .find(|(_, a)| a.mode == AutomatonMode::Executable)
    }

    pub fn automaton_by_name(&self, name: &str) -> Option<(usize, &Automaton)> {
        self.automata
            .iter()
            .enumerate()
            .find(|(_, a)| a.name == name)
    }

    /// Initial variable valuation, in variable declaration order.
    pub fn initial_vars(&self) -> Vec<Value> {
        self.variables.iter().map(|v| v.init).collect()
    }

    /// Parameter values for an instantiation with `args`, falling back to
    /// declared defaults. `None` when a parameter is left unbound.
    pub fn param_values(&self, args: &[Value]) -> Option<Vec<Value>> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, p)| args.get(i).copied().or(p.default))
            .collect()
    }
}

impl ResolvedModel {
    pub fn component(&self, id: CompId) -> &Component {
        &self.components[id.idx()]
    }

    pub fn component_by_name(&self, name: &str) -> Option<CompId> {
        self.components
            .iter()
            .position(|c| c.name == name)
            .map(|i| CompId(i as u32))
    }

    pub fn enum_type(&self, id: EnumId) -> &EnumType {
        &self.enums[id.idx()]
    }

    /// Number of distinct values of `ty`. Strictly positive for every
    /// declared type; channel alphabets additionally count absence.
    pub fn domain_size(&self, ty: ValueType) -> u64 {
        match ty {
            ValueType::Bool => 2,
            ValueType::Int { lo, hi } => (hi - lo + 1) as u64,
            ValueType::Enum(id) => self.enums[id.idx()].literals.len() as u64,
        }
    }

    /// All values of `ty` in canonical order.
    pub fn domain_values(&self, ty: ValueType) -> Vec<Value> {
        match ty {
            ValueType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            ValueType::Int { lo, hi } => (lo..=hi).map(Value::Int).collect(),
            ValueType::Enum(id) => (0..self.enums[id.idx()].literals.len())
                .map(|i| Value::Enum {
                    ty: id,
                    literal: i as u32,
                })
                .collect(),
        }
    }

    pub fn value_in_domain(&self, value: Value, ty: ValueType) -> bool {
        match (value, ty) {
            (Value::Bool(_), ValueType::Bool) => true,
            (Value::Int(v), ValueType::Int { lo, hi }) => lo <= v && v <= hi,
            (Value::Enum { ty: e, literal }, ValueType::Enum(id)) => {
                e == id && (literal as usize) < self.enums[id.idx()].literals.len()
            }
            _ => false,
        }
    }

    pub fn type_name(&self, ty: ValueType) -> String {
        match ty {
            ValueType::Bool => "bool".to_string(),
            ValueType::Int { lo, hi } => format!("int({lo}..{hi})"),
            ValueType::Enum(id) => self.enums[id.idx()].name.clone(),
        }
    }

    pub fn value_text(&self, value: Value) -> String {
        match value {
            Value::Bool(b) => b.to_string(),
            Value::Int(v) => v.to_string(),
            Value::Enum { ty, literal } => self.enums[ty.idx()].literals[literal as usize].clone(),
        }
    }

    /// JSON rendering of a value: enum literals as strings, ints and bools
    /// as their native JSON types.
    pub fn value_json(&self, value: Value) -> serde_json::Value {
        match value {
            Value::Bool(b) => serde_json::Value::Bool(b),
            Value::Int(v) => serde_json::Value::from(v),
            Value::Enum { ty, literal } => {
                serde_json::Value::String(self.enums[ty.idx()].literals[literal as usize].clone())
            }
        }
    }

    /// Parses a JSON value against an expected type, as used by input
    /// bundle files.
    pub fn value_from_json(&self, json: &serde_json::Value, ty: ValueType) -> Option<Value> {
        match (json, ty) {
            (serde_json::Value::Bool(b), ValueType::Bool) => Some(Value::Bool(*b)),
            (serde_json::Value::Number(n), ValueType::Int { lo, hi }) => {
                let v = n.as_i64()?;
                (lo <= v && v <= hi).then_some(Value::Int(v))
            }
            (serde_json::Value::String(s), ValueType::Enum(id)) => {
                let literal = self.enums[id.idx()].literals.iter().position(|l| l == s)?;
                Some(Value::Enum {
                    ty: id,
                    literal: literal as u32,
                })
            }
            _ => None,
        }
    }
}

/// The static type of an expression, as computed by the check pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Bool,
    Int,
    Enum(EnumId),
}

impl ExprType {
    pub fn of_value_type(ty: ValueType) -> ExprType {
        match ty {
            ValueType::Bool => ExprType::Bool,
            ValueType::Int { .. } => ExprType::Int,
            ValueType::Enum(id) => ExprType::Enum(id),
        }
    }
}
