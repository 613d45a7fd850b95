//! Abstract syntax for `.rcml` files as produced by the parser.
//!
//! Names are unresolved strings at this stage; [`crate::resolve`] binds them
//! into the typed IR of [`crate::model`]. Structural equality of AST nodes
//! ignores source spans (see [`crate::span::Spanned`]), so `parse` composed
//! with `pretty_print` can be compared for identity up to formatting.

use crate::span::{Ident, SourceSpan, Spanned};

/// A parsed model: enum declarations, component declarations, and an
/// optional designated main component. The main component is not part of
/// the concrete syntax; callers set it before simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub enums: Vec<Spanned<EnumDecl>>,
    pub components: Vec<Spanned<ComponentDecl>>,
    pub main: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDecl {
    pub name: Ident,
    pub literals: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecl {
    pub name: Ident,
    pub params: Vec<ParamDecl>,
    pub ports: Vec<PortDecl>,
    pub vars: Vec<VarDecl>,
    pub instances: Vec<InstanceDecl>,
    /// One entry per source/target pair; fan-out connectors are expanded.
    pub connectors: Vec<Spanned<ConnectorDecl>>,
    pub automata: Vec<Spanned<AutomatonDecl>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub ty: TypeRef,
    pub name: Ident,
    pub default: Option<LiteralAst>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDecl {
    pub direction: Direction,
    pub ty: TypeRef,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub ty: TypeRef,
    pub name: Ident,
    pub init: LiteralAst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDecl {
    pub component: Ident,
    pub name: Ident,
    pub args: Vec<LiteralAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorDecl {
    pub source: PortRef,
    pub target: PortRef,
}

/// `instance.port` or a bare `port` of the enclosing component.
#[derive(Debug, Clone, PartialEq)]
pub struct PortRef {
    pub instance: Option<Ident>,
    pub port: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutomatonDecl {
    pub name: Ident,
    pub monitor: bool,
    pub states: Vec<Ident>,
    pub initial_state: Ident,
    pub initial_outputs: Vec<OutItem>,
    pub transitions: Vec<Spanned<TransitionDecl>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDecl {
    pub source: Ident,
    pub target: Ident,
    pub inputs: Vec<(Ident, PatternAst)>,
    pub guard: Option<ExprAst>,
    pub outputs: Vec<OutItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternAst {
    Literal(LiteralAst),
    /// `_`: some message must be present.
    Wildcard,
    /// `none`: the port must carry no message this round.
    Absent,
}

/// One item of an output block: a port emission or a variable assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum OutItem {
    Port { port: Ident, messages: Vec<LiteralAst> },
    Assign { var: Ident, expr: ExprAst },
}

#[derive(Debug, Clone)]
pub enum TypeRef {
    Named(Ident),
    Bool(SourceSpan),
    Int {
        lo: i64,
        hi: i64,
        span: SourceSpan,
    },
}

// Spans never take part in structural equality.
impl PartialEq for TypeRef {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TypeRef::Named(a), TypeRef::Named(b)) => a == b,
            (TypeRef::Bool(_), TypeRef::Bool(_)) => true,
            (
                TypeRef::Int { lo: a, hi: b, .. },
                TypeRef::Int { lo: c, hi: d, .. },
            ) => a == c && b == d,
            _ => false,
        }
    }
}

impl TypeRef {
    pub fn span(&self) -> &SourceSpan {
        match self {
            TypeRef::Named(id) => &id.span,
            TypeRef::Bool(span) => span,
            TypeRef::Int { span, .. } => span,
        }
    }
}

pub type LiteralAst = Spanned<LiteralNode>;

#[derive(Debug, Clone, PartialEq)]
pub enum LiteralNode {
    Int(i64),
    Bool(bool),
    /// An enum literal or (in expressions) any named thing.
    Name(String),
}

pub type ExprAst = Spanned<ExprNode>;

#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Int(i64),
    Bool(bool),
    /// Variable, parameter, port read, or enum literal; resolved later.
    Name(String),
    Not(Box<ExprAst>),
    Binary {
        op: BinOp,
        lhs: Box<ExprAst>,
        rhs: Box<ExprAst>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    /// Binding strength for printing and parsing; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
        }
    }
}
