//! Recursive-descent parser for `.rcml` sources.
//!
//! Errors are reported as positioned diagnostics. The parser recovers at
//! statement boundaries (`;` and `}`), so one run reports every
//! statement-level error it can find. Any error means no model is returned.

use crate::ast::*;
use crate::lexer::{tokenize, Token, TokenKind};
use crate::span::{Ident, SourceSpan, Spanned};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// A positioned syntax diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)
    }
}

/// Parses `text` into a [`Model`]. On any syntax error the full diagnostic
/// list is returned instead and no model is produced.
pub fn parse(text: &str, file: &str) -> Result<Model, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let tokens = tokenize(text, file, &mut diags);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags,
    };
    let model = parser.model();
    if parser.diags.iter().any(|d| d.severity == Severity::Error) {
        Err(parser.diags)
    } else {
        Ok(model)
    }
}

/// Parses a standalone expression, as used for guard strings embedded in
/// generated machine tables.
pub fn parse_expr_text(text: &str) -> Result<ExprAst, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let tokens = tokenize(text, "<expr>", &mut diags);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags,
    };
    let expr = parser.expr();
    if !parser.at(&TokenKind::Eof) {
        parser.error_here("trailing input after expression");
    }
    match expr {
        Ok(e) if parser.diags.iter().all(|d| d.severity != Severity::Error) => Ok(e),
        _ => Err(parser.diags),
    }
}

/// Marker for a failed production; the diagnostic is already recorded.
struct ParseFail;

type PResult<T> = Result<T, ParseFail>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<ParseDiagnostic>,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].kind
    }

    fn peek_span(&self) -> SourceSpan {
        self.tokens[self.pos.min(self.tokens.len() - 1)].span.clone()
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == kind
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: &str) {
        self.diags.push(ParseDiagnostic {
            severity: Severity::Error,
            message: message.to_string(),
            span: self.peek_span(),
        });
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            self.error_here(&format!(
                "expected {}, found {}",
                kind.describe(),
                self.peek().describe()
            ));
            Err(ParseFail)
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                let tok = self.bump();
                Ok(Spanned::new(name, tok.span))
            }
            other => {
                self.error_here(&format!("expected {what}, found {}", other.describe()));
                Err(ParseFail)
            }
        }
    }

    /// Skips tokens until just after a `;` or just before a `}`; the usual
    /// resynchronization point after a statement-level error.
    fn sync_statement(&mut self) {
        loop {
            match self.peek() {
                TokenKind::Semi => {
                    self.bump();
                    return;
                }
                TokenKind::RBrace | TokenKind::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn model(&mut self) -> Model {
        let mut model = Model::default();
        loop {
            match self.peek() {
                TokenKind::Eof => break,
                TokenKind::KwEnum => {
                    if let Ok(decl) = self.enum_decl() {
                        model.enums.push(decl);
                    } else {
                        self.sync_toplevel();
                    }
                }
                TokenKind::KwComponent => {
                    if let Ok(decl) = self.component_decl() {
                        model.components.push(decl);
                    } else {
                        self.sync_toplevel();
                    }
                }
                _ => {
                    self.error_here(&format!(
                        "expected `enum` or `component`, found {}",
                        self.peek().describe()
                    ));
                    self.sync_toplevel();
                }
            }
        }
        model
    }

    fn sync_toplevel(&mut self) {
        loop {
            match self.peek() {
                TokenKind::KwEnum | TokenKind::KwComponent | TokenKind::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn enum_decl(&mut self) -> PResult<Spanned<EnumDecl>> {
        let start = self.expect(TokenKind::KwEnum)?.span;
        let name = self.expect_ident("enum name")?;
        self.expect(TokenKind::LBrace)?;
        let mut literals = vec![self.expect_ident("enum literal")?];
        while self.eat(&TokenKind::Comma) {
            literals.push(self.expect_ident("enum literal")?);
        }
        let end = self.expect(TokenKind::RBrace)?.span;
        Ok(Spanned::new(
            EnumDecl { name, literals },
            start.merge(&end),
        ))
    }

    fn component_decl(&mut self) -> PResult<Spanned<ComponentDecl>> {
        let start = self.expect(TokenKind::KwComponent)?.span;
        let name = self.expect_ident("component name")?;
        let mut params = Vec::new();
        if self.eat(&TokenKind::LParen) {
            loop {
                params.push(self.param_decl()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RParen)?;
        }
        self.expect(TokenKind::LBrace)?;
        let mut decl = ComponentDecl {
            name,
            params,
            ports: Vec::new(),
            vars: Vec::new(),
            instances: Vec::new(),
            connectors: Vec::new(),
            automata: Vec::new(),
        };
        loop {
            match self.peek() {
                TokenKind::RBrace | TokenKind::Eof => break,
                TokenKind::KwPort => {
                    if let Ok(port) = self.port_decl() {
                        decl.ports.push(port);
                    } else {
                        self.sync_statement();
                    }
                }
                TokenKind::KwVar => {
                    if let Ok(var) = self.var_decl() {
                        decl.vars.push(var);
                    } else {
                        self.sync_statement();
                    }
                }
                TokenKind::KwInstance => {
                    if let Ok(inst) = self.instance_decl() {
                        decl.instances.push(inst);
                    } else {
                        self.sync_statement();
                    }
                }
                TokenKind::KwConnect => {
                    if let Ok(mut conns) = self.connect_decl() {
                        decl.connectors.append(&mut conns);
                    } else {
                        self.sync_statement();
                    }
                }
                TokenKind::KwAutomaton => {
                    if let Ok(aut) = self.automaton_decl() {
                        decl.automata.push(aut);
                    } else {
                        self.sync_block();
                    }
                }
                _ => {
                    self.error_here(&format!(
                        "expected a component element (`port`, `var`, `instance`, `connect`, or `automaton`), found {}",
                        self.peek().describe()
                    ));
                    self.sync_statement();
                }
            }
        }
        let end = self.expect(TokenKind::RBrace)?.span;
        Ok(Spanned::new(decl, start.merge(&end)))
    }

    /// Skips a partially parsed braced block, balancing nested braces.
    fn sync_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                TokenKind::LBrace => {
                    depth += 1;
                    self.bump();
                }
                TokenKind::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    self.bump();
                    if depth == 0 {
                        return;
                    }
                }
                TokenKind::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                TokenKind::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn param_decl(&mut self) -> PResult<ParamDecl> {
        let ty = self.type_ref()?;
        let name = self.expect_ident("parameter name")?;
        let default = if self.eat(&TokenKind::Assign) {
            Some(self.literal()?)
        } else {
            None
        };
        Ok(ParamDecl { ty, name, default })
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        match self.peek().clone() {
            TokenKind::KwBool => {
                let tok = self.bump();
                Ok(TypeRef::Bool(tok.span))
            }
            TokenKind::KwInt => {
                let start = self.bump().span;
                self.expect(TokenKind::LParen)?;
                let lo = self.int_value()?;
                self.expect(TokenKind::DotDot)?;
                let hi = self.int_value()?;
                let end = self.expect(TokenKind::RParen)?.span;
                Ok(TypeRef::Int {
                    lo,
                    hi,
                    span: start.merge(&end),
                })
            }
            TokenKind::Ident(name) => {
                let tok = self.bump();
                Ok(TypeRef::Named(Spanned::new(name, tok.span)))
            }
            other => {
                self.error_here(&format!("expected a type, found {}", other.describe()));
                Err(ParseFail)
            }
        }
    }

    fn int_value(&mut self) -> PResult<i64> {
        let negative = self.eat(&TokenKind::Minus);
        match *self.peek() {
            TokenKind::Int(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            ref other => {
                self.error_here(&format!("expected an integer, found {}", other.describe()));
                Err(ParseFail)
            }
        }
    }

    fn port_decl(&mut self) -> PResult<PortDecl> {
        self.expect(TokenKind::KwPort)?;
        let direction = if self.eat(&TokenKind::KwIn) {
            Direction::In
        } else if self.eat(&TokenKind::KwOut) {
            Direction::Out
        } else {
            self.error_here(&format!(
                "expected `in` or `out`, found {}",
                self.peek().describe()
            ));
            return Err(ParseFail);
        };
        let ty = self.type_ref()?;
        let name = self.expect_ident("port name")?;
        self.expect(TokenKind::Semi)?;
        Ok(PortDecl {
            direction,
            ty,
            name,
        })
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        self.expect(TokenKind::KwVar)?;
        let ty = self.type_ref()?;
        let name = self.expect_ident("variable name")?;
        self.expect(TokenKind::Assign)?;
        let init = self.literal()?;
        self.expect(TokenKind::Semi)?;
        Ok(VarDecl { ty, name, init })
    }

    fn instance_decl(&mut self) -> PResult<InstanceDecl> {
        self.expect(TokenKind::KwInstance)?;
        let component = self.expect_ident("component type name")?;
        let name = self.expect_ident("instance name")?;
        let mut args = Vec::new();
        if self.eat(&TokenKind::LParen) {
            loop {
                args.push(self.literal()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RParen)?;
        }
        self.expect(TokenKind::Semi)?;
        Ok(InstanceDecl {
            component,
            name,
            args,
        })
    }

    fn connect_decl(&mut self) -> PResult<Vec<Spanned<ConnectorDecl>>> {
        let start = self.expect(TokenKind::KwConnect)?.span;
        let source = self.port_ref()?;
        self.expect(TokenKind::Arrow)?;
        let mut targets = vec![self.port_ref()?];
        while self.eat(&TokenKind::Comma) {
            targets.push(self.port_ref()?);
        }
        let end = self.expect(TokenKind::Semi)?.span;
        let span = start.merge(&end);
        Ok(targets
            .into_iter()
            .map(|target| {
                Spanned::new(
                    ConnectorDecl {
                        source: source.clone(),
                        target,
                    },
                    span.clone(),
                )
            })
            .collect())
    }

    fn port_ref(&mut self) -> PResult<PortRef> {
        let first = self.expect_ident("port reference")?;
        if self.eat(&TokenKind::Dot) {
            let port = self.expect_ident("port name")?;
            Ok(PortRef {
                instance: Some(first),
                port,
            })
        } else {
            Ok(PortRef {
                instance: None,
                port: first,
            })
        }
    }

    fn automaton_decl(&mut self) -> PResult<Spanned<AutomatonDecl>> {
        let start = self.expect(TokenKind::KwAutomaton)?.span;
        let name = self.expect_ident("automaton name")?;
        let monitor = self.eat(&TokenKind::KwMonitor);
        self.expect(TokenKind::LBrace)?;

        let mut states: Vec<Ident> = Vec::new();
        let mut initial: Option<(Ident, Vec<OutItem>)> = None;
        let mut transitions = Vec::new();
        loop {
            match self.peek() {
                TokenKind::RBrace | TokenKind::Eof => break,
                TokenKind::KwState => {
                    if initial.is_some() {
                        self.error_here("state declarations must precede `initial`");
                        self.sync_statement();
                        continue;
                    }
                    if self.state_decl(&mut states).is_err() {
                        self.sync_statement();
                    }
                }
                TokenKind::KwInitial => {
                    if initial.is_some() {
                        self.error_here("duplicate `initial` declaration");
                        self.sync_statement();
                        continue;
                    }
                    match self.initial_decl() {
                        Ok(init) => initial = Some(init),
                        Err(ParseFail) => self.sync_statement(),
                    }
                }
                TokenKind::Ident(_) => {
                    if initial.is_none() {
                        self.error_here("transitions must follow the `initial` declaration");
                        self.sync_statement();
                        continue;
                    }
                    match self.transition() {
                        Ok(t) => transitions.push(t),
                        Err(ParseFail) => self.sync_statement(),
                    }
                }
                other => {
                    let msg = format!(
                        "expected `state`, `initial`, or a transition, found {}",
                        other.describe()
                    );
                    self.error_here(&msg);
                    self.sync_statement();
                }
            }
        }
        let end = self.expect(TokenKind::RBrace)?.span;
        let Some((initial_state, initial_outputs)) = initial else {
            self.diags.push(ParseDiagnostic {
                severity: Severity::Error,
                message: format!("automaton `{}` has no `initial` declaration", name.node),
                span: start.merge(&end),
            });
            return Err(ParseFail);
        };
        Ok(Spanned::new(
            AutomatonDecl {
                name,
                monitor,
                states,
                initial_state,
                initial_outputs,
                transitions,
            },
            start.merge(&end),
        ))
    }

    fn state_decl(&mut self, states: &mut Vec<Ident>) -> PResult<()> {
        self.expect(TokenKind::KwState)?;
        states.push(self.expect_ident("state name")?);
        while self.eat(&TokenKind::Comma) {
            states.push(self.expect_ident("state name")?);
        }
        self.expect(TokenKind::Semi)?;
        Ok(())
    }

    fn initial_decl(&mut self) -> PResult<(Ident, Vec<OutItem>)> {
        self.expect(TokenKind::KwInitial)?;
        let state = self.expect_ident("initial state name")?;
        let outputs = if self.eat(&TokenKind::Slash) {
            self.out_block()?
        } else {
            Vec::new()
        };
        self.expect(TokenKind::Semi)?;
        Ok((state, outputs))
    }

    fn transition(&mut self) -> PResult<Spanned<TransitionDecl>> {
        let source = self.expect_ident("state name")?;
        let start = source.span.clone();
        self.expect(TokenKind::Arrow)?;
        let target = self.expect_ident("state name")?;
        let inputs = if self.at(&TokenKind::LBrace) {
            self.in_block()?
        } else {
            Vec::new()
        };
        let guard = if self.eat(&TokenKind::LBracket) {
            let e = self.expr()?;
            self.expect(TokenKind::RBracket)?;
            Some(e)
        } else {
            None
        };
        let outputs = if self.eat(&TokenKind::Slash) {
            self.out_block()?
        } else {
            Vec::new()
        };
        let end = self.expect(TokenKind::Semi)?.span;
        Ok(Spanned::new(
            TransitionDecl {
                source,
                target,
                inputs,
                guard,
                outputs,
            },
            start.merge(&end),
        ))
    }

    fn in_block(&mut self) -> PResult<Vec<(Ident, PatternAst)>> {
        self.expect(TokenKind::LBrace)?;
        let mut items = Vec::new();
        loop {
            let port = self.expect_ident("port name")?;
            self.expect(TokenKind::Colon)?;
            let pattern = match self.peek() {
                TokenKind::Underscore => {
                    self.bump();
                    PatternAst::Wildcard
                }
                TokenKind::KwNone => {
                    self.bump();
                    PatternAst::Absent
                }
                _ => PatternAst::Literal(self.literal()?),
            };
            items.push((port, pattern));
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(items)
    }

    fn out_block(&mut self) -> PResult<Vec<OutItem>> {
        self.expect(TokenKind::LBrace)?;
        let mut items = Vec::new();
        loop {
            let name = self.expect_ident("port or variable name")?;
            if self.eat(&TokenKind::Colon) {
                let messages = if self.eat(&TokenKind::LBracket) {
                    let mut msgs = vec![self.literal()?];
                    while self.eat(&TokenKind::Comma) {
                        msgs.push(self.literal()?);
                    }
                    self.expect(TokenKind::RBracket)?;
                    msgs
                } else {
                    vec![self.literal()?]
                };
                items.push(OutItem::Port {
                    port: name,
                    messages,
                });
            } else if self.eat(&TokenKind::Assign) {
                let expr = self.expr()?;
                items.push(OutItem::Assign { var: name, expr });
            } else {
                self.error_here(&format!(
                    "expected `:` or `=` in output block, found {}",
                    self.peek().describe()
                ));
                return Err(ParseFail);
            }
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(items)
    }

    fn literal(&mut self) -> PResult<LiteralAst> {
        let span = self.peek_span();
        match self.peek().clone() {
            TokenKind::Int(v) => {
                self.bump();
                Ok(Spanned::new(LiteralNode::Int(v), span))
            }
            TokenKind::Minus => {
                self.bump();
                match *self.peek() {
                    TokenKind::Int(v) => {
                        let end = self.bump().span;
                        Ok(Spanned::new(LiteralNode::Int(-v), span.merge(&end)))
                    }
                    ref other => {
                        self.error_here(&format!(
                            "expected an integer after `-`, found {}",
                            other.describe()
                        ));
                        Err(ParseFail)
                    }
                }
            }
            TokenKind::KwTrue => {
                self.bump();
                Ok(Spanned::new(LiteralNode::Bool(true), span))
            }
            TokenKind::KwFalse => {
                self.bump();
                Ok(Spanned::new(LiteralNode::Bool(false), span))
            }
            TokenKind::Ident(name) => {
                self.bump();
                Ok(Spanned::new(LiteralNode::Name(name), span))
            }
            other => {
                self.error_here(&format!("expected a literal, found {}", other.describe()));
                Err(ParseFail)
            }
        }
    }

    fn expr(&mut self) -> PResult<ExprAst> {
        self.expr_or()
    }

    fn expr_or(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.expr_and()?;
        while self.eat(&TokenKind::OrOr) {
            let rhs = self.expr_and()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_and(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.expr_cmp()?;
        while self.eat(&TokenKind::AndAnd) {
            let rhs = self.expr_cmp()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_cmp(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.expr_add()?;
        loop {
            let op = match self.peek() {
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::Ne => BinOp::Ne,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_add()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_add(&mut self) -> PResult<ExprAst> {
        let mut lhs = self.expr_unary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_unary()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn expr_unary(&mut self) -> PResult<ExprAst> {
        if self.at(&TokenKind::Bang) {
            let start = self.bump().span;
            let inner = self.expr_unary()?;
            let span = start.merge(&inner.span);
            Ok(Spanned::new(ExprNode::Not(Box::new(inner)), span))
        } else {
            self.expr_atom()
        }
    }

    fn expr_atom(&mut self) -> PResult<ExprAst> {
        let span = self.peek_span();
        match self.peek().clone() {
            TokenKind::Int(v) => {
                self.bump();
                Ok(Spanned::new(ExprNode::Int(v), span))
            }
            TokenKind::Minus => {
                self.bump();
                match *self.peek() {
                    TokenKind::Int(v) => {
                        let end = self.bump().span;
                        Ok(Spanned::new(ExprNode::Int(-v), span.merge(&end)))
                    }
                    ref other => {
                        self.error_here(&format!(
                            "expected an integer after `-`, found {}",
                            other.describe()
                        ));
                        Err(ParseFail)
                    }
                }
            }
            TokenKind::KwTrue => {
                self.bump();
                Ok(Spanned::new(ExprNode::Bool(true), span))
            }
            TokenKind::KwFalse => {
                self.bump();
                Ok(Spanned::new(ExprNode::Bool(false), span))
            }
            TokenKind::Ident(name) => {
                self.bump();
                Ok(Spanned::new(ExprNode::Name(name), span))
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            other => {
                self.error_here(&format!(
                    "expected an expression, found {}",
                    other.describe()
                ));
                Err(ParseFail)
            }
        }
    }
}

fn binary(op: BinOp, lhs: ExprAst, rhs: ExprAst) -> ExprAst {
    let span = lhs.span.merge(&rhs.span);
    Spanned::new(
        ExprNode::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span,
    )
}
