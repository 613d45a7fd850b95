//! Canonical pretty-printer for models.
//!
//! Output uses one declaration per line with 2-space indentation. Printing
//! then reparsing yields a structurally equal model, and the format is
//! deterministic, so canonical text doubles as a structural fingerprint.

use crate::ast::*;
use std::fmt::Write;

/// Renders `model` in canonical form. An empty model prints as the empty
/// string.
pub fn pretty_print(model: &Model) -> String {
    let mut out = String::new();
    let mut first = true;
    for e in &model.enums {
        if !first {
            out.push('\n');
        }
        first = false;
        let lits = e
            .node
            .literals
            .iter()
            .map(|l| l.node.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "enum {} {{ {} }}", e.node.name.node, lits);
    }
    for c in &model.components {
        if !first {
            out.push('\n');
        }
        first = false;
        print_component(&mut out, &c.node);
    }
    out
}

fn print_component(out: &mut String, c: &ComponentDecl) {
    let _ = write!(out, "component {}", c.name.node);
    if !c.params.is_empty() {
        let params = c
            .params
            .iter()
            .map(|p| {
                let mut s = format!("{} {}", type_text(&p.ty), p.name.node);
                if let Some(d) = &p.default {
                    s.push_str(" = ");
                    s.push_str(&literal_text(d));
                }
                s
            })
            .collect::<Vec<_>>()
            .join(", ");
        let _ = write!(out, "({params})");
    }
    let empty = c.ports.is_empty()
        && c.vars.is_empty()
        && c.instances.is_empty()
        && c.connectors.is_empty()
        && c.automata.is_empty();
    if empty {
        out.push_str(" { }\n");
        return;
    }
    out.push_str(" {\n");
    for p in &c.ports {
        let dir = match p.direction {
            Direction::In => "in",
            Direction::Out => "out",
        };
        let _ = writeln!(out, "  port {} {} {};", dir, type_text(&p.ty), p.name.node);
    }
    for v in &c.vars {
        let _ = writeln!(
            out,
            "  var {} {} = {};",
            type_text(&v.ty),
            v.name.node,
            literal_text(&v.init)
        );
    }
    for i in &c.instances {
        let _ = write!(out, "  instance {} {}", i.component.node, i.name.node);
        if !i.args.is_empty() {
            let args = i
                .args
                .iter()
                .map(literal_text)
                .collect::<Vec<_>>()
                .join(", ");
            let _ = write!(out, "({args})");
        }
        out.push_str(";\n");
    }
    for conn in &c.connectors {
        let _ = writeln!(
            out,
            "  connect {} -> {};",
            port_ref_text(&conn.node.source),
            port_ref_text(&conn.node.target)
        );
    }
    for a in &c.automata {
        print_automaton(out, &a.node);
    }
    out.push_str("}\n");
}

fn print_automaton(out: &mut String, a: &AutomatonDecl) {
    let _ = write!(out, "  automaton {}", a.name.node);
    if a.monitor {
        out.push_str(" monitor");
    }
    out.push_str(" {\n");
    if !a.states.is_empty() {
        let states = a
            .states
            .iter()
            .map(|s| s.node.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "    state {states};");
    }
    let _ = write!(out, "    initial {}", a.initial_state.node);
    if !a.initial_outputs.is_empty() {
        let _ = write!(out, " / {}", out_block_text(&a.initial_outputs));
    }
    out.push_str(";\n");
    for t in &a.transitions {
        let t = &t.node;
        let _ = write!(out, "    {} -> {}", t.source.node, t.target.node);
        if !t.inputs.is_empty() {
            let items = t
                .inputs
                .iter()
                .map(|(port, pat)| format!("{}: {}", port.node, pattern_text(pat)))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = write!(out, " {{{items}}}");
        }
        if let Some(g) = &t.guard {
            let _ = write!(out, " [{}]", expr_text(g));
        }
        if !t.outputs.is_empty() {
            let _ = write!(out, " / {}", out_block_text(&t.outputs));
        }
        out.push_str(";\n");
    }
    out.push_str("  }\n");
}

fn out_block_text(items: &[OutItem]) -> String {
    let body = items
        .iter()
        .map(|item| match item {
            OutItem::Port { port, messages } => {
                if messages.len() == 1 {
                    format!("{}: {}", port.node, literal_text(&messages[0]))
                } else {
                    let msgs = messages
                        .iter()
                        .map(literal_text)
                        .collect::<Vec<_>>()
                        .join(", ");
                    format!("{}: [{}]", port.node, msgs)
                }
            }
            OutItem::Assign { var, expr } => format!("{} = {}", var.node, expr_text(expr)),
        })
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{body}}}")
}

fn pattern_text(p: &PatternAst) -> String {
    match p {
        PatternAst::Literal(l) => literal_text(l),
        PatternAst::Wildcard => "_".to_string(),
        PatternAst::Absent => "none".to_string(),
    }
}

pub fn type_text(t: &TypeRef) -> String {
    match t {
        TypeRef::Named(id) => id.node.clone(),
        TypeRef::Bool(_) => "bool".to_string(),
        TypeRef::Int { lo, hi, .. } => format!("int({lo}..{hi})"),
    }
}

pub fn literal_text(l: &LiteralAst) -> String {
    match &l.node {
        LiteralNode::Int(v) => v.to_string(),
        LiteralNode::Bool(b) => b.to_string(),
        LiteralNode::Name(n) => n.clone(),
    }
}

fn port_ref_text(r: &PortRef) -> String {
    match &r.instance {
        Some(inst) => format!("{}.{}", inst.node, r.port.node),
        None => r.port.node.clone(),
    }
}

/// Renders an expression with minimal parentheses. Same-precedence
/// right-nesting keeps its parentheses so the text reparses identically.
pub fn expr_text(e: &ExprAst) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &ExprAst, min_prec: u8) -> String {
    match &e.node {
        ExprNode::Int(v) => v.to_string(),
        ExprNode::Bool(b) => b.to_string(),
        ExprNode::Name(n) => n.clone(),
        ExprNode::Not(inner) => format!("!{}", expr_prec(inner, 5)),
        ExprNode::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let text = format!(
                "{} {} {}",
                expr_prec(lhs, prec),
                op.symbol(),
                expr_prec(rhs, prec + 1)
            );
            if prec < min_prec {
                format!("({text})")
            } else {
                text
            }
        }
    }
}

/// Fully parenthesized rendering, used for guard strings in machine tables.
pub fn expr_text_parenthesized(e: &ExprAst) -> String {
    match &e.node {
        ExprNode::Int(v) => v.to_string(),
        ExprNode::Bool(b) => b.to_string(),
        ExprNode::Name(n) => n.clone(),
        ExprNode::Not(inner) => format!("(!{})", expr_text_parenthesized(inner)),
        ExprNode::Binary { op, lhs, rhs } => format!(
            "({} {} {})",
            expr_text_parenthesized(lhs),
            op.symbol(),
            expr_text_parenthesized(rhs)
        ),
    }
}
