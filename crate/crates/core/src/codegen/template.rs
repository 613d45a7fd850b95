//! Minimal text template engine for table rendering.
//!
//! Syntax:
//!
//! - `{{path}}` inserts the value at a dotted path, looked up in the
//!   current context and then in enclosing contexts. An unknown path is a
//!   generation error.
//! - `{{#each path}}...{{/each}}` iterates an array (context becomes the
//!   element) or an object (context becomes the value, `@key` the key).
//! - `{{#if path}}...{{/if}}` renders its body when the value is truthy:
//!   missing, `null`, `false`, `0`, `""`, `[]`, and `{}` are falsy.
//! - Inside a loop, `@index`, `@first`, `@last`, `@notlast`, and `@key`
//!   are available; `this` names the current element.

use serde_json::Value as Json;

#[derive(Debug, thiserror::Error)]
#[error("{file}:{line}:{col}: template error: {message}")]
pub struct TemplateError {
    pub message: String,
    pub file: String,
    pub line: u32,
    pub col: u32,
}

impl TemplateError {
    fn new(message: String, pos: &Pos) -> TemplateError {
        TemplateError {
            message,
            file: pos.file.clone(),
            line: pos.line,
            col: pos.col,
        }
    }
}

#[derive(Debug, Clone)]
struct Pos {
    file: String,
    line: u32,
    col: u32,
}

#[derive(Debug)]
enum Node {
    Text(String),
    Placeholder { path: String, pos: Pos },
    Each { path: String, body: Vec<Node>, pos: Pos },
    If { path: String, body: Vec<Node> },
}

/// A parsed template, ready for repeated rendering.
#[derive(Debug)]
pub struct Template {
    nodes: Vec<Node>,
}

impl Template {
    /// Parses `text`; block tags must balance. `file` is used in error
    /// positions only.
    pub fn parse(text: &str, file: &str) -> Result<Template, TemplateError> {
        let mut parser = TemplateParser {
            text,
            rest: text,
            file: file.to_string(),
        };
        let (nodes, closer) = parser.parse_nodes()?;
        if let Some((tag, pos)) = closer {
            return Err(TemplateError::new(
                format!("unmatched closing tag `{{{{/{tag}}}}}`"),
                &pos,
            ));
        }
        Ok(Template { nodes })
    }

    /// Renders against a JSON context. Deterministic: same template and
    /// context give byte-identical text.
    pub fn render(&self, context: &Json) -> Result<String, TemplateError> {
        let mut out = String::new();
        let scope = Scope {
            value: context,
            parent: None,
            meta: None,
        };
        render_nodes(&self.nodes, &scope, &mut out)?;
        Ok(out)
    }
}

struct TemplateParser<'a> {
    text: &'a str,
    rest: &'a str,
    file: String,
}

type Closer = Option<(String, Pos)>;

impl<'a> TemplateParser<'a> {
    fn pos(&self) -> Pos {
        let consumed = self.text.len() - self.rest.len();
        let mut line = 1;
        let mut col = 1;
        for c in self.text[..consumed].chars() {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Pos {
            file: self.file.clone(),
            line,
            col,
        }
    }

    /// Parses until a closing tag or end of input; returns the nodes and
    /// the name of the closing tag, if any.
    fn parse_nodes(&mut self) -> Result<(Vec<Node>, Closer), TemplateError> {
        let mut nodes = Vec::new();
        loop {
            match self.rest.find("{{") {
                None => {
                    if !self.rest.is_empty() {
                        nodes.push(Node::Text(self.rest.to_string()));
                        self.rest = "";
                    }
                    return Ok((nodes, None));
                }
                Some(start) => {
                    if start > 0 {
                        nodes.push(Node::Text(self.rest[..start].to_string()));
                        self.rest = &self.rest[start..];
                    }
                    let pos = self.pos();
                    let Some(end) = self.rest.find("}}") else {
                        return Err(TemplateError::new("unterminated `{{`".to_string(), &pos));
                    };
                    let tag = self.rest[2..end].trim().to_string();
                    self.rest = &self.rest[end + 2..];
                    if let Some(name) = tag.strip_prefix('/') {
                        return Ok((nodes, Some((name.trim().to_string(), pos))));
                    } else if let Some(rest) = tag.strip_prefix("#each") {
                        let path = rest.trim().to_string();
                        let (body, closer) = self.parse_nodes()?;
                        match closer {
                            Some((name, _)) if name == "each" => {
                                nodes.push(Node::Each { path, body, pos });
                            }
                            _ => {
                                return Err(TemplateError::new(
                                    "`{{#each}}` without matching `{{/each}}`".to_string(),
                                    &pos,
                                ))
                            }
                        }
                    } else if let Some(rest) = tag.strip_prefix("#if") {
                        let path = rest.trim().to_string();
                        let (body, closer) = self.parse_nodes()?;
                        match closer {
                            Some((name, _)) if name == "if" => {
                                nodes.push(Node::If { path, body });
                            }
                            _ => {
                                return Err(TemplateError::new(
                                    "`{{#if}}` without matching `{{/if}}`".to_string(),
                                    &pos,
                                ))
                            }
                        }
                    } else if tag.starts_with('#') {
                        return Err(TemplateError::new(
                            format!("unknown block tag `{tag}`"),
                            &pos,
                        ));
                    } else {
                        nodes.push(Node::Placeholder { path: tag, pos });
                    }
                }
            }
        }
    }
}

/// Loop metadata visible through `@` variables.
struct LoopMeta {
    index: usize,
    len: usize,
    key: Option<String>,
}

struct Scope<'a> {
    value: &'a Json,
    parent: Option<&'a Scope<'a>>,
    meta: Option<&'a LoopMeta>,
}

impl<'a> Scope<'a> {
    /// Resolves a dotted path, walking up enclosing scopes for the first
    /// segment. Returns `None` when nothing matches anywhere.
    fn lookup(&self, path: &str) -> Option<Json> {
        if let Some(meta_var) = path.strip_prefix('@') {
            let meta = self.nearest_meta()?;
            return match meta_var {
                "index" => Some(Json::from(meta.index)),
                "first" => Some(Json::Bool(meta.index == 0)),
                "last" => Some(Json::Bool(meta.index + 1 == meta.len)),
                "notlast" => Some(Json::Bool(meta.index + 1 != meta.len)),
                "key" => meta.key.clone().map(Json::String),
                _ => None,
            };
        }
        let mut segments = path.split('.');
        let first = segments.next()?;
        let mut current = if first == "this" {
            self.value.clone()
        } else {
            let mut scope = Some(self);
            loop {
                let s = scope?;
                if let Some(v) = s.value.get(first) {
                    break v.clone();
                }
                scope = s.parent;
            }
        };
        for segment in segments {
            current = current.get(segment)?.clone();
        }
        Some(current)
    }

    fn nearest_meta(&self) -> Option<&LoopMeta> {
        let mut scope = Some(self);
        while let Some(s) = scope {
            if let Some(meta) = s.meta {
                return Some(meta);
            }
            scope = s.parent;
        }
        None
    }
}

fn truthy(v: &Json) -> bool {
    match v {
        Json::Null => false,
        Json::Bool(b) => *b,
        Json::Number(n) => n.as_f64() != Some(0.0),
        Json::String(s) => !s.is_empty(),
        Json::Array(a) => !a.is_empty(),
        Json::Object(o) => !o.is_empty(),
    }
}

fn scalar_text(v: &Json, path: &str, pos: &Pos) -> Result<String, TemplateError> {
    match v {
        Json::String(s) => Ok(s.clone()),
        Json::Number(n) => Ok(n.to_string()),
        Json::Bool(b) => Ok(b.to_string()),
        Json::Null => Ok("null".to_string()),
        _ => Err(TemplateError::new(
            format!("placeholder `{path}` is not a scalar; use `{{{{#each {path}}}}}`"),
            pos,
        )),
    }
}

fn render_nodes(nodes: &[Node], scope: &Scope, out: &mut String) -> Result<(), TemplateError> {
    for node in nodes {
        match node {
            Node::Text(text) => out.push_str(text),
            Node::Placeholder { path, pos } => match scope.lookup(path) {
                Some(value) => out.push_str(&scalar_text(&value, path, pos)?),
                None => {
                    return Err(TemplateError::new(
                        format!("unknown placeholder `{path}`"),
                        pos,
                    ))
                }
            },
            Node::If { path, body, .. } => {
                let hold = scope.lookup(path).map(|v| truthy(&v)).unwrap_or(false);
                if hold {
                    render_nodes(body, scope, out)?;
                }
            }
            Node::Each { path, body, pos } => {
                let value = scope.lookup(path).ok_or_else(|| {
                    TemplateError::new(format!("unknown placeholder `{path}`"), pos)
                })?;
                match value {
                    Json::Array(items) => {
                        let len = items.len();
                        for (index, item) in items.iter().enumerate() {
                            let meta = LoopMeta {
                                index,
                                len,
                                key: None,
                            };
                            let inner = Scope {
                                value: item,
                                parent: Some(scope),
                                meta: Some(&meta),
                            };
                            render_nodes(body, &inner, out)?;
                        }
                    }
                    Json::Object(map) => {
                        let len = map.len();
                        for (index, (key, item)) in map.iter().enumerate() {
                            let meta = LoopMeta {
                                index,
                                len,
                                key: Some(key.clone()),
                            };
                            let inner = Scope {
                                value: item,
                                parent: Some(scope),
                                meta: Some(&meta),
                            };
                            render_nodes(body, &inner, out)?;
                        }
                    }
                    other => {
                        return Err(TemplateError::new(
                            format!(
                                "`{{{{#each {path}}}}}` needs an array or object, found {other}"
                            ),
                            pos,
                        ))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Renders `table` through a template. Pure and total on valid inputs.
pub fn render(
    table: &super::MachineTable,
    template: &Template,
) -> Result<String, TemplateError> {
    template.render(&table.template_context())
}
