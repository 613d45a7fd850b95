//! Source locations and the span-carrying wrapper used by the AST.

use serde::Serialize;
use std::fmt;

/// A region of a source file. Lines and columns are 1-based; `start <= end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: &str, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        SourceSpan {
            file: file.to_string(),
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// A span covering nothing, used for synthesized nodes.
    pub fn synthetic() -> Self {
        SourceSpan::new("<synthetic>", 1, 1, 1, 1)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn merge(&self, other: &SourceSpan) -> SourceSpan {
        let (sl, sc) = std::cmp::min(
            (self.start_line, self.start_col),
            (other.start_line, other.start_col),
        );
        let (el, ec) = std::cmp::max((self.end_line, self.end_col), (other.end_line, other.end_col));
        SourceSpan {
            file: self.file.clone(),
            start_line: sl,
            start_col: sc,
            end_line: el,
            end_col: ec,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

/// Source attribution carried by resolved IR nodes for diagnostics.
/// Compares equal to any other tag, so spans never affect structural
/// equality of resolved models.
#[derive(Debug, Clone)]
pub struct SpanTag(pub SourceSpan);

impl PartialEq for SpanTag {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for SpanTag {}

impl std::ops::Deref for SpanTag {
    type Target = SourceSpan;
    fn deref(&self) -> &SourceSpan {
        &self.0
    }
}

impl From<SourceSpan> for SpanTag {
    fn from(span: SourceSpan) -> Self {
        SpanTag(span)
    }
}

/// A value paired with the span it was parsed from.
///
/// Equality and hashing ignore the span, so structural comparison of
/// syntax trees is insensitive to formatting.
#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: SourceSpan,
}

impl<T> Spanned<T> {
    pub fn new(node: T, span: SourceSpan) -> Self {
        Spanned { node, span }
    }

    pub fn synthetic(node: T) -> Self {
        Spanned {
            node,
            span: SourceSpan::synthetic(),
        }
    }
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl<T: Eq> Eq for Spanned<T> {}

impl<T: std::hash::Hash> std::hash::Hash for Spanned<T> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

impl<T: fmt::Display> fmt::Display for Spanned<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.fmt(f)
    }
}

/// An identifier with its source span.
pub type Ident = Spanned<String>;
