//! Core library of the rcml toolkit: a textual component-and-connector
//! modeling language with embedded I/O automata.
//!
//! The pipeline is parse ([`parser`]) into an AST ([`ast`]), bind names
//! ([`resolve`]) into the typed IR ([`model`]), verify well-formedness
//! ([`checks`]), then simulate ([`sim`]), check refinement ([`refine`]), or
//! generate machine tables ([`codegen`]).

pub mod ast;
pub mod checks;
pub mod codegen;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod printer;
pub mod refine;
pub mod resolve;
pub mod sim;
pub mod span;
pub mod testgen;

pub use checks::{check, CheckReport};
pub use model::ResolvedModel;
pub use parser::{parse, ParseDiagnostic};
pub use printer::pretty_print;
pub use resolve::{resolve, ResolveError};
