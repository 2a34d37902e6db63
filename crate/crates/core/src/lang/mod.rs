//! The MML modeling language: syntax, printing and admission.

pub mod admit;
pub mod ast;
pub mod lexer;
pub mod module;
pub mod parser;
pub mod pretty;

pub use admit::{admit, admit_signatures, module_name, AdmissionReport, AdmissionStatus, DependencyContext, Diagnostic};
pub use ast::{Program, Ty};
pub use module::Module;
pub use parser::{parse, parse_expr, ParseError};
pub use pretty::print_program;

use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Admission(Vec<Diagnostic>),
}

/// Parses and admits a self-contained source file.
pub fn load(file: &str, src: &str) -> Result<Arc<Module>, LoadError> {
    let program = parse(file, src)?;
    let report = admit(&program, &DependencyContext::default());
    report.admitted.ok_or(LoadError::Admission(report.diagnostics))
}
