//! The pipeline specification language: parsing, validation, symbol
//! resolution and facet expansion.

mod catalog;
mod facet;
mod parse;
mod symbols;
mod types;
mod validate;

use crate::transform::TransformError;

pub use catalog::{check_params, ParamDef, ParamIssue, ParamKind, ParamSet, Registry};
pub use facet::{expand_entry, expand_facets, expand_view_ref, substitute, FacetContext, FacetGroup};
pub use parse::{parse_pipeline, pipeline_from_value, pipeline_to_value, serialize_pipeline, vis_entry_json};
pub use symbols::{
    analysis_outputs, n_components, resolve_symbols, Producer, Scope, Symbol, SymbolTable, DEFAULT_COMPONENTS,
};
pub use types::*;
pub use validate::{escape as escape_pointer, validate_pipeline, Finding, FindingCode, Severity, ValidationReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path} {message}")]
    Schema { path: String, message: String },
    #[error("unresolved reference `{name}` at {path}")]
    UnresolvedReference { path: String, name: String },
    #[error("facet at {path} expands to {needed} views but only {available} slots remain along its axis")]
    FacetOverflow {
        path: String,
        needed: usize,
        available: usize,
    },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{model}` has no attribute `{attribute}`")]
    UnknownModelAttribute { model: String, attribute: String },
    #[error("facet selector at {path}: {source}")]
    Selector {
        path: String,
        #[source]
        source: TransformError,
    },
}

impl SpecError {
    pub(crate) fn schema(path: &str, message: &str) -> Self {
        SpecError::Schema {
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    /// JSON pointer of the offending spec location, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            SpecError::Schema { path, .. }
            | SpecError::UnresolvedReference { path, .. }
            | SpecError::FacetOverflow { path, .. }
            | SpecError::Selector { path, .. } => Some(path),
            _ => None,
        }
    }
}
