//! Where every referenced field comes from.

use serde::Serialize;

use crate::frame::DType;
use crate::transform::Schema;

use super::types::{AnalysisSpec, Algorithm, PipelineSpec};
use super::validate::walk;
use super::{Registry, SpecError};

pub const DEFAULT_COMPONENTS: usize = 2;

pub fn n_components(a: &AnalysisSpec) -> usize {
    a.parameters
        .get("n_components")
        .and_then(|v| v.as_u64())
        .map_or(DEFAULT_COMPONENTS, |v| v as usize)
}

/// Columns an analysis appends: `<name>.<i>` for multi-component projections,
/// the bare name otherwise.
pub fn analysis_outputs(name: &str, a: &AnalysisSpec) -> Vec<(String, DType)> {
    match a.algorithm {
        alg if alg.is_projection() => match n_components(a) {
            1 => vec![(name.to_string(), DType::Float64)],
            c => (0..c).map(|i| (format!("{name}.{i}"), DType::Float64)).collect(),
        },
        Algorithm::ModelApply => vec![(name.to_string(), DType::Float64)],
        _ => vec![(name.to_string(), DType::Int64)],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Scope {
    Pipeline,
    View(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Producer {
    Input,
    Analysis { name: String, component: Option<usize> },
    Derived,
    ModelAttribute { model: String, attribute: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Symbol {
    pub name: String,
    pub scope: Scope,
    pub producer: Producer,
}

/// One entry per consumed symbol, keyed by the scope that produces it.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SymbolTable {
    pub entries: Vec<Symbol>,
}

impl SymbolTable {
    pub fn get(&self, scope: &Scope, name: &str) -> Option<&Symbol> {
        self.entries.iter().find(|s| s.scope == *scope && s.name == name)
    }

    /// Looks in the view's own scope first, then the pipeline.
    pub fn lookup(&self, view: &str, name: &str) -> Option<&Symbol> {
        self.get(&Scope::View(view.to_string()), name)
            .or_else(|| self.get(&Scope::Pipeline, name))
    }

    pub(crate) fn record(&mut self, symbol: Symbol) {
        if self.get(&symbol.scope, &symbol.name).is_none() {
            self.entries.push(symbol);
        }
    }
}

/// `input` is the schema of the loaded (selected and preprocessed) data.
pub fn resolve_symbols(spec: &PipelineSpec, input: &Schema, registry: &Registry) -> Result<SymbolTable, SpecError> {
    let (report, table) = walk(spec, registry, Some(input));
    match report.first_unresolved() {
        Some((path, name)) => Err(SpecError::UnresolvedReference { path, name }),
        None => Ok(table),
    }
}
