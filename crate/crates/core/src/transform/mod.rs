//! Declarative data transforms: `match`, `derive`, `aggregate` (grouping or
//! binning), `sort` and `top`.

mod expr;
mod lexer;
mod ops;
mod predicate;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::frame::{DType, DataFrame, FrameError};

pub use expr::{parse_expr, Expr};
pub use ops::{aggregate, bin_edges, derive, match_rows, sort_top};
pub use predicate::{field_ref, parse_predicate, quote, CmpOp, Literal, Predicate};

/// Output name of a field-less `count`.
pub const COUNT: &str = "$count";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("predicate parse error at {pos}: {message}")]
    PredicateParse { pos: usize, message: String },
    #[error("expression parse error at {pos}: {message}")]
    ExprParse { pos: usize, message: String },
    #[error("type mismatch on `{field}`: {message}")]
    TypeMismatch { field: String, message: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("`{op}` cannot aggregate categorical field `{field}`")]
    AggregateOnCategorical { op: &'static str, field: String },
    #[error("invalid binning: {0}")]
    InvalidBin(String),
    #[error("duplicate column `{0}`")]
    DuplicateName(String),
    #[error("`{field}` is derived from itself")]
    SelfReference { field: String },
}

impl From<FrameError> for TransformError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::DuplicateName(n) => TransformError::DuplicateName(n),
            FrameError::UnknownColumn(n) => TransformError::UnknownColumn(n),
            other => TransformError::TypeMismatch {
                field: String::new(),
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggOp {
    Count,
    Sum,
    Mean,
    Min,
    Max,
}

impl AggOp {
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Mean => "mean",
            AggOp::Min => "min",
            AggOp::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregation {
    pub op: AggOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(rename = "as", default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Aggregation {
    pub fn count() -> Self {
        Self {
            op: AggOp::Count,
            field: None,
            out: None,
        }
    }

    /// `$count` for a plain count, otherwise `<op>_<field>` unless renamed with `as`.
    pub fn output_name(&self) -> String {
        if let Some(out) = &self.out {
            return out.clone();
        }
        match &self.field {
            None => COUNT.to_string(),
            Some(f) => format!("{}_{f}", self.op.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinSpec {
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
}

impl BinSpec {
    pub fn end_name(&self) -> String {
        format!("{}_end", self.field)
    }
}

fn default_aggregations() -> Vec<Aggregation> {
    vec![Aggregation::count()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groupby: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<BinSpec>,
    #[serde(default = "default_aggregations")]
    pub aggregations: Vec<Aggregation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SortSpec {
    pub by: String,
    #[serde(default)]
    pub order: SortOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

fn desc() -> SortOrder {
    SortOrder::Desc
}

/// `top` is a descending sort that must keep a bounded number of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopSpec {
    pub by: String,
    pub limit: usize,
    #[serde(default = "desc")]
    pub order: SortOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TransformStep {
    Match(String),
    Derive(IndexMap<String, String>),
    Aggregate(AggregateSpec),
    Sort(SortSpec),
    Top(TopSpec),
}

pub type Schema = Vec<(String, DType)>;

pub fn schema_of(frame: &DataFrame) -> Schema {
    frame
        .columns()
        .iter()
        .map(|c| (c.name().to_string(), c.dtype()))
        .collect()
}

fn lookup(schema: &Schema, name: &str) -> Result<DType, TransformError> {
    schema
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| TransformError::UnknownColumn(name.to_string()))
}

impl TransformStep {
    /// Columns this step reads.
    pub fn inputs(&self) -> Result<Vec<String>, TransformError> {
        Ok(match self {
            TransformStep::Match(p) => parse_predicate(p)?.fields(),
            TransformStep::Derive(map) => {
                let mut out: Vec<String> = Vec::new();
                for expr in map.values() {
                    for f in parse_expr(expr)?.fields() {
                        if !out.contains(&f) && !map.contains_key(&f) {
                            out.push(f);
                        }
                    }
                }
                out
            }
            TransformStep::Aggregate(a) => {
                let mut out = a.groupby.clone();
                out.extend(a.bin.iter().map(|b| b.field.clone()));
                out.extend(a.aggregations.iter().filter_map(|g| g.field.clone()));
                out
            }
            TransformStep::Sort(s) => vec![s.by.clone()],
            TransformStep::Top(t) => vec![t.by.clone()],
        })
    }

    /// Columns this step creates.
    pub fn outputs(&self) -> Vec<String> {
        match self {
            TransformStep::Derive(map) => map.keys().cloned().collect(),
            TransformStep::Aggregate(a) => {
                let mut out = a.groupby.clone();
                if let Some(b) = &a.bin {
                    out.push(b.field.clone());
                    out.push(b.end_name());
                }
                out.extend(a.aggregations.iter().map(Aggregation::output_name));
                out
            }
            _ => Vec::new(),
        }
    }

    /// Static schema propagation, used for validation before any data exists.
    pub fn output_schema(&self, schema: &Schema) -> Result<Schema, TransformError> {
        match self {
            TransformStep::Match(p) => {
                for f in parse_predicate(p)?.fields() {
                    lookup(schema, &f)?;
                }
                Ok(schema.clone())
            }
            TransformStep::Derive(map) => {
                let mut out = schema.clone();
                for (name, src) in map {
                    let fields = parse_expr(src)?.fields();
                    if fields.contains(name) && lookup(&out, name).is_err() {
                        return Err(TransformError::SelfReference { field: name.clone() });
                    }
                    for f in fields {
                        if lookup(&out, &f)? == DType::Categorical {
                            return Err(TransformError::TypeMismatch {
                                field: f,
                                message: "arithmetic on a categorical field".into(),
                            });
                        }
                    }
                    if lookup(&out, name).is_ok() {
                        return Err(TransformError::DuplicateName(name.clone()));
                    }
                    out.push((name.clone(), DType::Float64));
                }
                Ok(out)
            }
            TransformStep::Aggregate(a) => {
                let mut out = Schema::new();
                for g in &a.groupby {
                    out.push((g.clone(), lookup(schema, g)?));
                }
                if let Some(b) = &a.bin {
                    if !lookup(schema, &b.field)?.is_numeric() {
                        return Err(TransformError::InvalidBin(format!("`{}` is not numeric", b.field)));
                    }
                    out.push((b.field.clone(), DType::Float64));
                    out.push((b.end_name(), DType::Float64));
                }
                for agg in &a.aggregations {
                    let dtype = match (&agg.field, agg.op) {
                        (None, AggOp::Count) => DType::Int64,
                        (None, op) => {
                            return Err(TransformError::TypeMismatch {
                                field: agg.output_name(),
                                message: format!("`{}` needs a field", op.name()),
                            })
                        }
                        (Some(f), op) => {
                            let t = lookup(schema, f)?;
                            match op {
                                AggOp::Count => DType::Int64,
                                AggOp::Sum | AggOp::Mean if t == DType::Categorical => {
                                    return Err(TransformError::AggregateOnCategorical {
                                        op: op.name(),
                                        field: f.clone(),
                                    })
                                }
                                AggOp::Sum | AggOp::Mean => DType::Float64,
                                AggOp::Min | AggOp::Max => t,
                            }
                        }
                    };
                    let name = agg.output_name();
                    if out.iter().any(|(n, _)| *n == name) {
                        return Err(TransformError::DuplicateName(name));
                    }
                    out.push((name, dtype));
                }
                Ok(out)
            }
            TransformStep::Sort(s) => lookup(schema, &s.by).map(|_| schema.clone()),
            TransformStep::Top(t) => lookup(schema, &t.by).map(|_| schema.clone()),
        }
    }

    pub fn apply(&self, frame: &DataFrame) -> Result<DataFrame, TransformError> {
        match self {
            TransformStep::Match(p) => match_rows(frame, &parse_predicate(p)?),
            TransformStep::Derive(map) => {
                let mut out = frame.clone();
                for (name, src) in map {
                    let e = parse_expr(src)?;
                    if e.fields().contains(name) && out.column(name).is_none() {
                        return Err(TransformError::SelfReference { field: name.clone() });
                    }
                    out = derive(&out, name, &e)?;
                }
                Ok(out)
            }
            TransformStep::Aggregate(a) => aggregate(frame, a),
            TransformStep::Sort(s) => sort_top(frame, &s.by, s.order, s.limit),
            TransformStep::Top(t) => sort_top(frame, &t.by, t.order, Some(t.limit)),
        }
    }
}

pub fn apply_steps(frame: &DataFrame, steps: &[TransformStep]) -> Result<DataFrame, TransformError> {
    steps.iter().try_fold(frame.clone(), |f, s| s.apply(&f))
}

pub fn output_schema(schema: &Schema, steps: &[TransformStep]) -> Result<Schema, TransformError> {
    steps.iter().try_fold(schema.clone(), |s, step| step.output_schema(&s))
}
