use std::collections::BTreeMap;

use p6_analytics::{AttributeOrder, Method, Metric, Scaling};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::ingest::{Format, Preprocessing};
use crate::transform::TransformStep;

/// Source name that makes a model train on the pipeline's own frame.
pub const PIPELINE_DATA: &str = "$data";
/// Placeholder substituted by facet expansion.
pub const SELECT: &str = "$select";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub schema: Option<String>,
    pub data: DataSpec,
    pub analyses: BTreeMap<String, AnalysisSpec>,
    pub models: BTreeMap<String, ModelSpec>,
    pub view_layout: ViewLayout,
    pub visualizations: Vec<VisEntry>,
    pub interactions: Vec<InteractionSpec>,
    pub annotations: Vec<AnnotationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Preprocessing::is_empty")]
    pub preprocessing: Preprocessing,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transform: Vec<TransformStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    KMeans,
    #[serde(alias = "AgglomerativeClustering")]
    Agglomerative,
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "TruncatedSVD")]
    TruncatedSvd,
    ChangePoint,
    ModelApply,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::KMeans,
        Algorithm::Agglomerative,
        Algorithm::Pca,
        Algorithm::TruncatedSvd,
        Algorithm::ChangePoint,
        Algorithm::ModelApply,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "KMeans",
            Algorithm::Agglomerative => "Agglomerative",
            Algorithm::Pca => "PCA",
            Algorithm::TruncatedSvd => "TruncatedSVD",
            Algorithm::ChangePoint => "ChangePoint",
            Algorithm::ModelApply => "ModelApply",
        }
    }

    /// Projections produce `n_components` columns.
    pub fn is_projection(self) -> bool {
        matches!(self, Algorithm::Pca | Algorithm::TruncatedSvd)
    }

    pub fn is_clustering(self) -> bool {
        matches!(self, Algorithm::KMeans | Algorithm::Agglomerative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAnalysis")]
pub struct AnalysisSpec {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "is_no_scaling")]
    pub scaling: Scaling,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, Json>,
}

fn is_no_scaling(s: &Scaling) -> bool {
    *s == Scaling::None
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    #[serde(default)]
    algorithm: Option<Algorithm>,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    features: Vec<String>,
    #[serde(default)]
    scaling: Scaling,
    #[serde(default)]
    parameters: BTreeMap<String, Json>,
}

impl TryFrom<RawAnalysis> for AnalysisSpec {
    type Error = String;

    fn try_from(r: RawAnalysis) -> Result<Self, String> {
        let algorithm = match (r.algorithm, &r.model) {
            (Some(a), _) => a,
            (None, Some(_)) => Algorithm::ModelApply,
            (None, None) => return Err("missing field `algorithm`".into()),
        };
        Ok(Self {
            algorithm,
            model: r.model,
            features: r.features,
            scaling: r.scaling,
            parameters: r.parameters,
        })
    }
}

fn default_module() -> String {
    "p6".into()
}

fn default_training() -> String {
    PIPELINE_DATA.into()
}

fn default_folds() -> usize {
    5
}

fn is_default_folds(n: &usize) -> bool {
    *n == 5
}

fn is_r2(m: &Metric) -> bool {
    *m == Metric::R2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_module")]
    pub module: String,
    pub method: Method,
    #[serde(default = "default_training", alias = "training-data")]
    pub training_data: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_grid: Option<BTreeMap<String, Vec<Json>>>,
    #[serde(default, skip_serializing_if = "is_r2")]
    pub scoring: Metric,
    #[serde(default = "default_folds", skip_serializing_if = "is_default_folds")]
    pub cv_folds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<String>,
}

fn one() -> usize {
    1
}

fn default_padding() -> f64 {
    10.0
}

fn default_width() -> f64 {
    960.0
}

fn default_height() -> f64 {
    640.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewLayout {
    #[serde(default = "one")]
    pub rows: usize,
    #[serde(default = "one")]
    pub cols: usize,
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

impl Default for ViewLayout {
    fn default() -> Self {
        Self {
            rows: 1,
            cols: 1,
            padding: default_padding(),
            width: default_width(),
            height: default_height(),
        }
    }
}

impl ViewLayout {
    pub fn slots(&self) -> usize {
        self.rows * self.cols
    }
}

/// A layout slot: a row-major index, or `[row, col]` which parsing converts
/// to an index when it is in bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Index(usize),
    Cell([usize; 2]),
}

impl Slot {
    pub fn index(self, layout: &ViewLayout) -> Option<usize> {
        match self {
            Slot::Index(i) => (i < layout.slots()).then_some(i),
            Slot::Cell([r, c]) => (r < layout.rows && c < layout.cols).then_some(r * layout.cols + c),
        }
    }

    pub fn cell(self, layout: &ViewLayout) -> Option<(usize, usize)> {
        self.index(layout).map(|i| (i / layout.cols, i % layout.cols))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Encoding {
    Field(String),
    Value { value: Json },
}

impl Encoding {
    pub fn field(&self) -> Option<&str> {
        match self {
            Encoding::Field(f) => Some(f),
            Encoding::Value { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Size,
    Width,
    Height,
    Color,
    Opacity,
    Text,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::X,
        Channel::Y,
        Channel::Size,
        Channel::Width,
        Channel::Height,
        Channel::Color,
        Channel::Opacity,
        Channel::Text,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Size => "size",
            Channel::Width => "width",
            Channel::Height => "height",
            Channel::Color => "color",
            Channel::Opacity => "opacity",
            Channel::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<Slot>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transform: Vec<TransformStep>,
    #[serde(alias = "mark_type", alias = "mark-type")]
    pub mark: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opacity: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<Encoding>,
    /// Ordered axes of a parallel-coordinates view.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<String>,
}

impl ViewSpec {
    pub fn encoding(&self, ch: Channel) -> Option<&Encoding> {
        match ch {
            Channel::X => self.x.as_ref(),
            Channel::Y => self.y.as_ref(),
            Channel::Size => self.size.as_ref(),
            Channel::Width => self.width.as_ref(),
            Channel::Height => self.height.as_ref(),
            Channel::Color => self.color.as_ref(),
            Channel::Opacity => self.opacity.as_ref(),
            Channel::Text => self.text.as_ref(),
        }
    }

    pub fn encodings(&self) -> impl Iterator<Item = (Channel, &Encoding)> {
        Channel::ALL.into_iter().filter_map(|c| self.encoding(c).map(|e| (c, e)))
    }

    /// Field names bound to channels or dims, in channel order.
    pub fn bound_fields(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self
            .encodings()
            .filter_map(|(_, e)| e.field())
            .chain(self.dims.iter().map(String::as_str))
        {
            if !out.iter().any(|o| o == f) {
                out.push(f.to_string());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FacetAxis {
    #[serde(rename = "$rows")]
    Rows,
    #[serde(rename = "$cols")]
    Cols,
}

impl FacetAxis {
    pub fn key(self) -> &'static str {
        match self {
            FacetAxis::Rows => "$rows",
            FacetAxis::Cols => "$cols",
        }
    }
}

fn default_top_k() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSelector {
    pub model: String,
    pub attribute: String,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub order: AttributeOrder,
}

/// Distinct values of a pipeline field (optionally filtered), ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSelector {
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    List(Vec<Json>),
    Model(ModelSelector),
    Field(FieldSelector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetSpec {
    pub axis: FacetAxis,
    pub select: Selector,
    /// The template's `id` prefixes the expanded ids and its `view` is the first slot.
    pub template: ViewSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VisEntry {
    View(ViewSpec),
    /// Views drawn on top of each other in one slot, sharing positional scales.
    Layers(Vec<ViewSpec>),
    Facet(FacetSpec),
}

impl VisEntry {
    pub fn id(&self) -> &str {
        match self {
            VisEntry::View(v) => v.id.as_deref().unwrap_or(""),
            VisEntry::Layers(l) => l.first().and_then(|v| v.id.as_deref()).unwrap_or(""),
            VisEntry::Facet(f) => f.template.id.as_deref().unwrap_or(""),
        }
    }

    pub fn layers(&self) -> &[ViewSpec] {
        match self {
            VisEntry::View(v) => std::slice::from_ref(v),
            VisEntry::Layers(l) => l,
            VisEntry::Facet(f) => std::slice::from_ref(&f.template),
        }
    }

    pub fn slot(&self) -> Option<Slot> {
        self.layers().first().and_then(|v| v.view)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Zoom,
    Pan,
    Click,
    Hover,
    Brush,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Filter,
    Highlight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInteraction")]
pub struct InteractionSpec {
    pub event: Event,
    pub source: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<String>,
    pub effect: Effect,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInteraction {
    event: Event,
    source: String,
    #[serde(default)]
    targets: Vec<String>,
    #[serde(default)]
    effect: Option<Effect>,
}

impl TryFrom<RawInteraction> for InteractionSpec {
    type Error = String;

    fn try_from(r: RawInteraction) -> Result<Self, String> {
        let effect = r.effect.unwrap_or(match r.event {
            Event::Brush => Effect::Filter,
            _ => Effect::Highlight,
        });
        Ok(Self {
            event: r.event,
            source: r.source,
            targets: r.targets,
            effect,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Trendline,
    Label,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSpec {
    pub view: String,
    pub kind: AnnotationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_ref: Option<DataRef>,
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "text_template")]
    pub text: Option<String>,
}

/// `{Field}` and `{Field|format}` placeholders of a label template, in order.
pub fn template_fields(text: &str) -> Vec<(String, Option<String>)> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(len) = rest[open..].find('}') else { break };
        let inner = &rest[open + 1..open + len];
        let (field, fmt) = match inner.split_once('|') {
            Some((f, fmt)) => (f.trim(), Some(fmt.trim().to_string())),
            None => (inner.trim(), None),
        };
        if !field.is_empty() {
            out.push((field.to_string(), fmt));
        }
        rest = &rest[open + len + 1..];
    }
    out
}
