//! Compiles concrete views plus computed frames into render-ready scenes.
//!
//! A scene carries mark rules, scales and a reference to the columns it
//! needs; the client joins the rules with the separately streamed data.

mod annotate;
mod compile;
mod interact;
mod plugin;
mod scale;

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value as Json;

use crate::spec::{Channel, ViewLayout};
use crate::transform::TransformError;

pub use annotate::{attach_annotations, render_template, LabelItem, SceneAnnotation};
pub use compile::{compile_layers, compile_view, prepare_layer, PreparedLayer, ROW_ID};
pub use interact::{compile_interactions, InteractionBinding, InteractionView, Role};
pub use plugin::{Plugin, PluginRegistry};
pub use scale::{palette, Extent, Scale, ScaleKind, TABLEAU10, TABLEAU20};

pub const SCENE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VisError {
    #[error("view `{view}`: unknown field `{field}`")]
    UnknownField { view: String, field: String },
    #[error("view `{view}`: {message}")]
    IncompatibleChannel { view: String, message: String },
    #[error("view `{view}`: mark `{mark}` requires channel `{channel}`")]
    MissingRequiredChannel { view: String, mark: String, channel: String },
    #[error("plugin `{0}` is already registered")]
    DuplicatePlugin(String),
    #[error("unknown view `{0}`")]
    UnknownView(String),
    #[error("slot {slot} is outside the {rows}x{cols} layout")]
    Overflow { slot: usize, rows: usize, cols: usize },
    #[error("view `{view}`: annotation data `{name}` does not resolve")]
    UnresolvedAnnotationRef { view: String, name: String },
    #[error("view `{view}`: {message}")]
    Annotation { view: String, message: String },
    #[error("view `{view}`: {source}")]
    Transform {
        view: String,
        #[source]
        source: TransformError,
    },
}

/// Built-in mark types and the channels each accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Circle,
    Rect,
    Line,
    PcpLine,
    Text,
}

impl Mark {
    pub fn parse(s: &str) -> Option<Mark> {
        Some(match s {
            "circle" | "point" => Mark::Circle,
            "rect" | "bar" => Mark::Rect,
            "line" => Mark::Line,
            "pcp-line" => Mark::PcpLine,
            "text" => Mark::Text,
            _ => return None,
        })
    }

    pub fn channels(self) -> &'static [Channel] {
        use Channel::*;
        match self {
            Mark::Circle => &[X, Y, Size, Color, Opacity],
            Mark::Rect => &[X, Y, Width, Height, Color, Opacity],
            Mark::Line => &[X, Y, Color, Opacity],
            Mark::PcpLine => &[Color, Opacity],
            Mark::Text => &[X, Y, Text, Color, Size, Opacity],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Viewport {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

/// Pixel rectangle of a row-major slot; cells are separated by `padding`.
pub fn viewport(layout: &ViewLayout, slot: usize) -> Result<Viewport, VisError> {
    if slot >= layout.slots() {
        return Err(VisError::Overflow {
            slot,
            rows: layout.rows,
            cols: layout.cols,
        });
    }
    let (r, c) = (slot / layout.cols, slot % layout.cols);
    let pad = layout.padding;
    let w = ((layout.width - pad * (layout.cols as f64 - 1.0)) / layout.cols as f64).max(0.0);
    let h = ((layout.height - pad * (layout.rows as f64 - 1.0)) / layout.rows as f64).max(0.0);
    Ok(Viewport {
        x: c as f64 * (w + pad),
        y: r as f64 * (h + pad),
        width: w,
        height: h,
    })
}

/// Positions scenes by their slots.
pub fn layout_views(layout: &ViewLayout, scenes: &mut [SceneSpec], slots: &[usize]) -> Result<(), VisError> {
    for (scene, &slot) in scenes.iter_mut().zip(slots) {
        scene.viewport = viewport(layout, slot)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelBinding {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimBinding {
    pub field: String,
    pub scale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataRef {
    /// Key under which the service serves the rows.
    pub view: String,
    pub columns: Vec<String>,
    pub row_count: usize,
}

/// One mark rule drawn in a scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerScene {
    pub mark_type: String,
    pub channels: BTreeMap<String, ChannelBinding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<DimBinding>,
    pub data_ref: DataRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plugin_payload: Option<Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneSpec {
    pub p6scene_version: u32,
    pub view_id: String,
    pub viewport: Viewport,
    pub mark_type: String,
    pub channels: BTreeMap<String, ChannelBinding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<DimBinding>,
    pub scales: Vec<Scale>,
    pub data_ref: DataRef,
    /// Further layers drawn over the first, sharing its positional scales.
    pub layers: Vec<LayerScene>,
    pub annotations: Vec<SceneAnnotation>,
    pub interactions: Vec<InteractionBinding>,
    pub plugin_payload: Option<Json>,
}

impl SceneSpec {
    pub fn scale(&self, id: &str) -> Option<&Scale> {
        self.scales.iter().find(|s| s.id == id)
    }

    /// The first layer followed by the rest.
    pub fn all_layers(&self) -> Vec<LayerScene> {
        let first = LayerScene {
            mark_type: self.mark_type.clone(),
            channels: self.channels.clone(),
            dims: self.dims.clone(),
            data_ref: self.data_ref.clone(),
            plugin_payload: self.plugin_payload.clone(),
        };
        std::iter::once(first).chain(self.layers.iter().cloned()).collect()
    }

    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("scene serializes")
    }
}
