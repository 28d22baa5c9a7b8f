use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use crate::frame::{Column, DType, DataFrame};
use crate::spec::{Channel, Encoding, ViewSpec};
use crate::transform::{apply_steps, sort_top, SortOrder, TransformStep};

use super::scale::{band, linear, ordinal_color, Extent, Scale};
use super::{ChannelBinding, DataRef, DimBinding, LayerScene, Mark, PluginRegistry, SceneSpec, Viewport, VisError, SCENE_VERSION};

/// Source row index carried by views that do not aggregate, so linked views
/// can match rows.
pub const ROW_ID: &str = "$row";

/// A layer after its transforms ran, before scales are fixed.
#[derive(Debug, Clone)]
pub struct PreparedLayer {
    /// Key of this layer's rows in the data store.
    pub key: String,
    pub spec: ViewSpec,
    /// `None` when a plugin draws the layer.
    pub mark: Option<Mark>,
    pub data: DataFrame,
    pub extents: BTreeMap<Channel, Extent>,
    pub dim_extents: Vec<(String, Extent)>,
}

fn incompatible(view: &str, message: String) -> VisError {
    VisError::IncompatibleChannel {
        view: view.to_string(),
        message,
    }
}

fn check_channels(view: &ViewSpec, key: &str, mark: Mark) -> Result<(), VisError> {
    for (ch, _) in view.encodings() {
        if !mark.channels().contains(&ch) {
            return Err(incompatible(
                key,
                format!("channel `{}` is not supported by mark `{}`", ch.name(), view.mark),
            ));
        }
    }
    let missing = |channel: &str| VisError::MissingRequiredChannel {
        view: key.to_string(),
        mark: view.mark.clone(),
        channel: channel.to_string(),
    };
    match mark {
        Mark::PcpLine if view.dims.is_empty() => return Err(missing("dims")),
        Mark::PcpLine => {}
        _ if !view.dims.is_empty() => {
            return Err(incompatible(key, format!("`dims` only applies to pcp-line, not `{}`", view.mark)))
        }
        Mark::Text if view.text.is_none() => return Err(missing("text")),
        _ if view.x.is_none() && view.y.is_none() => return Err(missing("x")),
        _ => {}
    }
    Ok(())
}

fn extent_for(mark: Mark, ch: Channel, col: &Column, key: &str) -> Result<Option<Extent>, VisError> {
    let dtype = col.dtype();
    Ok(Some(match ch {
        Channel::X | Channel::Y => {
            let band_axis = dtype == DType::Categorical || (mark == Mark::Rect && ch == Channel::X && dtype == DType::Int64);
            if band_axis {
                Extent::categories(col)
            } else {
                Extent::numeric(col)
            }
        }
        Channel::Color if dtype != DType::Float64 => Extent::categories(col),
        Channel::Color => Extent::numeric(col),
        Channel::Text => return Ok(None),
        _ if dtype == DType::Categorical => {
            return Err(incompatible(
                key,
                format!("channel `{}` needs a numeric field, `{}` is categorical", ch.name(), col.name()),
            ))
        }
        _ => Extent::numeric(col),
    }))
}

/// Runs the view's transforms over `frame` and gathers channel extents.
pub fn prepare_layer(view: &ViewSpec, key: &str, frame: &DataFrame, plugins: &PluginRegistry) -> Result<PreparedLayer, VisError> {
    let mark = match Mark::parse(&view.mark) {
        Some(m) => {
            check_channels(view, key, m)?;
            Some(m)
        }
        None if plugins.for_mark(&view.mark).is_some() => None,
        None => {
            return Err(incompatible(
                key,
                format!(
                    "mark type `{}` is not built in and no plugin is registered for it (missing plugin `{}`)",
                    view.mark, view.mark
                ),
            ))
        }
    };

    let row_level = !view.transform.iter().any(|s| matches!(s, TransformStep::Aggregate(_)));
    let mut input = frame.clone();
    if row_level && input.column(ROW_ID).is_none() {
        let ids = Column::int64(ROW_ID, (0..frame.row_count() as i64).collect());
        input = input.append_column(ids).expect("row ids fit the frame");
    }
    let mut data = apply_steps(&input, &view.transform).map_err(|source| VisError::Transform {
        view: key.to_string(),
        source,
    })?;

    for field in view.bound_fields() {
        if data.column(&field).is_none() {
            return Err(VisError::UnknownField {
                view: key.to_string(),
                field,
            });
        }
    }

    let mut extents = BTreeMap::new();
    let mut dim_extents = Vec::new();
    if let Some(m) = mark {
        if m == Mark::Line {
            if let Some(x) = view.x.as_ref().and_then(Encoding::field) {
                data = sort_top(&data, x, SortOrder::Asc, None).map_err(|source| VisError::Transform {
                    view: key.to_string(),
                    source,
                })?;
            }
        }
        for (ch, enc) in view.encodings() {
            if let Some(field) = enc.field() {
                let col = data.column(field).expect("checked above");
                if let Some(e) = extent_for(m, ch, col, key)? {
                    extents.insert(ch, e);
                }
            }
        }
        for dim in &view.dims {
            let col = data.column(dim).expect("checked above");
            let e = if col.dtype() == DType::Categorical {
                Extent::categories(col)
            } else {
                Extent::numeric(col)
            };
            dim_extents.push((dim.clone(), e));
        }
    }

    Ok(PreparedLayer {
        key: key.to_string(),
        spec: view.clone(),
        mark,
        data,
        extents,
        dim_extents,
    })
}

fn positional(id: String, ch: Channel, extent: &Extent, vp: Viewport, include_zero: bool) -> Scale {
    let (lo, hi) = match ch {
        Channel::X => (vp.x, vp.x + vp.width),
        _ => (vp.y + vp.height, vp.y),
    };
    match extent {
        Extent::Categories(c) if ch == Channel::X => band(id, c.clone(), [lo, hi]),
        Extent::Categories(c) => band(id, c.clone(), [hi, lo]),
        Extent::Numeric(_) => linear(id, extent.linear_domain(include_zero), [json!(lo), json!(hi)]),
    }
}

fn other_scale(id: String, ch: Channel, mark: Mark, extent: &Extent, vp: Viewport) -> Scale {
    let numeric = |range: [Json; 2]| linear(id.clone(), extent.linear_domain(false), range);
    match (ch, extent) {
        (Channel::Color, Extent::Categories(c)) => ordinal_color(id, c.clone()),
        (Channel::Color, _) => numeric([json!("#deebf7"), json!("#08519c")]),
        (Channel::Size, _) if mark == Mark::Text => numeric([json!(8.0), json!(24.0)]),
        (Channel::Size, _) => numeric([json!(2.0), json!(12.0)]),
        (Channel::Opacity, _) => numeric([json!(0.2), json!(1.0)]),
        (Channel::Width, _) => linear(id, extent.linear_domain(true), [json!(0.0), json!(vp.width)]),
        (Channel::Height, _) => linear(id, extent.linear_domain(true), [json!(0.0), json!(vp.height)]),
        _ => numeric([json!(0.0), json!(1.0)]),
    }
}

/// Builds the scene for one slot. Layers share positional scales over the
/// union of their extents, further widened by `shared` (used for facet
/// siblings).
pub fn compile_layers(
    id: &str,
    layers: &[PreparedLayer],
    vp: Viewport,
    shared: &BTreeMap<Channel, Extent>,
    plugins: &PluginRegistry,
) -> Result<SceneSpec, VisError> {
    let mut scales: Vec<Scale> = Vec::new();
    let mut pos: BTreeMap<Channel, Extent> = BTreeMap::new();
    for layer in layers {
        for ch in [Channel::X, Channel::Y] {
            if let Some(e) = layer.extents.get(&ch) {
                let merged = pos.get(&ch).map_or_else(|| e.clone(), |p| p.union(e));
                pos.insert(ch, merged);
            }
        }
    }
    for (ch, e) in shared {
        if let Some(p) = pos.get_mut(ch) {
            *p = p.union(e);
        }
    }
    let bar = layers.iter().any(|l| l.mark == Some(Mark::Rect));
    for (ch, e) in &pos {
        let include_zero = *ch == Channel::Y && bar && matches!(e, Extent::Numeric(_));
        scales.push(positional(format!("{id}:{}", ch.name()), *ch, e, vp, include_zero));
    }

    let mut out = Vec::with_capacity(layers.len());
    for (j, layer) in layers.iter().enumerate() {
        let prefix = if j == 0 { id.to_string() } else { format!("{id}:{j}") };
        let mut channels = BTreeMap::new();
        let mut dims = Vec::new();
        let mut payload = None;
        match layer.mark {
            None => {
                let view_data = layer.data.clone();
                payload = Some(plugins.dispatch(&layer.spec, &layer.key, &view_data, vp)?);
                for (ch, enc) in layer.spec.encodings() {
                    channels.insert(ch.name().to_string(), binding(enc, None));
                }
            }
            Some(mark) => {
                for (ch, enc) in layer.spec.encodings() {
                    let scale = match (ch, layer.extents.get(&ch)) {
                        (Channel::X | Channel::Y, Some(_)) => Some(format!("{id}:{}", ch.name())),
                        (_, Some(e)) => {
                            let sid = format!("{prefix}:{}", ch.name());
                            scales.push(other_scale(sid.clone(), ch, mark, e, vp));
                            Some(sid)
                        }
                        (_, None) => None,
                    };
                    channels.insert(ch.name().to_string(), binding(enc, scale));
                }
                for (field, e) in &layer.dim_extents {
                    let sid = format!("{prefix}:dim:{field}");
                    scales.push(positional(sid.clone(), Channel::Y, e, vp, false));
                    dims.push(DimBinding {
                        field: field.clone(),
                        scale: sid,
                    });
                }
            }
        }
        let mut columns = layer.spec.bound_fields();
        if layer.data.column(super::ROW_ID).is_some() {
            columns.push(super::ROW_ID.to_string());
        }
        out.push(LayerScene {
            mark_type: layer.spec.mark.clone(),
            channels,
            dims,
            data_ref: DataRef {
                view: layer.key.clone(),
                columns,
                row_count: layer.data.row_count(),
            },
            plugin_payload: payload,
        });
    }

    let mut rest = out.into_iter();
    let first = rest.next().expect("a scene has at least one layer");
    Ok(SceneSpec {
        p6scene_version: SCENE_VERSION,
        view_id: id.to_string(),
        viewport: vp,
        mark_type: first.mark_type,
        channels: first.channels,
        dims: first.dims,
        scales,
        data_ref: first.data_ref,
        layers: rest.collect(),
        annotations: Vec::new(),
        interactions: Vec::new(),
        plugin_payload: first.plugin_payload,
    })
}

fn binding(enc: &Encoding, scale: Option<String>) -> ChannelBinding {
    match enc {
        Encoding::Field(f) => ChannelBinding {
            field: Some(f.clone()),
            value: None,
            scale,
        },
        Encoding::Value { value } => ChannelBinding {
            field: None,
            value: Some(value.clone()),
            scale: None,
        },
    }
}

/// Compiles a single-layer view; returns the scene and its post-transform rows.
pub fn compile_view(
    view: &ViewSpec,
    frame: &DataFrame,
    vp: Viewport,
    plugins: &PluginRegistry,
) -> Result<(SceneSpec, DataFrame), VisError> {
    let id = view.id.clone().unwrap_or_else(|| "view".into());
    let layer = prepare_layer(view, &id, frame, plugins)?;
    let scene = compile_layers(&id, std::slice::from_ref(&layer), vp, &BTreeMap::new(), plugins)?;
    Ok((scene, layer.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::ScaleKind;

    fn vp() -> Viewport {
        Viewport {
            x: 0.0,
            y: 0.0,
            width: 100.0,
            height: 50.0,
        }
    }

    fn view(doc: Json) -> ViewSpec {
        serde_json::from_value(doc).unwrap()
    }

    fn frame() -> DataFrame {
        DataFrame::new(vec![
            Column::float64("PC.0", vec![-1.0, 0.5, 2.0, 3.0]),
            Column::float64("PC.1", vec![4.0, 4.0, 6.0, 5.0]),
            Column::int64("Clusters", vec![0, 0, 1, 2]),
        ])
        .unwrap()
    }

    #[test]
    fn scatter_scales_follow_extents() {
        let v = view(json!({"id": "v", "mark": "circle", "x": "PC.0", "y": "PC.1", "color": "Clusters"}));
        let (scene, data) = compile_view(&v, &frame(), vp(), &PluginRegistry::default()).unwrap();
        let x = scene.scale("v:x").unwrap();
        assert_eq!((x.kind, x.domain.clone()), (ScaleKind::Linear, vec![json!(-1.0), json!(3.0)]));
        let y = scene.scale("v:y").unwrap();
        assert_eq!(y.range, vec![json!(50.0), json!(0.0)]);
        let c = scene.scale("v:color").unwrap();
        assert_eq!((c.kind, c.domain.len()), (ScaleKind::OrdinalColor, 3));
        assert_eq!(scene.data_ref.columns, vec!["PC.0", "PC.1", "Clusters", ROW_ID]);
        assert_eq!(data.row_count(), 4);
        for layer in scene.all_layers() {
            for b in layer.channels.values() {
                if let Some(f) = &b.field {
                    assert!(layer.data_ref.columns.contains(f));
                }
            }
        }
    }

    #[test]
    fn bar_chart_counts_on_a_band_axis() {
        let v = view(json!({"id": "b", "mark": "bar", "transform": [{"aggregate": {"groupby": ["Clusters"]}}],
                            "x": "Clusters", "y": "$count"}));
        let (scene, data) = compile_view(&v, &frame(), vp(), &PluginRegistry::default()).unwrap();
        let x = scene.scale("b:x").unwrap();
        assert_eq!((x.kind, x.domain.clone()), (ScaleKind::Band, vec![json!(0), json!(1), json!(2)]));
        assert_eq!(scene.scale("b:y").unwrap().domain, vec![json!(0.0), json!(2.0)]);
        assert!(!scene.data_ref.columns.contains(&ROW_ID.to_string()));
        assert_eq!(data.row_count(), 3);
    }

    #[test]
    fn empty_frames_get_unit_domains() {
        let v = view(json!({"id": "e", "mark": "circle", "transform": [{"match": "Clusters == 9"}], "x": "PC.0", "y": "PC.1"}));
        let (scene, data) = compile_view(&v, &frame(), vp(), &PluginRegistry::default()).unwrap();
        assert_eq!(data.row_count(), 0);
        assert_eq!(scene.data_ref.row_count, 0);
        assert_eq!(scene.scale("e:x").unwrap().domain, vec![json!(0.0), json!(1.0)]);
    }

    #[test]
    fn channel_and_mark_errors() {
        let plugins = PluginRegistry::default();
        let v = view(json!({"id": "l", "mark": "line", "x": "PC.0", "y": "PC.1", "height": "PC.1"}));
        assert!(matches!(compile_view(&v, &frame(), vp(), &plugins), Err(VisError::IncompatibleChannel { .. })));
        let v = view(json!({"id": "s", "mark": "sankey", "x": "PC.0"}));
        let err = compile_view(&v, &frame(), vp(), &plugins).unwrap_err();
        assert!(matches!(&err, VisError::IncompatibleChannel { message, .. } if message.contains("plugin `sankey`")), "{err}");
        let v = view(json!({"id": "u", "mark": "circle", "x": "nope"}));
        assert!(matches!(compile_view(&v, &frame(), vp(), &plugins), Err(VisError::UnknownField { .. })));
    }

    #[test]
    fn plugins_receive_post_transform_rows() {
        let v = view(json!({"id": "a", "mark": "area", "transform": [{"aggregate": {"groupby": ["Clusters"]}}],
                            "x": "Clusters", "y": "$count"}));
        let (scene, _) = compile_view(&v, &frame(), vp(), &PluginRegistry::default()).unwrap();
        let payload = scene.plugin_payload.unwrap();
        assert_eq!(payload["data"]["$count"], json!([2, 1, 1]));
        assert_eq!(payload["view"]["viewport"]["width"], json!(100.0));
        let v = view(json!({"id": "a", "mark": "area", "x": "PC.0"}));
        assert!(matches!(
            compile_view(&v, &frame(), vp(), &PluginRegistry::default()),
            Err(VisError::MissingRequiredChannel { .. })
        ));
    }

    #[test]
    fn layers_share_positional_scales() {
        let plugins = PluginRegistry::default();
        let f = frame();
        let a = prepare_layer(&view(json!({"mark": "line", "x": "PC.0", "y": "PC.1"})), "v", &f, &plugins).unwrap();
        let b = prepare_layer(
            &view(json!({"mark": "circle", "transform": [{"derive": {"z": "PC.1 * 2"}}], "x": "PC.0", "y": "z"})),
            "v:1",
            &f,
            &plugins,
        )
        .unwrap();
        let scene = compile_layers("v", &[a, b], vp(), &BTreeMap::new(), &plugins).unwrap();
        assert_eq!(scene.scale("v:y").unwrap().domain, vec![json!(4.0), json!(12.0)]);
        assert_eq!(scene.layers.len(), 1);
        assert_eq!(scene.layers[0].channels["y"].scale.as_deref(), Some("v:y"));
    }

    #[test]
    fn parallel_coordinates_get_one_axis_per_dim() {
        let v = view(json!({"id": "p", "mark": "pcp-line", "dims": ["PC.0", "PC.1", "Clusters"], "color": "Clusters"}));
        let (scene, _) = compile_view(&v, &frame(), vp(), &PluginRegistry::default()).unwrap();
        assert_eq!(scene.dims.len(), 3);
        assert!(scene.scale("p:dim:PC.1").is_some());
    }
}
