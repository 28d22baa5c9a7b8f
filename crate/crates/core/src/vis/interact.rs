use std::collections::BTreeMap;

use serde::Serialize;

use crate::frame::DataFrame;
use crate::spec::{Effect, Event, InteractionSpec, ViewSpec};

use super::{ScaleKind, SceneSpec, VisError, ROW_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

/// One end of a linked interaction, attached to the scene it lives in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionBinding {
    pub event: Event,
    pub role: Role,
    pub effect: Effect,
    /// Views on the other end.
    pub peers: Vec<String>,
    /// Fields compared between source and targets: brushed ranges for
    /// `brush`, the matching key for `click` and `hover`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
    /// Set when targets lack the brushed fields: the source resolves the brush
    /// to rows and targets keep rows whose key is among them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// Scales mutated by `zoom` and `pan`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scales: Vec<String>,
}

/// What the compiler knows about each compiled view.
pub struct InteractionView<'a> {
    pub spec: &'a ViewSpec,
    pub data: &'a DataFrame,
}

fn positional_fields(v: &ViewSpec, data: &DataFrame) -> Vec<String> {
    if !v.dims.is_empty() {
        return v.dims.clone();
    }
    [v.x.as_ref(), v.y.as_ref()]
        .into_iter()
        .flatten()
        .filter_map(|e| e.field())
        .filter(|f| data.column(f).is_some_and(|c| c.dtype().is_numeric()))
        .map(str::to_string)
        .collect()
}

/// Wires interactions into scenes. Every field an interaction compares must
/// exist in its source and in each target; the fields are added to the data
/// each scene ships.
pub fn compile_interactions(
    scenes: &mut BTreeMap<String, SceneSpec>,
    views: &BTreeMap<String, InteractionView<'_>>,
    interactions: &[InteractionSpec],
) -> Result<(), VisError> {
    for it in interactions {
        let source = views
            .get(&it.source)
            .ok_or_else(|| VisError::UnknownView(it.source.clone()))?;
        for t in &it.targets {
            if !views.contains_key(t) || !scenes.contains_key(t) {
                return Err(VisError::UnknownView(t.clone()));
            }
        }
        if !scenes.contains_key(&it.source) {
            return Err(VisError::UnknownView(it.source.clone()));
        }

        let fields: Vec<String> = match it.event {
            Event::Zoom | Event::Pan => Vec::new(),
            Event::Brush => {
                let f = positional_fields(source.spec, source.data);
                if f.is_empty() {
                    return Err(VisError::IncompatibleChannel {
                        view: it.source.clone(),
                        message: "brushing needs a numeric positional field".into(),
                    });
                }
                f
            }
            Event::Click | Event::Hover => {
                let has_row = |v: &InteractionView<'_>| v.data.column(ROW_ID).is_some();
                if has_row(source) && it.targets.iter().all(|t| has_row(&views[t])) {
                    vec![ROW_ID.to_string()]
                } else {
                    let key = source.spec.x.as_ref().and_then(|e| e.field()).ok_or_else(|| VisError::IncompatibleChannel {
                        view: it.source.clone(),
                        message: "selection needs row ids or a field on x".into(),
                    })?;
                    vec![key.to_string()]
                }
            }
        };
        let missing = it
            .targets
            .iter()
            .find_map(|t| fields.iter().find(|f| views[t].data.column(f).is_none()).map(|f| (t, f)));
        let has_row = |v: &str| views[v].data.column(ROW_ID).is_some();
        let key = match missing {
            None => None,
            Some(_) if it.event == Event::Brush && has_row(&it.source) && it.targets.iter().all(|t| has_row(t)) => {
                Some(ROW_ID.to_string())
            }
            Some((t, f)) => {
                return Err(VisError::UnknownField {
                    view: t.clone(),
                    field: f.clone(),
                })
            }
        };

        let linear_positional = |scene: &SceneSpec| -> Vec<String> {
            ["x", "y"]
                .iter()
                .filter_map(|c| scene.channels.get(*c).and_then(|b| b.scale.clone()))
                .filter(|id| scene.scale(id).is_some_and(|s| s.kind == ScaleKind::Linear))
                .collect()
        };
        let navigation = matches!(it.event, Event::Zoom | Event::Pan);
        let mut bind = |view: &str, role: Role, peers: Vec<String>| {
            let scene = scenes.get_mut(view).expect("checked above");
            let scales = if navigation { linear_positional(scene) } else { Vec::new() };
            let shipped: Vec<&String> = match (&key, role) {
                (Some(k), Role::Target) => vec![k],
                (Some(k), Role::Source) => fields.iter().chain([k]).collect(),
                (None, _) => fields.iter().collect(),
            };
            for f in shipped {
                if !scene.data_ref.columns.contains(f) {
                    scene.data_ref.columns.push(f.clone());
                }
            }
            scene.interactions.push(InteractionBinding {
                event: it.event,
                role,
                effect: it.effect,
                peers,
                fields: fields.clone(),
                key: key.clone(),
                scales,
            });
        };
        bind(&it.source, Role::Source, it.targets.clone());
        for t in &it.targets {
            bind(t, Role::Target, vec![it.source.clone()]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::frame::Column;
    use crate::vis::{compile_view, PluginRegistry, Viewport};

    fn vp() -> Viewport {
        Viewport {
            x: 0.0,
            y: 0.0,
            width: 10.0,
            height: 10.0,
        }
    }

    fn build(specs: &[Json]) -> (Vec<ViewSpec>, Vec<DataFrame>, BTreeMap<String, SceneSpec>) {
        let frame = DataFrame::new(vec![
            Column::float64("a", vec![1.0, 2.0, 3.0]),
            Column::float64("b", vec![3.0, 1.0, 2.0]),
            Column::int64("k", vec![0, 1, 1]),
        ])
        .unwrap();
        let mut views = Vec::new();
        let mut data = Vec::new();
        let mut scenes = BTreeMap::new();
        for s in specs {
            let v: ViewSpec = serde_json::from_value(s.clone()).unwrap();
            let (scene, d) = compile_view(&v, &frame, vp(), &PluginRegistry::default()).unwrap();
            scenes.insert(v.id.clone().unwrap(), scene);
            views.push(v);
            data.push(d);
        }
        (views, data, scenes)
    }

    use serde_json::Value as Json;

    fn index<'a>(views: &'a [ViewSpec], data: &'a [DataFrame]) -> BTreeMap<String, InteractionView<'a>> {
        views
            .iter()
            .zip(data)
            .map(|(spec, data)| (spec.id.clone().unwrap(), InteractionView { spec, data }))
            .collect()
    }

    fn it(doc: Json) -> InteractionSpec {
        serde_json::from_value(doc).unwrap()
    }

    #[test]
    fn brush_links_by_field_ranges() {
        let (views, data, mut scenes) = build(&[
            json!({"id": "s", "mark": "circle", "x": "a", "y": "b"}),
            json!({"id": "t", "mark": "circle", "x": "b", "y": "a"}),
        ]);
        let i = it(json!({"event": "brush", "source": "s", "targets": ["t"]}));
        compile_interactions(&mut scenes, &index(&views, &data), &[i]).unwrap();
        let t = &scenes["t"].interactions[0];
        assert_eq!((t.role, t.effect), (Role::Target, Effect::Filter));
        assert_eq!(t.fields, vec!["a", "b"]);
    }

    #[test]
    fn click_on_aggregates_matches_by_x_field() {
        let (views, data, mut scenes) = build(&[
            json!({"id": "bars", "mark": "bar", "transform": [{"aggregate": {"groupby": ["k"]}}], "x": "k", "y": "$count"}),
            json!({"id": "pts", "mark": "circle", "x": "a", "y": "b"}),
        ]);
        let i = it(json!({"event": "click", "source": "bars", "targets": ["pts"]}));
        compile_interactions(&mut scenes, &index(&views, &data), &[i]).unwrap();
        assert_eq!(scenes["pts"].interactions[0].fields, vec!["k"]);
        assert!(scenes["pts"].data_ref.columns.contains(&"k".to_string()));
        assert_eq!(scenes["pts"].interactions[0].effect, Effect::Highlight);
    }

    #[test]
    fn missing_fields_and_views_are_errors() {
        let (views, data, mut scenes) = build(&[
            json!({"id": "s", "mark": "circle", "x": "a", "y": "b"}),
            json!({"id": "agg", "mark": "bar", "transform": [{"aggregate": {"groupby": ["k"]}}], "x": "k", "y": "$count"}),
        ]);
        let idx = index(&views, &data);
        let i = it(json!({"event": "brush", "source": "s", "targets": ["agg"]}));
        assert!(matches!(compile_interactions(&mut scenes, &idx, &[i]), Err(VisError::UnknownField { .. })));
        let i = it(json!({"event": "hover", "source": "s", "targets": ["ghost"]}));
        assert_eq!(compile_interactions(&mut scenes, &idx, &[i]), Err(VisError::UnknownView("ghost".into())));
    }

    #[test]
    fn brush_falls_back_to_row_ids() {
        let (views, mut data, mut scenes) = build(&[
            json!({"id": "s", "mark": "circle", "x": "a", "y": "b"}),
            json!({"id": "t", "mark": "bar", "x": "k", "y": "k"}),
        ]);
        data[1] = data[1].project(&["k", ROW_ID]).unwrap();
        let i = it(json!({"event": "brush", "source": "s", "targets": ["t"]}));
        compile_interactions(&mut scenes, &index(&views, &data), &[i]).unwrap();
        let t = &scenes["t"].interactions[0];
        assert_eq!((t.fields.clone(), t.key.as_deref()), (vec!["a".to_string(), "b".to_string()], Some(ROW_ID)));
        assert!(scenes["t"].data_ref.columns.contains(&ROW_ID.to_string()));
        assert!(!scenes["t"].data_ref.columns.contains(&"a".to_string()));
        assert!(scenes["s"].data_ref.columns.contains(&ROW_ID.to_string()));
    }

    #[test]
    fn zoom_names_linear_scales() {
        let (views, data, mut scenes) = build(&[json!({"id": "s", "mark": "circle", "x": "a", "y": "b"})]);
        let i = it(json!({"event": "zoom", "source": "s"}));
        compile_interactions(&mut scenes, &index(&views, &data), &[i]).unwrap();
        assert_eq!(scenes["s"].interactions[0].scales, vec!["s:x", "s:y"]);
    }
}
