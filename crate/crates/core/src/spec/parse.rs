//! JSON documents to normalized [`PipelineSpec`]s and back.
//!
//! Normalization fills defaults (view ids `view{i}`, interaction effects),
//! converts in-bounds `[row, col]` slots to row-major indices, and fixes the
//! key order on output, so `parse ∘ serialize` is the identity on parsed specs.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value as Json};

use super::types::*;
use super::SpecError;

const TOP_LEVEL: [&str; 8] = [
    "$schema",
    "data",
    "analyses",
    "models",
    "view_layout",
    "visualizations",
    "interactions",
    "annotations",
];

pub fn parse_pipeline(text: &str) -> Result<PipelineSpec, SpecError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| SpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    pipeline_from_value(&doc)
}

pub fn pipeline_from_value(doc: &Json) -> Result<PipelineSpec, SpecError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| SpecError::schema("", "document must be an object"))?;
    let mut fields: BTreeMap<&str, &Json> = BTreeMap::new();
    for (k, v) in obj {
        let key = match k.as_str() {
            "view-layout" | "viewLayout" => "view_layout",
            other => other,
        };
        if !TOP_LEVEL.contains(&key) {
            return Err(SpecError::schema(&format!("/{}", escape(k)), "unknown key"));
        }
        if fields.insert(key, v).is_some() {
            return Err(SpecError::schema(&format!("/{key}"), "given twice"));
        }
    }
    let data_doc = fields.get("data").ok_or_else(|| SpecError::schema("/data", "missing"))?;
    let data: DataSpec = typed("/data", data_doc)?;
    let schema = match fields.get("$schema") {
        None => None,
        Some(Json::String(s)) => Some(s.clone()),
        Some(_) => return Err(SpecError::schema("/$schema", "must be a string")),
    };
    let analyses: BTreeMap<String, AnalysisSpec> = optional(&fields, "analyses")?;
    let models: BTreeMap<String, ModelSpec> = optional(&fields, "models")?;
    let view_layout: ViewLayout = optional(&fields, "view_layout")?;
    let interactions: Vec<InteractionSpec> = optional(&fields, "interactions")?;
    let annotations: Vec<AnnotationSpec> = optional(&fields, "annotations")?;

    let mut visualizations = Vec::new();
    if let Some(v) = fields.get("visualizations") {
        let list = v
            .as_array()
            .ok_or_else(|| SpecError::schema("/visualizations", "must be an array"))?;
        for (i, entry) in list.iter().enumerate() {
            visualizations.push(vis_entry(&format!("/visualizations/{i}"), entry, i, &view_layout)?);
        }
    }

    Ok(PipelineSpec {
        schema,
        data,
        analyses,
        models,
        view_layout,
        visualizations,
        interactions,
        annotations,
    })
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn typed<T: DeserializeOwned>(path: &str, v: &Json) -> Result<T, SpecError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().iter().map(|seg| match seg {
            serde_path_to_error::Segment::Seq { index } => index.to_string(),
            serde_path_to_error::Segment::Map { key } => escape(key),
            serde_path_to_error::Segment::Enum { variant } => escape(variant),
            serde_path_to_error::Segment::Unknown => "?".into(),
        });
        let mut full = path.to_string();
        for seg in inner {
            full.push('/');
            full.push_str(&seg);
        }
        SpecError::schema(&full, &e.into_inner().to_string())
    })
}

fn optional<T: DeserializeOwned + Default>(fields: &BTreeMap<&str, &Json>, key: &str) -> Result<T, SpecError> {
    match fields.get(key) {
        None | Some(Json::Null) => Ok(T::default()),
        Some(v) => typed(&format!("/{key}"), v),
    }
}

fn normalize_view(mut v: ViewSpec, index: usize, layout: &ViewLayout) -> ViewSpec {
    if v.id.is_none() {
        v.id = Some(format!("view{index}"));
    }
    if v.view.is_none() {
        v.view = Some(Slot::Index(index));
    }
    if let Some(Slot::Cell(_)) = v.view {
        if let Some(i) = v.view.and_then(|s| s.index(layout)) {
            v.view = Some(Slot::Index(i));
        }
    }
    v
}

fn vis_entry(path: &str, v: &Json, index: usize, layout: &ViewLayout) -> Result<VisEntry, SpecError> {
    match v {
        Json::Array(items) => {
            if items.is_empty() {
                return Err(SpecError::schema(path, "a layer list needs at least one view"));
            }
            let mut layers = Vec::with_capacity(items.len());
            for (j, item) in items.iter().enumerate() {
                let view: ViewSpec = typed(&format!("{path}/{j}"), item)?;
                layers.push(if j == 0 {
                    normalize_view(view, index, layout)
                } else {
                    view
                });
            }
            Ok(VisEntry::Layers(layers))
        }
        Json::Object(obj) => {
            let axes: Vec<FacetAxis> = [FacetAxis::Rows, FacetAxis::Cols]
                .into_iter()
                .filter(|a| obj.contains_key(a.key()))
                .collect();
            match axes.as_slice() {
                [] => Ok(VisEntry::View(normalize_view(typed(path, v)?, index, layout))),
                [axis] => {
                    if obj.len() != 1 {
                        return Err(SpecError::schema(path, "a facet entry holds only `$rows` or `$cols`"));
                    }
                    let fpath = format!("{path}/{}", axis.key());
                    let body = obj[axis.key()]
                        .as_object()
                        .ok_or_else(|| SpecError::schema(&fpath, "must be an object"))?;
                    let sel = body
                        .get(SELECT)
                        .ok_or_else(|| SpecError::schema(&format!("{fpath}/$select"), "missing"))?;
                    let select = selector(&format!("{fpath}/$select"), sel)?;
                    let mut template_doc = body.clone();
                    template_doc.remove(SELECT);
                    let template: ViewSpec = typed(&fpath, &Json::Object(template_doc))?;
                    Ok(VisEntry::Facet(FacetSpec {
                        axis: *axis,
                        select,
                        template: normalize_view(template, index, layout),
                    }))
                }
                _ => Err(SpecError::schema(path, "use one facet axis per entry; nest entries to facet both")),
            }
        }
        _ => Err(SpecError::schema(path, "expected a view object, a layer array or a facet")),
    }
}

fn selector(path: &str, v: &Json) -> Result<Selector, SpecError> {
    match v {
        Json::Array(items) => Ok(Selector::List(items.clone())),
        Json::Object(o) if o.contains_key("model") => Ok(Selector::Model(typed(path, v)?)),
        Json::Object(o) if o.contains_key("field") => Ok(Selector::Field(typed(path, v)?)),
        _ => Err(SpecError::schema(
            path,
            "expected a value list, a {model, attribute} selector or a {field} selector",
        )),
    }
}

fn selector_json(s: &Selector) -> Json {
    match s {
        Selector::List(items) => Json::Array(items.clone()),
        Selector::Model(m) => serde_json::to_value(m).expect("selector serializes"),
        Selector::Field(f) => serde_json::to_value(f).expect("selector serializes"),
    }
}

pub fn vis_entry_json(entry: &VisEntry) -> Json {
    let view = |v: &ViewSpec| serde_json::to_value(v).expect("view serializes");
    match entry {
        VisEntry::View(v) => view(v),
        VisEntry::Layers(l) => Json::Array(l.iter().map(view).collect()),
        VisEntry::Facet(f) => {
            let mut body = Map::new();
            body.insert(SELECT.into(), selector_json(&f.select));
            if let Json::Object(t) = view(&f.template) {
                body.extend(t);
            }
            let mut outer = Map::new();
            outer.insert(f.axis.key().into(), Json::Object(body));
            Json::Object(outer)
        }
    }
}

pub fn pipeline_to_value(spec: &PipelineSpec) -> Json {
    let mut out = Map::new();
    if let Some(s) = &spec.schema {
        out.insert("$schema".into(), Json::from(s.clone()));
    }
    out.insert("data".into(), to(&spec.data));
    out.insert("analyses".into(), to(&spec.analyses));
    out.insert("models".into(), to(&spec.models));
    out.insert("view_layout".into(), to(&spec.view_layout));
    out.insert(
        "visualizations".into(),
        Json::Array(spec.visualizations.iter().map(vis_entry_json).collect()),
    );
    out.insert("interactions".into(), to(&spec.interactions));
    out.insert("annotations".into(), to(&spec.annotations));
    Json::Object(out)
}

pub fn serialize_pipeline(spec: &PipelineSpec) -> String {
    serde_json::to_string_pretty(&pipeline_to_value(spec)).expect("spec serializes")
}

fn to<T: serde::Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("spec block serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{
        "data": {"source": "baby.csv"},
        "analyses": {
            "Clusters": {"algorithm": "KMeans", "features": ["MotherAge", "BabyWeight"], "scaling": "standardize", "parameters": {"n_clusters": 5}},
            "PC": {"algorithm": "PCA", "parameters": {"n_components": 2}}
        },
        "view_layout": {"rows": 1, "cols": 2},
        "visualizations": [
            {"mark": "circle", "x": "PC.0", "y": "PC.1", "color": "Clusters"},
            {"view": [0, 1], "transform": [{"aggregate": {"groupby": ["Clusters"]}}], "mark": "bar", "x": "Clusters", "y": "$count"}
        ]
    }"#;

    #[test]
    fn parses_and_normalizes() {
        let spec = parse_pipeline(FIG2).unwrap();
        assert_eq!(spec.analyses.len(), 2);
        assert_eq!(spec.visualizations.len(), 2);
        assert_eq!(spec.visualizations[0].id(), "view0");
        assert_eq!(spec.visualizations[1].slot(), Some(Slot::Index(1)));
        assert_eq!(parse_pipeline(&serialize_pipeline(&spec)).unwrap(), spec);
    }

    #[test]
    fn block_order_is_irrelevant() {
        let doc: Json = serde_json::from_str(FIG2).unwrap();
        let mut reordered = Map::new();
        for key in ["visualizations", "view_layout", "analyses", "data"] {
            reordered.insert(key.into(), doc[key].clone());
        }
        assert_eq!(
            pipeline_from_value(&Json::Object(reordered)).unwrap(),
            parse_pipeline(FIG2).unwrap()
        );
    }

    #[test]
    fn error_paths() {
        assert_eq!(parse_pipeline("{}").unwrap_err().to_string(), "/data missing");
        assert!(matches!(parse_pipeline("{\"data\":"), Err(SpecError::Syntax { .. })));
        let e = parse_pipeline(r#"{"data": {"source": "a.csv", "selection": {"sample": 3}}}"#).unwrap_err();
        assert!(matches!(&e, SpecError::Schema { path, .. } if path == "/data/selection/sample"), "{e}");
        let e = parse_pipeline(r#"{"data": {"source": "a.csv"}, "analyses": {"A": {"algorithm": "KMeans", "features": "x"}}}"#)
            .unwrap_err();
        assert!(matches!(&e, SpecError::Schema { path, .. } if path == "/analyses/A/features"), "{e}");
        let e = parse_pipeline(r#"{"data": {"source": "a.csv"}, "visualisations": []}"#).unwrap_err();
        assert!(matches!(&e, SpecError::Schema { path, .. } if path == "/visualisations"));
    }

    #[test]
    fn facets_and_layers_round_trip() {
        let text = r#"{
            "data": {"source": "covid.csv"},
            "view_layout": {"rows": 2, "cols": 3},
            "visualizations": [
                [{"mark": "line", "x": "Date", "y": "Confirmed"}, {"mark": "circle", "x": "Date", "y": "Confirmed"}],
                {"$cols": {"$select": ["a", "b"], "view": [1, 0], "mark": "bar", "x": "Country", "y": "$select"}},
                {"$rows": {"$select": {"model": "lr", "attribute": "coefficients", "top_k": 2}, "mark": "bar", "x": "$select", "y": "BabyWeight"}}
            ],
            "interactions": [{"event": "brush", "source": "view0", "targets": ["view1"]}]
        }"#;
        let spec = parse_pipeline(text).unwrap();
        assert!(matches!(&spec.visualizations[0], VisEntry::Layers(l) if l.len() == 2));
        assert!(matches!(&spec.visualizations[1], VisEntry::Facet(f) if f.template.view == Some(Slot::Index(3))));
        assert_eq!(spec.interactions[0].effect, Effect::Filter);
        assert_eq!(parse_pipeline(&serialize_pipeline(&spec)).unwrap(), spec);
    }
}
