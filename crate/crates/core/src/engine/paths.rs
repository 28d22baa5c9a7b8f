//! Parameter paths: slash-delimited addresses into the normalized spec, and
//! the catalog of paths a client may edit.

use serde::Serialize;
use serde_json::{Map, Value as Json};

use crate::spec::{
    escape_pointer, pipeline_from_value, pipeline_to_value, ParamKind, PipelineSpec, Registry, VisEntry,
};

use super::EngineError;

/// An editable location with its type and current value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub path: String,
    /// Node that owns the location.
    pub node: String,
    #[serde(flatten)]
    pub kind: ParamKind,
    pub value: Json,
    pub default: Json,
}

fn entry(path: String, node: &str, kind: ParamKind, value: Option<&Json>, default: Json) -> CatalogEntry {
    CatalogEntry {
        path,
        node: node.to_string(),
        kind,
        value: value.cloned().unwrap_or_else(|| default.clone()),
        default,
    }
}

/// Editable parameters of `spec`: algorithm choices, parameters, features,
/// scaling, sampling and the encodings of plain views.
pub fn catalog(spec: &PipelineSpec, registry: &Registry) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    let sel = spec.data.selection.as_ref();
    out.push(entry(
        "/data/selection/sample_n".into(),
        "load",
        ParamKind::OptionalInt { min: 1 },
        sel.and_then(|s| s.sample_n).map(Json::from).as_ref(),
        Json::Null,
    ));
    out.push(entry(
        "/data/selection/seed".into(),
        "load",
        ParamKind::Int { min: 0, max: None },
        sel.map(|s| Json::from(s.seed)).as_ref(),
        Json::from(0),
    ));
    for (name, a) in &spec.analyses {
        let base = format!("/analyses/{}", escape_pointer(name));
        let alts: Vec<&str> = registry.alternatives(a.algorithm).into_iter().map(|x| x.name()).collect();
        out.push(entry(
            format!("{base}/algorithm"),
            name,
            ParamKind::choice(&alts),
            Some(&Json::from(a.algorithm.name())),
            Json::from(a.algorithm.name()),
        ));
        out.push(entry(
            format!("{base}/features"),
            name,
            ParamKind::FieldList,
            Some(&Json::from(a.features.clone())),
            Json::Array(Vec::new()),
        ));
        out.push(entry(
            format!("{base}/scaling"),
            name,
            ParamKind::choice(&["none", "normalize", "standardize"]),
            Some(&serde_json::to_value(a.scaling).expect("scaling serializes")),
            Json::from("none"),
        ));
        for def in &registry.algorithm(a.algorithm).params {
            out.push(entry(
                format!("{base}/parameters/{}", def.name),
                name,
                def.kind.clone(),
                a.parameters.get(def.name),
                def.default.clone(),
            ));
        }
    }
    for (name, m) in &spec.models {
        let base = format!("/models/{}", escape_pointer(name));
        for def in registry.method(m.method).params {
            out.push(entry(
                format!("{base}/parameters/{}", def.name),
                name,
                def.kind.clone(),
                m.parameters.get(def.name),
                def.default.clone(),
            ));
        }
        out.push(entry(
            format!("{base}/cv_folds"),
            name,
            ParamKind::Int { min: 2, max: None },
            Some(&Json::from(m.cv_folds)),
            Json::from(5),
        ));
    }
    for entry_spec in &spec.visualizations {
        let VisEntry::View(v) = entry_spec else { continue };
        let id = entry_spec.id();
        for (ch, enc) in v.encodings() {
            if let Some(f) = enc.field() {
                out.push(entry(
                    format!("/visualizations/{}/{}", escape_pointer(id), ch.name()),
                    id,
                    ParamKind::Field,
                    Some(&Json::from(f)),
                    Json::from(f),
                ));
            }
        }
    }
    out
}

fn unescape(seg: &str) -> String {
    seg.replace("~1", "/").replace("~0", "~")
}

fn kind_of(v: &Json) -> &'static str {
    match v {
        Json::Null => "null",
        Json::Bool(_) => "boolean",
        Json::Number(_) => "number",
        Json::String(_) => "string",
        Json::Array(_) => "array",
        Json::Object(_) => "object",
    }
}

/// Rewrites `/visualizations/<id>/...` to the entry's list index.
pub(crate) fn canonical(spec: &PipelineSpec, path: &str) -> Result<Vec<String>, EngineError> {
    let unknown = || EngineError::UnknownPath(path.to_string());
    let rest = path.strip_prefix('/').ok_or_else(unknown)?;
    let mut segs: Vec<String> = rest.split('/').map(unescape).collect();
    if segs.iter().any(String::is_empty) {
        return Err(unknown());
    }
    if segs[0] == "visualizations" && segs.len() > 1 && segs[1].parse::<usize>().is_err() {
        let i = spec
            .visualizations
            .iter()
            .position(|e| e.id() == segs[1])
            .ok_or_else(unknown)?;
        segs[1] = i.to_string();
    }
    Ok(segs)
}

fn pointer(segs: &[String]) -> String {
    segs.iter().map(|s| format!("/{}", escape_pointer(s))).collect()
}

/// The spec with one leaf replaced. The path must exist in the normalized
/// spec or be listed in the catalog; the value must keep the leaf's JSON type
/// and pass the catalog's check. `null` on an optional parameter removes it.
pub(crate) fn apply_edit(
    spec: &PipelineSpec,
    path: &str,
    value: &Json,
    registry: &Registry,
) -> Result<PipelineSpec, EngineError> {
    let unknown = || EngineError::UnknownPath(path.to_string());
    let type_error = |message: String| EngineError::TypeError {
        path: path.to_string(),
        message,
    };
    let segs = canonical(spec, path)?;
    let mut named = segs.clone();
    if named[0] == "visualizations" && named.len() > 1 {
        named[1] = spec.visualizations[named[1].parse::<usize>().map_err(|_| unknown())?].id().to_string();
    }
    let listed = catalog(spec, registry).into_iter().find(|e| e.path == pointer(&named));

    let mut doc = pipeline_to_value(spec);
    let (leaf, parents) = segs.split_last().expect("non-empty path");
    let mut cur = &mut doc;
    for seg in parents {
        cur = match cur {
            Json::Object(map) => {
                if !map.contains_key(seg) && listed.is_none() {
                    return Err(unknown());
                }
                map.entry(seg.clone()).or_insert_with(|| Json::Object(Map::new()))
            }
            Json::Array(items) => {
                let i: usize = seg.parse().map_err(|_| unknown())?;
                items.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    let slot: &mut Json = match cur {
        Json::Object(map) => {
            if !map.contains_key(leaf) && listed.is_none() {
                return Err(unknown());
            }
            if value.is_null() && listed.as_ref().is_some_and(|e| e.default.is_null()) {
                map.remove(leaf);
                return reparse(&doc, type_error);
            }
            map.entry(leaf.clone()).or_insert(Json::Null)
        }
        Json::Array(items) => {
            let i: usize = leaf.parse().map_err(|_| unknown())?;
            items.get_mut(i).ok_or_else(unknown)?
        }
        _ => return Err(unknown()),
    };

    if let Some(e) = &listed {
        let scaling_object = e.path.ends_with("/scaling") && value.is_object();
        if !scaling_object {
            e.kind.check(value).map_err(type_error)?;
        }
    }
    let encoding = segs[0] == "visualizations";
    if !slot.is_null() && !value.is_null() && kind_of(slot) != kind_of(value) {
        let swappable = encoding && matches!((kind_of(slot), kind_of(value)), ("string", "object") | ("object", "string"));
        if !swappable {
            return Err(type_error(format!("expected a {}, got {value}", kind_of(slot))));
        }
    }
    *slot = value.clone();
    reparse(&doc, type_error)
}

fn reparse(doc: &Json, type_error: impl Fn(String) -> EngineError) -> Result<PipelineSpec, EngineError> {
    pipeline_from_value(doc).map_err(|e| type_error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::spec::parse_pipeline;

    fn spec() -> PipelineSpec {
        parse_pipeline(
            r#"{"data": {"source": "x.csv"},
                "analyses": {"C": {"algorithm": "KMeans", "features": ["a", "b"], "parameters": {"n_clusters": 3}},
                             "A": {"algorithm": "Agglomerative", "features": ["a"]}},
                "visualizations": [{"id": "sc", "mark": "circle", "x": "a", "y": "b", "color": "C"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn edits_leaves() {
        let r = Registry::standard();
        let s = apply_edit(&spec(), "/analyses/C/parameters/n_clusters", &json!(5), &r).unwrap();
        assert_eq!(s.analyses["C"].parameters["n_clusters"], json!(5));
        let s = apply_edit(&spec(), "/analyses/C/parameters/max_iter", &json!(10), &r).unwrap();
        assert_eq!(s.analyses["C"].parameters["max_iter"], json!(10));
        let s = apply_edit(&spec(), "/visualizations/sc/color", &json!("a"), &r).unwrap();
        assert_eq!(s.visualizations[0].layers()[0].color, Some(crate::spec::Encoding::Field("a".into())));
        let s = apply_edit(&spec(), "/data/selection/sample_n", &json!(2), &r).unwrap();
        assert_eq!(s.data.selection.unwrap().sample_n, Some(2));
        let s = apply_edit(&spec(), "/analyses/A/parameters/distance_threshold", &json!(1.5), &r).unwrap();
        let s = apply_edit(&s, "/analyses/A/parameters/distance_threshold", &Json::Null, &r).unwrap();
        assert!(s.analyses["A"].parameters.is_empty());
    }

    #[test]
    fn rejects_unknown_paths_and_bad_types() {
        let r = Registry::standard();
        for p in ["/analyses/Nope/parameters/n_clusters", "/visualizations/ghost/x", "analyses", "/analyses/C/bogus"] {
            assert!(matches!(apply_edit(&spec(), p, &json!(1), &r), Err(EngineError::UnknownPath(_))), "{p}");
        }
        assert!(matches!(
            apply_edit(&spec(), "/analyses/C/parameters/n_clusters", &json!("five"), &r),
            Err(EngineError::TypeError { .. })
        ));
        assert!(matches!(
            apply_edit(&spec(), "/analyses/C/algorithm", &json!("ChangePoint"), &r),
            Err(EngineError::TypeError { .. })
        ));
    }
}
