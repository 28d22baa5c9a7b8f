//! Seeded generators for property tests, the acceptance suite and benches.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde_json::{json, Map, Value as Json};

use crate::engine::CatalogEntry;
use crate::frame::{Bitmap, Column, ColumnData, DataFrame};
use crate::spec::ParamKind;

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty")
}

fn float_value(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => f64::from_bits(rng.random()),
        1 => *pick(rng, &[0.0, -0.0, f64::INFINITY, f64::NEG_INFINITY, f64::NAN, f64::MIN_POSITIVE / 4.0]),
        _ => rng.random_range(-1e6..1e6),
    }
}

fn text(rng: &mut impl Rng) -> String {
    const ALPHABET: &[&str] = &["a", "b", "Z", "0", " ", "é", "日", "🙂", ",", "\"", "\n"];
    let len = rng.random_range(0..8);
    (0..len).map(|_| *pick(rng, ALPHABET)).collect()
}

/// A frame of 1 to 6 columns over every dtype, with random validity masks,
/// special floats and arbitrary float bit patterns.
pub fn random_frame(rng: &mut impl Rng, max_rows: usize) -> DataFrame {
    let rows = match rng.random_range(0..6) {
        0 => 0,
        1 => rng.random_range(0..=max_rows.min(3)),
        _ => rng.random_range(0..=max_rows),
    };
    let n_cols = rng.random_range(1..=6);
    let columns = (0..n_cols)
        .map(|j| {
            let name = format!("c{j}{}", text(rng));
            let data = match rng.random_range(0..3) {
                0 => ColumnData::Float64((0..rows).map(|_| float_value(rng)).collect()),
                1 => ColumnData::Int64((0..rows).map(|_| rng.random()).collect()),
                _ => {
                    let mut dictionary: Vec<String> = (0..rng.random_range(1..6)).map(|_| text(rng)).collect();
                    dictionary.sort();
                    dictionary.dedup();
                    let n = dictionary.len() as u32;
                    ColumnData::Categorical {
                        codes: (0..rows).map(|_| rng.random_range(0..n)).collect(),
                        dictionary,
                    }
                }
            };
            let validity = match rng.random_range(0..4) {
                0 => None,
                1 => Some(Bitmap::all_set(rows)),
                _ => {
                    let p = *pick(rng, &[0.0, 0.1, 0.5, 1.0]);
                    let present: Vec<bool> = (0..rows).map(|_| !rng.random_bool(p)).collect();
                    Some(Bitmap::from_bools(&present))
                }
            };
            Column::new(name, data, validity).expect("codes index the dictionary")
        })
        .collect();
    DataFrame::new(columns).expect("unique names, equal lengths")
}

const FIELDS: &[&str] = &["a", "b", "c", "k", "g", "Date", "BabyWeight"];

fn field(rng: &mut impl Rng) -> Json {
    Json::from(*pick(rng, FIELDS))
}

fn fields(rng: &mut impl Rng, max: usize) -> Json {
    let mut f: Vec<&str> = FIELDS.to_vec();
    f.shuffle(rng);
    f.truncate(rng.random_range(1..=max));
    json!(f)
}

fn maybe<R: Rng>(rng: &mut R, map: &mut Map<String, Json>, key: &str, value: impl FnOnce(&mut R) -> Json) {
    if rng.random_bool(0.5) {
        let v = value(rng);
        map.insert(key.into(), v);
    }
}

fn transform_steps(rng: &mut impl Rng) -> Json {
    let steps: Vec<Json> = (0..rng.random_range(0..3))
        .map(|_| match rng.random_range(0..5) {
            0 => json!({"match": pick(rng, &["a > 3", "g == \"x\"", "k in [1, 2]", "(b <= -1.5 or c != 0) and k not in [3]"])}),
            1 => json!({"derive": {"z": pick(rng, &["a * 2", "log(b) + c", "(a - b) / 3"])}}),
            2 => {
                let mut agg = Map::new();
                agg.insert("groupby".into(), json!(["k"]));
                maybe(rng, &mut agg, "aggregations", |_| json!([{"op": "sum", "field": "a"}, {"op": "count"}]));
                maybe(rng, &mut agg, "bin", |rng| json!({"field": "b", "bin_count": rng.random_range(1..20)}));
                json!({"aggregate": agg})
            }
            3 => json!({"sort": {"by": field(rng), "order": pick(rng, &["asc", "desc"]), "limit": rng.random_range(1..50)}}),
            _ => json!({"top": {"by": field(rng), "limit": rng.random_range(1..10)}}),
        })
        .collect();
    Json::Array(steps)
}

fn encoding(rng: &mut impl Rng) -> Json {
    if rng.random_bool(0.8) {
        field(rng)
    } else {
        json!({"value": pick(rng, &[json!(3), json!(0.5), json!("#ff0000")])})
    }
}

fn view(rng: &mut impl Rng, id: Option<String>, slots: usize) -> Map<String, Json> {
    let mut v = Map::new();
    if let Some(id) = id {
        v.insert("id".into(), json!(id));
    }
    maybe(rng, &mut v, "view", |rng| json!(rng.random_range(0..slots)));
    if rng.random_bool(0.3) {
        v.insert("transform".into(), transform_steps(rng));
    }
    let mark = *pick(rng, &["circle", "line", "bar", "area", "rect", "text", "pcp-line"]);
    v.insert("mark".into(), json!(mark));
    for ch in ["x", "y", "size", "width", "height", "color", "opacity", "text"] {
        if rng.random_bool(0.4) {
            v.insert(ch.into(), encoding(rng));
        }
    }
    if mark == "pcp-line" {
        v.insert("dims".into(), fields(rng, 4));
    }
    v
}

fn selector(rng: &mut impl Rng) -> Json {
    match rng.random_range(0..3) {
        0 => {
            let all = [json!("a"), json!("b"), json!(3), json!(2.5)];
            Json::Array(all[..rng.random_range(1..=4)].to_vec())
        }
        1 => json!({"model": "m0", "attribute": "coefficients", "top_k": rng.random_range(1..4), "order": pick(rng, &["desc_abs", "asc"])}),
        _ => json!({"field": "Date", "filter": "k == 1", "limit": rng.random_range(1..5)}),
    }
}

/// A random pipeline document that parses, though it need not validate.
/// Exercises every block, the entry shapes and most optional keys.
pub fn random_pipeline_doc(rng: &mut impl Rng) -> Json {
    let mut doc = Map::new();
    if rng.random_bool(0.2) {
        doc.insert("$schema".into(), json!("https://example.org/p6/pipeline.schema.json"));
    }

    let mut data = Map::new();
    data.insert("source".into(), json!(pick(rng, &["baby.csv", "data/x.json", "https://example.org/t.csv", "$upstream"])));
    maybe(rng, &mut data, "format", |rng| json!(pick(rng, &["csv", "json"])));
    if rng.random_bool(0.5) {
        let mut sel = Map::new();
        maybe(rng, &mut sel, "columns", |rng| fields(rng, 4));
        maybe(rng, &mut sel, "sample_n", |rng| json!(rng.random_range(1..1000)));
        sel.insert("seed".into(), json!(rng.random_range(0..100u64)));
        data.insert("selection".into(), Json::Object(sel));
    }
    if rng.random_bool(0.5) {
        let mut pre = Map::new();
        maybe(rng, &mut pre, "dropna", |rng| pick(rng, &[json!(true), json!("used")]).clone());
        maybe(rng, &mut pre, "encodings", |rng| json!({"g": pick(rng, &["onehot", "numerical"])}));
        data.insert("preprocessing".into(), Json::Object(pre));
    }
    if rng.random_bool(0.3) {
        data.insert("transform".into(), transform_steps(rng));
    }
    doc.insert("data".into(), Json::Object(data));

    let mut models = Map::new();
    for i in 0..rng.random_range(0..3) {
        let mut m = Map::new();
        let method = *pick(rng, &["LinearRegression", "RandomForestRegressor"]);
        m.insert("method".into(), json!(method));
        maybe(rng, &mut m, "training_data", |rng| json!(pick(rng, &["$data", "train.csv"])));
        m.insert("target".into(), json!("BabyWeight"));
        maybe(rng, &mut m, "features", |_| json!(["a", "b"]));
        if method == "RandomForestRegressor" {
            maybe(rng, &mut m, "parameters", |rng| json!({"n_estimators": rng.random_range(1..50), "max_depth": null}));
            maybe(rng, &mut m, "param_grid", |_| json!({"max_depth": [2, 4, null]}));
        } else {
            maybe(rng, &mut m, "parameters", |rng| json!({"fit_intercept": rng.random_bool(0.5)}));
        }
        maybe(rng, &mut m, "scoring", |rng| json!(pick(rng, &["r2", "accuracy", "f1"])));
        maybe(rng, &mut m, "cv_folds", |rng| json!(rng.random_range(2..8)));
        maybe(rng, &mut m, "save", |_| json!(format!("m{i}.json")));
        models.insert(format!("m{i}"), Json::Object(m));
    }
    let n_models = models.len();
    if n_models > 0 || rng.random_bool(0.5) {
        doc.insert("models".into(), Json::Object(models));
    }

    let mut analyses = Map::new();
    for i in 0..rng.random_range(0..4) {
        let mut a = Map::new();
        let algorithm = *pick(rng, &["KMeans", "Agglomerative", "PCA", "TruncatedSVD", "ChangePoint", "ModelApply"]);
        if algorithm == "ModelApply" && n_models > 0 {
            a.insert("model".into(), json!("m0"));
            maybe(rng, &mut a, "algorithm", |_| json!(algorithm));
        } else {
            a.insert("algorithm".into(), json!(if algorithm == "ModelApply" { "KMeans" } else { algorithm }));
        }
        maybe(rng, &mut a, "features", |rng| fields(rng, 3));
        maybe(rng, &mut a, "scaling", |rng| pick(rng, &[json!("normalize"), json!("standardize"), json!({"minmax": [0.0, 2.5]})]).clone());
        let params = match algorithm {
            "KMeans" => json!({"n_clusters": rng.random_range(1..6), "seed": rng.random_range(0..9), "tol": 1e-6}),
            "Agglomerative" => json!({"linkage": pick(rng, &["ward", "single"]), "distance_threshold": rng.random_range(0.1..5.0)}),
            "PCA" | "TruncatedSVD" => json!({"n_components": rng.random_range(1..4)}),
            "ChangePoint" => json!({"n_bkps": rng.random_range(1..4), "index": "Date"}),
            _ => json!({}),
        };
        maybe(rng, &mut a, "parameters", |_| params);
        analyses.insert(format!("A{i}"), Json::Object(a));
    }
    if !analyses.is_empty() || rng.random_bool(0.5) {
        doc.insert("analyses".into(), Json::Object(analyses));
    }

    let (rows, cols) = (rng.random_range(1..4), rng.random_range(1..4));
    let slots = rows * cols;
    let mut layout = Map::new();
    layout.insert("rows".into(), json!(rows));
    layout.insert("cols".into(), json!(cols));
    maybe(rng, &mut layout, "padding", |rng| json!(rng.random_range(0.0..20.0)));
    maybe(rng, &mut layout, "width", |rng| json!(rng.random_range(100..2000)));
    doc.insert("view_layout".into(), Json::Object(layout));

    let mut ids = Vec::new();
    let vis: Vec<Json> = (0..rng.random_range(0..4))
        .map(|i| {
            let id = rng.random_bool(0.5).then(|| format!("v{i}"));
            ids.push(id.clone().unwrap_or(format!("view{i}")));
            match rng.random_range(0..5) {
                0 => Json::Array((0..rng.random_range(1..3)).map(|j| Json::Object(view(rng, id.clone().filter(|_| j == 0), slots))).collect()),
                1 => {
                    let mut body = view(rng, id, slots);
                    body.insert("$select".into(), selector(rng));
                    body.insert("x".into(), json!("$select"));
                    let axis = *pick(rng, &["$rows", "$cols"]);
                    json!({ (axis): body })
                }
                _ => Json::Object(view(rng, id, slots)),
            }
        })
        .collect();
    doc.insert("visualizations".into(), Json::Array(vis));

    if !ids.is_empty() {
        let interactions: Vec<Json> = (0..rng.random_range(0..3))
            .map(|_| {
                let mut it = Map::new();
                it.insert("event".into(), json!(pick(rng, &["zoom", "pan", "click", "hover", "brush"])));
                it.insert("source".into(), json!(pick(rng, &ids)));
                maybe(rng, &mut it, "targets", |rng| json!([pick(rng, &ids)]));
                maybe(rng, &mut it, "effect", |rng| json!(pick(rng, &["filter", "highlight"])));
                Json::Object(it)
            })
            .collect();
        doc.insert("interactions".into(), Json::Array(interactions));
        let annotations: Vec<Json> = (0..rng.random_range(0..3))
            .map(|_| {
                let mut a = Map::new();
                a.insert("view".into(), json!(pick(rng, &ids)));
                a.insert("kind".into(), json!(pick(rng, &["trendline", "label", "rule"])));
                maybe(rng, &mut a, "data_ref", |_| json!({"name": "A0", "filter": "A0 == 1"}));
                maybe(rng, &mut a, "text", |_| json!("{a} on {Date|date}"));
                Json::Object(a)
            })
            .collect();
        doc.insert("annotations".into(), Json::Array(annotations));
    }
    Json::Object(doc)
}

/// The same document with its top-level blocks in a shuffled order.
pub fn shuffle_blocks(rng: &mut impl Rng, doc: &Json) -> Json {
    let mut entries: Vec<(String, Json)> = doc.as_object().expect("object").clone().into_iter().collect();
    entries.shuffle(rng);
    Json::Object(entries.into_iter().collect())
}

/// The input frame of [`random_small_pipeline`]: numeric columns `a`, `b`,
/// `c`, a small-integer `k` and a categorical `g`.
pub fn small_frame(rng: &mut impl Rng, rows: usize) -> DataFrame {
    let col = |rng: &mut dyn rand::RngCore, scale: f64| -> Vec<f64> {
        (0..rows).map(|_| (rng.random_range(-1.0..1.0) * scale * 100.0).round() / 100.0).collect()
    };
    let g: Vec<Option<&str>> = (0..rows).map(|_| Some(*pick(rng, &["x", "y", "z"]))).collect();
    DataFrame::new(vec![
        Column::float64("a", col(rng, 3.0)),
        Column::float64("b", col(rng, 1.0)),
        Column::float64("c", col(rng, 10.0)),
        Column::int64("k", (0..rows).map(|_| rng.random_range(0..4)).collect()),
        Column::categorical("g", &g),
    ])
    .expect("equal lengths")
}

/// A runnable pipeline over [`small_frame`] (read as `$upstream`) with up to
/// four analyses and three views.
pub fn random_small_pipeline(rng: &mut impl Rng) -> Json {
    let mut analyses = Map::new();
    let mut outputs: Vec<String> = Vec::new();
    if rng.random_bool(0.7) {
        analyses.insert("KM".into(), json!({"algorithm": "KMeans", "features": ["a", "b"], "parameters": {"n_clusters": rng.random_range(2..4)}}));
        outputs.push("KM".into());
    }
    if rng.random_bool(0.6) {
        let n = rng.random_range(1..3);
        analyses.insert("PC".into(), json!({"algorithm": "PCA", "features": ["a", "b", "c"], "scaling": "standardize", "parameters": {"n_components": n}}));
        outputs.extend(if n == 1 { vec!["PC".to_string()] } else { vec!["PC.0".to_string(), "PC.1".to_string()] });
    }
    if rng.random_bool(0.4) {
        analyses.insert("AG".into(), json!({"algorithm": "Agglomerative", "features": ["b", "c"], "parameters": {"n_clusters": 2, "linkage": "average"}}));
        outputs.push("AG".into());
    }
    if rng.random_bool(0.4) {
        analyses.insert("CP".into(), json!({"algorithm": "ChangePoint", "features": ["a"], "parameters": {"n_bkps": rng.random_range(1..3)}}));
        outputs.push("CP".into());
    }
    let numeric: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).chain(outputs.iter().cloned()).collect();
    let n_views = rng.random_range(1..=3);
    let kinds: Vec<u8> = (0..n_views).map(|_| rng.random_range(0..3)).collect();
    let views: Vec<Json> = (0..n_views)
        .map(|i| match kinds[i] {
            0 => json!({"id": format!("v{i}"), "view": i, "mark": "circle", "x": pick(rng, &numeric), "y": pick(rng, &numeric), "color": pick(rng, &["g", "k"])}),
            1 => json!({"id": format!("v{i}"), "view": i, "transform": [{"aggregate": {"groupby": ["k"]}}], "mark": "bar", "x": "k", "y": "$count"}),
            _ => json!({"id": format!("v{i}"), "view": i, "mark": "line", "x": pick(rng, &numeric), "y": pick(rng, &numeric)}),
        })
        .collect();
    let mut doc = json!({
        "data": {"source": "$upstream", "selection": {"sample_n": rng.random_range(20..60), "seed": rng.random_range(0..5)}},
        "analyses": analyses,
        "view_layout": {"rows": 1, "cols": 3},
        "visualizations": views,
    });
    // Aggregated bars share no row key with other views, so only row-level
    // views are linked.
    if n_views > 1 && kinds[0] != 1 && kinds[1] != 1 && rng.random_bool(0.5) {
        doc["interactions"] = json!([{"event": "hover", "source": "v0", "targets": ["v1"]}]);
    }
    doc
}

/// A value for a catalog entry: usually valid, sometimes out of range or of
/// the wrong type so that rejections are exercised too.
pub fn random_edit_value(rng: &mut impl Rng, entry: &CatalogEntry, fields: &[String]) -> Json {
    if rng.random_bool(0.1) {
        return json!("not a valid value");
    }
    match &entry.kind {
        ParamKind::Int { min, max } => json!(rng.random_range(*min..=max.unwrap_or(min + 4))),
        ParamKind::OptionalInt { min } => {
            if rng.random_bool(0.2) {
                Json::Null
            } else {
                json!(rng.random_range(*min..min + 60))
            }
        }
        ParamKind::Float { above } => json!(above.unwrap_or(0.0) + rng.random_range(1e-3..3.0)),
        ParamKind::Bool => json!(rng.random_bool(0.5)),
        ParamKind::Choice { choices } => json!(pick(rng, choices)),
        ParamKind::Field => json!(pick(rng, fields)),
        ParamKind::FieldList => {
            let mut f = fields.to_vec();
            f.shuffle(rng);
            f.truncate(rng.random_range(1..=f.len().clamp(1, 3)));
            json!(f)
        }
    }
}
