//! Node runners: load, analyses, models and view compilation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use p6_analytics::linalg::svd;
use p6_analytics::{
    detect_changepoints, fit_agglomerative, fit_kmeans, fit_model, fit_pca, grid_search, load_model, predict,
    save_model, scale_features, AnalyticsError, FeatureMatrix, GridSearchConfig, KMeansParams, Linkage, Matrix, Model,
    Params, Scaling,
};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::frame::{Column, DType, DataFrame, Scalar};
use crate::ingest::{preprocess, SourceResolver};
use crate::spec::{
    analysis_outputs, expand_entry, n_components, Algorithm, AnalysisSpec, DataSpec, FacetAxis, FacetContext,
    FacetGroup, ModelSpec, PipelineSpec, Registry, VisEntry, ViewSpec, PIPELINE_DATA,
};
use crate::vis::{
    attach_annotations, compile_layers, prepare_layer, viewport, Extent, PluginRegistry, SceneSpec, ROW_ID,
};
use crate::spec::Channel;

use super::NodeError;

pub(crate) fn run_load(
    data: &DataSpec,
    used: Option<&BTreeSet<String>>,
    resolver: &SourceResolver,
) -> Result<(DataFrame, [u8; 32]), NodeError> {
    let loaded = resolver.load(&data.source, data.format)?;
    let mut frame = loaded.frame;
    let selection = data.selection.as_ref();
    if let Some(cols) = selection.and_then(|s| s.columns.as_ref()) {
        frame = frame.project(cols)?;
    }
    frame = preprocess(&frame, &data.preprocessing, used)?;
    if let Some(n) = selection.and_then(|s| s.sample_n) {
        frame = frame.sample_rows(n, selection.map_or(0, |s| s.seed));
    }
    Ok((frame, loaded.digest))
}

/// Declared parameters over registry defaults. When an exclusive stop-rule
/// pair is absent the fallback member is injected.
pub(crate) fn resolved_params(registry: &Registry, a: &AnalysisSpec) -> BTreeMap<String, Json> {
    let set = registry.algorithm(a.algorithm);
    let mut out: BTreeMap<String, Json> = set
        .params
        .iter()
        .filter(|d| !d.default.is_null())
        .map(|d| (d.name.to_string(), d.default.clone()))
        .collect();
    out.extend(a.parameters.iter().map(|(k, v)| (k.clone(), v.clone())));
    if let Some((x, y)) = set.exclusive {
        let present = |k: &str| out.get(k).is_some_and(|v| !v.is_null());
        if !present(x) && !present(y) {
            if let Some((k, v)) = &set.fallback {
                out.insert(k.to_string(), v.clone());
            }
        }
    }
    out
}

fn invalid(message: impl Into<String>) -> NodeError {
    NodeError::Invalid(message.into())
}

fn numeric_columns(frame: &DataFrame, exclude: &[&str]) -> Vec<String> {
    frame
        .columns()
        .iter()
        .filter(|c| c.dtype().is_numeric() && c.name() != ROW_ID && !exclude.contains(&c.name()))
        .map(|c| c.name().to_string())
        .collect()
}

/// Rows with a value in every column of `names`, and the matrix over them.
fn complete_rows(frame: &DataFrame, names: &[String]) -> Result<(Vec<usize>, Matrix), NodeError> {
    let cols = names
        .iter()
        .map(|n| {
            let c = frame.require(n)?;
            if c.dtype() == DType::Categorical {
                return Err(invalid(format!("feature `{n}` is categorical; encode it first")));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>, NodeError>>()?;
    let keep: Vec<usize> = (0..frame.row_count())
        .filter(|&i| cols.iter().all(|c| c.f64_at(i).is_some()))
        .collect();
    let mut data = Vec::with_capacity(keep.len() * cols.len());
    for &i in &keep {
        data.extend(cols.iter().map(|c| c.f64_at(i).expect("complete row")));
    }
    let m = Matrix::new(keep.len(), cols.len(), data)?;
    Ok((keep, m))
}

fn scatter_i64(name: &str, n: usize, rows: &[usize], values: &[i64]) -> Column {
    let mut out = vec![None; n];
    for (&r, &v) in rows.iter().zip(values) {
        out[r] = Some(v);
    }
    Column::from_i64_options(name, &out)
}

fn scatter_f64(name: &str, n: usize, rows: &[usize], values: &[f64]) -> Column {
    let mut out = vec![None; n];
    for (&r, &v) in rows.iter().zip(values) {
        out[r] = Some(v);
    }
    Column::from_f64_options(name, &out)
}

fn as_usize(params: &BTreeMap<String, Json>, key: &str) -> Option<usize> {
    params.get(key).and_then(Json::as_u64).map(|v| v as usize)
}

fn as_f64(params: &BTreeMap<String, Json>, key: &str) -> Option<f64> {
    params.get(key).and_then(Json::as_f64)
}

/// Uncentered projection onto the top right-singular vectors. Each
/// component's sign is fixed so its largest-magnitude loading is positive.
fn truncated_svd(x: &Matrix, c: usize) -> Result<Vec<Vec<f64>>, NodeError> {
    if c > x.cols() {
        return Err(AnalyticsError::TooManyComponents {
            requested: c,
            max: x.cols(),
        }
        .into());
    }
    let s = svd(x);
    let mut order: Vec<usize> = (0..s.singular_values.len()).collect();
    order.sort_by(|&a, &b| s.singular_values[b].total_cmp(&s.singular_values[a]).then(a.cmp(&b)));
    Ok(order[..c]
        .iter()
        .map(|&j| {
            let loading = (0..x.cols())
                .map(|i| s.v[(i, j)])
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            let sign = if loading < 0.0 { -1.0 } else { 1.0 };
            s.u_sigma[j].iter().map(|v| v * sign).collect()
        })
        .collect())
}

fn change_points(
    name: &str,
    frame: &DataFrame,
    features: &[String],
    params: &BTreeMap<String, Json>,
) -> Result<Column, NodeError> {
    let n = frame.row_count();
    let cols = features.iter().map(|f| frame.require(f)).collect::<Result<Vec<_>, _>>()?;
    let value = |i: usize| -> Option<f64> { cols.iter().map(|c| c.f64_at(i)).sum() };
    let n_bkps = as_usize(params, "n_bkps");
    let penalty = as_f64(params, "penalty");
    let Some(index) = params.get("index").and_then(Json::as_str) else {
        let rows: Vec<usize> = (0..n).filter(|&i| value(i).is_some()).collect();
        let series: Vec<f64> = rows.iter().map(|&i| value(i).expect("kept")).collect();
        let fit = detect_changepoints(&series, n_bkps, penalty)?;
        return Ok(scatter_i64(name, n, &rows, &fit.indicator));
    };
    let mean = params.get("reduce").and_then(Json::as_str) == Some("mean");
    let idx = frame.require(index)?;
    // Group rows by index value, ascending.
    let mut groups: BTreeMap<GroupKey, (f64, usize, Vec<usize>)> = BTreeMap::new();
    for i in 0..n {
        let key = match idx.get(i) {
            Scalar::Null => continue,
            Scalar::Str(s) => GroupKey::Str(s.to_string()),
            v => GroupKey::Num(ordered(v.as_f64().expect("numeric"))),
        };
        let g = groups.entry(key).or_insert((0.0, 0, Vec::new()));
        if let Some(v) = value(i) {
            g.0 += v;
            g.1 += 1;
        }
        g.2.push(i);
    }
    let series: Vec<f64> = groups
        .values()
        .map(|(sum, count, _)| if mean && *count > 0 { sum / *count as f64 } else { *sum })
        .collect();
    let fit = detect_changepoints(&series, n_bkps, penalty)?;
    let mut out = vec![None; n];
    for ((_, _, rows), &flag) in groups.values().zip(&fit.indicator) {
        for &r in rows {
            out[r] = Some(flag);
        }
    }
    Ok(Column::from_i64_options(name, &out))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Num(i64),
    Str(String),
}

/// Order-preserving map of an f64 onto i64 for use as a map key.
fn ordered(v: f64) -> i64 {
    let bits = v.to_bits() as i64;
    if bits < 0 {
        bits ^ i64::MAX
    } else {
        bits
    }
}

/// Fits one analysis over `frame` and returns its output columns, aligned
/// with the frame's rows (null where a feature was missing).
pub(crate) fn run_analysis(
    name: &str,
    a: &AnalysisSpec,
    frame: &DataFrame,
    model: Option<&Model>,
    registry: &Registry,
) -> Result<Vec<Column>, NodeError> {
    let params = resolved_params(registry, a);
    let n = frame.row_count();
    let features = if !a.features.is_empty() {
        a.features.clone()
    } else if let Some(m) = model {
        m.feature_names.clone()
    } else {
        let mut exclude = Vec::new();
        if let Some(Json::String(index)) = params.get("index") {
            exclude.push(index.as_str());
        }
        numeric_columns(frame, &exclude)
    };
    if features.is_empty() {
        return Err(invalid("no numeric features to analyse"));
    }
    let outputs = analysis_outputs(name, a);

    if a.algorithm == Algorithm::ChangePoint {
        return Ok(vec![change_points(name, frame, &features, &params)?]);
    }
    let (rows, values) = complete_rows(frame, &features)?;
    let fm = FeatureMatrix::new(values, features.clone())?;

    if a.algorithm == Algorithm::ModelApply {
        let model = model.ok_or_else(|| invalid("model-apply needs a model"))?;
        if fm.n_rows() == 0 {
            return Ok(vec![scatter_f64(name, n, &rows, &[])]);
        }
        let fm = if a.scaling == Scaling::None { fm } else { scale_features(&fm, a.scaling)? };
        let yhat = predict(model, &fm)?;
        return Ok(vec![scatter_f64(name, n, &rows, &yhat)]);
    }

    let x = if a.scaling == Scaling::None {
        fm.values
    } else {
        scale_features(&fm, a.scaling)?.values
    };
    Ok(match a.algorithm {
        Algorithm::KMeans => {
            let k = as_usize(&params, "n_clusters").unwrap_or(8);
            let p = KMeansParams {
                max_iter: as_usize(&params, "max_iter").unwrap_or(300),
                tol: as_f64(&params, "tol").unwrap_or(1e-4),
                ..KMeansParams::new(k).with_seed(params.get("seed").and_then(Json::as_u64).unwrap_or(0))
            };
            let fit = fit_kmeans(&x, &p)?;
            let labels: Vec<i64> = fit.labels.iter().map(|&l| l as i64).collect();
            vec![scatter_i64(name, n, &rows, &labels)]
        }
        Algorithm::Agglomerative => {
            let linkage: Linkage = serde_json::from_value(params.get("linkage").cloned().unwrap_or(json!("ward")))
                .map_err(|e| invalid(e.to_string()))?;
            let fit = fit_agglomerative(
                &x,
                linkage,
                as_usize(&params, "n_clusters"),
                as_f64(&params, "distance_threshold"),
            )?;
            let labels: Vec<i64> = fit.labels.iter().map(|&l| l as i64).collect();
            vec![scatter_i64(name, n, &rows, &labels)]
        }
        Algorithm::Pca | Algorithm::TruncatedSvd => {
            let c = n_components(a);
            let projected: Vec<Vec<f64>> = if a.algorithm == Algorithm::Pca {
                let fit = fit_pca(&x, c)?;
                (0..c).map(|j| fit.projected.column(j)).collect()
            } else {
                truncated_svd(&x, c)?
            };
            outputs
                .iter()
                .zip(projected)
                .map(|((out, _), col)| scatter_f64(out, n, &rows, &col))
                .collect()
        }
        Algorithm::ChangePoint | Algorithm::ModelApply => unreachable!("handled above"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub params: Params,
    pub mean_score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub best_params: Params,
    pub best_score: f64,
    pub candidates: Vec<CandidateScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub model: Model,
    pub grid: Option<GridSummary>,
}

impl ModelOutput {
    pub fn to_json(&self) -> Json {
        let m = &self.model;
        let mut doc = json!({
            "method": m.method.name(),
            "feature_names": m.feature_names,
            "parameters": m.parameters,
            "attributes": m.attributes,
            "training_score": m.training_score,
        });
        if let Some(g) = &self.grid {
            doc["grid_search"] = json!(g);
        }
        doc
    }
}

pub(crate) fn run_model(
    m: &ModelSpec,
    frame: Option<&DataFrame>,
    resolver: &SourceResolver,
) -> Result<ModelOutput, NodeError> {
    if let Some(path) = &m.load {
        let model = load_model(resolver.resolve_path(path))?;
        if model.method != m.method {
            return Err(invalid(format!(
                "`{path}` holds a {} model, not {}",
                model.method.name(),
                m.method.name()
            )));
        }
        return Ok(ModelOutput { model, grid: None });
    }
    let own;
    let frame = if m.training_data == PIPELINE_DATA {
        frame.expect("pipeline frame is passed for $data")
    } else {
        own = resolver.load(&m.training_data, None)?.frame;
        &own
    };
    let target = m.target.as_deref().ok_or_else(|| invalid("a model needs a `target`"))?;
    let features = if m.features.is_empty() {
        numeric_columns(frame, &[target])
    } else {
        m.features.clone()
    };
    let mut all = features.clone();
    all.push(target.to_string());
    let (_, values) = complete_rows(frame, &all)?;
    let d = features.len();
    let y: Vec<f64> = (0..values.rows()).map(|i| values.row(i)[d]).collect();
    let x: Vec<Vec<f64>> = (0..values.rows()).map(|i| values.row(i)[..d].to_vec()).collect();
    let x = Matrix::from_rows(&x).or_else(|_| Matrix::new(0, d, Vec::new()))?;
    let fm = FeatureMatrix::new(x, features)?;
    let base: Params = m.parameters.clone().into_iter().collect();

    let out = match &m.param_grid {
        Some(grid) if !grid.is_empty() => {
            let config = GridSearchConfig {
                method: m.method,
                base_params: base.clone(),
                param_grid: grid.clone(),
                scoring: m.scoring,
                cv_folds: m.cv_folds,
                seed: base.get("seed").and_then(Json::as_u64).unwrap_or(0),
            };
            let r = grid_search(&fm, &y, &config)?;
            let candidates = r
                .candidates
                .iter()
                .map(|c| CandidateScore {
                    params: c.cell.clone(),
                    mean_score: c.mean_score,
                    fold_scores: c.fold_scores.clone(),
                })
                .collect();
            ModelOutput {
                model: r.best_model,
                grid: Some(GridSummary {
                    best_params: r.best_params,
                    best_score: r.best_score,
                    candidates,
                }),
            }
        }
        _ => ModelOutput {
            model: fit_model(m.method, &fm, &y, &base)?,
            grid: None,
        },
    };
    if let Some(path) = &m.save {
        save_model(&out.model, resolver.resolve_path(path))?;
    }
    Ok(out)
}

/// One concrete view produced by a visualization entry.
#[derive(Debug, Clone)]
pub struct CompiledView {
    pub id: String,
    pub spec: ViewSpec,
    pub scene: SceneSpec,
    /// Post-transform rows per layer, keyed by the layer's data key.
    pub layers: Vec<(String, DataFrame)>,
}

#[derive(Debug, Clone)]
pub struct ViewOutput {
    pub views: Vec<CompiledView>,
    pub group: Option<FacetGroup>,
}

struct Ctx<'a> {
    frame: &'a DataFrame,
    models: &'a BTreeMap<String, Arc<ModelOutput>>,
}

impl FacetContext for Ctx<'_> {
    fn model(&self, name: &str) -> Option<&Model> {
        self.models.get(name).map(|m| &m.model)
    }

    fn frame(&self) -> Option<&DataFrame> {
        Some(self.frame)
    }
}

pub(crate) fn layer_key(id: &str, j: usize) -> String {
    if j == 0 {
        id.to_string()
    } else {
        format!("{id}.layer{j}")
    }
}

pub(crate) fn run_view(
    index: usize,
    entry: &VisEntry,
    spec: &PipelineSpec,
    frame: &DataFrame,
    models: &BTreeMap<String, Arc<ModelOutput>>,
    plugins: &PluginRegistry,
) -> Result<ViewOutput, NodeError> {
    let ctx = Ctx { frame, models };
    let layout = &spec.view_layout;
    let (entries, group) = expand_entry(entry, index, layout, &ctx)?;

    let mut prepared = Vec::with_capacity(entries.len());
    for e in &entries {
        let id = e.id().to_string();
        let layers = e
            .layers()
            .iter()
            .enumerate()
            .map(|(j, l)| prepare_layer(l, &layer_key(&id, j), frame, plugins))
            .collect::<Result<Vec<_>, _>>()?;
        prepared.push((id, e, layers));
    }

    // Facet siblings share the scale perpendicular to their placement.
    let mut shared: BTreeMap<Channel, Extent> = BTreeMap::new();
    if let Some(g) = &group {
        let ch = match g.axis {
            FacetAxis::Cols => Channel::Y,
            FacetAxis::Rows => Channel::X,
        };
        for (_, _, layers) in &prepared {
            for l in layers {
                if let Some(e @ Extent::Numeric(_)) = l.extents.get(&ch) {
                    let merged = shared.get(&ch).map_or_else(|| e.clone(), |s| s.union(e));
                    shared.insert(ch, merged);
                }
            }
        }
    }

    let mut views = Vec::with_capacity(prepared.len());
    for (id, e, layers) in prepared {
        let slot = e
            .slot()
            .and_then(|s| s.index(layout))
            .ok_or_else(|| invalid(format!("view `{id}` has no slot inside the layout")))?;
        let vp = viewport(layout, slot)?;
        let mut scene = compile_layers(&id, &layers, vp, &shared, plugins)?;
        let anns: Vec<_> = spec
            .annotations
            .iter()
            .filter(|a| {
                a.view == id || group.as_ref().is_some_and(|g| a.view == g.prefix && g.members.contains(&id))
            })
            .collect();
        let first = &layers[0];
        attach_annotations(&mut scene, &first.spec, &anns, frame, &first.data)?;
        views.push(CompiledView {
            id,
            spec: first.spec.clone(),
            scene,
            layers: layers.into_iter().map(|l| (l.key, l.data)).collect(),
        });
    }
    Ok(ViewOutput { views, group })
}
