//! Trained estimators: fitting by method name, prediction, JSON persistence and
//! attribute ranking.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AnalyticsError, Result};
use crate::linear::{fit_linear_regression_with, LinearParams};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::tree::{fit_random_forest, DecisionTree, ForestParams};

pub type Params = BTreeMap<String, Value>;

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    LinearRegression,
    RandomForestRegressor,
}

impl Method {
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Method::LinearRegression => &["fit_intercept"],
            Method::RandomForestRegressor => {
                &["n_estimators", "max_depth", "min_samples_leaf", "seed", "bootstrap"]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::LinearRegression => "LinearRegression",
            Method::RandomForestRegressor => "RandomForestRegressor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedState {
    Linear {
        coefficients: Vec<f64>,
        intercept: f64,
    },
    Forest {
        trees: Vec<DecisionTree>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub method: Method,
    pub feature_names: Vec<String>,
    pub parameters: Params,
    pub state: FittedState,
    /// Per-feature vectors aligned with `feature_names`.
    pub attributes: BTreeMap<String, Vec<f64>>,
    pub training_score: f64,
}

impl Model {
    /// Predicts for rows whose columns are already in `feature_names` order.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        match &self.state {
            FittedState::Linear {
                coefficients,
                intercept,
            } => (0..x.rows())
                .map(|i| {
                    intercept
                        + x.row(i)
                            .iter()
                            .zip(coefficients)
                            .map(|(v, c)| v * c)
                            .sum::<f64>()
                })
                .collect(),
            FittedState::Forest { trees } => (0..x.rows())
                .map(|i| {
                    let row = x.row(i);
                    trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
                })
                .collect(),
        }
    }
}

/// Fits `method` with parameters given by name, as they appear in a pipeline spec.
pub fn fit_model(method: Method, x: &FeatureMatrix, y: &[f64], params: &Params) -> Result<Model> {
    check_known(method, params)?;
    match method {
        Method::LinearRegression => {
            let fit_intercept = get_bool(params, "fit_intercept")?.unwrap_or(true);
            fit_linear_regression_with(x, y, &LinearParams { fit_intercept })
        }
        Method::RandomForestRegressor => {
            let defaults = ForestParams::default();
            let p = ForestParams {
                n_estimators: get_usize(params, "n_estimators", 1)?.unwrap_or(defaults.n_estimators),
                max_depth: match params.get("max_depth") {
                    None | Some(Value::Null) => None,
                    Some(_) => get_usize(params, "max_depth", 1)?,
                },
                min_samples_leaf: get_usize(params, "min_samples_leaf", 1)?
                    .unwrap_or(defaults.min_samples_leaf),
                seed: get_usize(params, "seed", 0)?.map_or(defaults.seed, |s| s as u64),
                bootstrap: get_bool(params, "bootstrap")?.unwrap_or(defaults.bootstrap),
            };
            fit_random_forest(x, y, &p)
        }
    }
}

pub(crate) fn check_known(method: Method, params: &Params) -> Result<()> {
    for key in params.keys() {
        if !method.parameter_names().contains(&key.as_str()) {
            return Err(AnalyticsError::InvalidParameter {
                name: key.clone(),
                reason: format!("not a parameter of {}", method.name()),
            });
        }
    }
    Ok(())
}

fn get_usize(params: &Params, name: &str, min: usize) -> Result<Option<usize>> {
    match params.get(name) {
        None => Ok(None),
        Some(v) => match v.as_u64() {
            Some(u) if u as usize >= min => Ok(Some(u as usize)),
            _ => Err(AnalyticsError::InvalidParameter {
                name: name.into(),
                reason: format!("expected an integer >= {min}, got {v}"),
            }),
        },
    }
}

fn get_bool(params: &Params, name: &str) -> Result<Option<bool>> {
    match params.get(name) {
        None => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(v) => Err(AnalyticsError::InvalidParameter {
            name: name.into(),
            reason: format!("expected a boolean, got {v}"),
        }),
    }
}

pub fn predict(model: &Model, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.feature_names != model.feature_names {
        return Err(AnalyticsError::FeatureMismatch {
            expected: model.feature_names.clone(),
            found: x.feature_names.clone(),
        });
    }
    Ok(model.predict_matrix(&x.values))
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    p6model_version: u64,
    #[serde(flatten)]
    model: &'a Model,
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let doc = ModelFileRef {
        p6model_version: MODEL_FORMAT_VERSION,
        model,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| AnalyticsError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| AnalyticsError::Io(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::Io(e.to_string()))?;
    model_from_json(&text)
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| AnalyticsError::CorruptModel(e.to_string()))?;
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| AnalyticsError::CorruptModel("top level is not an object".into()))?;
    let version = obj
        .remove("p6model_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| AnalyticsError::CorruptModel("missing p6model_version".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(AnalyticsError::VersionMismatch { found: version });
    }
    let model: Model =
        serde_json::from_value(doc).map_err(|e| AnalyticsError::CorruptModel(e.to_string()))?;
    let consistent = match &model.state {
        FittedState::Linear { coefficients, .. } => coefficients.len() == model.feature_names.len(),
        FittedState::Forest { trees } => !trees.is_empty(),
    };
    if !consistent {
        return Err(AnalyticsError::CorruptModel("fitted state does not match features".into()));
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttributeOrder {
    #[default]
    DescAbs,
    AscAbs,
    Desc,
    Asc,
}

/// Features sorted by attribute value (ties by feature name), truncated to `top_k`.
pub fn rank_model_attributes(
    model: &Model,
    attribute: &str,
    top_k: usize,
    order: AttributeOrder,
) -> Result<Vec<(String, f64)>> {
    let values = model
        .attributes
        .get(attribute)
        .ok_or_else(|| AnalyticsError::UnknownModelAttribute(attribute.to_string()))?;
    let mut ranked: Vec<(String, f64)> = model
        .feature_names
        .iter()
        .cloned()
        .zip(values.iter().copied())
        .collect();
    ranked.sort_by(|(na, a), (nb, b)| {
        let primary = match order {
            AttributeOrder::DescAbs => b.abs().total_cmp(&a.abs()),
            AttributeOrder::AscAbs => a.abs().total_cmp(&b.abs()),
            AttributeOrder::Desc => b.total_cmp(a),
            AttributeOrder::Asc => a.total_cmp(b),
        };
        primary.then_with(|| na.cmp(nb))
    });
    ranked.truncate(top_k);
    Ok(ranked)
}
