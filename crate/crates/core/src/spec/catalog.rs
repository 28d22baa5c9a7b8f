//! Algorithm and model parameter catalog.
//!
//! The catalog drives three things: validation of spec parameters, type checks
//! on reactive edits, and the list of controls a client can generate.

use p6_analytics::Method;
use serde::Serialize;
use serde_json::{json, Value as Json};

use super::types::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamKind {
    Int {
        min: i64,
        #[serde(skip_serializing_if = "Option::is_none")]
        max: Option<i64>,
    },
    /// An integer or `null`.
    OptionalInt { min: i64 },
    Float {
        /// Exclusive lower bound.
        #[serde(skip_serializing_if = "Option::is_none")]
        above: Option<f64>,
    },
    Bool,
    Choice { choices: Vec<String> },
    /// A column name of the pipeline frame.
    Field,
    FieldList,
}

impl ParamKind {
    pub fn choice(items: &[&str]) -> Self {
        ParamKind::Choice {
            choices: items.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn check(&self, v: &Json) -> Result<(), String> {
        let int_in = |v: &Json, min: i64, max: Option<i64>| match v.as_i64() {
            Some(i) if i >= min && max.is_none_or(|m| i <= m) => Ok(()),
            _ => Err(match max {
                Some(m) => format!("expected an integer in {min}..={m}, got {v}"),
                None => format!("expected an integer >= {min}, got {v}"),
            }),
        };
        match self {
            ParamKind::Int { min, max } => int_in(v, *min, *max),
            ParamKind::OptionalInt { min } => match v {
                Json::Null => Ok(()),
                _ => int_in(v, *min, None),
            },
            ParamKind::Float { above } => match v.as_f64() {
                Some(f) if f.is_finite() && above.is_none_or(|a| f > a) => Ok(()),
                _ => Err(match above {
                    Some(a) => format!("expected a number > {a}, got {v}"),
                    None => format!("expected a number, got {v}"),
                }),
            },
            ParamKind::Bool => v.is_boolean().then_some(()).ok_or(format!("expected a boolean, got {v}")),
            ParamKind::Choice { choices } => match v.as_str() {
                Some(s) if choices.iter().any(|c| c == s) => Ok(()),
                _ => Err(format!("expected one of {choices:?}, got {v}")),
            },
            ParamKind::Field => v.is_string().then_some(()).ok_or(format!("expected a field name, got {v}")),
            ParamKind::FieldList => match v.as_array() {
                Some(a) if a.iter().all(Json::is_string) => Ok(()),
                _ => Err(format!("expected a list of field names, got {v}")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDef {
    pub name: &'static str,
    #[serde(flatten)]
    pub kind: ParamKind,
    pub default: Json,
}

fn p(name: &'static str, kind: ParamKind, default: Json) -> ParamDef {
    ParamDef { name, kind, default }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub params: Vec<ParamDef>,
    /// Stop rules of which exactly one must be present.
    pub exclusive: Option<(&'static str, &'static str)>,
    /// Injected when neither member of `exclusive` is given.
    pub fallback: Option<(&'static str, Json)>,
}

impl ParamSet {
    pub fn get(&self, name: &str) -> Option<&ParamDef> {
        self.params.iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamIssue {
    Unknown { key: String, known: Vec<&'static str> },
    Invalid { key: String, message: String },
}

impl ParamIssue {
    pub fn key(&self) -> &str {
        match self {
            ParamIssue::Unknown { key, .. } | ParamIssue::Invalid { key, .. } => key,
        }
    }
}

/// Registered algorithms. Analyses may swap between members of the same family
/// (e.g. the two projections) without touching the rest of the spec.
#[derive(Debug, Clone)]
pub struct Registry {
    algorithms: Vec<(Algorithm, ParamSet)>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}

impl Registry {
    pub fn standard() -> Self {
        let int1 = ParamKind::Int { min: 1, max: None };
        let int0 = ParamKind::Int { min: 0, max: None };
        let pos = ParamKind::Float { above: Some(0.0) };
        let algorithms = vec![
            (
                Algorithm::KMeans,
                ParamSet {
                    params: vec![
                        p("n_clusters", int1.clone(), json!(8)),
                        p("max_iter", int1.clone(), json!(300)),
                        p("tol", ParamKind::Float { above: None }, json!(1e-4)),
                        p("seed", int0.clone(), json!(0)),
                    ],
                    exclusive: None,
                    fallback: None,
                },
            ),
            (
                Algorithm::Agglomerative,
                ParamSet {
                    params: vec![
                        p("n_clusters", int1.clone(), Json::Null),
                        p("distance_threshold", pos.clone(), Json::Null),
                        p("linkage", ParamKind::choice(&["ward", "single", "complete", "average"]), json!("ward")),
                    ],
                    exclusive: Some(("n_clusters", "distance_threshold")),
                    fallback: Some(("n_clusters", json!(2))),
                },
            ),
            (
                Algorithm::Pca,
                ParamSet {
                    params: vec![p("n_components", int1.clone(), json!(2))],
                    exclusive: None,
                    fallback: None,
                },
            ),
            (
                Algorithm::TruncatedSvd,
                ParamSet {
                    params: vec![p("n_components", int1.clone(), json!(2))],
                    exclusive: None,
                    fallback: None,
                },
            ),
            (
                Algorithm::ChangePoint,
                ParamSet {
                    params: vec![
                        p("n_bkps", int1, Json::Null),
                        p("penalty", pos, Json::Null),
                        p("index", ParamKind::Field, Json::Null),
                        p("reduce", ParamKind::choice(&["sum", "mean"]), json!("sum")),
                    ],
                    exclusive: Some(("n_bkps", "penalty")),
                    fallback: None,
                },
            ),
            (
                Algorithm::ModelApply,
                ParamSet {
                    params: Vec::new(),
                    exclusive: None,
                    fallback: None,
                },
            ),
        ];
        Self { algorithms }
    }

    pub fn algorithm(&self, alg: Algorithm) -> &ParamSet {
        &self
            .algorithms
            .iter()
            .find(|(a, _)| *a == alg)
            .expect("every algorithm is registered")
            .1
    }

    /// Algorithms an analysis may be switched to.
    pub fn alternatives(&self, alg: Algorithm) -> Vec<Algorithm> {
        self.algorithms
            .iter()
            .map(|(a, _)| *a)
            .filter(|a| {
                (a.is_projection() && alg.is_projection()) || (a.is_clustering() && alg.is_clustering()) || *a == alg
            })
            .collect()
    }

    pub fn method(&self, method: Method) -> ParamSet {
        let params = match method {
            Method::LinearRegression => vec![p("fit_intercept", ParamKind::Bool, json!(true))],
            Method::RandomForestRegressor => vec![
                p("n_estimators", ParamKind::Int { min: 1, max: None }, json!(100)),
                p("max_depth", ParamKind::OptionalInt { min: 1 }, Json::Null),
                p("min_samples_leaf", ParamKind::Int { min: 1, max: None }, json!(1)),
                p("seed", ParamKind::Int { min: 0, max: None }, json!(0)),
                p("bootstrap", ParamKind::Bool, json!(true)),
            ],
        };
        debug_assert!(params.iter().map(|d| d.name).eq(method.parameter_names().iter().copied()));
        ParamSet {
            params,
            exclusive: None,
            fallback: None,
        }
    }
}

/// Checks names, value types and stop-rule exclusivity.
pub fn check_params<'a>(
    set: &ParamSet,
    params: impl IntoIterator<Item = (&'a String, &'a Json)>,
) -> Vec<ParamIssue> {
    let mut issues = Vec::new();
    let mut present = Vec::new();
    for (key, value) in params {
        match set.get(key) {
            None => issues.push(ParamIssue::Unknown {
                key: key.clone(),
                known: set.params.iter().map(|d| d.name).collect(),
            }),
            Some(def) => {
                present.push(key.as_str());
                if let Err(message) = def.kind.check(value) {
                    issues.push(ParamIssue::Invalid {
                        key: key.clone(),
                        message,
                    });
                }
            }
        }
    }
    if let Some((a, b)) = set.exclusive {
        let (ha, hb) = (present.contains(&a), present.contains(&b));
        if ha && hb {
            issues.push(ParamIssue::Invalid {
                key: b.to_string(),
                message: format!("give either `{a}` or `{b}`, not both"),
            });
        } else if !ha && !hb && set.fallback.is_none() {
            issues.push(ParamIssue::Invalid {
                key: a.to_string(),
                message: format!("one of `{a}` or `{b}` is required"),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn params(v: Json) -> BTreeMap<String, Json> {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn misspelled_parameter_is_unknown() {
        let reg = Registry::standard();
        let issues = check_params(reg.algorithm(Algorithm::KMeans), &params(json!({"n_cluster": 3})));
        assert_eq!(issues.len(), 1);
        assert!(matches!(&issues[0], ParamIssue::Unknown { key, .. } if key == "n_cluster"));
    }

    #[test]
    fn kinds_and_stop_rules() {
        let reg = Registry::standard();
        let kmeans = reg.algorithm(Algorithm::KMeans);
        assert!(check_params(kmeans, &params(json!({"n_clusters": 0}))).len() == 1);
        assert!(check_params(kmeans, &params(json!({"n_clusters": 5, "tol": 0.01}))).is_empty());
        let cp = reg.algorithm(Algorithm::ChangePoint);
        assert_eq!(check_params(cp, &params(json!({}))).len(), 1);
        assert_eq!(check_params(cp, &params(json!({"n_bkps": 2, "penalty": 1.0}))).len(), 1);
        assert!(check_params(cp, &params(json!({"n_bkps": 2, "index": "Date", "reduce": "sum"}))).is_empty());
        let agg = reg.algorithm(Algorithm::Agglomerative);
        assert!(check_params(agg, &params(json!({}))).is_empty());
        assert_eq!(check_params(agg, &params(json!({"linkage": "centroid"}))).len(), 1);
        let rf = reg.method(Method::RandomForestRegressor);
        assert!(check_params(&rf, &params(json!({"max_depth": null, "n_estimators": 10}))).is_empty());
    }

    #[test]
    fn projections_swap_with_each_other() {
        let reg = Registry::standard();
        assert_eq!(reg.alternatives(Algorithm::Pca), vec![Algorithm::Pca, Algorithm::TruncatedSvd]);
        assert_eq!(reg.alternatives(Algorithm::ChangePoint), vec![Algorithm::ChangePoint]);
    }
}
