//! CART regression trees and bagged random forests.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::matrix::{FeatureMatrix, Matrix};
use crate::metrics::{score, Metric};
use crate::model::{FittedState, Method, Model, Params};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: f64,
        n_samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes are stored flat; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` means all of them.
    pub max_features: Option<usize>,
}

impl DecisionTree {
    /// Fits a tree on `rows` of `x` (duplicates allowed, as produced by a
    /// bootstrap). Returns the tree and the SSE reduction credited to each feature.
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        rows: &[usize],
        config: &TreeConfig,
        rng: &mut ChaCha8Rng,
    ) -> (Self, Vec<f64>) {
        let d = x.cols();
        let mut importances = vec![0.0; d];
        let mut nodes = Vec::new();
        // (node slot, rows, depth)
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows.to_vec(), 0)];
        nodes.push(TreeNode::Leaf {
            value: 0.0,
            n_samples: 0,
        });

        while let Some((slot, idx, depth)) = stack.pop() {
            let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            let leaf = TreeNode::Leaf {
                value: mean,
                n_samples: idx.len(),
            };
            let depth_ok = config.max_depth.is_none_or(|m| depth < m);
            let (lo, hi) = idx
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(y[i]), hi.max(y[i])));
            if !depth_ok || idx.len() < 2 * config.min_samples_leaf.max(1) || lo == hi {
                nodes[slot] = leaf;
                continue;
            }
            let features: Vec<usize> = match config.max_features {
                Some(m) if m < d => {
                    let mut f = sample(rng, d, m).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..d).collect(),
            };
            match best_split(x, y, &idx, &features, config.min_samples_leaf.max(1), mean) {
                None => nodes[slot] = leaf,
                Some(split) => {
                    importances[split.feature] += split.gain;
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| x[(i, split.feature)] <= split.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    for _ in 0..2 {
                        nodes.push(TreeNode::Leaf {
                            value: 0.0,
                            n_samples: 0,
                        });
                    }
                    nodes[slot] = TreeNode::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows, depth + 1));
                    stack.push((left, left_rows, depth + 1));
                }
            }
        }
        (Self { nodes }, importances)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(
    x: &Matrix,
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
    mean: f64,
) -> Option<Split> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| y[i] - mean).sum();
    let total_sq: f64 = idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
    let parent_sse = total_sq - total * total / n as f64;
    let mut best: Option<Split> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[(a, f)].total_cmp(&x[(b, f)]).then(a.cmp(&b)));
        let (mut sum_l, mut sq_l) = (0.0, 0.0);
        for pos in 1..n {
            let v = y[order[pos - 1]] - mean;
            sum_l += v;
            sq_l += v * v;
            let (nl, nr) = (pos, n - pos);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let (a, b) = (x[(order[pos - 1], f)], x[(order[pos], f)]);
            if a == b {
                continue;
            }
            let sse_l = sq_l - sum_l * sum_l / nl as f64;
            let sum_r = total - sum_l;
            let sse_r = (total_sq - sq_l) - sum_r * sum_r / nr as f64;
            let gain = parent_sse - sse_l - sse_r;
            if gain > parent_sse * 1e-12 && best.as_ref().is_none_or(|s| gain > s.gain) {
                let mid = a + (b - a) / 2.0;
                best = Some(Split {
                    feature: f,
                    threshold: if mid < b { mid } else { a },
                    gain,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub(crate) fn to_params(&self) -> Params {
        let mut p = BTreeMap::new();
        p.insert("n_estimators".into(), self.n_estimators.into());
        p.insert(
            "max_depth".into(),
            self.max_depth.map_or(serde_json::Value::Null, Into::into),
        );
        p.insert("min_samples_leaf".into(), self.min_samples_leaf.into());
        p.insert("seed".into(), self.seed.into());
        p.insert("bootstrap".into(), self.bootstrap.into());
        p
    }
}

/// Bagged CART regressors; tree `t` draws from a generator seeded with `seed + t`
/// so the result does not depend on how trees are scheduled.
pub fn fit_random_forest(x: &FeatureMatrix, y: &[f64], params: &ForestParams) -> Result<Model> {
    let (n, d) = (x.n_rows(), x.n_features());
    if n == 0 || d == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    if y.len() != n {
        return Err(AnalyticsError::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if params.n_estimators == 0 {
        return Err(AnalyticsError::InvalidParameter {
            name: "n_estimators".into(),
            reason: "must be at least 1".into(),
        });
    }
    if !x.values.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
    };
    let fitted = par::map_range(params.n_estimators, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        DecisionTree::fit(&x.values, y, &rows, &config, &mut rng)
    });

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        for (acc, v) in importances.iter_mut().zip(imp) {
            *acc += v;
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }

    let mut model = Model {
        method: Method::RandomForestRegressor,
        feature_names: x.feature_names.clone(),
        parameters: params.to_params(),
        state: FittedState::Forest { trees },
        attributes: BTreeMap::from([("feature_importances".to_string(), importances)]),
        training_score: 0.0,
    };
    let fitted_y = model.predict_matrix(&x.values);
    model.training_score = score(y, &fitted_y, Metric::R2)?;
    Ok(model)
}
