//! Exhaustive grid search with seeded k-fold cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{AnalyticsError, Result};
use crate::matrix::FeatureMatrix;
use crate::metrics::{score, Metric};
use crate::model::{check_known, fit_model, Method, Model, Params};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchConfig {
    pub method: Method,
    /// Parameters shared by every candidate; grid cells override them.
    pub base_params: Params,
    pub param_grid: BTreeMap<String, Vec<Value>>,
    pub scoring: Metric,
    pub cv_folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Grid keys only.
    pub cell: Params,
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_params: Params,
    pub best_score: f64,
    pub best_index: usize,
    pub best_model: Model,
    pub candidates: Vec<Candidate>,
}

/// Test-fold indices for k-fold CV: a seeded shuffle cut into k near-equal
/// parts (the first `n % k` folds get one extra row). Each fold is sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(AnalyticsError::FoldTooSmall { folds: k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Cartesian product of the grid; keys in sorted order, the last key varying fastest.
pub fn enumerate_grid(grid: &BTreeMap<String, Vec<Value>>) -> Result<Vec<Params>> {
    let mut cells = vec![Params::new()];
    for (key, values) in grid {
        if values.is_empty() {
            return Err(AnalyticsError::EmptyGrid(key.clone()));
        }
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = cell.clone();
                    c.insert(key.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    Ok(cells)
}

pub fn grid_search(x: &FeatureMatrix, y: &[f64], config: &GridSearchConfig) -> Result<GridSearchResult> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(AnalyticsError::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }
    let grid_keys: Params = config.param_grid.keys().map(|k| (k.clone(), Value::Null)).collect();
    check_known(config.method, &grid_keys)?;
    let cells = enumerate_grid(&config.param_grid)?;
    let folds = kfold_indices(n, config.cv_folds, config.seed)?;

    let merged: Vec<Params> = cells
        .iter()
        .map(|cell| {
            let mut p = config.base_params.clone();
            p.extend(cell.clone());
            p
        })
        .collect();

    let k = folds.len();
    let jobs = par::map_range(cells.len() * k, |job| -> Result<f64> {
        let (c, f) = (job / k, job % k);
        let test = &folds[f];
        let train: Vec<usize> = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = fit_model(config.method, &xt, &yt, &merged[c])?;
        let xv = x.select_rows(test);
        let yv: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        score(&yv, &model.predict_matrix(&xv.values), config.scoring)
    });

    let mut candidates = Vec::with_capacity(cells.len());
    let mut scores = jobs.into_iter();
    for cell in cells {
        let fold_scores = scores.by_ref().take(k).collect::<Result<Vec<f64>>>()?;
        let mean_score = fold_scores.iter().sum::<f64>() / k as f64;
        candidates.push(Candidate {
            cell,
            fold_scores,
            mean_score,
        });
    }
    let best_index = candidates
        .iter()
        .enumerate()
        .fold(0, |best, (i, c)| if c.mean_score > candidates[best].mean_score { i } else { best });
    let best_model = fit_model(config.method, x, y, &merged[best_index])?;
    Ok(GridSearchResult {
        best_params: candidates[best_index].cell.clone(),
        best_score: candidates[best_index].mean_score,
        best_index,
        best_model,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(pairs: &[(&str, Vec<Value>)]) -> BTreeMap<String, Vec<Value>> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn folds_partition_rows() {
        let folds = kfold_indices(11, 3, 42).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(folds, kfold_indices(11, 3, 42).unwrap());
        assert!(matches!(kfold_indices(3, 4, 0), Err(AnalyticsError::FoldTooSmall { .. })));
        assert!(matches!(kfold_indices(3, 1, 0), Err(AnalyticsError::FoldTooSmall { .. })));
    }

    #[test]
    fn product_enumeration_order() {
        let g = grid(&[("b", vec![3.into(), 4.into()]), ("a", vec![1.into(), 2.into()])]);
        let cells = enumerate_grid(&g).unwrap();
        assert_eq!(cells.len(), 4);
        let flat: Vec<(i64, i64)> = cells
            .iter()
            .map(|c| (c["a"].as_i64().unwrap(), c["b"].as_i64().unwrap()))
            .collect();
        assert_eq!(flat, vec![(1, 3), (1, 4), (2, 3), (2, 4)]);
        assert!(matches!(enumerate_grid(&grid(&[("a", vec![])])), Err(AnalyticsError::EmptyGrid(_))));
    }

    #[test]
    fn single_cell_grid() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let config = GridSearchConfig {
            method: Method::RandomForestRegressor,
            base_params: Params::from([("n_estimators".to_string(), Value::from(3))]),
            param_grid: grid(&[("max_depth", vec![2.into()])]),
            scoring: Metric::R2,
            cv_folds: 2,
            seed: 0,
        };
        let result = grid_search(&x, &y, &config).unwrap();
        assert_eq!(result.candidates.len(), 1);
        assert_eq!(result.best_params, Params::from([("max_depth".to_string(), Value::from(2))]));
        assert_eq!(result.best_model.parameters["max_depth"], Value::from(2));
    }

    #[test]
    fn unknown_grid_key() {
        let x = FeatureMatrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let config = GridSearchConfig {
            method: Method::LinearRegression,
            base_params: Params::new(),
            param_grid: grid(&[("alpha", vec![1.into()])]),
            scoring: Metric::R2,
            cv_folds: 2,
            seed: 0,
        };
        assert!(matches!(
            grid_search(&x, &[1.0, 2.0, 3.0], &config),
            Err(AnalyticsError::InvalidParameter { .. })
        ));
    }
}
