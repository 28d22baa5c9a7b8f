//! Feature scaling applied before fitting.
//!
//! `normalize` rescales each row to unit L2 norm, `standardize` centers each
//! feature and divides by its population standard deviation, and `minmax`
//! maps each feature's observed range onto `[lo, hi]`.

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    #[default]
    None,
    Normalize,
    Standardize,
    Minmax(f64, f64),
}

pub fn scale_features(x: &FeatureMatrix, method: Scaling) -> Result<FeatureMatrix> {
    let (n, d) = (x.n_rows(), x.n_features());
    if n == 0 || d == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    let mut values = x.values.clone();
    match method {
        Scaling::None => {}
        Scaling::Normalize => {
            for i in 0..n {
                let row = values.row_mut(i);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        Scaling::Standardize => {
            for j in 0..d {
                let col = values.column(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let std = var.sqrt();
                for i in 0..n {
                    values[(i, j)] = if std > 0.0 {
                        (col[i] - mean) / std
                    } else {
                        0.0
                    };
                }
            }
        }
        Scaling::Minmax(lo, hi) => {
            for j in 0..d {
                let col = values.column(j);
                let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = max - min;
                for i in 0..n {
                    values[(i, j)] = if span > 0.0 {
                        lo + (col[i] - min) / span * (hi - lo)
                    } else {
                        lo
                    };
                }
            }
        }
    }
    Ok(FeatureMatrix {
        values,
        feature_names: x.feature_names.clone(),
        scaling_applied: method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn col(v: &[f64]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn standardize_uses_population_std() {
        // std of [1,2,3] is sqrt(2/3); (1-2)/sqrt(2/3) = -1.224744871...
        let out = scale_features(&col(&[1.0, 2.0, 3.0]), Scaling::Standardize).unwrap();
        let expected = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (a, b) in out.values.as_slice().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn minmax_unit_range() {
        let out = scale_features(&col(&[5.0, 10.0, 15.0]), Scaling::Minmax(0.0, 1.0)).unwrap();
        assert_eq!(out.values.as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_feature_conventions() {
        let c = col(&[4.0, 4.0, 4.0]);
        let s = scale_features(&c, Scaling::Standardize).unwrap();
        assert_eq!(s.values.as_slice(), &[0.0, 0.0, 0.0]);
        let m = scale_features(&c, Scaling::Minmax(-1.0, 1.0)).unwrap();
        assert_eq!(m.values.as_slice(), &[-1.0, -1.0, -1.0]);
    }

    #[test]
    fn normalize_rows_to_unit_length() {
        let x = FeatureMatrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap();
        let out = scale_features(&x, Scaling::Normalize).unwrap();
        assert_eq!(out.values.as_slice(), &[0.6, 0.8, 0.0, 0.0]);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let x = FeatureMatrix::from_rows::<Vec<f64>>(&[]).unwrap();
        assert_eq!(
            scale_features(&x, Scaling::None).unwrap_err(),
            AnalyticsError::EmptyMatrix
        );
    }
}
