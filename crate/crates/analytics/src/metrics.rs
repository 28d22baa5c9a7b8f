//! Scoring metrics for model selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    R2,
    Accuracy,
    /// Macro-averaged over the union of observed labels.
    F1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::R2 => "r2",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        }
    }
}

pub fn score(y_true: &[f64], y_pred: &[f64], metric: Metric) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(AnalyticsError::LengthMismatch {
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    match metric {
        Metric::R2 => Ok(r2(y_true, y_pred)),
        Metric::Accuracy => {
            let (t, p) = (labels(y_true, metric)?, labels(y_pred, metric)?);
            if t.is_empty() {
                return Ok(0.0);
            }
            let hits = t.iter().zip(&p).filter(|(a, b)| a == b).count();
            Ok(hits as f64 / t.len() as f64)
        }
        Metric::F1 => {
            let (t, p) = (labels(y_true, metric)?, labels(y_pred, metric)?);
            let classes: BTreeSet<i64> = t.iter().chain(&p).copied().collect();
            if classes.is_empty() {
                return Ok(0.0);
            }
            let total: f64 = classes
                .iter()
                .map(|&c| {
                    let tp = t.iter().zip(&p).filter(|(a, b)| **a == c && **b == c).count() as f64;
                    let fp = t.iter().zip(&p).filter(|(a, b)| **a != c && **b == c).count() as f64;
                    let fn_ = t.iter().zip(&p).filter(|(a, b)| **a == c && **b != c).count() as f64;
                    if tp == 0.0 {
                        0.0
                    } else {
                        2.0 * tp / (2.0 * tp + fp + fn_)
                    }
                })
                .sum();
            Ok(total / classes.len() as f64)
        }
    }
}

fn r2(y_true: &[f64], y_pred: &[f64]) -> f64 {
    let n = y_true.len();
    if n == 0 {
        return 0.0;
    }
    let mean = y_true.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

fn labels(values: &[f64], metric: Metric) -> Result<Vec<i64>> {
    values
        .iter()
        .map(|v| {
            if v.is_finite() && v.fract() == 0.0 {
                Ok(*v as i64)
            } else {
                Err(AnalyticsError::NotLabels {
                    metric: metric.name(),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0.0, 1.0, 1.0, 2.0];
        for m in [Metric::R2, Metric::Accuracy, Metric::F1] {
            assert_eq!(score(&y, &y, m).unwrap(), 1.0);
        }
    }

    #[test]
    fn predicting_the_mean_scores_zero_r2() {
        let y = [1.0, 2.0, 3.0, 6.0];
        assert_eq!(score(&y, &[3.0; 4], Metric::R2).unwrap(), 0.0);
    }

    #[test]
    fn constant_target_conventions() {
        assert_eq!(score(&[2.0, 2.0], &[2.0, 2.0], Metric::R2).unwrap(), 1.0);
        assert_eq!(score(&[2.0, 2.0], &[2.0, 3.0], Metric::R2).unwrap(), 0.0);
    }

    #[test]
    fn confusion_matrix_example() {
        // class 0: tp=1 fp=0 fn=1 -> F1 2/3; class 1: tp=2 fp=1 fn=0 -> F1 4/5.
        let t = [0.0, 0.0, 1.0, 1.0];
        let p = [0.0, 1.0, 1.0, 1.0];
        assert_eq!(score(&t, &p, Metric::Accuracy).unwrap(), 0.75);
        let f1 = score(&t, &p, Metric::F1).unwrap();
        assert!((f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            score(&[1.0], &[1.0, 2.0], Metric::R2),
            Err(AnalyticsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            score(&[0.5], &[1.0], Metric::Accuracy),
            Err(AnalyticsError::NotLabels { .. })
        ));
    }
}
