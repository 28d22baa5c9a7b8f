//! Ordinary least squares via the SVD pseudoinverse of `[X | 1]`.

use std::collections::BTreeMap;

use crate::error::{AnalyticsError, Result};
use crate::linalg::lstsq_min_norm;
use crate::matrix::{FeatureMatrix, Matrix};
use crate::metrics::{score, Metric};
use crate::model::{FittedState, Method, Model, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub fit_intercept: bool,
}

/// Minimum-norm least-squares fit with an intercept column.
pub fn fit_linear_regression(x: &FeatureMatrix, y: &[f64]) -> Result<Model> {
    fit_linear_regression_with(x, y, &LinearParams { fit_intercept: true })
}

pub fn fit_linear_regression_with(x: &FeatureMatrix, y: &[f64], params: &LinearParams) -> Result<Model> {
    let (n, d) = (x.n_rows(), x.n_features());
    if n == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    if y.len() != n {
        return Err(AnalyticsError::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if !x.values.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let p = d + usize::from(params.fit_intercept);
    let mut design = Matrix::zeros(n, p);
    for i in 0..n {
        design.row_mut(i)[..d].copy_from_slice(x.values.row(i));
        if params.fit_intercept {
            design[(i, d)] = 1.0;
        }
    }
    let solution = lstsq_min_norm(&design, y);
    let coefficients = solution[..d].to_vec();
    let intercept = if params.fit_intercept { solution[d] } else { 0.0 };

    let mut model = Model {
        method: Method::LinearRegression,
        feature_names: x.feature_names.clone(),
        parameters: Params::from([("fit_intercept".to_string(), params.fit_intercept.into())]),
        state: FittedState::Linear {
            coefficients: coefficients.clone(),
            intercept,
        },
        attributes: BTreeMap::from([("coefficients".to_string(), coefficients)]),
        training_score: 0.0,
    };
    let fitted = model.predict_matrix(&x.values);
    model.training_score = score(y, &fitted, Metric::R2)?;
    Ok(model)
}
