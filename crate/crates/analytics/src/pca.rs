//! Principal component analysis via eigen-decomposition of the sample
//! covariance matrix (divisor n−1).

use crate::error::{AnalyticsError, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    /// n × c scores of the centred data.
    pub projected: Matrix,
    /// c × d, orthonormal rows; each row's largest-|entry| coordinate is positive.
    pub components: Matrix,
    /// Eigenvalues of the covariance matrix, non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
}

pub fn fit_pca(x: &Matrix, n_components: usize) -> Result<PcaFit> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 || d == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    let max = (n - 1).min(d);
    if n_components == 0 || n_components > max {
        return Err(AnalyticsError::TooManyComponents {
            requested: n_components,
            max,
        });
    }
    if !x.is_finite() {
        return Err(AnalyticsError::NonFinite);
    }

    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }

    let cov = covariance(&centered);
    let (values, vectors) = symmetric_eigen(&cov);

    let mut components = Matrix::zeros(n_components, d);
    for c in 0..n_components {
        let mut v = vectors.column(c);
        let lead = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, *x) } else { best })
            .0;
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.row_mut(c).copy_from_slice(&v);
    }
    let explained_variance = values[..n_components].iter().map(|v| v.max(0.0)).collect();
    let projected = centered.matmul(&components.transpose())?;
    Ok(PcaFit {
        projected,
        components,
        explained_variance,
        mean,
    })
}

fn covariance(centered: &Matrix) -> Matrix {
    let (n, d) = (centered.rows(), centered.cols());
    let rows = par::map_range(d, |a| {
        (0..d)
            .map(|b| {
                if b < a {
                    return 0.0;
                }
                (0..n).map(|i| centered[(i, a)] * centered[(i, b)]).sum::<f64>() / (n - 1) as f64
            })
            .collect::<Vec<_>>()
    });
    let mut cov = Matrix::from_rows(&rows).expect("square");
    for a in 0..d {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_on_the_diagonal() {
        // Covariance of {(1,1),(2,2),(3,3)} is [[1,1],[1,1]]: eigenvalues 2 and 0,
        // leading eigenvector (1,1)/√2.
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let fit = fit_pca(&x, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((fit.components[(0, 0)] - h).abs() < 1e-12);
        assert!((fit.components[(0, 1)] - h).abs() < 1e-12);
        assert!((fit.explained_variance[0] - 2.0).abs() < 1e-12);
        assert!(fit.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn single_varying_feature() {
        let x = Matrix::from_rows(&[[1.0, 5.0, 2.0], [4.0, 5.0, 2.0], [-2.0, 5.0, 2.0]]).unwrap();
        let fit = fit_pca(&x, 1).unwrap();
        assert_eq!(fit.components.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn component_bounds() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(
            fit_pca(&x, 2).unwrap_err(),
            AnalyticsError::TooManyComponents { requested: 2, max: 1 }
        );
        assert!(fit_pca(&x, 0).is_err());
    }
}
