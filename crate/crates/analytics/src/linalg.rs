//! Small dense decompositions: cyclic Jacobi for symmetric eigenproblems and
//! one-sided (Hestenes) Jacobi for the SVD. Both are accurate to working
//! precision on the matrix sizes a feature catalogue produces.

use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix. Returns eigenvalues sorted
/// descending and the matching unit eigenvectors as the *columns* of the
/// returned matrix.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    (values, vectors)
}

/// Thin SVD `A = U Σ Vᵀ` of an n×p matrix via one-sided Jacobi rotations on
/// the columns. Singular values are unsorted and may be zero; `u_sigma`
/// holds the columns `σ_j u_j` (i.e. `A V`).
pub struct Svd {
    pub u_sigma: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    let (n, p) = (a.rows(), a.cols());
    let mut w: Vec<Vec<f64>> = (0..p).map(|j| a.column(j)).collect();
    let mut v = Matrix::identity(p);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..p {
            for k in (j + 1)..p {
                let alpha = dot(&w[j], &w[j]);
                let beta = dot(&w[k], &w[k]);
                let gamma = dot(&w[j], &w[k]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = w.split_at_mut(k);
                let (wj, wk) = (&mut left[j], &mut right[0]);
                for i in 0..n {
                    let x = wj[i];
                    let y = wk[i];
                    wj[i] = c * x - s * y;
                    wk[i] = s * x + c * y;
                }
                for i in 0..p {
                    let x = v[(i, j)];
                    let y = v[(i, k)];
                    v[(i, j)] = c * x - s * y;
                    v[(i, k)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let singular_values = w.iter().map(|c| dot(c, c).sqrt()).collect();
    Svd {
        u_sigma: w,
        singular_values,
        v,
    }
}

/// Minimum-norm least-squares solution of `A x ≈ b` via the pseudoinverse,
/// truncating singular values below `max(n,p)·ε·σ_max`.
pub fn lstsq_min_norm(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let (n, p) = (a.rows(), a.cols());
    let svd = svd(a);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * (n.max(p) as f64) * f64::EPSILON;
    let mut x = vec![0.0; p];
    for j in 0..p {
        let s = svd.singular_values[j];
        if s <= tol || s == 0.0 {
            continue;
        }
        // u_j = (A v_j)/σ_j, so u_jᵀ b / σ_j = (A v_j)ᵀ b / σ_j².
        let coef = svd.u_sigma[j].iter().zip(b).map(|(u, y)| u * y).sum::<f64>() / (s * s);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * svd.v[(i, j)];
        }
    }
    x
}
