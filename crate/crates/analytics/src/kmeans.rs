//! K-Means clustering: Lloyd iterations from a seeded k-means++ start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AnalyticsError, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub n_clusters: usize,
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid movement.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansParams {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            max_iter: 300,
            tol: 1e-4,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Cluster id per row, numbered by first occurrence.
    pub labels: Vec<usize>,
    /// k × d, row `c` is the centroid of cluster `c`.
    pub centroids: Matrix,
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after every assignment step, in order.
    pub inertia_history: Vec<f64>,
}

pub fn fit_kmeans(x: &Matrix, params: &KMeansParams) -> Result<KMeansFit> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 || d == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    let k = params.n_clusters;
    if k == 0 || k > n {
        return Err(AnalyticsError::KTooLarge { k, n });
    }
    if !x.is_finite() {
        return Err(AnalyticsError::NonFinite);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = kmeans_plus_plus(x, k, &mut rng);
    let mut history = Vec::new();
    let mut labels;
    let mut n_iter = 0;

    loop {
        let (l, inertia) = assign(x, &centroids);
        labels = l;
        history.push(inertia);
        if n_iter >= params.max_iter {
            break;
        }
        n_iter += 1;
        let updated = update_centroids(x, &labels, &centroids);
        let shift: f64 = (0..k)
            .map(|c| squared_distance(updated.row(c), centroids.row(c)))
            .sum();
        centroids = updated;
        if shift < params.tol {
            let (l, inertia) = assign(x, &centroids);
            labels = l;
            history.push(inertia);
            break;
        }
    }

    let (labels, centroids) = relabel_by_first_occurrence(&labels, &centroids);
    let inertia = *history.last().expect("at least one assignment step");
    Ok(KMeansFit {
        labels,
        centroids,
        inertia,
        n_iter,
        inertia_history: history,
    })
}

fn kmeans_plus_plus(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let (n, d) = (x.rows(), x.cols());
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut closest: Vec<f64> = (0..n)
        .map(|i| squared_distance(x.row(i), x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in closest.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final sum.
            pick.unwrap_or_else(|| closest.iter().rposition(|w| *w > 0.0).unwrap())
        } else {
            // Every remaining point coincides with a chosen centre.
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(squared_distance(x.row(i), x.row(next)));
        }
    }
    let mut centroids = Matrix::zeros(k, d);
    for (c, &i) in chosen.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(x.row(i));
    }
    centroids
}

/// Nearest-centroid assignment (lowest index wins ties) and the resulting SSE.
fn assign(x: &Matrix, centroids: &Matrix) -> (Vec<usize>, f64) {
    let k = centroids.rows();
    let pairs = par::map_range(x.rows(), |i| {
        let row = x.row(i);
        let mut best = (0usize, f64::INFINITY);
        for c in 0..k {
            let dist = squared_distance(row, centroids.row(c));
            if dist < best.1 {
                best = (c, dist);
            }
        }
        best
    });
    let inertia = pairs.iter().map(|p| p.1).sum();
    (pairs.into_iter().map(|p| p.0).collect(), inertia)
}

/// Means of assigned rows; an empty cluster keeps its previous centroid.
fn update_centroids(x: &Matrix, labels: &[usize], previous: &Matrix) -> Matrix {
    let (k, d) = (previous.rows(), previous.cols());
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate().take(k) {
        if count == 0 {
            sums.row_mut(c).copy_from_slice(previous.row(c));
        } else {
            let inv = count as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s /= inv);
        }
    }
    sums
}

fn relabel_by_first_occurrence(labels: &[usize], centroids: &Matrix) -> (Vec<usize>, Matrix) {
    let k = centroids.rows();
    let mut mapping = vec![usize::MAX; k];
    let mut next = 0;
    for &l in labels {
        if mapping[l] == usize::MAX {
            mapping[l] = next;
            next += 1;
        }
    }
    // Clusters that ended up empty keep their relative order after the used ones.
    for m in mapping.iter_mut() {
        if *m == usize::MAX {
            *m = next;
            next += 1;
        }
    }
    let mut reordered = Matrix::zeros(k, centroids.cols());
    for (old, &new) in mapping.iter().enumerate() {
        reordered.row_mut(new).copy_from_slice(centroids.row(old));
    }
    (labels.iter().map(|&l| mapping[l]).collect(), reordered)
}
