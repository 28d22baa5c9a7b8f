//! Bottom-up hierarchical clustering.
//!
//! Merges are found with the nearest-neighbour chain algorithm over a
//! condensed distance matrix updated by the Lance-Williams recurrences. All
//! four linkages are reducible, so sorting the chain's merges by distance
//! yields the same dendrogram as the naive closest-pair loop.

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    Ward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Representative point of each side at merge time.
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgglomerativeFit {
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// All n−1 merges, ascending by distance.
    pub merges: Vec<Merge>,
}

pub fn fit_agglomerative(
    x: &Matrix,
    linkage: Linkage,
    n_clusters: Option<usize>,
    distance_threshold: Option<f64>,
) -> Result<AgglomerativeFit> {
    let n = x.rows();
    let stop_err = AnalyticsError::BothOrNeitherStopRule {
        first: "n_clusters",
        second: "distance_threshold",
    };
    match (n_clusters, distance_threshold) {
        (Some(_), Some(_)) | (None, None) => return Err(stop_err),
        _ => {}
    }
    if n == 0 || x.cols() == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    if let Some(k) = n_clusters {
        if k == 0 || k > n {
            return Err(AnalyticsError::KTooLarge { k, n });
        }
    }
    if !x.is_finite() {
        return Err(AnalyticsError::NonFinite);
    }

    let mut merges = nn_chain(x, linkage);
    merges.sort_by(|p, q| p.distance.total_cmp(&q.distance));

    let applied = match (n_clusters, distance_threshold) {
        (Some(k), _) => n - k,
        (_, Some(t)) => merges.iter().take_while(|m| m.distance < t).count(),
        _ => unreachable!(),
    };
    let mut uf = UnionFind::new(n);
    for m in &merges[..applied] {
        uf.union(m.a, m.b);
    }
    let mut ids = vec![usize::MAX; n];
    let mut labels = Vec::with_capacity(n);
    let mut next = 0;
    for i in 0..n {
        let root = uf.find(i);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        labels.push(ids[root]);
    }
    Ok(AgglomerativeFit {
        labels,
        n_clusters: next,
        merges,
    })
}

struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.n * i - i * (i + 1) / 2 + (j - i - 1)
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.index(i, j)]
    }
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.d[idx] = v;
    }
}

fn pairwise(x: &Matrix) -> Condensed {
    let n = x.rows();
    let rows = par::map_range(n, |i| {
        ((i + 1)..n)
            .map(|j| squared_distance(x.row(i), x.row(j)).sqrt())
            .collect::<Vec<_>>()
    });
    Condensed {
        n,
        d: rows.into_iter().flatten().collect(),
    }
}

fn nn_chain(x: &Matrix, linkage: Linkage) -> Vec<Merge> {
    let n = x.rows();
    let mut dist = pairwise(x);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        let (a, b, d_ab) = loop {
            let a = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            let (mut best, mut best_d) = match prev {
                Some(p) => (p, dist.get(a, p)),
                None => (usize::MAX, f64::INFINITY),
            };
            for (c, &is_active) in active.iter().enumerate() {
                if !is_active || c == a {
                    continue;
                }
                let dc = dist.get(a, c);
                if dc < best_d {
                    best = c;
                    best_d = dc;
                }
            }
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (a, best, best_d);
            }
            chain.push(best);
        };

        // Keep the lower index as the survivor.
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        let (s_keep, s_drop) = (size[keep] as f64, size[drop] as f64);
        for c in 0..n {
            if !active[c] || c == keep || c == drop {
                continue;
            }
            let d_kc = dist.get(keep, c);
            let d_dc = dist.get(drop, c);
            let s_c = size[c] as f64;
            let updated = match linkage {
                Linkage::Single => d_kc.min(d_dc),
                Linkage::Complete => d_kc.max(d_dc),
                Linkage::Average => (s_keep * d_kc + s_drop * d_dc) / (s_keep + s_drop),
                Linkage::Ward => {
                    let t = s_keep + s_drop + s_c;
                    (((s_keep + s_c) * d_kc * d_kc + (s_drop + s_c) * d_dc * d_dc
                        - s_c * d_ab * d_ab)
                        / t)
                        .max(0.0)
                        .sqrt()
                }
            };
            dist.set(keep, c, updated);
        }
        active[drop] = false;
        size[keep] += size[drop];
        merges.push(Merge {
            a: keep,
            b: drop,
            distance: d_ab,
        });
        // Chain entries other than the merged pair stay valid for reducible linkages.
        chain.retain(|&c| c != drop && c != keep);
    }
    merges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pairs() -> Matrix {
        // Pairs 1 apart, pairs 10 apart.
        Matrix::from_rows(&[[0.0], [1.0], [11.0], [12.0]]).unwrap()
    }

    #[test]
    fn threshold_cuts_between_pairs() {
        let fit = fit_agglomerative(&two_pairs(), Linkage::Single, None, Some(5.0)).unwrap();
        assert_eq!(fit.labels, vec![0, 0, 1, 1]);
        assert_eq!(fit.n_clusters, 2);
        let d: Vec<f64> = fit.merges.iter().map(|m| m.distance).collect();
        assert_eq!(d, vec![1.0, 1.0, 10.0]);
    }

    #[test]
    fn infinite_threshold_merges_everything() {
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward] {
            let fit = fit_agglomerative(&two_pairs(), linkage, None, Some(f64::INFINITY)).unwrap();
            assert_eq!(fit.n_clusters, 1);
        }
    }

    #[test]
    fn n_clusters_equal_n_gives_singletons() {
        let fit = fit_agglomerative(&two_pairs(), Linkage::Average, Some(4), None).unwrap();
        assert_eq!(fit.labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn stop_rule_must_be_unique() {
        let x = two_pairs();
        assert!(matches!(
            fit_agglomerative(&x, Linkage::Ward, Some(2), Some(1.0)),
            Err(AnalyticsError::BothOrNeitherStopRule { .. })
        ));
        assert!(matches!(
            fit_agglomerative(&x, Linkage::Ward, None, None),
            Err(AnalyticsError::BothOrNeitherStopRule { .. })
        ));
    }

    #[test]
    fn single_point() {
        let x = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let fit = fit_agglomerative(&x, Linkage::Single, Some(1), None).unwrap();
        assert_eq!(fit.labels, vec![0]);
        assert!(fit.merges.is_empty());
    }
}
