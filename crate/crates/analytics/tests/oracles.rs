//! Kernel results checked against independent brute-force or library oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use p6_analytics::agglomerative::Linkage;
use p6_analytics::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

fn sse_of_labels(x: &Matrix, labels: &[usize], k: usize) -> f64 {
    let d = x.cols();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..x.rows()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let mean: Vec<f64> = (0..d)
            .map(|j| members.iter().map(|&i| x[(i, j)]).sum::<f64>() / members.len() as f64)
            .collect();
        for &i in &members {
            total += (0..d).map(|j| (x[(i, j)] - mean[j]).powi(2)).sum::<f64>();
        }
    }
    total
}

fn exhaustive_min_sse(x: &Matrix, k: usize) -> f64 {
    let n = x.rows();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        best = best.min(sse_of_labels(x, &labels, k));
    }
    best
}

#[test]
fn kmeans_restarts_reach_the_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut matches = 0;
    for _ in 0..40 {
        let n = rng.random_range(3..=8);
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=3.min(n));
        let x = random_matrix(&mut rng, n, d, 10.0);
        let best = (0..20)
            .map(|s| {
                let fit = fit_kmeans(&x, &KMeansParams::new(k).with_seed(s)).unwrap();
                assert!(fit.inertia_history.windows(2).all(|w| w[1] <= w[0]));
                fit.inertia
            })
            .fold(f64::INFINITY, f64::min);
        if (best - exhaustive_min_sse(&x, k)).abs() <= 1e-9 {
            matches += 1;
        }
    }
    assert!(matches >= 38, "only {matches}/40 instances reached the optimum");
}

#[test]
fn pca_matches_library_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (n, d) = (rng.random_range(5..30), rng.random_range(2..6));
        let x = random_matrix(&mut rng, n, d, 5.0);
        let c = d.min(n - 1);
        let fit = fit_pca(&x, c).unwrap();

        let dm = DMatrix::from_row_slice(n, d, x.as_slice());
        let mean = dm.row_mean();
        let centered = DMatrix::from_fn(n, d, |i, j| dm[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let mut oracle: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in fit.explained_variance.iter().zip(&oracle) {
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
        let gram = fit.components.matmul(&fit.components.transpose()).unwrap();
        for i in 0..c {
            for j in 0..c {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - target).abs() <= 1e-9);
            }
        }
        let recon = fit.projected.matmul(&fit.components).unwrap();
        let err: f64 = (0..n)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (recon[(i, j)] - centered[(i, j)]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8 * centered.norm());
    }
}

#[test]
fn ols_residuals_are_orthogonal_and_duplicates_match_pinv() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (n, d) = (rng.random_range(3..25), rng.random_range(1..5));
        let x = random_matrix(&mut rng, n, d, 3.0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let fm = FeatureMatrix::new(x.clone(), (0..d).map(|j| format!("f{j}")).collect()).unwrap();
        let model = fit_linear_regression(&fm, &y).unwrap();
        let pred = model.predict_matrix(&x);
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..d {
            let dot: f64 = (0..n).map(|i| x[(i, j)] * (y[i] - pred[i])).sum();
            assert!(dot.abs() <= 1e-8 * ynorm, "column {j}: {dot}");
        }
        assert!(model.training_score >= -1e-12);
    }

    // Duplicated column against the nalgebra pseudoinverse of [X X 1].
    let xs = [0.5, 1.0, 2.5, 3.0, 4.5];
    let y = [1.0, 2.2, 2.9, 4.1, 5.0];
    let dup = Matrix::from_rows(&xs.iter().map(|v| vec![*v, *v]).collect::<Vec<_>>()).unwrap();
    let fm = FeatureMatrix::new(dup.clone(), vec!["a".into(), "a2".into()]).unwrap();
    let pred = fit_linear_regression(&fm, &y).unwrap().predict_matrix(&dup);
    let design = DMatrix::from_fn(5, 3, |i, j| if j < 2 { xs[i] } else { 1.0 });
    let beta = design.clone().pseudo_inverse(1e-12).unwrap() * nalgebra::DVector::from_row_slice(&y);
    let oracle = &design * beta;
    for i in 0..5 {
        assert!((pred[i] - oracle[i]).abs() <= 1e-8);
    }
}

/// Naive agglomeration: repeatedly merge the closest pair of clusters under the
/// linkage computed from raw point sets.
fn naive_agglomerative(x: &Matrix, linkage: Linkage, k: usize) -> Vec<usize> {
    let dist = |a: usize, b: usize| -> f64 {
        (0..x.cols()).map(|j| (x[(a, j)] - x[(b, j)]).powi(2)).sum::<f64>().sqrt()
    };
    let mut clusters: Vec<Vec<usize>> = (0..x.rows()).map(|i| vec![i]).collect();
    let cluster_dist = |p: &[usize], q: &[usize]| -> f64 {
        match linkage {
            Linkage::Single => p.iter().flat_map(|&a| q.iter().map(move |&b| (a, b))).map(|(a, b)| dist(a, b)).fold(f64::INFINITY, f64::min),
            Linkage::Complete => p.iter().flat_map(|&a| q.iter().map(move |&b| (a, b))).map(|(a, b)| dist(a, b)).fold(0.0, f64::max),
            Linkage::Average => {
                p.iter().flat_map(|&a| q.iter().map(move |&b| (a, b))).map(|(a, b)| dist(a, b)).sum::<f64>()
                    / (p.len() * q.len()) as f64
            }
            Linkage::Ward => {
                let centroid = |s: &[usize]| -> Vec<f64> {
                    (0..x.cols()).map(|j| s.iter().map(|&i| x[(i, j)]).sum::<f64>() / s.len() as f64).collect()
                };
                let (cp, cq) = (centroid(p), centroid(q));
                let d2: f64 = cp.iter().zip(&cq).map(|(a, b)| (a - b).powi(2)).sum();
                (2.0 * (p.len() * q.len()) as f64 / (p.len() + q.len()) as f64 * d2).sqrt()
            }
        }
    };
    while clusters.len() > k {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let d = cluster_dist(&clusters[a], &clusters[b]);
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let merged = clusters.remove(best.1);
        clusters[best.0].extend(merged);
    }
    let mut labels = vec![0; x.rows()];
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&c| *clusters[c].iter().min().unwrap());
    for (new, &c) in order.iter().enumerate() {
        for &i in &clusters[c] {
            labels[i] = new;
        }
    }
    labels
}

#[test]
fn agglomerative_matches_naive_merging() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.random_range(2..12);
        let x = random_matrix(&mut rng, n, 2, 10.0);
        let k = rng.random_range(1..=n);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Ward] {
            let fit = fit_agglomerative(&x, linkage, Some(k), None).unwrap();
            assert_eq!(fit.labels, naive_agglomerative(&x, linkage, k), "{linkage:?} k={k}");
        }
    }
}

#[test]
fn grid_search_best_is_max_of_reevaluated_candidates() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 4.0, (i % 7) as f64]).collect();
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * r[0]).collect();
    let config = GridSearchConfig {
        method: Method::RandomForestRegressor,
        base_params: Params::new(),
        param_grid: [
            ("max_depth".to_string(), vec![Value::from(2), Value::from(4)]),
            ("n_estimators".to_string(), vec![Value::from(10), Value::from(50)]),
        ]
        .into_iter()
        .collect(),
        scoring: Metric::R2,
        cv_folds: 5,
        seed: 9,
    };
    let result = grid_search(&x, &y, &config).unwrap();
    assert_eq!(result.candidates.len(), 4);
    let folds = kfold_indices(40, 5, 9).unwrap();
    let mut best = f64::NEG_INFINITY;
    for cand in &result.candidates {
        let mut total = 0.0;
        for test in &folds {
            let train: Vec<usize> = (0..40).filter(|i| !test.contains(i)).collect();
            let m = fit_model(Method::RandomForestRegressor, &x.select_rows(&train), &train.iter().map(|&i| y[i]).collect::<Vec<_>>(), &cand.cell).unwrap();
            let yv: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            total += score(&yv, &m.predict_matrix(&x.select_rows(test).values), Metric::R2).unwrap();
        }
        let mean = total / 5.0;
        assert!((mean - cand.mean_score).abs() < 1e-12);
        best = best.max(mean);
    }
    assert_eq!(result.best_score, best);
}

fn naive_cost(s: &[f64]) -> f64 {
    let m = s.iter().sum::<f64>() / s.len() as f64;
    s.iter().map(|v| (v - m).powi(2)).sum()
}

#[test]
fn three_level_step_matches_exhaustive_two_split() {
    let mut s = vec![0.0; 30];
    s.extend(vec![10.0; 25]);
    s.extend(vec![4.0; 20]);
    let n = s.len();
    let mut best = (0, 0, f64::INFINITY);
    for i in 1..n {
        for j in (i + 1)..n {
            let c = naive_cost(&s[..i]) + naive_cost(&s[i..j]) + naive_cost(&s[j..]);
            if c < best.2 {
                best = (i, j, c);
            }
        }
    }
    let r = detect_changepoints(&s, Some(2), None).unwrap();
    assert_eq!(r.breakpoint_indices, vec![best.0, best.1]);
    assert_eq!(r.breakpoint_indices, vec![30, 55]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_labels_in_range_and_deterministic(
        pts in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 1..40),
        k in 1usize..5,
        seed in 0u64..1000,
    ) {
        let x = Matrix::from_rows(&pts).unwrap();
        let k = k.min(x.rows());
        let a = fit_kmeans(&x, &KMeansParams::new(k).with_seed(seed)).unwrap();
        let b = fit_kmeans(&x, &KMeansParams::new(k).with_seed(seed)).unwrap();
        prop_assert!(a.labels.iter().all(|&l| l < k));
        prop_assert_eq!(&a.labels, &b.labels);
        prop_assert!(a.inertia_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn forest_predictions_stay_within_target_range(
        ys in prop::collection::vec(-100.0f64..100.0, 2..30),
        seed in 0u64..100,
    ) {
        let rows: Vec<Vec<f64>> = (0..ys.len()).map(|i| vec![i as f64, (i * 3 % 5) as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = fit_random_forest(&x, &ys, &ForestParams { n_estimators: 5, seed, ..Default::default() }).unwrap();
        let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        for p in m.predict_matrix(&x.values) {
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
        let total: f64 = m.attributes["feature_importances"].iter().sum();
        prop_assert!(total == 0.0 || (total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn binseg_penalty_cost_strictly_decreases(
        s in prop::collection::vec(-20.0f64..20.0, 2..80),
        pen in 0.1f64..50.0,
    ) {
        let r = detect_changepoints(&s, None, Some(pen)).unwrap();
        prop_assert!(r.cost_history.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(r.indicator.iter().sum::<i64>() as usize, r.breakpoint_indices.len());
        prop_assert!(r.breakpoint_indices.windows(2).all(|w| w[0] < w[1]));
    }
}
