//! Kernel throughput with the rayon pool at full width versus a single worker.
//!
//! Built without the `parallel` feature every kernel runs sequentially and the
//! two groups measure the same code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use p6_analytics::{
    detect_changepoints, fit_kmeans, fit_pca, fit_random_forest, grid_search, FeatureMatrix,
    ForestParams, GridSearchConfig, KMeansParams, Matrix, Method, Metric, Params,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn blobs(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let centre = (i % 5) as f64 * 4.0;
            (0..d).map(|_| centre + rng.random::<f64>()).collect()
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn bench_kmeans(c: &mut Criterion) {
    let x = blobs(20_000, 8, 1);
    let mut group = c.benchmark_group("kmeans_20k_x8_k5");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| fit_kmeans(&x, &KMeansParams::new(5)).unwrap()))
        });
    }
    group.finish();
}

fn bench_forest(c: &mut Criterion) {
    let x = FeatureMatrix::new(blobs(2_000, 6, 2), (0..6).map(|j| format!("f{j}")).collect()).unwrap();
    let y: Vec<f64> = (0..2_000).map(|i| x.values[(i, 0)] * 2.0 - x.values[(i, 3)]).collect();
    let params = ForestParams {
        n_estimators: 32,
        max_depth: Some(8),
        ..Default::default()
    };
    let mut group = c.benchmark_group("forest_2k_x6_32trees");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| fit_random_forest(&x, &y, &params).unwrap()))
        });
    }
    group.finish();
}

fn bench_grid(c: &mut Criterion) {
    let x = FeatureMatrix::new(blobs(600, 4, 3), (0..4).map(|j| format!("f{j}")).collect()).unwrap();
    let y: Vec<f64> = (0..600).map(|i| x.values[(i, 1)].powi(2)).collect();
    let config = GridSearchConfig {
        method: Method::RandomForestRegressor,
        base_params: Params::from([("n_estimators".to_string(), Value::from(10))]),
        param_grid: [
            ("max_depth".to_string(), vec![Value::from(2), Value::from(4), Value::from(8)]),
            ("min_samples_leaf".to_string(), vec![Value::from(1), Value::from(5)]),
        ]
        .into_iter()
        .collect(),
        scoring: Metric::R2,
        cv_folds: 5,
        seed: 0,
    };
    let mut group = c.benchmark_group("grid_search_6cells_5folds");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| grid_search(&x, &y, &config).unwrap()))
        });
    }
    group.finish();
}

fn bench_pca_and_changepoints(c: &mut Criterion) {
    let x = blobs(5_000, 40, 4);
    let series: Vec<f64> = (0..200_000).map(|i| ((i / 25_000) % 3) as f64).collect();
    let mut group = c.benchmark_group("pca_5k_x40");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| fit_pca(&x, 2).unwrap()))
        });
    }
    group.finish();
    let mut group = c.benchmark_group("binseg_200k_7bkps");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| detect_changepoints(&series, Some(7), None).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kmeans, bench_forest, bench_grid, bench_pca_and_changepoints);
criterion_main!(benches);
