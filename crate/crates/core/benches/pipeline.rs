//! Whole-pipeline execution, reactive edits and the frame codec, each on a
//! single-worker rayon pool and on the full pool. Without the `parallel`
//! feature both groups run the sequential path.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use p6_core::engine::{Engine, EngineContext};
use p6_core::frame::{decode_binary, encode_binary};
use p6_core::spec::parse_pipeline;
use p6_core::testkit::small_frame;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn specs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

/// No result cache, so every iteration does the full work.
fn uncached() -> EngineContext {
    EngineContext::new(specs()).with_cache(None)
}

fn bench_execute(c: &mut Criterion) {
    let mut group = c.benchmark_group("execute");
    group.sample_size(10);
    for name in ["baby_fig2.json", "eva_dashboard.json", "hpc_clustering.json"] {
        let spec = parse_pipeline(&std::fs::read_to_string(specs().join(name)).unwrap()).unwrap();
        for (mode, pool) in pools() {
            group.bench_function(BenchmarkId::new(name.trim_end_matches(".json"), mode), |b| {
                b.iter(|| {
                    pool.install(|| {
                        let mut e = Engine::new(spec.clone(), uncached()).unwrap();
                        e.execute().unwrap()
                    })
                })
            });
        }
    }
    group.finish();
}

fn bench_edit(c: &mut Criterion) {
    let text = std::fs::read_to_string(specs().join("baby_fig2.json")).unwrap();
    let mut group = c.benchmark_group("edit_n_clusters");
    group.sample_size(10);
    for (mode, pool) in pools() {
        let mut engine = Engine::open(&text, uncached()).unwrap().0;
        let mut k = 2;
        group.bench_function(BenchmarkId::from_parameter(mode), |b| {
            b.iter(|| {
                k = if k == 6 { 2 } else { k + 1 };
                pool.install(|| engine.set_parameter("/analyses/Clusters/parameters/n_clusters", &json!(k)).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_codec(c: &mut Criterion) {
    let frame = small_frame(&mut ChaCha8Rng::seed_from_u64(3), 100_000);
    let bytes = encode_binary(&frame);
    let mut group = c.benchmark_group("codec");
    group.throughput(criterion::Throughput::Bytes(bytes.len() as u64));
    group.bench_function("encode", |b| b.iter(|| encode_binary(&frame)));
    group.bench_function("decode", |b| b.iter(|| decode_binary(&bytes).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_execute, bench_edit, bench_codec);
criterion_main!(benches);
