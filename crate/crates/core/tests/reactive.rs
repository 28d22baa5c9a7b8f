use std::collections::BTreeSet;

use p6_core::engine::{DepGraph, Engine, EngineContext, EngineError};
use p6_core::ingest::SourceResolver;
use p6_core::spec::pipeline_from_value;
use p6_core::testkit::{random_edit_value, random_small_pipeline, small_frame};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ctx(seed: u64) -> EngineContext {
    let frame = small_frame(&mut ChaCha8Rng::seed_from_u64(seed), 80);
    EngineContext::new(".").with_resolver(SourceResolver::new(".").with_upstream(frame))
}

/// Everything reachable from nodes whose snapshot or inputs changed,
/// computed by a plain fixpoint over the dependency lists.
fn reachable(old: &DepGraph, new: &DepGraph) -> Vec<String> {
    let mut dirty: BTreeSet<String> = new
        .nodes()
        .iter()
        .filter(|n| old.node(&n.id).is_none_or(|o| o.snapshot != n.snapshot || o.deps != n.deps || o.kind != n.kind))
        .map(|n| n.id.clone())
        .collect();
    loop {
        let before = dirty.len();
        for n in new.nodes() {
            if n.deps.iter().any(|d| dirty.contains(d)) {
                dirty.insert(n.id.clone());
            }
        }
        if dirty.len() == before {
            break;
        }
    }
    new.nodes().iter().map(|n| n.id.clone()).filter(|id| dirty.contains(id)).collect()
}

fn outputs(e: &Engine) -> (Vec<u8>, String) {
    let scenes: Vec<_> = e.scenes().unwrap().iter().map(|s| s.to_json()).collect();
    (e.frame().unwrap().encode(), serde_json::to_string(&scenes).unwrap())
}

#[test]
fn edits_match_fresh_runs_and_recompute_only_the_closure() {
    let mut applied = 0;
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = pipeline_from_value(&random_small_pipeline(&mut rng)).unwrap();
        let mut engine = Engine::new(spec, ctx(seed)).unwrap();
        engine.execute().unwrap();
        let fields: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        for _ in 0..6 {
            let catalog = engine.catalog();
            let entry = catalog.choose(&mut rng).unwrap();
            let value = random_edit_value(&mut rng, entry, &fields);
            let before = outputs(&engine);
            let old_graph = engine.graph().clone();
            match engine.set_parameter(&entry.path, &value) {
                Ok(report) => {
                    applied += 1;
                    assert_eq!(report.recomputed, reachable(&old_graph, engine.graph()), "{} = {value}", entry.path);
                    let fresh = Engine::new(engine.spec().clone(), ctx(seed)).and_then(|mut f| f.execute().map(|_| f)).unwrap();
                    assert_eq!(outputs(&engine), outputs(&fresh), "{} = {value}", entry.path);
                }
                Err(EngineError::Node { .. } | EngineError::Invalid(_) | EngineError::TypeError { .. }) => {
                    assert_eq!(outputs(&engine), before, "failed edits change nothing");
                    assert!(engine.dirty().is_empty());
                }
                Err(other) => panic!("{} = {value}: {other}", entry.path),
            }
            if rng.random_bool(0.1) {
                let again = engine.set_parameter(&entry.path, &engine_value(&engine, &entry.path));
                assert!(again.is_ok_and(|r| r.dirty.is_empty()));
            }
        }
    }
    assert!(applied >= 30, "only {applied} edits applied");
}

fn engine_value(e: &Engine, path: &str) -> serde_json::Value {
    e.catalog().into_iter().find(|c| c.path == path).map(|c| c.value).unwrap()
}
