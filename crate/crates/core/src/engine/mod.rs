//! Reactive pipeline execution.
//!
//! A spec becomes a dependency graph of operations (load, the data-block
//! transform chain, analyses, models, views). Execution runs dirty nodes level
//! by level; an edit marks the nodes whose spec subtree changed plus everything
//! downstream, and only those run again.

mod cache;
mod graph;
mod ops;
mod paths;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use p6_analytics::AnalyticsError;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::frame::{Column, DataFrame, FrameError};
use crate::ingest::{frame_from_json, DropNa, IngestError, SourceResolver};
use crate::spec::{
    expand_view_ref, parse_pipeline, validate_pipeline, InteractionSpec, PipelineSpec, Registry, SpecError,
    ValidationReport, PIPELINE_DATA,
};
use crate::transform::{apply_steps, schema_of, Schema, TransformError};
use crate::vis::{compile_interactions, InteractionView, PluginRegistry, SceneSpec, VisError};

pub use cache::{CacheStats, ResultCache, DEFAULT_CACHE_BYTES};
pub use graph::{build_graph, used_fields, DepGraph, Node, NodeKind, LOAD, TRANSFORM};
pub use ops::{CandidateScore, CompiledView, GridSummary, ModelOutput, ViewOutput};
pub use paths::{catalog, CatalogEntry};

/// Export name of the whole pipeline frame.
pub const FRAME: &str = "$frame";

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Vis(#[from] VisError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("the spec has {} validation finding(s)", .0.findings.len())]
    Invalid(ValidationReport),
    #[error("dependency cycle: {}", cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("operation `{node}` at {path}: {source}")]
    Node {
        node: String,
        path: String,
        #[source]
        source: Box<NodeError>,
    },
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
    #[error("{path}: {message}")]
    TypeError { path: String, message: String },
    #[error("`{0}` has not been executed since the last edit")]
    NotYetExecuted(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("export is not frame-shaped: {0}")]
    ShapeMismatch(String),
}

/// Result of one node. Cloning shares the underlying data.
#[derive(Debug, Clone)]
pub enum NodeOutput {
    Frame(DataFrame),
    Columns(Vec<Arc<Column>>),
    Model(Arc<ModelOutput>),
    Views(Arc<ViewOutput>),
}

impl NodeOutput {
    /// Approximate retained size, for the cache budget.
    pub fn byte_size(&self) -> usize {
        match self {
            NodeOutput::Frame(f) => f.byte_size(),
            NodeOutput::Columns(cols) => cols.iter().map(|c| c.byte_size()).sum(),
            NodeOutput::Model(m) => 4096 + m.model.attributes.values().map(|v| v.len() * 8).sum::<usize>(),
            NodeOutput::Views(v) => {
                1024 + v.views.iter().flat_map(|cv| &cv.layers).map(|(_, f)| f.byte_size()).sum::<usize>()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeResult {
    /// Hash of the node's snapshot and its inputs' hashes; equal hashes mean
    /// equal results.
    pub hash: [u8; 32],
    pub output: NodeOutput,
}

/// Everything an engine needs besides the spec.
#[derive(Clone)]
pub struct EngineContext {
    pub resolver: SourceResolver,
    pub registry: Arc<Registry>,
    pub plugins: Arc<PluginRegistry>,
    pub cache: Option<Arc<ResultCache>>,
}

impl EngineContext {
    /// Relative sources resolve against `base_dir`; results are cached in a
    /// private cache with the default budget.
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self {
            resolver: SourceResolver::new(base_dir),
            registry: Arc::new(Registry::standard()),
            plugins: Arc::new(PluginRegistry::default()),
            cache: Some(Arc::new(ResultCache::default())),
        }
    }

    pub fn with_resolver(mut self, resolver: SourceResolver) -> Self {
        self.resolver = resolver;
        self
    }

    pub fn with_cache(mut self, cache: Option<Arc<ResultCache>>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_plugins(mut self, plugins: PluginRegistry) -> Self {
        self.plugins = Arc::new(plugins);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    /// Nodes that ran, in execution order.
    pub executed: Vec<String>,
    /// Executed nodes served from the result cache.
    pub cache_hits: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ChangeReport {
    pub path: String,
    /// Nodes invalidated by the edit, in topological order.
    pub dirty: Vec<String>,
    pub recomputed: Vec<String>,
    /// Scene ids produced by recomputed view nodes.
    pub views: Vec<String>,
    pub revision: u64,
}

#[derive(Debug, Clone)]
struct Assembly {
    scenes: Vec<SceneSpec>,
    /// Rows each scene layer draws, projected to its `data_ref` columns.
    data: BTreeMap<String, DataFrame>,
}

#[derive(Debug, Clone)]
struct State {
    spec: PipelineSpec,
    graph: DepGraph,
    results: BTreeMap<String, NodeResult>,
    dirty: BTreeSet<String>,
    /// Schema of the loaded data, once known.
    schema: Option<Schema>,
    validated: bool,
    assembly: Option<Assembly>,
}

pub struct Engine {
    ctx: EngineContext,
    state: State,
    revision: u64,
}

fn node_err(node: &Node, source: impl Into<NodeError>) -> EngineError {
    EngineError::Node {
        node: node.id.clone(),
        path: node.path.clone(),
        source: Box::new(source.into()),
    }
}

fn check(report: ValidationReport) -> Result<(), EngineError> {
    if report.is_ok() {
        Ok(())
    } else {
        Err(EngineError::Invalid(report))
    }
}

impl Engine {
    /// Builds the graph and checks what can be checked without data. Nothing
    /// runs until [`Engine::execute`].
    pub fn new(spec: PipelineSpec, ctx: EngineContext) -> Result<Self, EngineError> {
        check(validate_pipeline(&spec, &ctx.registry, None))?;
        let graph = build_graph(&spec)?;
        let dirty = graph.order().into_iter().collect();
        Ok(Self {
            ctx,
            state: State {
                spec,
                graph,
                results: BTreeMap::new(),
                dirty,
                schema: None,
                validated: false,
                assembly: None,
            },
            revision: 0,
        })
    }

    /// Parses, builds and executes.
    pub fn open(text: &str, ctx: EngineContext) -> Result<(Self, RunReport), EngineError> {
        let mut engine = Self::new(parse_pipeline(text)?, ctx)?;
        let report = engine.execute()?;
        Ok((engine, report))
    }

    /// Runs every dirty node. On failure the engine keeps its previous state.
    pub fn execute(&mut self) -> Result<RunReport, EngineError> {
        let mut next = self.state.clone();
        let report = run(&self.ctx, &mut next)?;
        self.state = next;
        self.revision += 1;
        Ok(report)
    }

    /// Same as [`Engine::execute`], for use after [`Engine::stage_parameter`].
    pub fn recompute(&mut self) -> Result<RunReport, EngineError> {
        self.execute()
    }

    /// Applies an edit without running anything. Affected results are
    /// dropped until the next execution.
    pub fn stage_parameter(&mut self, path: &str, value: &Json) -> Result<ChangeReport, EngineError> {
        let mut next = self.state.clone();
        let report = stage(&self.ctx, &mut next, path, value)?;
        self.state = next;
        Ok(report)
    }

    /// Applies an edit and recomputes the affected nodes. Either both succeed
    /// or nothing changes.
    pub fn set_parameter(&mut self, path: &str, value: &Json) -> Result<ChangeReport, EngineError> {
        let mut next = self.state.clone();
        let mut report = stage(&self.ctx, &mut next, path, value)?;
        if next.dirty.is_empty() {
            return Ok(ChangeReport {
                revision: self.revision,
                ..report
            });
        }
        run(&self.ctx, &mut next)?;
        self.state = next;
        self.revision += 1;
        report.recomputed = report.dirty.clone();
        report.views = report
            .dirty
            .iter()
            .filter_map(|id| match self.state.results.get(id).map(|r| &r.output) {
                Some(NodeOutput::Views(v)) => Some(v.views.iter().map(|cv| cv.id.clone())),
                _ => None,
            })
            .flatten()
            .collect();
        report.revision = self.revision;
        Ok(report)
    }

    pub fn spec(&self) -> &PipelineSpec {
        &self.state.spec
    }

    pub fn graph(&self) -> &DepGraph {
        &self.state.graph
    }

    pub fn dirty(&self) -> &BTreeSet<String> {
        &self.state.dirty
    }

    pub fn result(&self, id: &str) -> Option<&NodeResult> {
        self.state.results.get(id)
    }

    /// Increments after each successful execution or effective edit.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn context(&self) -> &EngineContext {
        &self.ctx
    }

    pub fn catalog(&self) -> Vec<CatalogEntry> {
        catalog(&self.state.spec, &self.ctx.registry)
    }

    fn executed(&self) -> Result<&Assembly, EngineError> {
        self.state
            .assembly
            .as_ref()
            .ok_or_else(|| EngineError::NotYetExecuted(self.state.dirty.iter().next().cloned().unwrap_or_default()))
    }

    pub fn scenes(&self) -> Result<&[SceneSpec], EngineError> {
        Ok(&self.executed()?.scenes)
    }

    /// Rows drawn by a scene layer, keyed by its `data_ref.view`.
    pub fn view_data(&self, key: &str) -> Result<Option<&DataFrame>, EngineError> {
        Ok(self.executed()?.data.get(key))
    }

    /// The loaded frame with every analysis output appended, in name order.
    pub fn frame(&self) -> Result<DataFrame, EngineError> {
        pipeline_frame(&self.state)
    }

    /// Column-oriented JSON for frame-shaped results, model attributes for
    /// models and per-view rows for visualizations.
    pub fn export_result(&self, name: &str) -> Result<Json, EngineError> {
        if name == FRAME {
            return Ok(Json::Object(self.frame()?.to_json_columns()));
        }
        if self.state.graph.node(name).is_none() {
            return Err(EngineError::UnknownOperation(name.to_string()));
        }
        let result = self
            .state
            .results
            .get(name)
            .filter(|_| !self.state.dirty.contains(name))
            .ok_or_else(|| EngineError::NotYetExecuted(name.to_string()))?;
        Ok(match &result.output {
            NodeOutput::Frame(f) => Json::Object(f.to_json_columns()),
            NodeOutput::Columns(cols) => {
                Json::Object(cols.iter().map(|c| (c.name().to_string(), Json::Array(c.to_json()))).collect())
            }
            NodeOutput::Model(m) => m.to_json(),
            NodeOutput::Views(v) => {
                let data = &self.executed()?.data;
                Json::Object(
                    v.views
                        .iter()
                        .map(|cv| {
                            let rows = data.get(&cv.id).map_or(Map::new(), DataFrame::to_json_columns);
                            (cv.id.clone(), Json::Object(rows))
                        })
                        .collect(),
                )
            }
        })
    }
}

/// Builds and executes `downstream` with `upstream` (a column-oriented export)
/// readable as the `$upstream` source.
pub fn chain_pipelines(upstream: &Json, downstream: PipelineSpec, ctx: EngineContext) -> Result<Engine, EngineError> {
    if !upstream.is_object() && !upstream.is_array() {
        return Err(EngineError::ShapeMismatch(format!("expected columns or records, got {upstream}")));
    }
    let frame = frame_from_json(upstream).map_err(|e| EngineError::ShapeMismatch(e.to_string()))?;
    let resolver = ctx.resolver.clone().with_upstream(frame);
    let mut engine = Engine::new(downstream, ctx.with_resolver(resolver))?;
    engine.execute()?;
    Ok(engine)
}

/// Structural checks, then checks against the schema of the loaded data.
/// Only the load node runs.
pub fn validate_with_data(spec: &PipelineSpec, ctx: &EngineContext) -> Result<ValidationReport, EngineError> {
    let report = validate_pipeline(spec, &ctx.registry, None);
    if !report.is_ok() {
        return Ok(report);
    }
    let graph = build_graph(spec)?;
    let node = graph.node(LOAD).expect("every graph has a load node");
    let used = (spec.data.preprocessing.dropna == DropNa::Used)
        .then(|| used_fields(spec))
        .flatten();
    let (frame, _) = ops::run_load(&spec.data, used.as_ref(), &ctx.resolver).map_err(|e| node_err(node, e))?;
    Ok(validate_pipeline(spec, &ctx.registry, Some(&schema_of(&frame))))
}

fn stage(ctx: &EngineContext, state: &mut State, path: &str, value: &Json) -> Result<ChangeReport, EngineError> {
    let spec = paths::apply_edit(&state.spec, path, value, &ctx.registry)?;
    let mut report = ChangeReport {
        path: path.to_string(),
        ..ChangeReport::default()
    };
    if spec == state.spec {
        return Ok(report);
    }
    let graph = build_graph(&spec)?;
    let mut edited: BTreeSet<String> = graph
        .nodes()
        .iter()
        .filter(|n| {
            state
                .graph
                .node(&n.id)
                .is_none_or(|old| old.kind != n.kind || old.snapshot != n.snapshot || old.deps != n.deps)
        })
        .map(|n| n.id.clone())
        .collect();
    edited.extend(state.dirty.iter().cloned());
    let dirty = graph.closure(&edited);

    let load_changes = dirty.contains(LOAD);
    match (&state.schema, load_changes) {
        (Some(schema), false) => {
            check(validate_pipeline(&spec, &ctx.registry, Some(schema)))?;
            state.validated = true;
        }
        _ => {
            check(validate_pipeline(&spec, &ctx.registry, None))?;
            state.validated = false;
        }
    }

    state.results.retain(|id, _| graph.node(id).is_some() && !dirty.contains(id));
    report.dirty = graph.order().into_iter().filter(|id| dirty.contains(id)).collect();
    state.spec = spec;
    state.graph = graph;
    state.dirty = dirty;
    state.assembly = None;
    Ok(report)
}

fn base_frame(state: &State) -> Option<&DataFrame> {
    let id = if state.graph.node(TRANSFORM).is_some() { TRANSFORM } else { LOAD };
    match state.results.get(id).map(|r| &r.output) {
        Some(NodeOutput::Frame(f)) => Some(f),
        _ => None,
    }
}

fn pipeline_frame(state: &State) -> Result<DataFrame, EngineError> {
    let not_ready = || EngineError::NotYetExecuted(FRAME.to_string());
    let mut frame = base_frame(state).ok_or_else(not_ready)?.clone();
    for name in state.spec.analyses.keys() {
        match state.results.get(name).map(|r| &r.output) {
            Some(NodeOutput::Columns(cols)) => {
                for c in cols {
                    frame = frame.append_arc(c.clone()).map_err(|e| EngineError::Node {
                        node: name.clone(),
                        path: format!("/analyses/{name}"),
                        source: Box::new(e.into()),
                    })?;
                }
            }
            _ => return Err(not_ready()),
        }
    }
    Ok(frame)
}

/// The base frame plus the outputs of the node's analysis dependencies.
fn input_frame(state: &State, node: &Node) -> Result<DataFrame, EngineError> {
    let mut frame = base_frame(state).expect("base runs first").clone();
    for d in &node.deps {
        if let Some(NodeOutput::Columns(cols)) = state.results.get(d).map(|r| &r.output) {
            for c in cols {
                frame = frame.append_arc(c.clone()).map_err(|e| node_err(node, e))?;
            }
        }
    }
    Ok(frame)
}

fn model_inputs(state: &State, node: &Node) -> BTreeMap<String, Arc<ModelOutput>> {
    node.deps
        .iter()
        .filter_map(|d| match state.results.get(d).map(|r| &r.output) {
            Some(NodeOutput::Model(m)) => Some((d.clone(), m.clone())),
            _ => None,
        })
        .collect()
}

fn signature(state: &State, node: &Node) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(format!("{:?}\0{}\0{}", node.kind, node.id, node.snapshot));
    for d in &node.deps {
        h.update(d.as_bytes());
        h.update(state.results[d].hash);
    }
    h.finalize().into()
}

fn cacheable(state: &State, node: &Node) -> bool {
    match node.kind {
        NodeKind::Load => false,
        NodeKind::Model => state.spec.models.get(&node.id).is_some_and(|m| {
            m.load.is_none() && m.save.is_none() && m.training_data == PIPELINE_DATA
        }),
        _ => true,
    }
}

fn run_node(ctx: &EngineContext, state: &State, node: &Node) -> Result<(NodeResult, bool), EngineError> {
    let spec = &state.spec;
    if node.kind == NodeKind::Load {
        let used = (spec.data.preprocessing.dropna == DropNa::Used)
            .then(|| used_fields(spec))
            .flatten();
        let (frame, digest) = ops::run_load(&spec.data, used.as_ref(), &ctx.resolver).map_err(|e| node_err(node, e))?;
        let mut h = Sha256::new();
        h.update(node.snapshot.to_string());
        h.update(digest);
        return Ok((
            NodeResult {
                hash: h.finalize().into(),
                output: NodeOutput::Frame(frame),
            },
            false,
        ));
    }
    let hash = signature(state, node);
    let cache = ctx.cache.as_ref().filter(|_| cacheable(state, node));
    if let Some(output) = cache.and_then(|c| c.get(&hash)) {
        return Ok((NodeResult { hash, output }, true));
    }
    let output = match node.kind {
        NodeKind::Load => unreachable!("handled above"),
        NodeKind::Transform => {
            let loaded = match &state.results[LOAD].output {
                NodeOutput::Frame(f) => f,
                _ => unreachable!("load yields a frame"),
            };
            NodeOutput::Frame(apply_steps(loaded, &spec.data.transform).map_err(|e| node_err(node, e))?)
        }
        NodeKind::Analysis => {
            let a = &spec.analyses[&node.id];
            let frame = input_frame(state, node)?;
            let models = model_inputs(state, node);
            let model = a.model.as_ref().and_then(|m| models.get(m)).map(|m| &m.model);
            let cols = ops::run_analysis(&node.id, a, &frame, model, &ctx.registry).map_err(|e| node_err(node, e))?;
            NodeOutput::Columns(cols.into_iter().map(Arc::new).collect())
        }
        NodeKind::Model => {
            let m = &spec.models[&node.id];
            let frame = if node.deps.is_empty() { None } else { Some(input_frame(state, node)?) };
            let out = ops::run_model(m, frame.as_ref(), &ctx.resolver).map_err(|e| node_err(node, e))?;
            NodeOutput::Model(Arc::new(out))
        }
        NodeKind::View => {
            let index = spec
                .visualizations
                .iter()
                .position(|e| e.id() == node.id)
                .expect("view nodes come from visualizations");
            let frame = input_frame(state, node)?;
            let models = model_inputs(state, node);
            let out = ops::run_view(index, &spec.visualizations[index], spec, &frame, &models, &ctx.plugins)
                .map_err(|e| node_err(node, e))?;
            NodeOutput::Views(Arc::new(out))
        }
    };
    if let Some(c) = cache {
        c.put(hash, output.clone());
    }
    Ok((NodeResult { hash, output }, false))
}

fn run(ctx: &EngineContext, state: &mut State) -> Result<RunReport, EngineError> {
    let mut report = RunReport::default();
    let graph = state.graph.clone();
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    let mut plan: Vec<Vec<&Node>> = Vec::new();
    for n in graph.nodes().iter().filter(|n| state.dirty.contains(&n.id)) {
        let l = n.deps.iter().filter_map(|d| level.get(d)).map(|l| l + 1).max().unwrap_or(0);
        level.insert(n.id.clone(), l);
        if plan.len() <= l {
            plan.resize_with(l + 1, Vec::new);
        }
        plan[l].push(n);
    }

    for nodes in plan {
        let (first, rest): (Vec<&Node>, Vec<&Node>) = nodes.into_iter().partition(|n| n.kind == NodeKind::Load);
        for batch in [first, rest] {
            if batch.is_empty() {
                continue;
            }
            let started: Vec<Instant> = batch.iter().map(|_| Instant::now()).collect();
            let outs = crate::par::map(&batch, |n| run_node(ctx, state, n));
            for ((n, out), t0) in batch.iter().zip(outs).zip(started) {
                let (result, hit) = out?;
                report.timings_ms.insert(n.id.clone(), t0.elapsed().as_secs_f64() * 1e3);
                report.executed.push(n.id.clone());
                if hit {
                    report.cache_hits.push(n.id.clone());
                }
                state.results.insert(n.id.clone(), result);
            }
            if !state.validated && state.results.contains_key(LOAD) && batch.iter().any(|n| n.kind == NodeKind::Load) {
                let NodeOutput::Frame(f) = &state.results[LOAD].output else { unreachable!() };
                let schema = schema_of(f);
                check(validate_pipeline(&state.spec, &ctx.registry, Some(&schema)))?;
                state.schema = Some(schema);
                state.validated = true;
            }
        }
    }
    if !state.validated {
        if let Some(NodeOutput::Frame(f)) = state.results.get(LOAD).map(|r| &r.output) {
            let schema = schema_of(f);
            check(validate_pipeline(&state.spec, &ctx.registry, Some(&schema)))?;
            state.schema = Some(schema);
            state.validated = true;
        }
    }
    state.dirty.clear();
    state.assembly = Some(assemble(state)?);
    Ok(report)
}

fn assemble(state: &State) -> Result<Assembly, EngineError> {
    let mut order = Vec::new();
    let mut scenes = BTreeMap::new();
    let mut groups = Vec::new();
    let mut compiled: Vec<&CompiledView> = Vec::new();
    for entry in &state.spec.visualizations {
        let Some(NodeOutput::Views(out)) = state.results.get(entry.id()).map(|r| &r.output) else {
            return Err(EngineError::NotYetExecuted(entry.id().to_string()));
        };
        groups.extend(out.group.clone());
        for cv in &out.views {
            order.push(cv.id.clone());
            scenes.insert(cv.id.clone(), cv.scene.clone());
            compiled.push(cv);
        }
    }
    let interactions: Vec<InteractionSpec> = state
        .spec
        .interactions
        .iter()
        .flat_map(|it| {
            let targets: Vec<String> = it.targets.iter().flat_map(|t| expand_view_ref(t, &groups)).collect();
            expand_view_ref(&it.source, &groups).into_iter().map(move |source| InteractionSpec {
                source,
                targets: targets.clone(),
                ..it.clone()
            })
        })
        .collect();
    let views: BTreeMap<String, InteractionView<'_>> = compiled
        .iter()
        .map(|cv| {
            (
                cv.id.clone(),
                InteractionView {
                    spec: &cv.spec,
                    data: &cv.layers[0].1,
                },
            )
        })
        .collect();
    compile_interactions(&mut scenes, &views, &interactions).map_err(|e| EngineError::Node {
        node: "interactions".into(),
        path: "/interactions".into(),
        source: Box::new(e.into()),
    })?;

    let mut data = BTreeMap::new();
    for cv in &compiled {
        let scene = &scenes[&cv.id];
        for layer in scene.all_layers() {
            let Some((_, frame)) = cv.layers.iter().find(|(k, _)| *k == layer.data_ref.view) else { continue };
            let projected = frame.project(&layer.data_ref.columns).map_err(|e| EngineError::Node {
                node: cv.id.clone(),
                path: "/visualizations".into(),
                source: Box::new(e.into()),
            })?;
            data.insert(layer.data_ref.view.clone(), projected);
        }
    }
    let scenes = order.into_iter().map(|id| scenes.remove(&id).expect("compiled")).collect();
    Ok(Assembly { scenes, data })
}

/// JSON summary of a run, handy for logs and the CLI.
pub fn describe(engine: &Engine) -> Json {
    json!({
        "revision": engine.revision(),
        "nodes": engine.graph().nodes().iter().map(|n| json!({"id": n.id, "kind": n.kind, "deps": n.deps})).collect::<Vec<_>>(),
    })
}
