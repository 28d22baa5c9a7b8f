//! HTTP and WebSocket front end for p6 pipelines.
//!
//! Each pipeline lives in a session that owns its engine. Edits on one
//! session are serialized; reads of scenes and frames go through an
//! immutable snapshot that is swapped in only after an edit succeeds.

mod api;
mod error;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use p6_core::engine::{chain_pipelines, ChangeReport, Engine, EngineContext, EngineError, ResultCache, RunReport, FRAME};
use p6_core::frame::DataFrame;
use p6_core::ingest::{RemoteCache, SourceResolver, UploadStore, UreqFetcher};
use p6_core::spec::parse_pipeline;
use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use serde_json::{json, Value as Json};
use tokio::sync::broadcast;

pub use api::router;
pub use error::ApiError;

pub const DEFAULT_PORT: u16 = 8646;
pub const DEFAULT_MAX_UPLOAD_MB: usize = 64;

#[derive(Debug, Clone)]
pub struct Config {
    /// Directory that relative sources in posted specs resolve against.
    pub base_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub max_upload_bytes: usize,
    /// Extra static files served under `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            cache_dir: std::env::temp_dir().join("p6-cache"),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_MB * 1024 * 1024,
            static_dir: None,
        }
    }
}

impl Config {
    /// Defaults overridden by `P6_CACHE_DIR` and `P6_MAX_UPLOAD_MB`.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        if let Ok(dir) = std::env::var("P6_CACHE_DIR") {
            c.cache_dir = dir.into();
        }
        if let Some(mb) = std::env::var("P6_MAX_UPLOAD_MB").ok().and_then(|v| v.parse::<usize>().ok()) {
            c.max_upload_bytes = mb * 1024 * 1024;
        }
        c
    }
}

/// Message pushed to event subscribers after every successful edit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenesUpdated {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub views: Vec<String>,
    pub revision: u64,
}

/// What readers see of a pipeline between edits.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub revision: u64,
    /// Scenes as served, pre-serialized.
    pub scenes: Arc<Vec<u8>>,
    pub frame: DataFrame,
    /// Rows per scene layer, keyed by `data_ref.view`.
    pub views: BTreeMap<String, DataFrame>,
}

impl Snapshot {
    fn capture(engine: &Engine) -> Result<Self, EngineError> {
        let scenes = engine.scenes()?;
        let mut views = BTreeMap::new();
        for layer in scenes.iter().flat_map(|s| s.all_layers()) {
            if let Some(f) = engine.view_data(&layer.data_ref.view)? {
                views.insert(layer.data_ref.view.clone(), f.clone());
            }
        }
        Ok(Self {
            revision: engine.revision(),
            scenes: Arc::new(serde_json::to_vec(scenes).expect("scenes serialize")),
            frame: engine.frame()?,
            views,
        })
    }
}

pub struct Session {
    pub id: String,
    engine: Mutex<Engine>,
    snapshot: RwLock<Arc<Snapshot>>,
    events: broadcast::Sender<Arc<str>>,
}

impl Session {
    fn new(id: String, engine: Engine) -> Result<Self, EngineError> {
        let snapshot = Snapshot::capture(&engine)?;
        Ok(Self {
            id,
            engine: Mutex::new(engine),
            snapshot: RwLock::new(Arc::new(snapshot)),
            events: broadcast::channel(1024).0,
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.events.subscribe()
    }

    /// Applies one edit. On success the snapshot is replaced and exactly one
    /// event is published before the next edit may start; on failure
    /// nothing observable changes.
    pub fn patch(&self, path: &str, value: &Json) -> Result<ChangeReport, EngineError> {
        let mut engine = self.engine.lock();
        let report = engine.set_parameter(path, value)?;
        if !report.dirty.is_empty() {
            *self.snapshot.write() = Arc::new(Snapshot::capture(&engine)?);
        }
        let event = ScenesUpdated {
            kind: "scenes-updated",
            views: report.views.clone(),
            revision: report.revision,
        };
        let _ = self.events.send(serde_json::to_string(&event).expect("event serializes").into());
        Ok(report)
    }

    pub fn with_engine<T>(&self, f: impl FnOnce(&Engine) -> T) -> T {
        f(&self.engine.lock())
    }
}

pub struct AppState {
    pub config: Config,
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    uploads: Arc<UploadStore>,
    remote: Arc<RemoteCache>,
    cache: Arc<ResultCache>,
}

/// Where a new pipeline reads `$upstream` from.
#[derive(Debug, Clone)]
pub struct Upstream {
    pub pipeline: String,
    /// Export name; the whole frame when absent.
    pub export: Option<String>,
}

impl AppState {
    pub fn new(config: Config) -> Arc<Self> {
        let remote = RemoteCache::new(&config.cache_dir, config.max_upload_bytes as u64, Arc::new(UreqFetcher));
        Arc::new(Self {
            sessions: RwLock::new(BTreeMap::new()),
            uploads: Arc::new(UploadStore::new()),
            remote: Arc::new(remote),
            cache: Arc::new(ResultCache::default()),
            config,
        })
    }

    pub fn context(&self, base_dir: &Path) -> EngineContext {
        let resolver = SourceResolver::new(base_dir)
            .with_uploads(self.uploads.clone())
            .with_remote(self.remote.clone());
        EngineContext::new(base_dir)
            .with_resolver(resolver)
            .with_cache(Some(self.cache.clone()))
    }

    pub fn upload(&self, bytes: Vec<u8>) -> String {
        self.uploads.insert(bytes)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no pipeline `{id}`")))
    }

    pub fn sessions(&self) -> Vec<Arc<Session>> {
        self.sessions.read().values().cloned().collect()
    }

    pub fn remove(&self, id: &str) -> bool {
        self.sessions.write().remove(id).is_some()
    }

    /// Parses, builds and executes a pipeline, registering it on success.
    pub fn create(&self, text: &str, base_dir: Option<&Path>, upstream: Option<&Upstream>) -> Result<(String, RunReport), ApiError> {
        let ctx = self.context(base_dir.unwrap_or(&self.config.base_dir));
        let (engine, report) = match upstream {
            None => Engine::open(text, ctx)?,
            Some(up) => {
                let source = self.session(&up.pipeline)?;
                let export = source.with_engine(|e| e.export_result(up.export.as_deref().unwrap_or(FRAME)))?;
                let engine = chain_pipelines(&export, parse_pipeline(text).map_err(EngineError::from)?, ctx)?;
                (engine, RunReport::default())
            }
        };
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(id.clone(), engine)?;
        self.sessions.write().insert(id.clone(), Arc::new(session));
        Ok((id, report))
    }

    pub fn summary(&self, session: &Session) -> Json {
        let snap = session.snapshot();
        session.with_engine(|e| {
            json!({
                "pipeline_id": session.id,
                "revision": snap.revision,
                "views": e.scenes().map(|s| s.iter().map(|v| v.view_id.clone()).collect::<Vec<_>>()).unwrap_or_default(),
                "rows": snap.frame.row_count(),
            })
        })
    }
}

/// Process exit status for a failed `run`/`serve` setup: 1 for problems with
/// the spec itself, 2 for failures while executing it.
pub fn exit_code(e: &EngineError) -> i32 {
    match e {
        EngineError::Spec(_) | EngineError::Invalid(_) | EngineError::CycleDetected { .. } => 1,
        _ => 2,
    }
}
