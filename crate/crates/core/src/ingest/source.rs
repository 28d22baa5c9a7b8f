//! Resolution of data-source locators: local paths, upload tokens, cached
//! remote bodies, http(s) URLs and the upstream pipeline's export.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::RwLock;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::remote::CACHE_TOKEN_PREFIX;
use super::{parse_table, Format, IngestError, RemoteCache};
use crate::frame::DataFrame;

/// Locator naming the frame exported by an upstream pipeline.
pub const UPSTREAM: &str = "$upstream";
pub const UPLOAD_TOKEN_PREFIX: &str = "upload:";

/// Client uploads held in memory for the lifetime of the process.
#[derive(Default)]
pub struct UploadStore {
    entries: RwLock<HashMap<String, Arc<Vec<u8>>>>,
}

impl UploadStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, bytes: Vec<u8>) -> String {
        let mut raw = [0u8; 16];
        rand::rng().fill_bytes(&mut raw);
        let token: String = std::iter::once(UPLOAD_TOKEN_PREFIX.to_string())
            .chain(raw.iter().map(|b| format!("{b:02x}")))
            .collect();
        self.entries.write().insert(token.clone(), Arc::new(bytes));
        token
    }

    pub fn get(&self, token: &str) -> Option<Arc<Vec<u8>>> {
        self.entries.read().get(token).cloned()
    }
}

pub struct LoadedSource {
    pub frame: DataFrame,
    /// Hash of the raw source bytes, so unchanged inputs can be recognised.
    pub digest: [u8; 32],
}

#[derive(Clone, Default)]
pub struct SourceResolver {
    pub base_dir: PathBuf,
    pub uploads: Option<Arc<UploadStore>>,
    pub remote: Option<Arc<RemoteCache>>,
    pub upstream: Option<DataFrame>,
}

impl SourceResolver {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_dir: base_dir.into(),
            ..Self::default()
        }
    }

    pub fn with_uploads(mut self, store: Arc<UploadStore>) -> Self {
        self.uploads = Some(store);
        self
    }

    pub fn with_remote(mut self, cache: Arc<RemoteCache>) -> Self {
        self.remote = Some(cache);
        self
    }

    pub fn with_upstream(mut self, frame: DataFrame) -> Self {
        self.upstream = Some(frame);
        self
    }

    pub fn resolve_path(&self, locator: &str) -> PathBuf {
        let p = Path::new(locator);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load(&self, locator: &str, format: Option<Format>) -> Result<LoadedSource, IngestError> {
        if locator == UPSTREAM {
            let frame = self
                .upstream
                .clone()
                .ok_or_else(|| IngestError::UnknownToken(UPSTREAM.to_string()))?;
            let digest = Sha256::digest(frame.encode()).into();
            return Ok(LoadedSource { frame, digest });
        }
        let (bytes, sniff): (Arc<Vec<u8>>, bool) = if locator.starts_with(UPLOAD_TOKEN_PREFIX) {
            let bytes = self
                .uploads
                .as_ref()
                .and_then(|u| u.get(locator))
                .ok_or_else(|| IngestError::UnknownToken(locator.to_string()))?;
            (bytes, true)
        } else if locator.starts_with(CACHE_TOKEN_PREFIX) || is_url(locator) {
            let cache = self.remote.as_ref().ok_or_else(|| IngestError::Network {
                status: None,
                message: "remote sources are not enabled".into(),
            })?;
            let token = if is_url(locator) {
                cache.fetch(locator)?
            } else {
                locator.to_string()
            };
            let sniff = !is_url(locator);
            (Arc::new(cache.read(&token)?), sniff)
        } else {
            let path = self.resolve_path(locator);
            let bytes = std::fs::read(&path).map_err(|e| IngestError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            (Arc::new(bytes), false)
        };
        let format = format.unwrap_or_else(|| {
            if sniff {
                sniff_format(&bytes)
            } else {
                Format::infer(locator)
            }
        });
        let frame = parse_table(&bytes, format)?;
        Ok(LoadedSource {
            frame,
            digest: Sha256::digest(&*bytes).into(),
        })
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

fn sniff_format(bytes: &[u8]) -> Format {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'[') | Some(b'{') => Format::JsonRecords,
        _ => Format::Csv,
    }
}
