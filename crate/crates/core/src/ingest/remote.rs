//! Server-side cache for remote sources, revalidated with ETags.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IngestError;

pub const DEFAULT_REMOTE_CAP: u64 = 256 * 1024 * 1024;

pub enum FetchOutcome {
    /// The cached ETag still matches; no body was transferred.
    NotModified,
    Body { bytes: Vec<u8>, etag: Option<String> },
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, etag: Option<&str>, limit: u64) -> Result<FetchOutcome, IngestError>;
}

pub struct UreqFetcher;

impl Fetcher for UreqFetcher {
    fn fetch(&self, url: &str, etag: Option<&str>, limit: u64) -> Result<FetchOutcome, IngestError> {
        let mut req = ureq::get(url);
        if let Some(tag) = etag {
            req = req.header("If-None-Match", tag);
        }
        let mut resp = req.call().map_err(|e| match e {
            ureq::Error::StatusCode(code) => IngestError::Network {
                status: Some(code),
                message: format!("GET {url} returned {code}"),
            },
            other => IngestError::Network {
                status: None,
                message: other.to_string(),
            },
        })?;
        if resp.status().as_u16() == 304 {
            return Ok(FetchOutcome::NotModified);
        }
        let declared = resp
            .headers()
            .get("content-length")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse::<u64>().ok());
        if declared.is_some_and(|len| len > limit) {
            return Err(IngestError::SizeLimitExceeded { limit });
        }
        let new_tag = resp
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let bytes = resp
            .body_mut()
            .with_config()
            .limit(limit)
            .read_to_vec()
            .map_err(|e| match e {
                ureq::Error::BodyExceedsLimit(_) => IngestError::SizeLimitExceeded { limit },
                other => IngestError::Network {
                    status: None,
                    message: other.to_string(),
                },
            })?;
        Ok(FetchOutcome::Body { bytes, etag: new_tag })
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    url: String,
    etag: Option<String>,
}

/// Bodies live in `dir` under a hash of the URL. A cached entry with an ETag
/// is revalidated on every fetch; one without is refetched.
pub struct RemoteCache {
    dir: PathBuf,
    cap: u64,
    fetcher: Arc<dyn Fetcher>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

pub const CACHE_TOKEN_PREFIX: &str = "cache:";

impl RemoteCache {
    pub fn new(dir: impl Into<PathBuf>, cap: u64, fetcher: Arc<dyn Fetcher>) -> Self {
        Self {
            dir: dir.into(),
            cap,
            fetcher,
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key(url: &str) -> String {
        Sha256::digest(url.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn io(&self, path: &Path, e: std::io::Error) -> IngestError {
        IngestError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Returns a `cache:` token that [`RemoteCache::read`] resolves to the body.
    pub fn fetch(&self, url: &str) -> Result<String, IngestError> {
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(IngestError::Network {
                status: None,
                message: format!("not an http(s) URL: {url}"),
            });
        }
        let key = Self::key(url);
        let lock = self.locks.lock().entry(key.clone()).or_default().clone();
        let _guard = lock.lock();

        let body_path = self.dir.join(format!("{key}.body"));
        let meta_path = self.dir.join(format!("{key}.meta"));
        let cached: Option<Meta> = std::fs::read(&meta_path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .filter(|_| body_path.exists());
        let etag = cached.as_ref().and_then(|m| m.etag.as_deref());
        match self.fetcher.fetch(url, etag, self.cap)? {
            FetchOutcome::NotModified if cached.is_some() => {}
            FetchOutcome::NotModified => {
                return Err(IngestError::Network {
                    status: Some(304),
                    message: "not modified, but nothing is cached".into(),
                })
            }
            FetchOutcome::Body { bytes, etag } => {
                if bytes.len() as u64 > self.cap {
                    return Err(IngestError::SizeLimitExceeded { limit: self.cap });
                }
                std::fs::create_dir_all(&self.dir).map_err(|e| self.io(&self.dir, e))?;
                std::fs::write(&body_path, &bytes).map_err(|e| self.io(&body_path, e))?;
                let meta = serde_json::to_vec(&Meta {
                    url: url.to_string(),
                    etag,
                })
                .expect("meta serializes");
                std::fs::write(&meta_path, meta).map_err(|e| self.io(&meta_path, e))?;
            }
        }
        Ok(format!("{CACHE_TOKEN_PREFIX}{key}"))
    }

    pub fn read(&self, token: &str) -> Result<Vec<u8>, IngestError> {
        let key = token
            .strip_prefix(CACHE_TOKEN_PREFIX)
            .filter(|k| k.len() == 64 && k.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| IngestError::UnknownToken(token.to_string()))?;
        let path = self.dir.join(format!("{key}.body"));
        std::fs::read(&path).map_err(|_| IngestError::UnknownToken(token.to_string()))
    }

    /// The URL a token was fetched from, if known.
    pub fn url_of(&self, token: &str) -> Option<String> {
        let key = token.strip_prefix(CACHE_TOKEN_PREFIX)?;
        let meta: Meta = serde_json::from_slice(&std::fs::read(self.dir.join(format!("{key}.meta"))).ok()?).ok()?;
        Some(meta.url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Mock {
        calls: AtomicUsize,
        body_reads: AtomicUsize,
    }

    impl Fetcher for Mock {
        fn fetch(&self, url: &str, etag: Option<&str>, limit: u64) -> Result<FetchOutcome, IngestError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if url.ends_with("/missing") {
                return Err(IngestError::Network {
                    status: Some(404),
                    message: "not found".into(),
                });
            }
            if url.ends_with("/huge") {
                return Err(IngestError::SizeLimitExceeded { limit });
            }
            if etag == Some("\"v1\"") {
                return Ok(FetchOutcome::NotModified);
            }
            self.body_reads.fetch_add(1, Ordering::SeqCst);
            Ok(FetchOutcome::Body {
                bytes: b"a\n1\n".to_vec(),
                etag: Some("\"v1\"".into()),
            })
        }
    }

    #[test]
    fn etag_hit_skips_body() {
        let dir = tempfile::tempdir().unwrap();
        let mock = Arc::new(Mock {
            calls: AtomicUsize::new(0),
            body_reads: AtomicUsize::new(0),
        });
        let cache = RemoteCache::new(dir.path(), DEFAULT_REMOTE_CAP, mock.clone());
        let t1 = cache.fetch("https://example.org/data.csv").unwrap();
        let t2 = cache.fetch("https://example.org/data.csv").unwrap();
        assert_eq!(t1, t2);
        assert_eq!(mock.body_reads.load(Ordering::SeqCst), 1);
        assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
        assert_eq!(cache.read(&t1).unwrap(), b"a\n1\n");
        assert_eq!(cache.url_of(&t1).unwrap(), "https://example.org/data.csv");
    }

    #[test]
    fn errors_pass_through() {
        let dir = tempfile::tempdir().unwrap();
        let mock = Arc::new(Mock {
            calls: AtomicUsize::new(0),
            body_reads: AtomicUsize::new(0),
        });
        let cache = RemoteCache::new(dir.path(), 10, mock);
        assert!(matches!(
            cache.fetch("https://example.org/missing"),
            Err(IngestError::Network { status: Some(404), .. })
        ));
        assert_eq!(
            cache.fetch("https://example.org/huge"),
            Err(IngestError::SizeLimitExceeded { limit: 10 })
        );
        assert!(cache.fetch("ftp://x").is_err());
        assert!(matches!(cache.read("cache:zz"), Err(IngestError::UnknownToken(_))));
    }
}
