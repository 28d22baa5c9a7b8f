#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use p6_service::{router, AppState, Config};

pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

pub fn spec_text(name: &str) -> String {
    std::fs::read_to_string(specs_dir().join(name)).unwrap()
}

pub struct Server {
    pub base: String,
    pub ws: String,
    pub state: Arc<AppState>,
    pub http: reqwest::Client,
}

impl Server {
    pub async fn start(config: Config) -> Self {
        let state = AppState::new(config);
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(state.clone());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self {
            base: format!("http://{addr}"),
            ws: format!("ws://{addr}"),
            state,
            http: reqwest::Client::new(),
        }
    }

    /// Sources resolve against the bundled specs directory; remote fetches
    /// cache under a fresh temporary directory.
    pub async fn bundled() -> Self {
        let cache = tempfile::tempdir().unwrap().keep();
        Self::start(Config {
            base_dir: specs_dir(),
            cache_dir: cache,
            ..Config::default()
        })
        .await
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn create(&self, body: &str) -> (u16, serde_json::Value) {
        let r = self.http.post(self.url("/api/pipelines")).body(body.to_string()).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    pub async fn create_ok(&self, body: &str) -> String {
        let (status, v) = self.create(body).await;
        assert_eq!(status, 201, "{v}");
        v["pipeline_id"].as_str().unwrap().to_string()
    }

    pub async fn patch(&self, id: &str, path: &str, value: serde_json::Value) -> (u16, serde_json::Value) {
        let r = self
            .http
            .patch(self.url(&format!("/api/pipelines/{id}/params")))
            .json(&serde_json::json!({"path": path, "value": value}))
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    pub async fn bytes(&self, path: &str) -> (u16, Vec<u8>) {
        let r = self.http.get(self.url(path)).send().await.unwrap();
        (r.status().as_u16(), r.bytes().await.unwrap().to_vec())
    }
}
