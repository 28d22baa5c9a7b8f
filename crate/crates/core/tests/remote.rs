use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use p6_core::ingest::{IngestError, RemoteCache, SourceResolver, UreqFetcher};

const BODY: &str = "a,b\n1,x\n2,y\n";

struct Server {
    url: String,
    requests: Arc<AtomicUsize>,
    bodies: Arc<AtomicUsize>,
}

/// Serves `BODY` with a fixed ETag, answering 304 to a matching
/// `If-None-Match`. `/big` declares a body larger than any test cap.
fn serve() -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(AtomicUsize::new(0));
    let (r, b) = (requests.clone(), bodies.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            let mut etag = None;
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("if-none-match") {
                        etag = Some(v.trim().to_string());
                    }
                }
            }
            r.fetch_add(1, Ordering::SeqCst);
            let reply = if path == "/big" {
                b.fetch_add(1, Ordering::SeqCst);
                let body = "x".repeat(4096);
                format!("HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len())
            } else if path == "/missing" {
                "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_string()
            } else if etag.as_deref() == Some("\"v1\"") {
                "HTTP/1.1 304 Not Modified\r\nETag: \"v1\"\r\nConnection: close\r\n\r\n".to_string()
            } else {
                b.fetch_add(1, Ordering::SeqCst);
                format!("HTTP/1.1 200 OK\r\nETag: \"v1\"\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{BODY}", BODY.len())
            };
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    Server { url, requests, bodies }
}

#[test]
fn etag_revalidation_skips_the_body() {
    let server = serve();
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(RemoteCache::new(dir.path(), 1024, Arc::new(UreqFetcher)));
    let url = format!("{}/covid.csv", server.url);
    let first = cache.fetch(&url).unwrap();
    let second = cache.fetch(&url).unwrap();
    assert_eq!(first, second);
    assert_eq!(server.requests.load(Ordering::SeqCst), 2);
    assert_eq!(server.bodies.load(Ordering::SeqCst), 1, "the second fetch is a 304");
    assert_eq!(cache.read(&first).unwrap(), BODY.as_bytes());
    assert_eq!(cache.url_of(&first).as_deref(), Some(url.as_str()));

    let resolver = SourceResolver::new(dir.path()).with_remote(cache.clone());
    let loaded = resolver.load(&url, None).unwrap();
    assert_eq!(loaded.frame.row_count(), 2);
    assert_eq!(resolver.load(&first, None).unwrap().digest, loaded.digest);
}

#[test]
fn limits_and_failures_surface_as_errors() {
    let server = serve();
    let dir = tempfile::tempdir().unwrap();
    let cache = RemoteCache::new(dir.path(), 1024, Arc::new(UreqFetcher));
    assert!(matches!(
        cache.fetch(&format!("{}/big", server.url)),
        Err(IngestError::SizeLimitExceeded { limit: 1024 })
    ));
    assert!(matches!(
        cache.fetch(&format!("{}/missing", server.url)),
        Err(IngestError::Network { status: Some(404), .. })
    ));
    assert!(matches!(cache.fetch("ftp://example.org/x"), Err(IngestError::Network { .. })));
    assert!(matches!(cache.read("cache:nope"), Err(IngestError::UnknownToken(_))));
}
