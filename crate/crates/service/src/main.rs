use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use p6_core::engine::{chain_pipelines, validate_with_data, Engine, EngineContext, EngineError};
use p6_core::spec::{parse_pipeline, ValidationReport};
use p6_service::{exit_code, router, AppState, Config, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "p6", version, about = "Run, serve and validate p6 pipeline specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a spec and write scenes.json plus any requested exports.
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Operation (or `$frame`) whose result is written as <name>.json.
        #[arg(long = "export")]
        exports: Vec<String>,
        /// Column-oriented JSON readable as the `$upstream` source.
        #[arg(long)]
        upstream: Option<PathBuf>,
    },
    /// Load specs and serve them over HTTP.
    Serve {
        specs: Vec<PathBuf>,
        #[arg(long, env = "P6_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of extra static files served under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Print validation findings; exit 0 iff there are none.
    Validate { spec: PathBuf },
}

fn fail(code: i32, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code as u8)
}

fn print_findings(report: &ValidationReport) {
    for f in &report.findings {
        println!("{:?} {:?} {}: {}", f.severity, f.code, f.path, f.message);
    }
}

fn engine_failure(e: &EngineError) -> ExitCode {
    match e {
        EngineError::Spec(s) => print_findings(&ValidationReport::from_parse_error(s)),
        EngineError::Invalid(report) => print_findings(report),
        _ => {}
    }
    fail(exit_code(e), e)
}

fn base_dir(spec: &Path) -> PathBuf {
    spec.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn file_name(export: &str) -> String {
    let clean: String = export
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{}.json", clean.trim_start_matches('_'))
}

fn run(spec_path: &Path, out: &Path, exports: &[String], upstream: Option<&Path>) -> ExitCode {
    let text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => return fail(1, format!("{}: {e}", spec_path.display())),
    };
    let ctx = EngineContext::new(base_dir(spec_path));
    let engine = parse_pipeline(&text).map_err(EngineError::from).and_then(|spec| match upstream {
        None => {
            let mut engine = Engine::new(spec, ctx)?;
            engine.execute()?;
            Ok(engine)
        }
        Some(path) => {
            let doc = std::fs::read(path)
                .ok()
                .and_then(|b| serde_json::from_slice(&b).ok())
                .ok_or_else(|| EngineError::ShapeMismatch(format!("{} is not readable JSON", path.display())))?;
            chain_pipelines(&doc, spec, ctx)
        }
    });
    let engine = match engine {
        Ok(e) => e,
        Err(e) => return engine_failure(&e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail(2, format!("{}: {e}", out.display()));
    }
    let mut files = vec![("scenes.json".to_string(), engine.scenes().map(|s| serde_json::to_value(s).expect("scenes serialize")))];
    for name in exports {
        files.push((file_name(name), engine.export_result(name)));
    }
    for (file, value) in files {
        let value = match value {
            Ok(v) => v,
            Err(e) => return engine_failure(&e),
        };
        let path = out.join(&file);
        if let Err(e) = std::fs::write(&path, serde_json::to_vec_pretty(&value).expect("json serializes")) {
            return fail(2, format!("{}: {e}", path.display()));
        }
        println!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}

fn validate(spec_path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => return fail(1, format!("{}: {e}", spec_path.display())),
    };
    let spec = match parse_pipeline(&text) {
        Ok(s) => s,
        Err(e) => return engine_failure(&EngineError::Spec(e)),
    };
    match validate_with_data(&spec, &EngineContext::new(base_dir(spec_path))) {
        Ok(report) if report.findings.is_empty() => ExitCode::SUCCESS,
        Ok(report) => {
            print_findings(&report);
            ExitCode::from(1)
        }
        Err(e) => engine_failure(&e),
    }
}

async fn serve(specs: &[PathBuf], host: &str, port: u16, static_dir: Option<PathBuf>) -> ExitCode {
    let config = Config {
        static_dir,
        ..Config::from_env()
    };
    let state = AppState::new(config);
    for path in specs {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(1, format!("{}: {e}", path.display())),
        };
        match state.create(&text, Some(&base_dir(path)), None) {
            Ok((id, _)) => println!("{} -> /api/pipelines/{id}", path.display()),
            Err(e) => {
                let code = if e.status.as_u16() == 422 { 2 } else { 1 };
                return fail(code, format!("{}: {}", path.display(), e.body));
            }
        }
    }
    let addr: SocketAddr = match format!("{host}:{port}").parse() {
        Ok(a) => a,
        Err(e) => return fail(1, format!("bad address: {e}")),
    };
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => return fail(2, format!("bind {addr}: {e}")),
    };
    tracing::info!(%addr, "listening");
    println!("listening on http://{addr}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(2, e),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run { spec, out, exports, upstream } => run(&spec, &out, &exports, upstream.as_deref()),
        Command::Validate { spec } => validate(&spec),
        Command::Serve { specs, port, host, static_dir } => tokio::runtime::Runtime::new()
            .expect("tokio runtime")
            .block_on(serve(&specs, &host, port, static_dir)),
    }
}
