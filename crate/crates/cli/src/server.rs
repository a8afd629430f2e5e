//! Read-only HTTP service over one loaded index.
//!
//! The index is immutable once loaded; the influence cache inside it is the
//! only shared mutable state and is internally synchronized, so handlers
//! share one `Arc` without further locking.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::handler::HandlerWithoutStateExt;
use axum::http::{header, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pegraph::chains::QuerySpec;
use pegraph::index::{CommunitySummary, PaperHit};
use pegraph::peg::{export_graph, run_query, ExportFormat};
use pegraph::{Error, Execution, Index, Result};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::ServeArgs;

pub const WARNING_HEADER: &str = "x-pegraph-warning";
const DEFAULT_SEARCH_LIMIT: usize = 50;

struct AppState {
    index: Index,
    exec: Execution,
}

type Shared = Arc<AppState>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

/// HTTP status of an engine error.
pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::Parse { .. } | Error::Validation(_) => StatusCode::BAD_REQUEST,
        Error::Query(_) | Error::Lookup(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Io { .. } | Error::Numeric { .. } => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

pub fn router(index: Index, exec: Execution, assets: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState { index, exec });
    let api = Router::new()
        .route("/communities", get(communities))
        .route("/papers", get(papers))
        .route("/query", post(query))
        .route("/config", get(config))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir).not_found_service(not_found.into_service())),
        None => api.fallback(not_found),
    }
}

async fn not_found() -> Response {
    error_response(StatusCode::NOT_FOUND, "not found")
}

#[derive(Debug, Deserialize)]
struct CommunitiesParams {
    com_t: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CommunitiesBody {
    pub com_t: f64,
    pub communities: Vec<CommunitySummary>,
}

async fn communities(State(s): State<Shared>, Query(p): Query<CommunitiesParams>) -> Response {
    let com_t = p.com_t.unwrap_or(s.index.config.com_t);
    if !(com_t > 0.0 && com_t <= 1.0) {
        return error_response(StatusCode::BAD_REQUEST, format!("com_t {com_t} outside (0, 1]"));
    }
    Json(CommunitiesBody {
        com_t,
        communities: s.index.community_summaries(com_t),
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
struct PapersParams {
    #[serde(default)]
    q: String,
    limit: Option<usize>,
}

async fn papers(State(s): State<Shared>, Query(p): Query<PapersParams>) -> Json<Vec<PaperHit>> {
    Json(s.index.search_papers(&p.q, p.limit.unwrap_or(DEFAULT_SEARCH_LIMIT)))
}

async fn config(State(s): State<Shared>) -> Response {
    Json(s.index.manifest()).into_response()
}

#[derive(Debug, Deserialize)]
struct QueryParams {
    format: Option<String>,
}

async fn query(State(s): State<Shared>, Query(p): Query<QueryParams>, body: Bytes) -> Response {
    let format = match p.format.as_deref().map(str::parse::<ExportFormat>).transpose() {
        Ok(f) => f.unwrap_or(ExportFormat::Json),
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let spec: QuerySpec = match serde_json::from_slice(&body) {
        Ok(spec) => spec,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("invalid query: {e}")),
    };
    let task = tokio::task::spawn_blocking(move || run_query(&s.index, &spec, s.exec));
    let outcome = match task.await {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => return error_response(status_of(&e), e.to_string()),
        Err(e) => return error_response(StatusCode::INTERNAL_SERVER_ERROR, format!("query task failed: {e}")),
    };
    let content_type = match format {
        ExportFormat::Json => "application/json",
        ExportFormat::Dot => "text/vnd.graphviz; charset=utf-8",
    };
    let mut response = (
        [(header::CONTENT_TYPE, HeaderValue::from_static(content_type))],
        export_graph(&outcome.graph, format),
    )
        .into_response();
    for w in &outcome.warnings {
        let ascii: String = w.chars().map(|c| if c.is_ascii_graphic() || c == ' ' { c } else { '?' }).collect();
        if let Ok(v) = HeaderValue::from_str(&ascii) {
            response.headers_mut().append(HeaderName::from_static(WARNING_HEADER), v);
        }
    }
    response
}

pub async fn serve(router: Router, addr: SocketAddr) -> Result<()> {
    let io_err = |e| Error::Io {
        path: PathBuf::from(addr.to_string()),
        source: e,
    };
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(io_err)?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(io_err)?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(io_err)
}

pub fn serve_blocking(args: &ServeArgs, exec: Execution) -> Result<()> {
    let index = Index::load(&args.index)?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Error::Validation(format!("invalid listen address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
        path: PathBuf::from("tokio runtime"),
        source: e,
    })?;
    runtime.block_on(serve(router(index, exec, args.assets.clone()), addr))
}
