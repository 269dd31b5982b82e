//! Read-only HTTP access to encoded datasets.
//!
//! Every subdirectory of the root holding a valid `manifest.json` is a dataset:
//!
//! - `GET /datasets` lists dataset ids, sorted.
//! - `GET /datasets/{id}/manifest.json` returns the stored manifest verbatim.
//! - `GET /datasets/{id}/media/{file}` serves a file the manifest lists, with
//!   byte-range support for seeking video players.

mod range;

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use sha2::{Digest, Sha256};
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};
use volstream_core::container::MANIFEST_FILE;
use volstream_core::DatasetManifest;

pub use range::{parse_range, ByteRange};

#[derive(Debug, Clone)]
struct AppState {
    root: Arc<PathBuf>,
}

pub fn router(root: impl Into<PathBuf>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::HEAD, Method::OPTIONS])
        .allow_headers(Any)
        .expose_headers([
            header::ACCEPT_RANGES,
            header::CONTENT_LENGTH,
            header::CONTENT_RANGE,
            header::ETAG,
        ]);
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}/manifest.json", get(get_manifest))
        .route("/datasets/{id}/media/{file}", get(get_media))
        .layer(cors)
        .with_state(AppState {
            root: Arc::new(root.into()),
        })
}

/// Datasets under `root` with a parseable, valid manifest, sorted by id.
pub fn discover(root: &Path) -> io::Result<Vec<(String, DatasetManifest)>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let entry = entry?;
        let Ok(id) = entry.file_name().into_string() else {
            continue;
        };
        if !is_safe_segment(&id) || !entry.file_type()?.is_dir() {
            continue;
        }
        if let Ok(m) = DatasetManifest::read(&entry.path().join(MANIFEST_FILE)) {
            found.push((id, m));
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

/// Binds nothing itself; logs the datasets found and serves until the listener closes.
pub async fn serve(listener: TcpListener, root: PathBuf) -> io::Result<()> {
    for (id, m) in discover(&root)? {
        tracing::info!(
            "dataset {id}: {} dims {} ({} media file(s))",
            m.name,
            m.dims,
            m.media.files().len()
        );
    }
    axum::serve(listener, router(root)).await
}

fn is_safe_segment(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn plain(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, msg.into()).into_response()
}

async fn list_datasets(State(state): State<AppState>) -> Response {
    let root = state.root.clone();
    match tokio::task::spawn_blocking(move || discover(&root)).await {
        Ok(Ok(found)) => {
            Json(found.into_iter().map(|(id, _)| id).collect::<Vec<_>>()).into_response()
        }
        Ok(Err(e)) => plain(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("cannot read dataset root {}: {e}", state.root.display()),
        ),
        Err(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Raw manifest bytes and their parsed form, or the response to send instead.
async fn load_manifest(root: &Path, id: &str) -> Result<(Vec<u8>, DatasetManifest), Response> {
    if !is_safe_segment(id) {
        return Err(plain(
            StatusCode::BAD_REQUEST,
            format!("invalid dataset id {id:?}"),
        ));
    }
    let path = root.join(id).join(MANIFEST_FILE);
    let not_found = || plain(StatusCode::NOT_FOUND, format!("no dataset {id:?}"));
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found())?;
    let text = std::str::from_utf8(&bytes).map_err(|_| not_found())?;
    let manifest = DatasetManifest::parse(text, &path).map_err(|_| not_found())?;
    Ok((bytes, manifest))
}

async fn get_manifest(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match load_manifest(&state.root, &id).await {
        Ok((bytes, _)) => (
            [(
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/json"),
            )],
            bytes,
        )
            .into_response(),
        Err(r) => r,
    }
}

fn content_type(file: &str) -> &'static str {
    let ext = file.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("ogg" | "ogv") => "video/ogg",
        Some("mp4" | "m4v") => "video/mp4",
        Some("webm") => "video/webm",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn get_media(
    State(state): State<AppState>,
    UrlPath((id, file)): UrlPath<(String, String)>,
    headers: HeaderMap,
) -> Response {
    let manifest = match load_manifest(&state.root, &id).await {
        Ok((_, m)) => m,
        Err(r) => return r,
    };
    if !manifest.media.files().contains(&file.as_str()) {
        return plain(
            StatusCode::NOT_FOUND,
            format!("{file:?} is not part of dataset {id:?}"),
        );
    }
    let path = state.root.join(&id).join(&file);
    let body = match tokio::fs::read(&path).await {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return plain(
                StatusCode::NOT_FOUND,
                format!("{file:?} is missing on disk"),
            )
        }
        Err(e) => return plain(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let len = body.len() as u64;
    let etag = format!("\"{}\"", hex::encode(Sha256::digest(&body)));

    let mut out = HeaderMap::new();
    out.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static(content_type(&file)),
    );
    out.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    out.insert(
        header::ETAG,
        HeaderValue::from_str(&etag).expect("hex etag"),
    );

    let range = headers
        .get(header::RANGE)
        .and_then(|v| v.to_str().ok())
        .map_or(ByteRange::Full, |h| parse_range(h, len));
    match range {
        ByteRange::Full => (StatusCode::OK, out, body).into_response(),
        ByteRange::Partial { start, end } => {
            out.insert(
                header::CONTENT_RANGE,
                HeaderValue::from_str(&format!("bytes {start}-{end}/{len}")).expect("ascii"),
            );
            let slice = body[start as usize..=end as usize].to_vec();
            (StatusCode::PARTIAL_CONTENT, out, slice).into_response()
        }
        ByteRange::Unsatisfiable => {
            out.insert(
                header::CONTENT_RANGE,
                HeaderValue::from_str(&format!("bytes */{len}")).expect("ascii"),
            );
            (StatusCode::RANGE_NOT_SATISFIABLE, out).into_response()
        }
    }
}
