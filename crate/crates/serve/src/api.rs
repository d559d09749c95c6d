//! JSON-over-HTTP recommendation service.
//!
//! Uploaded datasets live in a bounded in-memory store keyed by a hash of
//! the uploaded bytes, so re-uploading a file yields the same id.

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use vizrec::model::WideDeepModel;
use vizrec::recommend::{recommend, QueryConstraints, RecommendQuery, Recommendation};
use vizrec::tabular::{parse_dataset, Dataset};

pub const STORE_CAPACITY: usize = 256;
/// Largest accepted request body.
pub const BODY_LIMIT: usize = 20 * 1024 * 1024;

/// Shared, read-only model plus the dataset store.
pub struct AppState {
    model: Option<Arc<WideDeepModel>>,
    store: Mutex<LruCache<String, Arc<Dataset>>>,
}

impl AppState {
    pub fn new(model: Option<WideDeepModel>) -> Self {
        AppState {
            model: model.map(Arc::new),
            store: Mutex::new(LruCache::new(NonZeroUsize::new(STORE_CAPACITY).unwrap())),
        }
    }

    fn model(&self) -> Result<Arc<WideDeepModel>, ApiError> {
        self.model.clone().ok_or_else(|| ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            body: json!({"error": "ModelNotLoaded", "message": "no model is loaded"}),
        })
    }

    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ApiError> {
        self.store.lock().unwrap().get(id).cloned().ok_or_else(|| ApiError {
            status: StatusCode::NOT_FOUND,
            body: json!({"error": "UnknownDataset", "message": format!("no dataset with id `{id}`")}),
        })
    }

    fn insert(&self, dataset: Dataset) -> String {
        let id = dataset.id.clone();
        self.store
            .lock()
            .unwrap()
            .put(id.clone(), Arc::new(dataset));
        id
    }

    pub fn stored_datasets(&self) -> usize {
        self.store.lock().unwrap().len()
    }
}

/// An error response with a `{error, message, ...}` JSON body.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl From<vizrec::Error> for ApiError {
    fn from(e: vizrec::Error) -> Self {
        use vizrec::Error as E;
        let status = match &e {
            E::Parse(_)
            | E::EmptyDataset(_)
            | E::DuplicateAttribute(_)
            | E::UnknownAttribute(_)
            | E::InvalidConfig(_)
            | E::EmptyAttribute(_) => StatusCode::BAD_REQUEST,
            E::TooManyCandidates { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            E::NoCandidates(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({"error": e.kind(), "message": e.to_string()});
        if let E::TooManyCandidates { bound, limit } = e {
            body["bound"] = json!(bound);
            body["limit"] = json!(limit);
        }
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        body
    };
    serde_json::from_slice(body)
        .map_err(|e| vizrec::Error::Parse(format!("request body: {e}")).into())
}

/// Content-addressed id of an uploaded payload.
pub fn dataset_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    format!("ds-{}", &hex::encode(digest)[..16])
}

fn parse_upload(headers: &HeaderMap, body: &[u8]) -> ApiResult<Dataset> {
    let text = std::str::from_utf8(body)
        .map_err(|e| vizrec::Error::Parse(format!("body is not UTF-8: {e}")))?;
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let hint = if content_type.contains("tab-separated") {
        Some("tsv")
    } else {
        None
    };
    let id = dataset_id(body);
    let mut dataset = parse_dataset(&id, text, hint, None)?;
    dataset.id = id;
    Ok(dataset)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadResponse {
    pub dataset_id: String,
    pub rows: usize,
    pub attributes: usize,
}

async fn upload(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let dataset = parse_upload(&headers, &body)?;
    let response = UploadResponse {
        dataset_id: dataset.id.clone(),
        rows: dataset.row_count(),
        attributes: dataset.attributes.len(),
    };
    state.insert(dataset);
    Ok((StatusCode::CREATED, Json(response)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: vizrec::tabular::AttributeType,
    pub rows: usize,
    pub missing: usize,
    pub cardinality: usize,
}

pub fn summarize_attributes(dataset: &Dataset) -> Vec<AttributeSummary> {
    dataset
        .attributes
        .iter()
        .map(|a| {
            let mut distinct: Vec<String> = a
                .values
                .iter()
                .filter(|c| !c.is_missing())
                .map(|c| format!("{c:?}"))
                .collect();
            distinct.sort_unstable();
            distinct.dedup();
            AttributeSummary {
                name: a.name.clone(),
                kind: a.kind,
                rows: a.row_count(),
                missing: a.missing_count(),
                cardinality: distinct.len(),
            }
        })
        .collect()
}

async fn attributes(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<Vec<AttributeSummary>>> {
    let dataset = state.dataset(&id)?;
    Ok(Json(summarize_attributes(&dataset)))
}

async fn run_recommend(
    model: Arc<WideDeepModel>,
    dataset: Arc<Dataset>,
    query: RecommendQuery,
) -> ApiResult<Json<Vec<Recommendation>>> {
    tokio::task::spawn_blocking(move || recommend(&model, &dataset, &query))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({"error": "Internal", "message": e.to_string()}),
        })?
        .map(Json)
        .map_err(ApiError::from)
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Vec<Recommendation>>> {
    let dataset = state.dataset(&id)?;
    let model = state.model()?;
    let query: RecommendQuery = parse_json(&body)?;
    run_recommend(model, dataset, query).await
}

/// Query carrying its dataset inline, either as CSV text or a dataset object.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineQuery {
    #[serde(default)]
    csv: Option<String>,
    #[serde(default)]
    dataset: Option<Value>,
    #[serde(default = "default_top_k")]
    top_k: usize,
    #[serde(default)]
    constraints: QueryConstraints,
}

fn default_top_k() -> usize {
    RecommendQuery::default().top_k
}

async fn inline_recommendations(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Json<Vec<Recommendation>>> {
    let model = state.model()?;
    let q: InlineQuery = parse_json(&body)?;
    let text = match (q.csv, q.dataset) {
        (Some(csv), None) => csv,
        (None, Some(dataset)) => dataset.to_string(),
        _ => {
            return Err(vizrec::Error::Parse(
                "exactly one of `csv` or `dataset` is required".into(),
            )
            .into())
        }
    };
    let id = dataset_id(text.as_bytes());
    let mut dataset = parse_dataset(&id, &text, None, None)?;
    dataset.id = id;
    let query = RecommendQuery {
        top_k: q.top_k,
        constraints: q.constraints,
    };
    run_recommend(model, Arc::new(dataset), query).await
}

async fn configs(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let model = state.model()?;
    let vocab = &model.vocab;
    let configs: Vec<Value> = vocab
        .configs()
        .iter()
        .zip(vocab.counts())
        .map(|(c, n)| json!({"config": c, "count": n}))
        .collect();
    Ok(Json(json!({"size": vocab.len(), "configs": configs})))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let model = state.model.as_ref().map(|m| {
        json!({
            "variant": m.hyper.variant.as_str(),
            "vocab_size": m.vocab.len(),
            "metafeatures": m.schema.k,
        })
    });
    Json(json!({
        "status": if model.is_some() { "ok" } else { "no_model" },
        "model": model,
        "datasets": state.stored_datasets(),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(upload))
        .route("/datasets/{id}/attributes", get(attributes))
        .route("/datasets/{id}/recommendations", post(recommendations))
        .route("/recommendations", post(inline_recommendations))
        .route("/configs", get(configs))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Bind and serve until interrupted.
pub async fn serve(model: Option<WideDeepModel>, bind: &str) -> anyhow::Result<()> {
    let app = router(Arc::new(AppState::new(model)));
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
