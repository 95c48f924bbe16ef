//! HTTP analysis service. Every computation runs on an immutable model
//! snapshot; uploading a model swaps the snapshot atomically.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use impulse_core::format::to_stable_json;
use impulse_core::model::ModelFile;
use impulse_core::VarModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::config::{RunConfig, RunOverrides};
use crate::engine::{read_dataset_for, Engine};
use crate::error::{EngineError, FieldError};

pub struct AppState {
    snapshot: RwLock<Option<Arc<Engine>>>,
    defaults: RunConfig,
    pool: Arc<rayon::ThreadPool>,
}

impl AppState {
    pub fn new(engine: Option<Engine>, defaults: RunConfig, workers: Option<usize>) -> anyhow::Result<Arc<Self>> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            builder = builder.num_threads(n);
        }
        Ok(Arc::new(Self {
            snapshot: RwLock::new(engine.map(Arc::new)),
            defaults,
            pool: Arc::new(builder.build()?),
        }))
    }

    fn current(&self) -> Result<Arc<Engine>, ApiError> {
        self.snapshot
            .read()
            .expect("snapshot lock poisoned")
            .clone()
            .ok_or(ApiError::NoModel)
    }

    fn replace(&self, engine: Engine) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Some(Arc::new(engine));
    }
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(Vec<FieldError>),
    NotFound(String),
    NoModel,
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    fields: &'a [FieldError],
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message, fields) = match &self {
            ApiError::BadRequest(f) => (StatusCode::BAD_REQUEST, "invalid request".to_owned(), f.as_slice()),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m.clone(), &[][..]),
            ApiError::NoModel => (
                StatusCode::CONFLICT,
                "no model loaded; POST one to /api/model first".to_owned(),
                &[][..],
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m.clone(), &[][..]),
        };
        let body = serde_json::to_string(&ErrorBody {
            error: &message,
            fields,
        })
        .unwrap_or_else(|_| "{}".into());
        (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        use impulse_core::Error as E;
        match e {
            EngineError::Invalid(fields) => ApiError::BadRequest(fields),
            EngineError::UnknownVariable { .. } => ApiError::NotFound(e.to_string()),
            EngineError::BootstrapUnavailable => ApiError::BadRequest(vec![FieldError::new("bootstrap", e.to_string())]),
            EngineError::Core(core) => match core {
                E::Config(_) | E::Domain(_) | E::BootstrapUnavailable(_) => {
                    ApiError::BadRequest(vec![FieldError::new("request", core.to_string())])
                }
                E::MissingData { .. } | E::Parse { .. } | E::Csv(_) | E::Fit(_) => {
                    ApiError::BadRequest(vec![FieldError::new("csv", core.to_string())])
                }
                E::ModelFormat(_) | E::InvalidModel(_) => {
                    ApiError::BadRequest(vec![FieldError::new("model", core.to_string())])
                }
                other => ApiError::Internal(other.to_string()),
            },
        }
    }
}

fn field_error(e: serde_path_to_error::Error<serde_json::Error>) -> ApiError {
    let path = e.path().to_string();
    let message = e.inner().to_string();
    let field = match path.as_str() {
        "." => missing_field(&message).unwrap_or("body").to_owned(),
        _ => path,
    };
    ApiError::BadRequest(vec![FieldError::new(&field, message)])
}

fn missing_field(message: &str) -> Option<&str> {
    message.strip_prefix("missing field `")?.split('`').next()
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text = if body.is_empty() { &b"{}"[..] } else { &body[..] };
    let de = &mut serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(de).map_err(field_error)
}

/// Like [`parse`] for requests that flatten [`RunOverrides`]; flattened
/// fields lose their path, so the overrides are checked on their own first.
fn parse_run<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let value: serde_json::Value = parse(body)?;
    serde_path_to_error::deserialize::<_, RunOverrides>(&value).map_err(|e| {
        let path = e.path().to_string();
        ApiError::BadRequest(vec![FieldError::new(&path, e.into_inner().to_string())])
    })?;
    serde_path_to_error::deserialize(value).map_err(field_error)
}

fn json<T: Serialize>(value: &T) -> Result<Response, ApiError> {
    let body = to_stable_json(value).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

/// Runs `f` on the bounded worker pool without blocking the async runtime.
async fn compute<T, F>(state: &Arc<AppState>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> Result<T, EngineError> + Send + 'static,
{
    let engine = state.current()?;
    let pool = state.pool.clone();
    tokio::task::spawn_blocking(move || pool.install(|| f(&engine)))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadRequest {
    #[serde(default)]
    model: Option<ModelFile>,
    #[serde(default)]
    csv: Option<String>,
    #[serde(default)]
    lags: Option<usize>,
    #[serde(default)]
    interval_minutes: Option<f64>,
    #[serde(default)]
    negative: Vec<String>,
    #[serde(default)]
    exogenous: Vec<String>,
}

async fn upload_model(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: UploadRequest = parse(&body)?;
    let engine = tokio::task::spawn_blocking(move || build_engine(req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let meta = engine.meta();
    state.replace(engine);
    log::info!("model replaced: {} variables", meta.names.len());
    json(&meta)
}

fn build_engine(req: UploadRequest) -> Result<Engine, ApiError> {
    match (req.model, req.csv) {
        (Some(file), csv) => {
            let mut model = VarModel::try_from(file).map_err(EngineError::from)?;
            if let Some(i) = req.interval_minutes {
                model = model.with_interval_minutes(i).map_err(EngineError::from)?;
            }
            let data = csv
                .map(|text| read_dataset_for(&model, text.as_bytes()))
                .transpose()?;
            Ok(Engine::new(model, data)?)
        }
        (None, Some(csv)) => {
            let mut missing = Vec::new();
            if req.lags.is_none() {
                missing.push(FieldError::new("lags", "required when uploading CSV data"));
            }
            if req.interval_minutes.is_none() {
                missing.push(FieldError::new("interval_minutes", "required when uploading CSV data"));
            }
            if req.lags == Some(0) {
                missing.push(FieldError::new("lags", "must be at least 1"));
            }
            if !missing.is_empty() {
                return Err(ApiError::BadRequest(missing));
            }
            Ok(Engine::fit_csv(
                csv.as_bytes(),
                req.lags.unwrap_or(1),
                req.interval_minutes.unwrap_or(0.0),
                &req.negative,
                &req.exogenous,
            )?)
        }
        (None, None) => Err(ApiError::BadRequest(vec![FieldError::new(
            "model",
            "provide either `model` or `csv`",
        )])),
    }
}

async fn model_meta(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    json(&state.current()?.meta())
}

#[derive(Deserialize)]
struct IrfRequest {
    #[serde(default)]
    impulse: Option<String>,
    #[serde(default)]
    response: Option<String>,
    #[serde(flatten)]
    run: RunOverrides,
}

async fn irf(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: IrfRequest = parse_run(&body)?;
    let cfg = req.run.apply(&state.defaults);
    let result = compute(&state, move |e| e.irf(&cfg, req.impulse.as_deref(), req.response.as_deref())).await?;
    json(&result)
}

#[derive(Deserialize)]
struct InfluenceRequest {
    #[serde(flatten)]
    run: RunOverrides,
}

async fn influence(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: InfluenceRequest = parse_run(&body)?;
    let cfg = req.run.apply(&state.defaults);
    json(&compute(&state, move |e| e.ranking(&cfg)).await?)
}

#[derive(Deserialize)]
struct EffectLengthRequest {
    impulse: String,
    response: String,
    #[serde(flatten)]
    run: RunOverrides,
}

async fn effect_length(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: EffectLengthRequest = parse_run(&body)?;
    let cfg = req.run.apply(&state.defaults);
    json(&compute(&state, move |e| e.effect_length(&cfg, &req.impulse, &req.response)).await?)
}

#[derive(Deserialize)]
struct WhatifRequest {
    target: String,
    percent: f64,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    min_percent: Option<f64>,
    #[serde(default)]
    max_percent: Option<f64>,
    #[serde(flatten)]
    run: RunOverrides,
}

#[derive(Serialize)]
struct WhatifResponse {
    #[serde(flatten)]
    advice: impulse_core::advice::PercentageAdvice,
    text: Vec<String>,
}

async fn whatif(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: WhatifRequest = parse_run(&body)?;
    let mut cfg = req.run.apply(&state.defaults);
    if let Some(t) = req.theta {
        cfg.theta = t;
    }
    if let Some(v) = req.min_percent {
        cfg.window.min_percent = v;
    }
    if let Some(v) = req.max_percent {
        cfg.window.max_percent = v;
    }
    let result = compute(&state, move |e| {
        let advice = e.whatif(&cfg, &req.target, req.percent)?;
        let text = e.whatif_text(&advice);
        Ok(WhatifResponse { advice, text })
    })
    .await?;
    json(&result)
}

/// Allowed browser origins; `None` allows any.
pub fn cors_layer(origins: Option<&[String]>) -> anyhow::Result<CorsLayer> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Ok(match origins {
        None => layer.allow_origin(Any),
        Some(list) => {
            let values = list
                .iter()
                .map(|o| HeaderValue::from_str(o))
                .collect::<Result<Vec<_>, _>>()?;
            layer.allow_origin(AllowOrigin::list(values))
        }
    })
}

pub fn router(state: Arc<AppState>, cors: CorsLayer, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/model", post(upload_model))
        .route("/api/model/meta", get(model_meta))
        .route("/api/irf", post(irf))
        .route("/api/influence", post(influence))
        .route("/api/effect-length", post(effect_length))
        .route("/api/whatif", post(whatif))
        .with_state(state);
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}
