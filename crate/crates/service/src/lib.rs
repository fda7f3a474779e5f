//! HTTP service exposing the workbench operations over JSON and CSV.
//!
//! Routes:
//!   GET  /health          liveness probe
//!   POST /api/train       one training run (JSON in, JSON out)
//!   POST /api/sweep       multi-seed sweep (JSON in, JSON out)
//!   GET  /api/schedule    epsilon table (CSV)
//!   GET  /api/demo-bias   max-operator bias table (CSV)
//!   GET  /api/ou-stats    Ornstein-Uhlenbeck trajectory statistics (CSV)

use axum::extract::{Json, Query};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use noisyclimb_client::api::{
    BiasParams, ErrorResponse, OuParams, ScheduleParams, SweepRequest, SweepResponse,
    TrainRequest, TrainResponse,
};
use noisyclimb_core::experiment::{
    bias_csv, bias_sweep, ou_csv, ou_report, run_once, schedule_csv, sweep, ExperimentConfig,
    RunManifest,
};
use noisyclimb_core::exploration::{EpsilonSchedule, OuProcess};

/// Error payload with an HTTP status; every failure returns `{"error": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
        }
    }
}

impl From<noisyclimb_core::Error> for ApiError {
    fn from(err: noisyclimb_core::Error) -> Self {
        ApiError::bad_request(err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            axum::Json(ErrorResponse {
                error: self.message,
            }),
        )
            .into_response()
    }
}

fn csv_response(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/csv")], body).into_response()
}

/// Run blocking numeric work off the async executor.
async fn compute<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker task failed: {e}")))?
}

async fn health() -> impl IntoResponse {
    axum::Json(serde_json::json!({ "status": "ok" }))
}

async fn train_handler(Json(req): Json<TrainRequest>) -> Result<Json<TrainResponse>, ApiError> {
    compute(move || {
        let config = ExperimentConfig {
            env: req.env,
            climb: req.climb,
        };
        let (log, summary) = run_once(&config)?;
        Ok(Json(TrainResponse {
            manifest: RunManifest {
                env: config.env,
                climb: config.climb,
                solved_at: log.solved_at,
            },
            summary,
            log,
        }))
    })
    .await
}

async fn sweep_handler(Json(req): Json<SweepRequest>) -> Result<Json<SweepResponse>, ApiError> {
    if req.seeds < 1 {
        return Err(ApiError::bad_request("seeds must be at least 1"));
    }
    compute(move || {
        let config = ExperimentConfig {
            env: req.env,
            climb: req.climb,
        };
        let (summary, logs) = sweep(&config, req.seeds, req.parallel)?;
        Ok(Json(SweepResponse {
            summary,
            logs: req.include_logs.then_some(logs),
        }))
    })
    .await
}

async fn schedule_handler(Query(params): Query<ScheduleParams>) -> Result<Response, ApiError> {
    let schedule = EpsilonSchedule::new(params.m_eps, params.eps_min)?;
    Ok(csv_response(schedule_csv(&schedule, params.extra)))
}

async fn bias_handler(Query(params): Query<BiasParams>) -> Result<Response, ApiError> {
    let ns = params.parse_ns().map_err(ApiError::bad_request)?;
    if params.trials < 1 {
        return Err(ApiError::bad_request("trials must be at least 1"));
    }
    compute(move || {
        let rows = bias_sweep(&ns, params.std, params.trials, params.seed)?;
        Ok(csv_response(bias_csv(&rows)))
    })
    .await
}

async fn ou_handler(Query(params): Query<OuParams>) -> Result<Response, ApiError> {
    let process = OuProcess::new(params.theta, params.mu, params.sigma, params.dt)?;
    compute(move || {
        let report = ou_report(process, params.steps, params.seed)?;
        Ok(csv_response(ou_csv(&report)))
    })
    .await
}

/// Build the service router.
pub fn app() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/train", post(train_handler))
        .route("/api/sweep", post(sweep_handler))
        .route("/api/schedule", get(schedule_handler))
        .route("/api/demo-bias", get(bias_handler))
        .route("/api/ou-stats", get(ou_handler))
}

/// Serve the app on an already-bound listener until the process exits.
pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app()).await
}

/// Bind an ephemeral local port and serve in a background task. Returns the
/// base URL for clients; used by tests and by the CLI's standalone mode.
pub async fn spawn_local() -> std::io::Result<String> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app()).await {
            tracing::error!("local service stopped: {e}");
        }
    });
    Ok(format!("http://{addr}"))
}
