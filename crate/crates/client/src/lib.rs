//! Thin HTTP client for the noisyclimb service.

pub mod api;

use api::{
    BiasParams, ErrorResponse, OuParams, ScheduleParams, SweepRequest, SweepResponse,
    TrainRequest, TrainResponse,
};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service error ({status}): {message}")]
    Api { status: u16, message: String },
}

pub type ClientResult<T> = Result<T, ClientError>;

/// Client bound to one service base URL, e.g. `http://127.0.0.1:8790`.
#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: reqwest::Client,
}

impl ApiClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        Self {
            base,
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn check(response: reqwest::Response) -> ClientResult<reqwest::Response> {
        let status = response.status();
        if status.is_success() {
            return Ok(response);
        }
        let message = match response.json::<ErrorResponse>().await {
            Ok(body) => body.error,
            Err(_) => status
                .canonical_reason()
                .unwrap_or("unknown error")
                .to_string(),
        };
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    pub async fn health(&self) -> ClientResult<()> {
        let resp = self.http.get(format!("{}/health", self.base)).send().await?;
        Self::check(resp).await?;
        Ok(())
    }

    pub async fn train(&self, request: &TrainRequest) -> ClientResult<TrainResponse> {
        let resp = self
            .http
            .post(format!("{}/api/train", self.base))
            .json(request)
            .send()
            .await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    pub async fn sweep(&self, request: &SweepRequest) -> ClientResult<SweepResponse> {
        let resp = self
            .http
            .post(format!("{}/api/sweep", self.base))
            .json(request)
            .send()
            .await?;
        Ok(Self::check(resp).await?.json().await?)
    }

    /// Epsilon table as CSV text.
    pub async fn schedule(&self, params: &ScheduleParams) -> ClientResult<String> {
        let resp = self
            .http
            .get(format!("{}/api/schedule", self.base))
            .query(params)
            .send()
            .await?;
        Ok(Self::check(resp).await?.text().await?)
    }

    /// Max-operator bias table as CSV text.
    pub async fn demo_bias(&self, params: &BiasParams) -> ClientResult<String> {
        let resp = self
            .http
            .get(format!("{}/api/demo-bias", self.base))
            .query(params)
            .send()
            .await?;
        Ok(Self::check(resp).await?.text().await?)
    }

    /// Ornstein-Uhlenbeck Monte Carlo statistics as CSV text.
    pub async fn ou_stats(&self, params: &OuParams) -> ClientResult<String> {
        let resp = self
            .http
            .get(format!("{}/api/ou-stats", self.base))
            .query(params)
            .send()
            .await?;
        Ok(Self::check(resp).await?.text().await?)
    }
}
