//! Wire types shared by the service and its clients.

use serde::{Deserialize, Serialize};

use noisyclimb_core::env::CartpoleConfig;
use noisyclimb_core::experiment::{RunManifest, RunSummary, SweepSummary};
use noisyclimb_core::hillclimb::{ClimbConfig, TrainingLog};

/// Body of `POST /api/train`: the full configuration document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub env: CartpoleConfig,
    pub climb: ClimbConfig,
}

/// Response of `POST /api/train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    pub manifest: RunManifest,
    pub summary: RunSummary,
    pub log: TrainingLog,
}

/// Body of `POST /api/sweep`. Seeds run from `climb.seed` upwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub env: CartpoleConfig,
    pub climb: ClimbConfig,
    pub seeds: u32,
    /// Run seeds concurrently; results are ordered by seed either way.
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Return per-seed training logs alongside the summary.
    #[serde(default)]
    pub include_logs: bool,
}

/// Response of `POST /api/sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResponse {
    pub summary: SweepSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logs: Option<Vec<TrainingLog>>,
}

/// Query of `GET /api/schedule`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub m_eps: u32,
    pub eps_min: f64,
    /// Rows emitted past the floor episode.
    #[serde(default = "default_extra")]
    pub extra: u32,
}

/// Query of `GET /api/demo-bias`. `ns` is a comma-separated list of action
/// counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    pub ns: String,
    pub std: f64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl BiasParams {
    pub fn parse_ns(&self) -> Result<Vec<usize>, String> {
        let ns: Result<Vec<usize>, _> = self
            .ns
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect();
        match ns {
            Ok(v) if !v.is_empty() => Ok(v),
            Ok(_) => Err("ns must contain at least one action count".into()),
            Err(e) => Err(format!("invalid ns `{}`: {e}", self.ns)),
        }
    }
}

/// Query of `GET /api/ou-stats`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
}

/// JSON body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

fn default_true() -> bool {
    true
}

fn default_extra() -> u32 {
    20
}
