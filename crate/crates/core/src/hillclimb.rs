//! Hill climbing with adaptive noise scaling.
//!
//! The climber keeps the best weight matrix seen so far and evaluates one
//! perturbed candidate per episode. An improvement adopts the candidate and
//! halves the noise scale (down to a floor); a regression discards it and
//! doubles the scale (up to a cap), so the search widens exactly when
//! progress stalls. Decisions use the discounted return; the solve criterion
//! uses the raw episode score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{self, CartpoleConfig, SOLVE_WINDOW};
use crate::error::{Error, Result};
use crate::policy::{act, WeightMatrix};
use crate::td::discounted_return;

/// Optimizer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimbConfig {
    /// Discount factor for the episode return, in (0, 1].
    pub gamma: f64,
    /// Starting noise scale.
    pub noise_init: f64,
    /// Scale floor.
    pub noise_min: f64,
    /// Scale cap.
    pub noise_max: f64,
    /// Multiplicative step applied on every episode, > 1.
    pub scale_factor: f64,
    /// Episode budget.
    pub max_episodes: u32,
    /// Generator seed; the entire run is a function of this value.
    pub seed: u64,
}

impl Default for ClimbConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            noise_init: 1e-2,
            noise_min: 1e-3,
            noise_max: 2.0,
            scale_factor: 2.0,
            max_episodes: 2000,
            seed: 0,
        }
    }
}

impl ClimbConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(Error::invalid(
                "climb config",
                format!("gamma must lie in (0, 1], got {}", self.gamma),
            ));
        }
        if !(self.noise_min > 0.0 && self.noise_min <= self.noise_init && self.noise_init <= self.noise_max)
        {
            return Err(Error::invalid(
                "climb config",
                format!(
                    "need 0 < noise_min <= noise_init <= noise_max, got ({}, {}, {})",
                    self.noise_min, self.noise_init, self.noise_max
                ),
            ));
        }
        if !self.scale_factor.is_finite() || self.scale_factor <= 1.0 {
            return Err(Error::invalid(
                "climb config",
                format!("scale_factor must be > 1, got {}", self.scale_factor),
            ));
        }
        Ok(())
    }
}

/// Search state carried between episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimbState {
    pub best_w: WeightMatrix,
    /// Highest discounted return observed so far.
    pub best_return: f64,
    pub noise_scale: f64,
    /// Episodes evaluated.
    pub episode: u32,
}

impl ClimbState {
    pub fn new(initial_w: WeightMatrix, noise_init: f64) -> Self {
        Self {
            best_w: initial_w,
            best_return: f64::NEG_INFINITY,
            noise_scale: noise_init,
            episode: 0,
        }
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: u32,
    /// Undiscounted episode score (equals the episode length).
    pub score: f64,
    /// Discounted return of the episode.
    pub g0: f64,
    /// Mean score over the last `min(100, episodes so far)` episodes.
    pub avg100: f64,
    /// Noise scale after this episode's update.
    pub noise_scale: f64,
}

/// Full per-episode record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpisodeRecord>,
    /// Episode at which the rolling-window mean first met the solve
    /// threshold, if it did.
    pub solved_at: Option<u32>,
}

impl TrainingLog {
    pub fn final_avg100(&self) -> Option<f64> {
        self.records.last().map(|r| r.avg100)
    }
}

/// Candidate generation: add `noise_scale` times an independent uniform
/// [0, 1) factor to every entry of the best matrix. Entries are drawn in
/// row-major order.
pub fn perturb<R: Rng + ?Sized>(
    best_w: &WeightMatrix,
    noise_scale: f64,
    rng: &mut R,
) -> WeightMatrix {
    let mut entries = best_w.entries();
    WeightMatrix::from_fn(|| entries.next().expect("4x2 entries") + noise_scale * rng.gen::<f64>())
}

/// Scale and incumbent update after evaluating one candidate.
///
/// A return at or above the incumbent counts as an improvement: the candidate
/// is adopted and the scale divides by the factor (floored); otherwise the
/// candidate is discarded and the scale multiplies by the factor (capped).
pub fn update(
    state: &ClimbState,
    candidate_w: &WeightMatrix,
    candidate_return: f64,
    config: &ClimbConfig,
) -> ClimbState {
    let mut next = *state;
    next.episode += 1;
    if candidate_return >= state.best_return {
        next.best_w = *candidate_w;
        next.best_return = candidate_return;
        next.noise_scale = (state.noise_scale / config.scale_factor).max(config.noise_min);
    } else {
        next.noise_scale = (state.noise_scale * config.scale_factor).min(config.noise_max);
    }
    next
}

/// Roll out one deterministic-policy episode; returns (score, g0).
fn rollout<R: Rng + ?Sized>(
    env_config: &CartpoleConfig,
    w: &WeightMatrix,
    gamma: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut state = env::reset(env_config, rng);
    let mut rewards = Vec::new();
    let mut steps = 0;
    loop {
        let action = act(w, &state);
        let result = env::step(env_config, &state, action, steps)?;
        rewards.push(result.reward);
        steps += 1;
        state = result.state;
        if result.done {
            break;
        }
    }
    let score = rewards.iter().sum();
    let g0 = discounted_return(&rewards, gamma);
    Ok((score, g0))
}

/// Run the full training loop: one candidate per episode, stopping at the
/// solve criterion or the episode budget. Fully reproducible from the seed.
pub fn train(env_config: &CartpoleConfig, climb_config: &ClimbConfig) -> Result<TrainingLog> {
    env_config.validate()?;
    climb_config.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(climb_config.seed);

    // Small random start drawn the same way candidates are perturbed.
    let initial_w = WeightMatrix::from_fn(|| climb_config.noise_init * rng.gen::<f64>());
    let mut state = ClimbState::new(initial_w, climb_config.noise_init);
    let mut candidate = initial_w;

    let mut records = Vec::new();
    let mut scores = Vec::new();
    let mut solved_at = None;

    for episode in 1..=climb_config.max_episodes {
        let (score, g0) = rollout(env_config, &candidate, climb_config.gamma, &mut rng)?;
        state = update(&state, &candidate, g0, climb_config);
        scores.push(score);

        let window = scores.len().min(SOLVE_WINDOW);
        let avg100 = scores[scores.len() - window..].iter().sum::<f64>() / window as f64;
        records.push(EpisodeRecord {
            episode,
            score,
            g0,
            avg100,
            noise_scale: state.noise_scale,
        });

        if env::is_solved(&scores, env_config.solve_threshold) {
            solved_at = Some(episode);
            break;
        }
        candidate = perturb(&state.best_w, state.noise_scale, &mut rng);
    }

    Ok(TrainingLog { records, solved_at })
}
