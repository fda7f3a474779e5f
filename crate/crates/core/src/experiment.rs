//! Multi-seed experiment running and the on-disk/wire formats: training-curve
//! CSV, run manifests, sweep summaries, and the demo table builders.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::CartpoleConfig;
use crate::error::Result;
use crate::exploration::{ou_statistics, EpsilonSchedule, OuProcess};
use crate::hillclimb::{train, ClimbConfig, TrainingLog};
use crate::td::{overestimation_bias_experiment, QRow};

/// Training-curve CSV header.
pub const TRAINING_LOG_HEADER: &str = "episode,score,g0,avg100,noise_scale";

/// Environment and optimizer configuration as a single document. This is the
/// JSON shape accepted by the train/sweep endpoints and written back in run
/// manifests, so a manifest can be fed straight back in to reproduce a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: CartpoleConfig,
    pub climb: ClimbConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.climb.validate()
    }
}

/// Manifest written alongside a training-curve CSV: the full configuration
/// plus the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub env: CartpoleConfig,
    pub climb: ClimbConfig,
    pub solved_at: Option<u32>,
}

/// Outcome of a single training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub solved_at: Option<u32>,
    /// Rolling mean at the final episode; 0 for an empty run.
    pub final_avg100: f64,
    pub episodes_run: u32,
    /// Wall-clock seconds; measurement, not reproducible.
    pub wall_time: f64,
}

/// Aggregate over a block of consecutive seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: Vec<RunSummary>,
    /// Median solve episode over the seeds that solved; absent if none did.
    pub median_solved_at: Option<f64>,
    /// Fraction of seeds that solved.
    pub solve_rate: f64,
}

/// Train once and summarize.
pub fn run_once(config: &ExperimentConfig) -> Result<(TrainingLog, RunSummary)> {
    let started = Instant::now();
    let log = train(&config.env, &config.climb)?;
    let summary = RunSummary {
        seed: config.climb.seed,
        solved_at: log.solved_at,
        final_avg100: log.final_avg100().unwrap_or(0.0),
        episodes_run: log.records.len() as u32,
        wall_time: started.elapsed().as_secs_f64(),
    };
    Ok((log, summary))
}

/// Run `seeds` independent trainings with seeds `base, base+1, ...` where
/// `base` is the seed in the climb config. Runs are independent, so the
/// parallel and serial paths produce identical logs; results are ordered by
/// seed either way.
pub fn sweep(
    config: &ExperimentConfig,
    seeds: u32,
    parallel: bool,
) -> Result<(SweepSummary, Vec<TrainingLog>)> {
    config.validate()?;
    let per_seed = |i: u32| -> Result<(TrainingLog, RunSummary)> {
        let mut cfg = *config;
        cfg.climb.seed = config.climb.seed.wrapping_add(i as u64);
        run_once(&cfg)
    };

    let results: Result<Vec<_>> = if parallel {
        (0..seeds).into_par_iter().map(per_seed).collect()
    } else {
        (0..seeds).map(per_seed).collect()
    };
    let (logs, runs): (Vec<_>, Vec<_>) = results?.into_iter().unzip();

    Ok((summarize(runs), logs))
}

fn summarize(runs: Vec<RunSummary>) -> SweepSummary {
    let mut solved: Vec<u32> = runs.iter().filter_map(|r| r.solved_at).collect();
    solved.sort_unstable();
    let median_solved_at = match solved.len() {
        0 => None,
        n if n % 2 == 1 => Some(solved[n / 2] as f64),
        n => Some((solved[n / 2 - 1] as f64 + solved[n / 2] as f64) / 2.0),
    };
    let solve_rate = if runs.is_empty() {
        0.0
    } else {
        solved.len() as f64 / runs.len() as f64
    };
    SweepSummary {
        runs,
        median_solved_at,
        solve_rate,
    }
}

/// Fixed-width float format for curve CSVs: 10 significant digits, enough to
/// reconstruct the run to plotting precision.
fn fmt_curve(x: f64) -> String {
    format!("{x:.9e}")
}

/// Render a training log as CSV (`episode,score,g0,avg100,noise_scale`).
pub fn training_log_csv(log: &TrainingLog) -> String {
    let mut out = String::with_capacity(64 * (log.records.len() + 1));
    out.push_str(TRAINING_LOG_HEADER);
    out.push('\n');
    for r in &log.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.episode,
            fmt_curve(r.score),
            fmt_curve(r.g0),
            fmt_curve(r.avg100),
            fmt_curve(r.noise_scale),
        ));
    }
    out
}

/// Render the epsilon table as CSV (`i,epsilon`) for i = 0 ..= m_eps + extra.
pub fn schedule_csv(schedule: &EpsilonSchedule, extra: u32) -> String {
    let mut out = String::from("i,epsilon\n");
    for i in 0..=schedule.m_eps + extra {
        out.push_str(&format!("{i},{}\n", schedule.epsilon(i)));
    }
    out
}

/// One row of the bias demo table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n_actions: usize,
    pub noise_std: f64,
    pub bias: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Estimate the max-operator bias for each action count over zero Q-rows.
/// One generator drives the whole sweep, so the table is a function of the
/// seed.
pub fn bias_sweep(ns: &[usize], noise_std: f64, trials: u64, seed: u64) -> Result<Vec<BiasRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ns.iter()
        .map(|&n| {
            let q = QRow::zeros(n)?;
            let est = overestimation_bias_experiment(&q, noise_std, trials, &mut rng)?;
            Ok(BiasRow {
                n_actions: n,
                noise_std,
                bias: est.bias,
                std_err: est.std_err,
                trials,
            })
        })
        .collect()
}

/// Render bias rows as CSV (`n_actions,noise_std,bias,std_err,trials`).
pub fn bias_csv(rows: &[BiasRow]) -> String {
    let mut out = String::from("n_actions,noise_std,bias,std_err,trials\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_actions, r.noise_std, r.bias, r.std_err, r.trials
        ));
    }
    out
}

/// Monte Carlo report for an Ornstein-Uhlenbeck trajectory, alongside the
/// AR(1) reference values for the same parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuReport {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub steps: u64,
    pub mean: f64,
    pub variance: f64,
    pub lag1_autocorr: f64,
    pub expected_variance: Option<f64>,
    pub expected_lag1: f64,
}

/// Simulate a fresh process for `steps` draws and report sample and
/// theoretical statistics.
pub fn ou_report(process: OuProcess, steps: u64, seed: u64) -> Result<OuReport> {
    let mut p = process;
    p.reset();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = ou_statistics(&mut p, steps, &mut rng)?;
    Ok(OuReport {
        theta: process.theta,
        mu: process.mu,
        sigma: process.sigma,
        dt: process.dt,
        steps,
        mean: stats.mean,
        variance: stats.variance,
        lag1_autocorr: stats.lag1_autocorr,
        expected_variance: process.stationary_variance(),
        expected_lag1: process.lag1_autocorrelation(),
    })
}

/// Render an OU report as a one-row CSV.
pub fn ou_csv(report: &OuReport) -> String {
    let mut out = String::from(
        "theta,mu,sigma,dt,steps,mean,variance,lag1_autocorr,expected_variance,expected_lag1\n",
    );
    let expected_var = report
        .expected_variance
        .map(|v| v.to_string())
        .unwrap_or_default();
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        report.theta,
        report.mu,
        report.sigma,
        report.dt,
        report.steps,
        report.mean,
        report.variance,
        report.lag1_autocorr,
        expected_var,
        report.expected_lag1,
    ));
    out
}
