//! `noisyclimb` — command-line client for the workbench service.
//!
//! Every subcommand talks to the HTTP service: either a remote one given via
//! `--server` (or `NOISYCLIMB_SERVER`), or an in-process instance bound to an
//! ephemeral local port when no server is configured.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use noisyclimb_client::api::{
    BiasParams, OuParams, ScheduleParams, SweepRequest, TrainRequest,
};
use noisyclimb_client::ApiClient;
use noisyclimb_core::env::{preset, Variant};
use noisyclimb_core::experiment::{training_log_csv, ExperimentConfig};
use noisyclimb_core::hillclimb::ClimbConfig;

/// Exit code for a training run that did not reach the solve criterion.
const EXIT_UNSOLVED: i32 = 2;
/// Exit code for usage errors and failed requests.
const EXIT_USAGE: i32 = 1;

#[derive(Parser)]
#[command(name = "noisyclimb", version, about = "CartPole hill climbing, exploration noise, and TD-target demos")]
struct Cli {
    /// Base URL of a running service; without it an in-process service is
    /// started for the duration of the command.
    #[arg(long, global = true, env = "NOISYCLIMB_SERVER")]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training and write the curve CSV plus a run manifest
    Train(TrainArgs),
    /// Run trainings over consecutive seeds and write a summary JSON
    Sweep(SweepArgs),
    /// Print the annealed epsilon table as CSV
    Schedule(ScheduleArgs),
    /// Print max-operator bias estimates as CSV
    DemoBias(DemoBiasArgs),
    /// Print Ornstein-Uhlenbeck trajectory statistics as CSV
    OuStats(OuStatsArgs),
    /// Run the HTTP service in the foreground
    Serve(ServeArgs),
}

/// Flags shared by train and sweep that assemble the config document.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// Environment preset (v0 or v1)
    #[arg(long)]
    env: Option<String>,

    /// Config document (JSON with `env` and `climb`) used as the base;
    /// flags override individual fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// Discount factor for the episode return
    #[arg(long)]
    gamma: Option<f64>,

    /// Initial noise scale
    #[arg(long)]
    noise_init: Option<f64>,

    /// Noise scale floor
    #[arg(long)]
    noise_min: Option<f64>,

    /// Noise scale cap
    #[arg(long)]
    noise_max: Option<f64>,

    /// Multiplicative scale step
    #[arg(long)]
    scale_factor: Option<f64>,

    /// Episode budget per run
    #[arg(long)]
    max_episodes: Option<u32>,

    /// Base generator seed
    #[arg(long, env = "NOISYCLIMB_SEED")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str::<ExperimentConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ExperimentConfig {
                env: preset(Variant::V0),
                climb: ClimbConfig::default(),
            },
        };
        if let Some(env) = &self.env {
            config.env = preset(Variant::from_str(env)?);
        }
        if let Some(gamma) = self.gamma {
            config.climb.gamma = gamma;
        }
        if let Some(v) = self.noise_init {
            config.climb.noise_init = v;
        }
        if let Some(v) = self.noise_min {
            config.climb.noise_min = v;
        }
        if let Some(v) = self.noise_max {
            config.climb.noise_max = v;
        }
        if let Some(v) = self.scale_factor {
            config.climb.scale_factor = v;
        }
        if let Some(v) = self.max_episodes {
            config.climb.max_episodes = v;
        }
        if let Some(v) = self.seed {
            config.climb.seed = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Curve CSV output path
    #[arg(long)]
    out: PathBuf,

    /// Manifest JSON path; defaults to the CSV path with a .json extension
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Number of consecutive seeds to run
    #[arg(long, default_value_t = 20)]
    seeds: u32,

    /// Summary JSON output path
    #[arg(long)]
    out: PathBuf,

    /// Also write each run's curve CSV into this directory
    #[arg(long)]
    logs_dir: Option<PathBuf>,

    /// Run seeds one after another instead of concurrently
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Episode at which the floor is reached
    #[arg(long, default_value_t = 100)]
    m_eps: u32,

    /// Minimal exploration probability
    #[arg(long, default_value_t = 0.01)]
    eps_min: f64,

    /// Rows emitted past the floor episode
    #[arg(long, default_value_t = 20)]
    extra: u32,
}

#[derive(Args, Debug)]
struct DemoBiasArgs {
    /// Action counts to sweep (repeatable or comma-separated)
    #[arg(long = "n", value_delimiter = ',', default_values_t = [1, 2, 5, 10, 50])]
    ns: Vec<usize>,

    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    std: f64,

    /// Monte Carlo trials per action count
    #[arg(long, default_value_t = 100_000)]
    trials: u64,

    #[arg(long, env = "NOISYCLIMB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct OuStatsArgs {
    /// Mean-reversion rate
    #[arg(long, default_value_t = 0.15)]
    theta: f64,

    /// Long-run mean
    #[arg(long, default_value_t = 0.0)]
    mu: f64,

    /// Diffusion scale
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,

    /// Time step
    #[arg(long, default_value_t = 1.0)]
    dt: f64,

    /// Trajectory length
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,

    #[arg(long, env = "NOISYCLIMB_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Listen address
    #[arg(long, default_value = "127.0.0.1:8790")]
    addr: String,
}

#[tokio::main]
async fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli).await {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_USAGE);
        }
    }
}

async fn connect(server: Option<String>) -> anyhow::Result<ApiClient> {
    let base = match server {
        Some(url) => url,
        None => noisyclimb_service::spawn_local()
            .await
            .context("starting in-process service")?,
    };
    let client = ApiClient::new(base);
    client
        .health()
        .await
        .with_context(|| format!("service at {} is not reachable", client.base_url()))?;
    Ok(client)
}

async fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Train(args) => {
            let client = connect(cli.server).await?;
            cmd_train(&client, args).await
        }
        Command::Sweep(args) => {
            let client = connect(cli.server).await?;
            cmd_sweep(&client, args).await
        }
        Command::Schedule(args) => {
            let client = connect(cli.server).await?;
            let csv = client
                .schedule(&ScheduleParams {
                    m_eps: args.m_eps,
                    eps_min: args.eps_min,
                    extra: args.extra,
                })
                .await?;
            print!("{csv}");
            Ok(0)
        }
        Command::DemoBias(args) => {
            let client = connect(cli.server).await?;
            let ns = args
                .ns
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let csv = client
                .demo_bias(&BiasParams {
                    ns,
                    std: args.std,
                    trials: args.trials,
                    seed: args.seed,
                })
                .await?;
            print!("{csv}");
            Ok(0)
        }
        Command::OuStats(args) => {
            let client = connect(cli.server).await?;
            let csv = client
                .ou_stats(&OuParams {
                    theta: args.theta,
                    mu: args.mu,
                    sigma: args.sigma,
                    dt: args.dt,
                    steps: args.steps,
                    seed: args.seed,
                })
                .await?;
            print!("{csv}");
            Ok(0)
        }
        Command::Serve(args) => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .init();
            let listener = tokio::net::TcpListener::bind(&args.addr)
                .await
                .with_context(|| format!("binding {}", args.addr))?;
            noisyclimb_service::serve(listener).await?;
            Ok(0)
        }
    }
}

async fn cmd_train(client: &ApiClient, args: TrainArgs) -> anyhow::Result<i32> {
    let config = args.config.resolve()?;
    let response = client
        .train(&TrainRequest {
            env: config.env,
            climb: config.climb,
        })
        .await?;

    write_file(&args.out, &training_log_csv(&response.log))?;
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| args.out.with_extension("json"));
    write_json(&manifest_path, &response.manifest)?;

    let s = &response.summary;
    match s.solved_at {
        Some(ep) => {
            println!(
                "solved at episode {ep} (avg100 {:.2}) after {} episodes in {:.2}s",
                s.final_avg100, s.episodes_run, s.wall_time
            );
            Ok(0)
        }
        None => {
            println!(
                "not solved within {} episodes (final avg100 {:.2})",
                s.episodes_run, s.final_avg100
            );
            Ok(EXIT_UNSOLVED)
        }
    }
}

async fn cmd_sweep(client: &ApiClient, args: SweepArgs) -> anyhow::Result<i32> {
    let config = args.config.resolve()?;
    let response = client
        .sweep(&SweepRequest {
            env: config.env,
            climb: config.climb,
            seeds: args.seeds,
            parallel: !args.serial,
            include_logs: args.logs_dir.is_some(),
        })
        .await?;

    write_json(&args.out, &response.summary)?;

    if let Some(dir) = &args.logs_dir {
        let logs = response
            .logs
            .as_ref()
            .context("service response is missing the requested logs")?;
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        for (run, log) in response.summary.runs.iter().zip(logs) {
            let path = dir.join(format!("seed_{}.csv", run.seed));
            write_file(&path, &training_log_csv(log))?;
        }
    }

    let s = &response.summary;
    println!(
        "{} of {} seeds solved (median solved_at: {})",
        s.runs.iter().filter(|r| r.solved_at.is_some()).count(),
        s.runs.len(),
        s.median_solved_at
            .map(|m| m.to_string())
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(0)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}
