//! `rl-train`: correction-pulse agent training with KL monitoring.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use rydnoise::rl::{train_dqn, uncorrected_baseline, CorrectionEnv, CorrectionEnvConfig, DqnConfig};

use crate::util::{atomic_write, csv_bytes, fmt_f64, load_config, to_json_bytes, write_manifest, Manifest};

/// Uncorrected noisy runs averaged into the reference KL value.
pub const DEFAULT_BASELINE_RUNS: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RlTrainConfig {
    pub env: CorrectionEnvConfig,
    pub dqn: DqnConfig,
    pub baseline_runs: usize,
}

impl Default for RlTrainConfig {
    fn default() -> Self {
        Self {
            env: CorrectionEnvConfig::default(),
            dqn: DqnConfig::default(),
            baseline_runs: DEFAULT_BASELINE_RUNS,
        }
    }
}

#[derive(Debug, Args)]
pub struct RlTrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out/rl-train")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
}

pub fn run(args: &RlTrainArgs) -> Result<()> {
    let mut cfg: RlTrainConfig = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.dqn.seed = seed;
    }
    if let Some(episodes) = args.episodes {
        cfg.dqn.episodes = episodes;
    }

    let baseline = uncorrected_baseline(&cfg.env, cfg.baseline_runs, cfg.dqn.seed ^ 0xBA5E)?;
    let mut env = CorrectionEnv::new(cfg.env.clone())?;
    let (agent, logs) = train_dqn(&mut env, &cfg.dqn)?;

    let header: Vec<String> = ["episode", "mean_kl", "steps", "cumulative_reward", "epsilon", "baseline"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = logs
        .iter()
        .map(|l| {
            vec![
                l.episode.to_string(),
                l.mean_kl.map(fmt_f64).unwrap_or_default(),
                l.steps.to_string(),
                fmt_f64(l.cumulative_reward),
                fmt_f64(l.epsilon),
                fmt_f64(baseline),
            ]
        })
        .collect();
    atomic_write(&args.out.join("kl_log.csv"), &csv_bytes(&header, &rows)?)?;
    atomic_write(&args.out.join("agent.json"), &to_json_bytes(&agent)?)?;

    let tail = logs.len().saturating_sub(100);
    let final_kls: Vec<f64> = logs[tail..].iter().filter_map(|l| l.mean_kl).collect();
    let final_mean_kl = if final_kls.is_empty() {
        f64::NAN
    } else {
        final_kls.iter().sum::<f64>() / final_kls.len() as f64
    };
    let summary = serde_json::json!({
        "baseline_kl": baseline,
        "baseline_runs": cfg.baseline_runs,
        "episodes": logs.len(),
        "final_100_mean_kl": final_mean_kl,
        "below_baseline": final_mean_kl < baseline,
    });
    atomic_write(&args.out.join("rl_summary.json"), &to_json_bytes(&summary)?)?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "rl-train".into(),
            seed: cfg.dqn.seed,
            config: &cfg,
            outputs: vec!["kl_log.csv".into(), "agent.json".into(), "rl_summary.json".into()],
        },
    )?;
    Ok(())
}
