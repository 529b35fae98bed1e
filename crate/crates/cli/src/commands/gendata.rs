//! `gen-data`: labeled dataset generation (single- or multi-parameter).

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use rydnoise::config::{PulseSpec, RegisterSpec};
use rydnoise::dataset::{
    generate_multi_param_dataset, generate_single_param_dataset, MultiParamRanges,
    SingleParamSpec, DESK_SCALE, MULTI_PARAM_SAMPLES,
};
use rydnoise::sim::SimOptions;
use rydnoise::{PhysicsConfig, DEFAULT_DT_NS, DEFAULT_SHOTS};

use crate::util::{load_config, write_manifest, Manifest};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    /// "single" (σ_R only, several registers) or "multi" (all five
    /// parameters, one register).
    pub mode: String,
    /// Registers measured in single mode, sharing one σ_R sequence.
    pub registers: Vec<RegisterSpec>,
    /// Register used in multi mode.
    pub register: RegisterSpec,
    /// Drive; defaults to the mode's standard pulse.
    pub pulse: Option<PulseSpec>,
    pub n_samples: usize,
    pub shots: usize,
    pub sigma_r_range: (f64, f64),
    pub ranges: MultiParamRanges,
    pub seed: u64,
    pub dt_ns: f64,
    pub physics: PhysicsConfig,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            mode: "single".into(),
            registers: ["s2", "s3", "s4a", "s4b", "s5"]
                .iter()
                .map(|n| RegisterSpec::Named((*n).into()))
                .collect(),
            register: RegisterSpec::Named("s6".into()),
            pulse: None,
            n_samples: 10_000,
            shots: DEFAULT_SHOTS,
            sigma_r_range: (0.0, 0.15),
            ranges: MultiParamRanges::default(),
            seed: 0,
            dt_ns: DEFAULT_DT_NS,
            physics: PhysicsConfig::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out/gen-data")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// single or multi.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    /// Desk-scale preset (2000 samples, 200 shots).
    #[arg(long)]
    pub desk_scale: bool,
    /// Full-scale multi preset (54000 samples, 500 shots).
    #[arg(long)]
    pub full_scale: bool,
}

pub fn run(args: &GenDataArgs) -> Result<()> {
    let mut cfg: GenDataConfig = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = mode.clone();
    }
    if args.desk_scale {
        (cfg.n_samples, cfg.shots) = DESK_SCALE;
    }
    if args.full_scale {
        cfg.n_samples = if cfg.mode == "multi" {
            MULTI_PARAM_SAMPLES
        } else {
            10_000
        };
        cfg.shots = DEFAULT_SHOTS;
    }
    if let Some(samples) = args.samples {
        cfg.n_samples = samples;
    }
    if let Some(shots) = args.shots {
        cfg.shots = shots;
    }

    let opts = SimOptions { dt_ns: cfg.dt_ns };
    let mut outputs = Vec::new();
    match cfg.mode.as_str() {
        "single" => {
            let pulse = match &cfg.pulse {
                Some(p) => p.build()?,
                None => PulseSpec::Named("constant-rabi".into()).build()?,
            };
            let registers = cfg
                .registers
                .iter()
                .map(|spec| Ok((spec.id(), spec.build()?)))
                .collect::<Result<Vec<_>>>()?;
            let spec = SingleParamSpec {
                n_samples: cfg.n_samples,
                shots: cfg.shots,
                sigma_r_range: cfg.sigma_r_range,
            };
            let sets = generate_single_param_dataset(
                &registers,
                &pulse,
                &spec,
                cfg.seed,
                &opts,
                &cfg.physics,
            )?;
            for (id, dataset) in &sets {
                dataset.write_files(&args.out, id)?;
                outputs.push(format!("{id}.csv"));
                outputs.push(format!("{id}.meta.json"));
            }
        }
        "multi" => {
            let pulse = match &cfg.pulse {
                Some(p) => p.build()?,
                None => PulseSpec::Named("gaussian-sweep".into()).build()?,
            };
            let register = cfg.register.build()?;
            let id = cfg.register.id();
            let dataset = generate_multi_param_dataset(
                &id,
                &register,
                &pulse,
                cfg.n_samples,
                cfg.shots,
                &cfg.ranges,
                cfg.seed,
                &opts,
                &cfg.physics,
            )?;
            dataset.write_files(&args.out, &id)?;
            outputs.push(format!("{id}.csv"));
            outputs.push(format!("{id}.meta.json"));
        }
        other => anyhow::bail!("mode must be single or multi, got '{other}'"),
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "gen-data".into(),
            seed: cfg.seed,
            config: &cfg,
            outputs,
        },
    )?;
    Ok(())
}
