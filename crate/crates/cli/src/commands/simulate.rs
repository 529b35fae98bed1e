//! `simulate`: one noisy occupation-probability estimate.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use rydnoise::config::{PulseSpec, RegisterSpec};
use rydnoise::evolve::StateVector;
use rydnoise::sim::{run_shots, SimOptions};
use rydnoise::{estimate_probabilities, NoiseParams, PhysicsConfig, DEFAULT_DT_NS, DEFAULT_SHOTS};

use crate::util::{atomic_write, csv_bytes, fmt_f64, load_config, to_json_bytes, write_manifest, Manifest};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub register: RegisterSpec,
    pub pulse: PulseSpec,
    pub noise: NoiseParams,
    pub shots: usize,
    pub seed: u64,
    pub dt_ns: f64,
    pub format: String,
    /// Also write the raw per-shot bitstrings (debugging aid).
    pub debug_bitstrings: bool,
    pub physics: PhysicsConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            register: RegisterSpec::Named("s2".into()),
            pulse: PulseSpec::Named("constant-rabi".into()),
            noise: NoiseParams::default(),
            shots: DEFAULT_SHOTS,
            seed: 0,
            dt_ns: DEFAULT_DT_NS,
            format: "csv".into(),
            debug_bitstrings: false,
            physics: PhysicsConfig::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out/simulate")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<usize>,
    /// Built-in register name (s2, s3, s4a..s4f, s5, s6).
    #[arg(long)]
    pub register: Option<String>,
    /// Pulse preset name (constant-rabi, gaussian-sweep).
    #[arg(long)]
    pub pulse: Option<String>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimulateConfig = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = args.shots {
        cfg.shots = shots;
    }
    if let Some(register) = &args.register {
        cfg.register = RegisterSpec::Named(register.clone());
    }
    if let Some(pulse) = &args.pulse {
        cfg.pulse = PulseSpec::Named(pulse.clone());
    }
    if let Some(format) = &args.format {
        cfg.format = format.clone();
    }
    if cfg.format != "csv" && cfg.format != "json" {
        anyhow::bail!("format must be csv or json, got '{}'", cfg.format);
    }

    let register = cfg.register.build()?;
    let pulse = cfg.pulse.build()?;
    let opts = SimOptions { dt_ns: cfg.dt_ns };
    let pv = estimate_probabilities(
        &register,
        &pulse,
        &cfg.noise,
        cfg.shots,
        cfg.seed,
        &opts,
        &cfg.physics,
    )?;

    let n = register.len();
    let mut outputs = Vec::new();
    let bitstrings: Vec<String> = (0..pv.len()).map(|b| StateVector::bitstring(n, b)).collect();
    match cfg.format.as_str() {
        "csv" => {
            let row: Vec<String> = pv.values.iter().map(|v| fmt_f64(*v)).collect();
            let bytes = csv_bytes(&bitstrings, &[row])?;
            write_output(&args.out, "probabilities.csv", &bytes, &mut outputs)?;
        }
        _ => {
            let doc: Vec<(String, f64)> = bitstrings
                .iter()
                .cloned()
                .zip(pv.values.iter().copied())
                .collect();
            let obj = serde_json::json!({
                "n_atoms": pv.n_atoms,
                "n_shots": pv.n_shots,
                "probabilities": doc.into_iter().collect::<std::collections::BTreeMap<_, _>>(),
            });
            write_output(&args.out, "probabilities.json", &to_json_bytes(&obj)?, &mut outputs)?;
        }
    }
    if cfg.debug_bitstrings {
        let indices = run_shots(
            &register,
            &pulse,
            &cfg.noise,
            cfg.shots,
            cfg.seed,
            &opts,
            &cfg.physics,
        )?;
        let rows: Vec<Vec<String>> = indices
            .iter()
            .enumerate()
            .map(|(i, &b)| vec![i.to_string(), StateVector::bitstring(n, b)])
            .collect();
        let bytes = csv_bytes(&["shot".into(), "bitstring".into()], &rows)?;
        write_output(&args.out, "shots.csv", &bytes, &mut outputs)?;
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "simulate".into(),
            seed: cfg.seed,
            config: &cfg,
            outputs,
        },
    )?;
    Ok(())
}

fn write_output(
    out_dir: &Path,
    name: &str,
    bytes: &[u8],
    outputs: &mut Vec<String>,
) -> Result<()> {
    atomic_write(&out_dir.join(name), bytes)?;
    outputs.push(name.to_string());
    Ok(())
}
