//! `train`, `cross-validate`, `search`, `predict`: the regression workflows.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use rydnoise::dataset::Dataset;
use rydnoise::learn::{
    cross_validate, fit_linear, fit_mlp, partition_blocks, predict_ensemble, random_search,
    CvProtocol, CvReport, HalvingSchedule, MlpConfig, ModelKind, RegressorModel, SearchSpace,
    DEFAULT_FOLDS,
};

use crate::util::{
    atomic_write, csv_bytes, dataset_dir_and_name, fmt_f64, load_config, to_json_bytes,
    write_manifest, Manifest,
};

fn parse_kind(s: &str) -> Result<ModelKind> {
    match s {
        "linear" => Ok(ModelKind::Linear),
        "mlp" => Ok(ModelKind::Mlp),
        other => anyhow::bail!("model kind must be linear or mlp, got '{other}'"),
    }
}

/// Default MLP configuration by dataset shape: the multi-parameter search
/// winner for 5-target datasets, the single-parameter setup otherwise.
fn default_mlp_for(dataset: &Dataset) -> MlpConfig {
    if dataset.label_dim() > 1 {
        MlpConfig::multi_param()
    } else {
        MlpConfig::single_param()
    }
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let (dir, name) = dataset_dir_and_name(path)?;
    Ok(Dataset::read_files(&dir, &name)?)
}

// ---------------------------------------------------------------- train ---

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrainFileConfig {
    pub kind: Option<String>,
    pub mlp: Option<MlpConfig>,
    /// Fraction of samples held out for MLP validation/early stopping.
    pub val_fraction: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV (with its .meta.json sidecar next to it).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out/train")]
    pub out: PathBuf,
    /// linear or mlp.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct TrainManifestConfig {
    dataset: String,
    kind: String,
    mlp: Option<MlpConfig>,
    val_fraction: f64,
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let file_cfg: TrainFileConfig = load_config(&args.config)?;
    let dataset = load_dataset(&args.dataset)?;
    dataset.validate()?;
    let kind = parse_kind(
        args.kind
            .as_deref()
            .or(file_cfg.kind.as_deref())
            .unwrap_or("mlp"),
    )?;
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let val_fraction = file_cfg.val_fraction.unwrap_or(0.1).clamp(0.05, 0.5);
    let mlp_cfg = file_cfg.mlp.clone().unwrap_or_else(|| default_mlp_for(&dataset));

    let model = match kind {
        ModelKind::Linear => {
            let xs: Vec<&[f64]> = dataset.samples.iter().map(|s| s.features.as_slice()).collect();
            let ys: Vec<&[f64]> = dataset.samples.iter().map(|s| s.labels.as_slice()).collect();
            RegressorModel::Linear(fit_linear(&xs, &ys)?)
        }
        ModelKind::Mlp => {
            let n = dataset.n_samples();
            let n_val = ((n as f64 * val_fraction).round() as usize).max(1);
            let k = (n / n_val.max(1)).max(2);
            let blocks = partition_blocks(n, k, seed ^ 0x7A17);
            let val_idx = &blocks[0];
            let train_idx: Vec<usize> = blocks[1..].iter().flatten().copied().collect();
            let gx = |idx: &[usize]| -> (Vec<&[f64]>, Vec<&[f64]>) {
                (
                    idx.iter().map(|&i| dataset.samples[i].features.as_slice()).collect(),
                    idx.iter().map(|&i| dataset.samples[i].labels.as_slice()).collect(),
                )
            };
            let (tx, ty) = gx(&train_idx);
            let (vx, vy) = gx(val_idx);
            RegressorModel::Mlp(fit_mlp(&tx, &ty, &vx, &vy, &mlp_cfg, seed)?)
        }
    };
    model.save(&args.out.join("model.json"))?;
    let report = match &model {
        RegressorModel::Mlp(m) => serde_json::json!({
            "kind": "mlp",
            "best_val_loss": m.best_val_loss,
            "epochs_trained": m.epochs_trained,
        }),
        RegressorModel::Linear(_) => serde_json::json!({ "kind": "linear" }),
    };
    atomic_write(&args.out.join("train_report.json"), &to_json_bytes(&report)?)?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "train".into(),
            seed,
            config: TrainManifestConfig {
                dataset: args.dataset.display().to_string(),
                kind: format!("{kind:?}").to_lowercase(),
                mlp: matches!(kind, ModelKind::Mlp).then_some(mlp_cfg),
                val_fraction,
            },
            outputs: vec!["model.json".into(), "train_report.json".into()],
        },
    )?;
    Ok(())
}

// ------------------------------------------------------- cross-validate ---

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct CvFileConfig {
    pub kind: Option<String>,
    pub mlp: Option<MlpConfig>,
    pub k: Option<usize>,
    /// "train-val" or "train-val-test"; defaults by label count.
    pub protocol: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CrossValidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out/cv")]
    pub out: PathBuf,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// The on-disk CV report (models are stored separately under models/).
#[derive(Debug, Serialize, Deserialize)]
pub struct CvReportFile {
    pub registers: Vec<String>,
    pub atoms_total: usize,
    pub measurements: usize,
    pub k: usize,
    pub seed: u64,
    pub kind: String,
    pub label_names: Vec<String>,
    pub per_fold_mae: Vec<Vec<f64>>,
    pub mean_mae: Vec<f64>,
    pub std_mae: Vec<f64>,
}

pub fn cv_report_file(dataset: &Dataset, report: &CvReport) -> CvReportFile {
    CvReportFile {
        registers: dataset.metadata.registers.clone(),
        atoms_total: dataset
            .metadata
            .feature_blocks
            .iter()
            .map(|b| b.n_atoms)
            .sum(),
        measurements: dataset.feature_dim(),
        k: report.k,
        seed: report.seed,
        kind: format!("{:?}", report.kind).to_lowercase(),
        label_names: report.label_names.clone(),
        per_fold_mae: report.per_fold_mae.clone(),
        mean_mae: report.mean_mae.clone(),
        std_mae: report.std_mae.clone(),
    }
}

pub fn run_cv(args: &CrossValidateArgs) -> Result<()> {
    let file_cfg: CvFileConfig = load_config(&args.config)?;
    let dataset = load_dataset(&args.dataset)?;
    dataset.validate()?;
    let kind = parse_kind(
        args.kind
            .as_deref()
            .or(file_cfg.kind.as_deref())
            .unwrap_or("mlp"),
    )?;
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let k = args.k.or(file_cfg.k).unwrap_or(DEFAULT_FOLDS);
    let protocol = match file_cfg.protocol.as_deref() {
        Some("train-val") => CvProtocol::TrainVal,
        Some("train-val-test") => CvProtocol::TrainValTest,
        Some(other) => anyhow::bail!("unknown protocol '{other}'"),
        None => {
            if dataset.label_dim() > 1 {
                CvProtocol::TrainValTest
            } else {
                CvProtocol::TrainVal
            }
        }
    };
    let mlp_cfg = file_cfg.mlp.clone().unwrap_or_else(|| default_mlp_for(&dataset));
    let report = cross_validate(&dataset, kind, &mlp_cfg, k, seed, protocol)?;

    let mut outputs = Vec::new();
    let file = cv_report_file(&dataset, &report);
    atomic_write(&args.out.join("cv_report.json"), &to_json_bytes(&file)?)?;
    outputs.push("cv_report.json".into());

    let mut header = vec!["fold".to_string()];
    header.extend(report.label_names.iter().map(|l| format!("mae_{l}")));
    let rows: Vec<Vec<String>> = report
        .per_fold_mae
        .iter()
        .enumerate()
        .map(|(f, maes)| {
            let mut row = vec![f.to_string()];
            row.extend(maes.iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    atomic_write(&args.out.join("cv_folds.csv"), &csv_bytes(&header, &rows)?)?;
    outputs.push("cv_folds.csv".into());

    for (f, model) in report.models.iter().enumerate() {
        let name = format!("models/fold_{f:02}.json");
        model.save(&args.out.join(&name))?;
        outputs.push(name);
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "cross-validate".into(),
            seed,
            config: serde_json::json!({
                "dataset": args.dataset.display().to_string(),
                "kind": format!("{kind:?}").to_lowercase(),
                "k": k,
                "protocol": format!("{protocol:?}"),
                "mlp": mlp_cfg,
            }),
            outputs,
        },
    )?;
    Ok(())
}

// -------------------------------------------------------------- search ---

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SearchFileConfig {
    pub space: Option<SearchSpace>,
    pub schedule: Option<HalvingSchedule>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out/search")]
    pub out: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run_search(args: &SearchArgs) -> Result<()> {
    let file_cfg: SearchFileConfig = load_config(&args.config)?;
    let dataset = load_dataset(&args.dataset)?;
    dataset.validate()?;
    let space = file_cfg.space.clone().unwrap_or_default();
    let schedule = file_cfg.schedule.clone().unwrap_or_default();
    let n_trials = args.trials.or(file_cfg.n_trials).unwrap_or(20);
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let (best, log) = random_search(&dataset, &space, n_trials, &schedule, seed)?;

    atomic_write(&args.out.join("best_config.json"), &to_json_bytes(&best)?)?;
    let header: Vec<String> = [
        "trial",
        "hidden_layers",
        "neurons",
        "batch_size",
        "learning_rate",
        "dropout",
        "l2",
        "val_loss",
        "epochs",
        "survived",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.config.hidden_layers.len().to_string(),
                r.config.hidden_layers.first().copied().unwrap_or(0).to_string(),
                r.config.batch_size.to_string(),
                fmt_f64(r.config.learning_rate),
                fmt_f64(r.config.dropout_prob),
                fmt_f64(r.config.l2_strength),
                fmt_f64(r.val_loss),
                r.epochs_trained.to_string(),
                r.survived.to_string(),
            ]
        })
        .collect();
    atomic_write(&args.out.join("trials.csv"), &csv_bytes(&header, &rows)?)?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "search".into(),
            seed,
            config: serde_json::json!({
                "dataset": args.dataset.display().to_string(),
                "space": space,
                "schedule": schedule,
                "n_trials": n_trials,
            }),
            outputs: vec!["best_config.json".into(), "trials.csv".into()],
        },
    )?;
    Ok(())
}

// ------------------------------------------------------------- predict ---

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory of model JSON files (e.g. the models/ dir of a CV run), or
    /// a single model file.
    #[arg(long)]
    pub models: PathBuf,
    /// Feature CSV: a dataset file (label columns are dropped using its
    /// .meta.json sidecar) or a probabilities CSV from `simulate`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value = "out/predict")]
    pub out: PathBuf,
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let models = load_models(&args.models)?;
    if models.is_empty() {
        anyhow::bail!("no model files found under {}", args.models.display());
    }
    let (rows, label_names) = load_feature_rows(&args.features)?;
    if rows.is_empty() {
        anyhow::bail!("no feature rows in {}", args.features.display());
    }
    let names: Vec<String> = if label_names.is_empty() {
        match models[0].output_dim() {
            1 => vec!["sigma_r".into()],
            5 => rydnoise::NoiseParams::names().iter().map(|s| s.to_string()).collect(),
            k => (0..k).map(|j| format!("target_{j}")).collect(),
        }
    } else {
        label_names
    };

    let mut header = vec!["row".to_string()];
    for n in &names {
        header.push(format!("{n}_mean"));
        header.push(format!("{n}_std"));
    }
    let mut csv_rows = Vec::new();
    let mut summary = String::new();
    for (i, row) in rows.iter().enumerate() {
        let stats = predict_ensemble(&models, row)?;
        let mut out_row = vec![i.to_string()];
        for (mean, std) in &stats {
            out_row.push(fmt_f64(*mean));
            out_row.push(fmt_f64(*std));
        }
        csv_rows.push(out_row);
        summary.push_str(&format!("row {i}\n"));
        for (n, (mean, std)) in names.iter().zip(&stats) {
            summary.push_str(&format!("  {n:<12} {mean:.4} ± {std:.4}\n"));
        }
    }
    atomic_write(&args.out.join("predictions.csv"), &csv_bytes(&header, &csv_rows)?)?;
    atomic_write(&args.out.join("summary.txt"), summary.as_bytes())?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "predict".into(),
            seed: 0,
            config: serde_json::json!({
                "models": args.models.display().to_string(),
                "features": args.features.display().to_string(),
                "n_models": models.len(),
            }),
            outputs: vec!["predictions.csv".into(), "summary.txt".into()],
        },
    )?;
    Ok(())
}

fn load_models(path: &Path) -> Result<Vec<RegressorModel>> {
    if path.is_file() {
        return Ok(vec![RegressorModel::load(path)?]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files.iter().map(|p| Ok(RegressorModel::load(p)?)).collect()
}

/// Reads feature rows from a CSV, dropping label columns when a dataset
/// metadata sidecar sits next to the file.
fn load_feature_rows(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let (dir, name) = dataset_dir_and_name(path)?;
    let meta_path = dir.join(format!("{name}.meta.json"));
    if meta_path.exists() {
        let dataset = Dataset::read_files(&dir, &name)?;
        let labels = dataset.label_names.clone();
        return Ok((
            dataset.samples.into_iter().map(|s| s.features).collect(),
            labels,
        ));
    }
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| anyhow::anyhow!("bad float '{v}': {e}")))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok((rows, Vec::new()))
}
