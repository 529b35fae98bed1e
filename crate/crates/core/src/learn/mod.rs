//! Regression models for noise characterization: a linear baseline, an MLP
//! trained with Adam on the L1 loss, k-fold cross-validation, ensemble
//! prediction, and a random hyperparameter search.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CoreError, Result};
use crate::noise::{derive_seed, derive_seed2};

pub mod linear;
pub mod mlp;
pub mod search;

pub use linear::{fit_linear, LinearModel};
pub use mlp::{fit_mlp, Adam, Mlp, MlpConfig, MlpModel, MlpTrainer, OutputActivation};
pub use search::{random_search, HalvingSchedule, SearchSpace, TrialRecord};

/// Per-target min/max scaling to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl TargetScaler {
    /// Fits from label rows; every target needs min < max.
    pub fn fit(ys: &[&[f64]]) -> Result<Self> {
        let first = ys
            .first()
            .ok_or_else(|| CoreError::Training("no labels to scale".into()))?;
        let k = first.len();
        let mut mins = vec![f64::INFINITY; k];
        let mut maxs = vec![f64::NEG_INFINITY; k];
        for row in ys {
            for (j, v) in row.iter().enumerate() {
                mins[j] = mins[j].min(*v);
                maxs[j] = maxs[j].max(*v);
            }
        }
        for j in 0..k {
            if !(mins[j] < maxs[j]) {
                return Err(CoreError::Training(format!(
                    "target {j} is degenerate (min {} = max {}), cannot scale to [0,1]",
                    mins[j], maxs[j]
                )));
            }
        }
        Ok(Self { mins, maxs })
    }

    /// No-op scaling.
    pub fn identity(dim: usize) -> Self {
        Self {
            mins: vec![0.0; dim],
            maxs: vec![1.0; dim],
        }
    }

    pub fn scale_row(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn inverse_row(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(v, (lo, hi))| v * (hi - lo) + lo)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
}

/// A trained regressor of either kind, predictions in original label units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorModel {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl RegressorModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            RegressorModel::Linear(_) => ModelKind::Linear,
            RegressorModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            RegressorModel::Linear(m) => m.input_dim,
            RegressorModel::Mlp(m) => m.net.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            RegressorModel::Linear(m) => m.output_dim,
            RegressorModel::Mlp(m) => m.net.output_dim(),
        }
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        match self {
            RegressorModel::Linear(m) => m.predict(features),
            RegressorModel::Mlp(m) => m.predict(features),
        }
    }

    /// Serializes the model (weights, config, scaling) as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_slice(&fs::read(path)?)
            .map_err(|e| CoreError::Serialization(format!("{}: {e}", path.display())))
    }
}

/// Mean absolute error per target, original units.
pub fn mae_per_target(model: &RegressorModel, xs: &[&[f64]], ys: &[&[f64]]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(CoreError::Data("empty evaluation set".into()));
    }
    let k = ys[0].len();
    let mut acc = vec![0.0; k];
    for (x, y) in xs.iter().zip(ys) {
        let pred = model.predict(x)?;
        for j in 0..k {
            acc[j] += (pred[j] - y[j]).abs();
        }
    }
    for a in &mut acc {
        *a /= xs.len() as f64;
    }
    Ok(acc)
}

/// Which block layout a fold uses.
///
/// `TrainVal` trains on k−1 blocks and both early-stops and reports on the
/// held-out block (the single-parameter protocol). `TrainValTest` holds out
/// one block for testing and a second one for validation/early stopping
/// (the multi-parameter protocol: 18 train / 1 val / 1 test at k = 20).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvProtocol {
    TrainVal,
    TrainValTest,
}

/// Cross-validation output: per-fold MAE in original units plus the fold
/// models for ensemble prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub kind: ModelKind,
    pub protocol: CvProtocol,
    pub label_names: Vec<String>,
    /// per_fold_mae[fold][target], original units.
    pub per_fold_mae: Vec<Vec<f64>>,
    /// Mean across folds, per target.
    pub mean_mae: Vec<f64>,
    /// Population standard deviation across folds, per target.
    pub std_mae: Vec<f64>,
    pub models: Vec<RegressorModel>,
}

/// Default fold count used throughout the characterization runs.
pub const DEFAULT_FOLDS: usize = 20;

/// k-fold cross-validation. The dataset is shuffled once (seeded), split
/// into k equal blocks, and one model per fold is trained with a
/// fold-derived seed; the report aggregates held-out MAE in original units.
pub fn cross_validate(
    dataset: &Dataset,
    kind: ModelKind,
    config: &MlpConfig,
    k: usize,
    seed: u64,
    protocol: CvProtocol,
) -> Result<CvReport> {
    let n = dataset.n_samples();
    if k < 2 || k > n {
        return Err(CoreError::Config(format!(
            "fold count {k} incompatible with {n} samples"
        )));
    }
    let blocks = partition_blocks(n, k, derive_seed(seed, 0xB10C));
    let folds: Vec<(Vec<f64>, RegressorModel)> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<(Vec<f64>, RegressorModel)> {
            let eval_block = &blocks[f];
            let val_block: Option<&Vec<usize>> = match protocol {
                CvProtocol::TrainVal => None,
                CvProtocol::TrainValTest => Some(&blocks[(f + 1) % k]),
            };
            let mut train_idx = Vec::with_capacity(n);
            for (j, block) in blocks.iter().enumerate() {
                let is_val = matches!(protocol, CvProtocol::TrainValTest if j == (f + 1) % k);
                if j != f && !is_val {
                    train_idx.extend_from_slice(block);
                }
            }
            let gather = |idx: &[usize]| -> (Vec<&[f64]>, Vec<&[f64]>) {
                let xs = idx
                    .iter()
                    .map(|&i| dataset.samples[i].features.as_slice())
                    .collect();
                let ys = idx
                    .iter()
                    .map(|&i| dataset.samples[i].labels.as_slice())
                    .collect();
                (xs, ys)
            };
            let (tx, ty) = gather(&train_idx);
            let (ex, ey) = gather(eval_block);
            let fold_seed = derive_seed2(seed, 1, f as u64);
            let model = match kind {
                ModelKind::Linear => RegressorModel::Linear(fit_linear(&tx, &ty)?),
                ModelKind::Mlp => {
                    let (vx, vy) = match val_block {
                        Some(b) => gather(b),
                        None => (ex.clone(), ey.clone()),
                    };
                    RegressorModel::Mlp(fit_mlp(&tx, &ty, &vx, &vy, config, fold_seed)?)
                }
            };
            let mae = mae_per_target(&model, &ex, &ey)?;
            Ok((mae, model))
        })
        .collect::<Result<_>>()?;

    let n_targets = dataset.label_dim();
    let per_fold_mae: Vec<Vec<f64>> = folds.iter().map(|(m, _)| m.clone()).collect();
    let models: Vec<RegressorModel> = folds.into_iter().map(|(_, m)| m).collect();
    let mut mean_mae = vec![0.0; n_targets];
    for fold in &per_fold_mae {
        for (j, v) in fold.iter().enumerate() {
            mean_mae[j] += v / k as f64;
        }
    }
    let mut std_mae = vec![0.0; n_targets];
    for fold in &per_fold_mae {
        for (j, v) in fold.iter().enumerate() {
            std_mae[j] += (v - mean_mae[j]).powi(2) / k as f64;
        }
    }
    for s in &mut std_mae {
        *s = s.sqrt();
    }
    Ok(CvReport {
        k,
        seed,
        kind,
        protocol,
        label_names: dataset.label_names.clone(),
        per_fold_mae,
        mean_mae,
        std_mae,
        models,
    })
}

/// Shuffles 0..n and splits into k blocks whose sizes differ by at most one.
/// Every index lands in exactly one block.
pub fn partition_blocks(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::SeedableRng;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    mlp::shuffle(&mut indices, &mut rng);
    let base = n / k;
    let extra = n % k;
    let mut blocks = Vec::with_capacity(k);
    let mut off = 0;
    for j in 0..k {
        let sz = base + usize::from(j < extra);
        blocks.push(indices[off..off + sz].to_vec());
        off += sz;
    }
    blocks
}

/// Ensemble prediction: per-target mean and population standard deviation
/// across the models, original units.
pub fn predict_ensemble(
    models: &[RegressorModel],
    features: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let first = models
        .first()
        .ok_or_else(|| CoreError::Data("empty model ensemble".into()))?;
    let in_dim = first.input_dim();
    let out_dim = first.output_dim();
    for m in models {
        if m.input_dim() != in_dim || m.output_dim() != out_dim {
            return Err(CoreError::Dimension(
                "ensemble models disagree on dimensions".into(),
            ));
        }
    }
    let preds: Vec<Vec<f64>> = models
        .iter()
        .map(|m| m.predict(features))
        .collect::<Result<_>>()?;
    let nm = models.len() as f64;
    Ok((0..out_dim)
        .map(|j| {
            let mean = preds.iter().map(|p| p[j]).sum::<f64>() / nm;
            let var = preds.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / nm;
            (mean, var.sqrt())
        })
        .collect())
}
