//! Seeded random hyperparameter search with successive-halving pruning.
//!
//! Configurations are sampled uniformly (learning rate and L2 log-uniform)
//! from the search space, trained in rungs of increasing epoch budget, and
//! the weaker half is discarded at each rung by validation L1.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CoreError, Result};
use crate::learn::mlp::{MlpConfig, MlpTrainer};
use crate::learn::TargetScaler;
use crate::noise::{derive_seed, derive_seed2};

/// Hyperparameter sampling ranges (inclusive bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// Number of hidden layers.
    pub hidden_layers: (usize, usize),
    /// Neurons per hidden layer (one width shared by all layers).
    pub neurons: (usize, usize),
    /// Batch sizes to choose from.
    pub batch_sizes: Vec<usize>,
    /// log10 learning-rate range.
    pub learning_rate_log10: (f64, f64),
    /// Optional dropout probability range.
    pub dropout: Option<(f64, f64)>,
    /// Optional log10 L2-strength range.
    pub l2_log10: Option<(f64, f64)>,
}

impl Default for SearchSpace {
    /// The ranges used for the multi-parameter model search: 1–100 hidden
    /// layers, 5–200 neurons, batch in {2,4,8,16,32}, learning rate
    /// log-uniform in [1e-4, 1e-1].
    fn default() -> Self {
        Self {
            hidden_layers: (1, 100),
            neurons: (5, 200),
            batch_sizes: vec![2, 4, 8, 16, 32],
            learning_rate_log10: (-4.0, -1.0),
            dropout: None,
            l2_log10: None,
        }
    }
}

impl SearchSpace {
    fn sample(&self, rng: &mut ChaCha8Rng, max_epochs: usize) -> MlpConfig {
        let sample_usize = |rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        let sample_f64 = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        let n_layers = sample_usize(rng, self.hidden_layers);
        let width = sample_usize(rng, self.neurons);
        let batch_size = if self.batch_sizes.len() > 1 {
            self.batch_sizes[rng.random_range(0..self.batch_sizes.len())]
        } else {
            self.batch_sizes[0]
        };
        let learning_rate = 10f64.powf(sample_f64(rng, self.learning_rate_log10));
        let dropout_prob = self.dropout.map(|r| sample_f64(rng, r)).unwrap_or(0.0);
        let l2_strength = self
            .l2_log10
            .map(|r| 10f64.powf(sample_f64(rng, r)))
            .unwrap_or(0.0);
        MlpConfig {
            hidden_layers: vec![width; n_layers],
            learning_rate,
            batch_size,
            max_epochs,
            dropout_prob,
            l2_strength,
            early_stop_patience: MlpConfig::single_param().early_stop_patience,
        }
    }
}

/// Epoch budget schedule for successive halving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HalvingSchedule {
    /// Epochs every trial gets before the first cut.
    pub initial_epochs: usize,
    /// Fraction kept per rung (2 = keep the better half) and budget growth
    /// factor between rungs.
    pub eta: usize,
    /// Epoch budget cap per trial.
    pub max_epochs: usize,
}

impl Default for HalvingSchedule {
    fn default() -> Self {
        Self {
            initial_epochs: 5,
            eta: 2,
            max_epochs: 150,
        }
    }
}

/// Outcome of one sampled configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: MlpConfig,
    /// Best validation L1 (scaled targets) the trial reached.
    pub val_loss: f64,
    pub epochs_trained: usize,
    /// False when the trial was pruned before the final rung.
    pub survived: bool,
}

/// Runs a seeded random search over `space` with successive halving on a
/// held-out validation split (20% of the dataset). Returns the best
/// configuration and the full trial log.
pub fn random_search(
    dataset: &Dataset,
    space: &SearchSpace,
    n_trials: usize,
    schedule: &HalvingSchedule,
    seed: u64,
) -> Result<(MlpConfig, Vec<TrialRecord>)> {
    if n_trials == 0 {
        return Err(CoreError::Config("n_trials must be ≥ 1".into()));
    }
    if space.batch_sizes.is_empty() {
        return Err(CoreError::Config("batch_sizes must not be empty".into()));
    }
    if schedule.initial_epochs == 0 || schedule.eta < 2 {
        return Err(CoreError::Config(
            "halving schedule needs initial_epochs ≥ 1 and eta ≥ 2".into(),
        ));
    }
    let n = dataset.n_samples();
    if n < 5 {
        return Err(CoreError::Config("dataset too small for a search".into()));
    }
    // 80/20 train/validation split, seeded.
    let blocks = super::partition_blocks(n, 5, derive_seed(seed, 0x5311));
    let val_idx = &blocks[0];
    let train_idx: Vec<usize> = blocks[1..].iter().flatten().copied().collect();
    let gather = |idx: &[usize]| -> (Vec<&[f64]>, Vec<&[f64]>) {
        (
            idx.iter()
                .map(|&i| dataset.samples[i].features.as_slice())
                .collect(),
            idx.iter()
                .map(|&i| dataset.samples[i].labels.as_slice())
                .collect(),
        )
    };
    let (tx, ty) = gather(&train_idx);
    let (vx, vy) = gather(val_idx);
    let scaler = TargetScaler::fit(&ty)?;
    let tys: Vec<Vec<f64>> = ty.iter().map(|y| scaler.scale_row(y)).collect();
    let vys: Vec<Vec<f64>> = vy.iter().map(|y| scaler.scale_row(y)).collect();
    let input_dim = dataset.feature_dim();
    let output_dim = dataset.label_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xCF6));
    let mut trainers: Vec<(usize, MlpTrainer, MlpConfig)> = (0..n_trials)
        .map(|t| {
            let config = space.sample(&mut rng, schedule.max_epochs);
            let trainer = MlpTrainer::new(
                input_dim,
                output_dim,
                config.clone(),
                scaler.clone(),
                derive_seed2(seed, 2, t as u64),
            )?;
            Ok((t, trainer, config))
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<Option<TrialRecord>> = (0..n_trials).map(|_| None).collect();
    let mut budget = schedule.initial_epochs;
    let mut total = 0usize;
    while total < schedule.max_epochs {
        let run_for = budget.min(schedule.max_epochs - total);
        for (_, trainer, _) in trainers.iter_mut() {
            trainer.train(&tx, &tys, &vx, &vys, run_for)?;
        }
        total += run_for;
        if trainers.len() > 1 {
            // Keep the better 1/eta fraction, at least one trial.
            trainers.sort_by(|a, b| a.1.best_val().partial_cmp(&b.1.best_val()).unwrap());
            let keep = trainers.len().div_ceil(schedule.eta);
            for (t, trainer, config) in trainers.drain(keep..) {
                records[t] = Some(TrialRecord {
                    trial: t,
                    config,
                    val_loss: trainer.best_val(),
                    epochs_trained: trainer.epochs_done(),
                    survived: false,
                });
            }
        } else if trainers.iter().all(|(_, tr, _)| tr.stopped()) {
            break;
        }
        budget *= schedule.eta;
    }
    for (t, trainer, config) in trainers {
        records[t] = Some(TrialRecord {
            trial: t,
            config,
            val_loss: trainer.best_val(),
            epochs_trained: trainer.epochs_done(),
            survived: true,
        });
    }
    let records: Vec<TrialRecord> = records.into_iter().map(|r| r.expect("filled")).collect();
    let best = records
        .iter()
        .min_by(|a, b| a.val_loss.partial_cmp(&b.val_loss).unwrap())
        .expect("n_trials ≥ 1");
    Ok((best.config.clone(), records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMetadata, FeatureBlock, LabeledSample};

    fn toy_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(0.0..1.0);
                LabeledSample {
                    features: vec![a, 1.0 - a],
                    labels: vec![0.3 * a + 0.1],
                }
            })
            .collect();
        Dataset {
            feature_names: vec!["t:0".into(), "t:1".into()],
            label_names: vec!["sigma_r".into()],
            samples,
            metadata: DatasetMetadata {
                registers: vec!["t".into()],
                pulse: "test".into(),
                shots_per_sample: 0,
                seed,
                label_ranges: vec![("sigma_r".into(), 0.1, 0.4)],
                feature_blocks: vec![FeatureBlock {
                    register_id: "t".into(),
                    n_atoms: 1,
                }],
            },
        }
    }

    fn small_space() -> SearchSpace {
        SearchSpace {
            hidden_layers: (1, 2),
            neurons: (4, 16),
            batch_sizes: vec![8, 16],
            learning_rate_log10: (-3.0, -1.5),
            dropout: None,
            l2_log10: None,
        }
    }

    fn quick_schedule() -> HalvingSchedule {
        HalvingSchedule {
            initial_epochs: 2,
            eta: 2,
            max_epochs: 8,
        }
    }

    #[test]
    fn default_space_matches_stated_ranges() {
        let s = SearchSpace::default();
        assert_eq!(s.hidden_layers, (1, 100));
        assert_eq!(s.neurons, (5, 200));
        assert_eq!(s.batch_sizes, vec![2, 4, 8, 16, 32]);
        assert_eq!(s.learning_rate_log10, (-4.0, -1.0));
    }

    #[test]
    fn single_trial_returns_its_config() {
        let data = toy_dataset(100, 1);
        let (best, log) =
            random_search(&data, &small_space(), 1, &quick_schedule(), 3).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(best, log[0].config);
        assert!(log[0].survived);
    }

    #[test]
    fn collapsed_space_returns_the_point() {
        let data = toy_dataset(100, 2);
        let space = SearchSpace {
            hidden_layers: (2, 2),
            neurons: (7, 7),
            batch_sizes: vec![4],
            learning_rate_log10: (-2.0, -2.0),
            dropout: Some((0.1, 0.1)),
            l2_log10: Some((-3.0, -3.0)),
        };
        let (best, _) = random_search(&data, &space, 3, &quick_schedule(), 5).unwrap();
        assert_eq!(best.hidden_layers, vec![7, 7]);
        assert_eq!(best.batch_size, 4);
        assert!((best.learning_rate - 1e-2).abs() < 1e-12);
        assert!((best.dropout_prob - 0.1).abs() < 1e-12);
        assert!((best.l2_strength - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn best_is_no_worse_than_median() {
        let data = toy_dataset(150, 4);
        let (_, log) = random_search(&data, &small_space(), 6, &quick_schedule(), 7).unwrap();
        assert_eq!(log.len(), 6);
        let mut losses: Vec<f64> = log.iter().map(|r| r.val_loss).collect();
        losses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let best = losses[0];
        let median = losses[losses.len() / 2];
        assert!(best <= median);
    }

    #[test]
    fn search_is_deterministic() {
        let data = toy_dataset(80, 6);
        let a = random_search(&data, &small_space(), 4, &quick_schedule(), 11).unwrap();
        let b = random_search(&data, &small_space(), 4, &quick_schedule(), 11).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.len(), b.1.len());
        for (x, y) in a.1.iter().zip(&b.1) {
            assert_eq!(x.config, y.config);
            assert_eq!(x.val_loss, y.val_loss);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let data = toy_dataset(50, 8);
        assert!(random_search(&data, &small_space(), 0, &quick_schedule(), 1).is_err());
        let mut space = small_space();
        space.batch_sizes.clear();
        assert!(random_search(&data, &space, 2, &quick_schedule(), 1).is_err());
    }
}
