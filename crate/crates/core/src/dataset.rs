//! Labeled dataset generation, concatenation, and CSV persistence.
//!
//! A dataset row holds the estimated occupation probabilities of one or more
//! systems (the features) and the noise parameters used to generate them
//! (the labels). Feature columns are named `<register_id>:<bitstring>` and
//! grouped into per-system blocks, each of which sums to one.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::evolve::StateVector;
use crate::noise::{derive_seed, derive_seed2, NoiseParams, NOISELESS_WAIST_UM};
use crate::physics::PhysicsConfig;
use crate::register::AtomRegister;
use crate::sim::{estimate_probabilities, SimOptions};
use crate::waveform::PulseSequence;

/// Samples in a full-scale single-parameter dataset.
pub const SINGLE_PARAM_SAMPLES: usize = 10_000;

/// Samples in a full-scale multi-parameter dataset.
pub const MULTI_PARAM_SAMPLES: usize = 54_000;

/// Desk-scale preset used by the acceptance suite: (samples, shots).
pub const DESK_SCALE: (usize, usize) = (2_000, 200);

/// Uniform sampling range for σ_R in characterization datasets.
pub const SIGMA_R_RANGE: (f64, f64) = (0.0, 0.15);

/// One labeled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
}

/// A contiguous group of feature columns produced by one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub register_id: String,
    pub n_atoms: usize,
}

impl FeatureBlock {
    pub fn width(&self) -> usize {
        1 << self.n_atoms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub registers: Vec<String>,
    pub pulse: String,
    pub shots_per_sample: usize,
    pub seed: u64,
    /// (label name, low, high) for every label column.
    pub label_ranges: Vec<(String, f64, f64)>,
    pub feature_blocks: Vec<FeatureBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
    pub samples: Vec<LabeledSample>,
    pub metadata: DatasetMetadata,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn label_dim(&self) -> usize {
        self.label_names.len()
    }

    /// Checks that every sample has consistent dimensions and that each
    /// feature block is a probability vector (sums to 1 within 1e-9).
    pub fn validate(&self) -> Result<()> {
        let widths: Vec<usize> = self
            .metadata
            .feature_blocks
            .iter()
            .map(|b| b.width())
            .collect();
        let total: usize = widths.iter().sum();
        if total != self.feature_dim() {
            return Err(CoreError::Data(format!(
                "feature blocks cover {total} columns but the dataset has {}",
                self.feature_dim()
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.features.len() != total || s.labels.len() != self.label_dim() {
                return Err(CoreError::Data(format!(
                    "sample {i} has inconsistent shape"
                )));
            }
            let mut off = 0;
            for w in &widths {
                let block = &s.features[off..off + w];
                let sum: f64 = block.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || block.iter().any(|&v| v < 0.0) {
                    return Err(CoreError::Data(format!(
                        "sample {i}: feature block at column {off} is not a probability vector (sum {sum})"
                    )));
                }
                off += w;
            }
        }
        Ok(())
    }

    /// Subset by sample indices (cloned).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// Writes `<name>.csv` and `<name>.meta.json` under `dir`. Files are
    /// written to a temporary path and renamed, so readers never observe a
    /// partial file.
    pub fn write_files(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{name}.csv"));
        let meta_path = dir.join(format!("{name}.meta.json"));

        let mut wtr = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self
            .feature_names
            .iter()
            .map(|s| s.as_str())
            .chain(self.label_names.iter().map(|s| s.as_str()))
            .collect();
        wtr.write_record(&header)
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        let mut row: Vec<String> = Vec::new();
        for s in &self.samples {
            row.clear();
            row.extend(s.features.iter().map(|v| format!("{v}")));
            row.extend(s.labels.iter().map(|v| format!("{v}")));
            wtr.write_record(&row)
                .map_err(|e| CoreError::Serialization(e.to_string()))?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        atomic_write(&csv_path, &bytes)?;

        let meta = serde_json::to_vec_pretty(&self.metadata)
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        atomic_write(&meta_path, &meta)?;
        Ok(())
    }

    /// Reads a dataset previously written by [`Dataset::write_files`].
    pub fn read_files(dir: &Path, name: &str) -> Result<Dataset> {
        let csv_path = dir.join(format!("{name}.csv"));
        let meta_path = dir.join(format!("{name}.meta.json"));
        let metadata: DatasetMetadata = serde_json::from_slice(&fs::read(&meta_path)?)
            .map_err(|e| CoreError::Serialization(format!("{}: {e}", meta_path.display())))?;
        let mut rdr = csv::Reader::from_path(&csv_path)
            .map_err(|e| CoreError::Serialization(e.to_string()))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| CoreError::Serialization(e.to_string()))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let n_labels = metadata.label_ranges.len();
        if header.len() < n_labels {
            return Err(CoreError::Data(format!(
                "{}: {} columns but metadata lists {n_labels} labels",
                csv_path.display(),
                header.len()
            )));
        }
        let n_features = header.len() - n_labels;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CoreError::Serialization(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| CoreError::Data(format!("bad float '{v}': {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != header.len() {
                return Err(CoreError::Data("ragged CSV row".into()));
            }
            samples.push(LabeledSample {
                features: vals[..n_features].to_vec(),
                labels: vals[n_features..].to_vec(),
            });
        }
        Ok(Dataset {
            feature_names: header[..n_features].to_vec(),
            label_names: header[n_features..].to_vec(),
            samples,
            metadata,
        })
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn feature_names_for(register_id: &str, n_atoms: usize) -> Vec<String> {
    (0..(1usize << n_atoms))
        .map(|b| format!("{register_id}:{}", StateVector::bitstring(n_atoms, b)))
        .collect()
}

/// Settings for single-parameter (σ_R) dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleParamSpec {
    pub n_samples: usize,
    pub shots: usize,
    pub sigma_r_range: (f64, f64),
}

impl Default for SingleParamSpec {
    fn default() -> Self {
        Self {
            n_samples: SINGLE_PARAM_SAMPLES,
            shots: crate::sim::DEFAULT_SHOTS,
            sigma_r_range: SIGMA_R_RANGE,
        }
    }
}

/// Generates one dataset per register, all sharing the same σ_R label
/// sequence so that later feature concatenation stays label-consistent.
/// Every other noise channel is held at zero.
pub fn generate_single_param_dataset(
    registers: &[(String, AtomRegister)],
    pulse: &PulseSequence,
    spec: &SingleParamSpec,
    seed: u64,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<Vec<(String, Dataset)>> {
    if registers.is_empty() {
        return Err(CoreError::Config("no registers given".into()));
    }
    let (lo, hi) = spec.sigma_r_range;
    if !(lo >= 0.0 && hi >= lo) {
        return Err(CoreError::Config(format!(
            "invalid sigma_r range ({lo}, {hi})"
        )));
    }
    if spec.n_samples == 0 || spec.shots == 0 {
        return Err(CoreError::Config("n_samples and shots must be ≥ 1".into()));
    }
    // One σ_R draw per sample index, reused for every register.
    let mut label_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let sigmas: Vec<f64> = (0..spec.n_samples)
        .map(|_| {
            if hi > lo {
                label_rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect();

    let mut out = Vec::with_capacity(registers.len());
    for (k, (id, register)) in registers.iter().enumerate() {
        let samples: Vec<LabeledSample> = (0..spec.n_samples)
            .into_par_iter()
            .map(|i| {
                let params = NoiseParams {
                    sigma_r: sigmas[i],
                    waist: NOISELESS_WAIST_UM,
                    temperature: 0.0,
                    eps: 0.0,
                    eps_prime: 0.0,
                };
                let pv = estimate_probabilities(
                    register,
                    pulse,
                    &params,
                    spec.shots,
                    derive_seed2(seed, (k + 1) as u64, i as u64),
                    opts,
                    physics,
                )?;
                Ok(LabeledSample {
                    features: pv.values,
                    labels: vec![sigmas[i]],
                })
            })
            .collect::<Result<_>>()?;
        let dataset = Dataset {
            feature_names: feature_names_for(id, register.len()),
            label_names: vec!["sigma_r".into()],
            samples,
            metadata: DatasetMetadata {
                registers: vec![id.clone()],
                pulse: "constant-rabi".into(),
                shots_per_sample: spec.shots,
                seed,
                label_ranges: vec![("sigma_r".into(), lo, hi)],
                feature_blocks: vec![FeatureBlock {
                    register_id: id.clone(),
                    n_atoms: register.len(),
                }],
            },
        };
        out.push((id.clone(), dataset));
    }
    Ok(out)
}

/// Uniform sampling ranges for the five-parameter datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiParamRanges {
    pub sigma_r: (f64, f64),
    pub waist: (f64, f64),
    pub temperature: (f64, f64),
    pub eps: (f64, f64),
    pub eps_prime: (f64, f64),
}

impl Default for MultiParamRanges {
    fn default() -> Self {
        Self {
            sigma_r: (0.0, 0.15),
            waist: (0.0, 200.0),
            temperature: (0.0, 100.0),
            eps: (0.0, 0.15),
            eps_prime: (0.0, 0.15),
        }
    }
}

impl MultiParamRanges {
    pub fn as_list(&self) -> Vec<(String, f64, f64)> {
        NoiseParams::names()
            .iter()
            .zip([
                self.sigma_r,
                self.waist,
                self.temperature,
                self.eps,
                self.eps_prime,
            ])
            .map(|(n, (lo, hi))| (n.to_string(), lo, hi))
            .collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> NoiseParams {
        let mut pick = |r: (f64, f64)| {
            if r.1 > r.0 {
                rng.random_range(r.0..r.1)
            } else {
                r.0
            }
        };
        let sigma_r = pick(self.sigma_r);
        // A waist of exactly zero is degenerate; keep the draw positive.
        let waist = pick(self.waist).max(1e-9);
        let temperature = pick(self.temperature);
        let eps = pick(self.eps);
        let eps_prime = pick(self.eps_prime);
        NoiseParams {
            sigma_r,
            waist,
            temperature,
            eps,
            eps_prime,
        }
    }
}

/// Generates the five-parameter dataset on one register: i.i.d. uniform
/// label draws per sample, features from noisy shot estimates.
pub fn generate_multi_param_dataset(
    register_id: &str,
    register: &AtomRegister,
    pulse: &PulseSequence,
    n_samples: usize,
    shots: usize,
    ranges: &MultiParamRanges,
    seed: u64,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<Dataset> {
    if n_samples == 0 || shots == 0 {
        return Err(CoreError::Config("n_samples and shots must be ≥ 1".into()));
    }
    let mut label_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let param_draws: Vec<NoiseParams> = (0..n_samples)
        .map(|_| ranges.draw(&mut label_rng))
        .collect();
    let samples: Vec<LabeledSample> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let pv = estimate_probabilities(
                register,
                pulse,
                &param_draws[i],
                shots,
                derive_seed2(seed, 1, i as u64),
                opts,
                physics,
            )?;
            Ok(LabeledSample {
                features: pv.values,
                labels: param_draws[i].to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        feature_names: feature_names_for(register_id, register.len()),
        label_names: NoiseParams::names().iter().map(|s| s.to_string()).collect(),
        samples,
        metadata: DatasetMetadata {
            registers: vec![register_id.to_string()],
            pulse: "gaussian-sweep".into(),
            shots_per_sample: shots,
            seed,
            label_ranges: ranges.as_list(),
            feature_blocks: vec![FeatureBlock {
                register_id: register_id.to_string(),
                n_atoms: register.len(),
            }],
        },
    })
}

/// Concatenates the feature vectors of datasets generated with identical
/// label sequences; labels are taken from the first dataset.
pub fn concatenate(datasets: &[Dataset]) -> Result<Dataset> {
    let first = datasets
        .first()
        .ok_or_else(|| CoreError::Data("nothing to concatenate".into()))?;
    for d in &datasets[1..] {
        if d.n_samples() != first.n_samples() {
            return Err(CoreError::Data(format!(
                "sample counts differ: {} vs {}",
                first.n_samples(),
                d.n_samples()
            )));
        }
        if d.label_names != first.label_names {
            return Err(CoreError::Data("label columns differ".into()));
        }
        for (i, (a, b)) in first.samples.iter().zip(&d.samples).enumerate() {
            if a.labels != b.labels {
                return Err(CoreError::Data(format!(
                    "label sequences differ at sample {i}; datasets were not generated together"
                )));
            }
        }
    }
    let mut feature_names = Vec::new();
    let mut feature_blocks = Vec::new();
    let mut registers = Vec::new();
    for d in datasets {
        feature_names.extend(d.feature_names.iter().cloned());
        feature_blocks.extend(d.metadata.feature_blocks.iter().cloned());
        registers.extend(d.metadata.registers.iter().cloned());
    }
    let samples = (0..first.n_samples())
        .map(|i| LabeledSample {
            features: datasets
                .iter()
                .flat_map(|d| d.samples[i].features.iter().copied())
                .collect(),
            labels: first.samples[i].labels.clone(),
        })
        .collect();
    Ok(Dataset {
        feature_names,
        label_names: first.label_names.clone(),
        samples,
        metadata: DatasetMetadata {
            registers,
            pulse: first.metadata.pulse.clone(),
            shots_per_sample: first.metadata.shots_per_sample,
            seed: first.metadata.seed,
            label_ranges: first.metadata.label_ranges.clone(),
            feature_blocks,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ideal_probabilities;

    fn quick_spec(n_samples: usize, shots: usize) -> SingleParamSpec {
        SingleParamSpec {
            n_samples,
            shots,
            sigma_r_range: SIGMA_R_RANGE,
        }
    }

    fn named(names: &[&str]) -> Vec<(String, AtomRegister)> {
        names
            .iter()
            .map(|n| (n.to_string(), AtomRegister::builtin(n).unwrap()))
            .collect()
    }

    #[test]
    fn defaults_match_protocol() {
        let spec = SingleParamSpec::default();
        assert_eq!(spec.n_samples, 10_000);
        assert_eq!(spec.shots, 500);
        assert_eq!(spec.sigma_r_range, (0.0, 0.15));
        assert_eq!(MULTI_PARAM_SAMPLES, 54_000);
        let r = MultiParamRanges::default();
        assert_eq!(r.waist, (0.0, 200.0));
        assert_eq!(r.temperature, (0.0, 100.0));
    }

    #[test]
    fn single_param_datasets_share_labels() {
        let regs = named(&["s2", "s3"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let out = generate_single_param_dataset(
            &regs,
            &pulse,
            &quick_spec(5, 20),
            42,
            &SimOptions::default(),
            &PhysicsConfig::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        let (ref id_a, ref a) = out[0];
        let (_, ref b) = out[1];
        assert_eq!(id_a, "s2");
        assert_eq!(a.feature_dim(), 4);
        assert_eq!(b.feature_dim(), 8);
        for i in 0..5 {
            assert_eq!(a.samples[i].labels, b.samples[i].labels);
            let s = a.samples[i].labels[0];
            assert!((0.0..=0.15).contains(&s));
        }
        a.validate().unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let regs = named(&["s2"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let opts = SimOptions::default();
        let phys = PhysicsConfig::default();
        let a = generate_single_param_dataset(&regs, &pulse, &quick_spec(3, 15), 7, &opts, &phys)
            .unwrap();
        let b = generate_single_param_dataset(&regs, &pulse, &quick_spec(3, 15), 7, &opts, &phys)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_sigma_samples_match_ideal() {
        let regs = named(&["s2"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let opts = SimOptions::default();
        let phys = PhysicsConfig::default();
        let spec = SingleParamSpec {
            n_samples: 2,
            shots: 20_000,
            sigma_r_range: (0.0, 0.0),
        };
        let out = generate_single_param_dataset(&regs, &pulse, &spec, 3, &opts, &phys).unwrap();
        let ideal = ideal_probabilities(&regs[0].1, &pulse, &opts, &phys).unwrap();
        for s in &out[0].1.samples {
            let tv: f64 = s
                .features
                .iter()
                .zip(&ideal.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            // Binomial noise at 2e4 shots over 4 bins.
            assert!(tv < 5.0 * (4.0f64 / 20_000.0).sqrt(), "tv = {tv}");
        }
    }

    #[test]
    fn multi_param_labels_within_ranges() {
        let reg = AtomRegister::builtin("s2").unwrap();
        let ranges = MultiParamRanges::default();
        let d = generate_multi_param_dataset(
            "s2",
            &reg,
            &PulseSequence::gaussian_sweep_500ns(),
            8,
            10,
            &ranges,
            11,
            &SimOptions::default(),
            &PhysicsConfig::default(),
        )
        .unwrap();
        assert_eq!(d.label_dim(), 5);
        assert_eq!(d.feature_dim(), 4);
        let list = ranges.as_list();
        for s in &d.samples {
            for (v, (_, lo, hi)) in s.labels.iter().zip(&list) {
                assert!(v >= lo && v <= hi);
            }
        }
        d.validate().unwrap();
    }

    #[test]
    fn concatenation_widths_and_labels() {
        let regs = named(&["s4a", "s4b", "s4c", "s4d", "s4e", "s4f"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let out = generate_single_param_dataset(
            &regs,
            &pulse,
            &quick_spec(3, 10),
            5,
            &SimOptions::default(),
            &PhysicsConfig::default(),
        )
        .unwrap();
        let sets: Vec<Dataset> = out.into_iter().map(|(_, d)| d).collect();

        // s4a ⊕ s4b: 16 + 16 = 32 columns.
        let pair = concatenate(&sets[..2]).unwrap();
        assert_eq!(pair.feature_dim(), 32);
        assert_eq!(pair.samples[0].labels, sets[0].samples[0].labels);
        pair.validate().unwrap();

        // Full six-system chain: 2⁴ + 80 = 96 columns.
        let chain = concatenate(&sets).unwrap();
        assert_eq!(chain.feature_dim(), 96);

        // Self-concatenation doubles the width, labels unchanged.
        let doubled = concatenate(&[sets[0].clone(), sets[0].clone()]).unwrap();
        assert_eq!(doubled.feature_dim(), 32);
        assert_eq!(doubled.samples[1].labels, sets[0].samples[1].labels);
    }

    #[test]
    fn concatenation_rejects_mismatched_labels() {
        let regs = named(&["s2"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let opts = SimOptions::default();
        let phys = PhysicsConfig::default();
        let a = generate_single_param_dataset(&regs, &pulse, &quick_spec(3, 10), 1, &opts, &phys)
            .unwrap();
        let b = generate_single_param_dataset(&regs, &pulse, &quick_spec(3, 10), 2, &opts, &phys)
            .unwrap();
        assert!(concatenate(&[a[0].1.clone(), b[0].1.clone()]).is_err());
        assert!(concatenate(&[]).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let regs = named(&["s2"]);
        let pulse = PulseSequence::constant_rabi_660ns();
        let out = generate_single_param_dataset(
            &regs,
            &pulse,
            &quick_spec(4, 12),
            9,
            &SimOptions::default(),
            &PhysicsConfig::default(),
        )
        .unwrap();
        let d = &out[0].1;
        let dir = tempfile::tempdir().unwrap();
        d.write_files(dir.path(), "s2").unwrap();
        let back = Dataset::read_files(dir.path(), "s2").unwrap();
        assert_eq!(*d, back);
        // Writing again produces byte-identical files.
        let bytes1 = std::fs::read(dir.path().join("s2.csv")).unwrap();
        d.write_files(dir.path(), "s2").unwrap();
        let bytes2 = std::fs::read(dir.path().join("s2.csv")).unwrap();
        assert_eq!(bytes1, bytes2);
    }
}
