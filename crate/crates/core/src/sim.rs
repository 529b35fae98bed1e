//! Monte-Carlo shot orchestration: occupation-probability estimates from
//! noisy evolutions, exact noiseless references, and intermediate-time
//! probability traces.

use rand::{Rng, RngExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::evolve::{Evolver, StateVector, DEFAULT_DT_NS};
use crate::noise::{apply_spam, derive_seed, draw_realization, NoiseParams, NoiseRealization};
use crate::physics::PhysicsConfig;
use crate::register::AtomRegister;
use crate::waveform::PulseSequence;

/// Shots per probability estimate used throughout the characterization runs.
pub const DEFAULT_SHOTS: usize = 500;

/// Number of independent noisy simulations averaged into one trace.
pub const DEFAULT_TRACE_SIMS: usize = 10;

/// Number of intermediate states sampled along a trace.
pub const DEFAULT_TRACE_SAMPLES: usize = 25;

/// Occupation-probability estimate over the 2ⁿ basis states.
///
/// `n_shots` is 0 for exact (amplitude-derived) vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub values: Vec<f64>,
    pub n_atoms: usize,
    pub n_shots: usize,
}

impl ProbabilityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Marginal excitation probability of one atom.
    pub fn atom_marginal(&self, atom: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(b, _)| StateVector::bit(self.n_atoms, *b, atom) == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// Total-variation distance to another vector of the same length.
    pub fn total_variation(&self, other: &ProbabilityVector) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(CoreError::Dimension(format!(
                "probability vectors of length {} and {}",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0)
    }

    /// ℓ1 distance to another vector of the same length.
    pub fn l1_distance(&self, other: &ProbabilityVector) -> Result<f64> {
        Ok(self.total_variation(other)? * 2.0)
    }
}

/// Simulation options shared by the estimate/trace entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Integrator step, ns (≤ 1).
    pub dt_ns: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { dt_ns: DEFAULT_DT_NS }
    }
}

/// Estimates occupation probabilities from `n_shots` independent noisy shots.
///
/// Each shot draws a fresh noise realization, evolves the full pulse, samples
/// one measurement bitstring from the Born rule, and applies SPAM flips. The
/// returned histogram is exactly count/n_shots. Shots use counter-derived
/// seeds, so the result depends only on `seed` and `n_shots`, not on the
/// number of worker threads.
pub fn estimate_probabilities(
    register: &AtomRegister,
    pulse: &PulseSequence,
    params: &NoiseParams,
    n_shots: usize,
    seed: u64,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<ProbabilityVector> {
    if n_shots == 0 {
        return Err(CoreError::Config("n_shots must be ≥ 1".into()));
    }
    params.validate()?;
    let n = register.len();
    let dim = 1usize << n;
    let indices = run_shots(register, pulse, params, n_shots, seed, opts, physics)?;
    let mut counts = vec![0u64; dim];
    for idx in indices {
        counts[idx] += 1;
    }
    let values = counts
        .iter()
        .map(|&c| c as f64 / n_shots as f64)
        .collect();
    Ok(ProbabilityVector {
        values,
        n_atoms: n,
        n_shots,
    })
}

/// Raw measured basis-state indices for `n_shots` noisy shots, in shot order.
pub fn run_shots(
    register: &AtomRegister,
    pulse: &PulseSequence,
    params: &NoiseParams,
    n_shots: usize,
    seed: u64,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<Vec<usize>> {
    let n = register.len();
    // Fail fast on bad inputs before fanning out to workers.
    Evolver::new(register, pulse, opts.dt_ns, physics)?;
    (0..n_shots)
        .into_par_iter()
        .map_init(
            || Evolver::new(register, pulse, opts.dt_ns, physics).expect("inputs validated"),
            |evolver, shot| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, shot as u64));
                let realization = draw_realization(params, register, physics, &mut rng);
                let out = evolver.run(&realization, &[])?;
                let outcome = born_sample(&out.final_state, &mut rng);
                let bits: Vec<u8> = (0..n)
                    .map(|a| StateVector::bit(n, outcome, a))
                    .collect();
                let measured = apply_spam(&bits, params.eps, params.eps_prime, &mut rng);
                Ok(bits_to_index(&measured))
            },
        )
        .collect()
}

/// Samples one basis-state index from |ψ|².
fn born_sample<R: Rng>(state: &StateVector, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let amps = state.amplitudes();
    for (b, a) in amps.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            return b;
        }
    }
    amps.len() - 1
}

fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Exact occupation probabilities of one noiseless evolution (no sampling,
/// no SPAM).
pub fn ideal_probabilities(
    register: &AtomRegister,
    pulse: &PulseSequence,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<ProbabilityVector> {
    let n = register.len();
    let mut evolver = Evolver::new(register, pulse, opts.dt_ns, physics)?;
    let out = evolver.run(&NoiseRealization::noiseless(n), &[])?;
    Ok(ProbabilityVector {
        values: out.final_state.probabilities(),
        n_atoms: n,
        n_shots: 0,
    })
}

/// Averaged intermediate-time probability trace.
///
/// Runs `n_sims` noisy evolutions of the full pulse, reads |amplitude|² at
/// `n_samples` uniformly spaced times t_k = k·T/n_samples for k = 1..=n_samples
/// (the last sample is the final state), and averages across simulations.
/// No SPAM is applied: the trace is built from amplitudes, not detector
/// clicks, so it is invariant under ε and ε′.
pub fn probability_trace(
    register: &AtomRegister,
    pulse: &PulseSequence,
    params: &NoiseParams,
    n_sims: usize,
    n_samples: usize,
    seed: u64,
    opts: &SimOptions,
    physics: &PhysicsConfig,
) -> Result<Vec<ProbabilityVector>> {
    if n_sims == 0 || n_samples == 0 {
        return Err(CoreError::Config(
            "probability_trace needs n_sims ≥ 1 and n_samples ≥ 1".into(),
        ));
    }
    params.validate()?;
    let n = register.len();
    let dim = 1usize << n;
    let total = pulse.total_duration_ns();
    let times: Vec<f64> = (1..=n_samples)
        .map(|k| k as f64 * total / n_samples as f64)
        .collect();
    Evolver::new(register, pulse, opts.dt_ns, physics)?;
    let per_sim: Vec<Vec<Vec<f64>>> = (0..n_sims)
        .into_par_iter()
        .map_init(
            || Evolver::new(register, pulse, opts.dt_ns, physics).expect("inputs validated"),
            |evolver, sim| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, sim as u64));
                let realization = draw_realization(params, register, physics, &mut rng);
                let indices: Vec<usize> = times
                    .iter()
                    .map(|&t| evolver.table().nearest_grid_index(t))
                    .collect();
                let out = evolver.run(&realization, &indices)?;
                Ok(out.sampled.iter().map(|s| s.probabilities()).collect())
            },
        )
        .collect::<Result<_>>()?;
    let mut averaged = vec![vec![0.0; dim]; n_samples];
    for sim in &per_sim {
        for (k, probs) in sim.iter().enumerate() {
            for (b, p) in probs.iter().enumerate() {
                averaged[k][b] += p / n_sims as f64;
            }
        }
    }
    Ok(averaged
        .into_iter()
        .map(|values| ProbabilityVector {
            values,
            n_atoms: n,
            n_shots: n_sims,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn phys() -> PhysicsConfig {
        PhysicsConfig::default()
    }

    fn one_atom() -> AtomRegister {
        AtomRegister::new(vec![(0.0, 0.0)], None).unwrap()
    }

    #[test]
    fn ideal_zero_pulse_is_ground() {
        let reg = AtomRegister::new(vec![(0.0, 0.0), (8.0, 0.0)], None).unwrap();
        let p = ideal_probabilities(&reg, &PulseSequence::empty(), &SimOptions::default(), &phys())
            .unwrap();
        assert_eq!(p.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ideal_rabi_matches_analytic() {
        let p = ideal_probabilities(
            &one_atom(),
            &PulseSequence::constant_rabi_660ns(),
            &SimOptions::default(),
            &phys(),
        )
        .unwrap();
        let expect = (0.66 * PI).sin().powi(2);
        assert!((p.values[1] - expect).abs() < 1e-6);
        assert!((p.values[0] - (1.0 - expect)).abs() < 1e-6);
        assert_relative_eq!(p.values.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn estimate_converges_to_analytic_rabi() {
        let p = estimate_probabilities(
            &one_atom(),
            &PulseSequence::constant_rabi_660ns(),
            &NoiseParams::noiseless(),
            100_000,
            31,
            &SimOptions::default(),
            &phys(),
        )
        .unwrap();
        let expect = (0.66 * PI).sin().powi(2);
        let sigma = (expect * (1.0 - expect) / 100_000.0).sqrt();
        assert!(
            (p.values[1] - expect).abs() < 3.0 * sigma,
            "p = {}, expect {expect} ± {sigma}",
            p.values[1]
        );
    }

    #[test]
    fn estimate_spam_only_on_zero_pulse() {
        let params = NoiseParams {
            eps: 0.03,
            ..NoiseParams::noiseless()
        };
        let p = estimate_probabilities(
            &one_atom(),
            &PulseSequence::empty(),
            &params,
            100_000,
            5,
            &SimOptions::default(),
            &phys(),
        )
        .unwrap();
        let sigma = (0.03f64 * 0.97 / 100_000.0).sqrt();
        assert!((p.atom_marginal(0) - 0.03).abs() < 3.0 * sigma);
    }

    #[test]
    fn estimate_is_deterministic_and_normalized() {
        let reg = AtomRegister::builtin("s2").unwrap();
        let pulse = PulseSequence::constant_rabi_660ns();
        let params = NoiseParams::default();
        let a = estimate_probabilities(&reg, &pulse, &params, 400, 9, &SimOptions::default(), &phys())
            .unwrap();
        let b = estimate_probabilities(&reg, &pulse, &params, 400, 9, &SimOptions::default(), &phys())
            .unwrap();
        assert_eq!(a, b);
        assert_relative_eq!(a.values.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(a.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn monte_carlo_consistency_between_independent_estimates() {
        let reg = AtomRegister::builtin("s2").unwrap();
        let pulse = PulseSequence::constant_rabi_660ns();
        let params = NoiseParams::default();
        let opts = SimOptions::default();
        let a =
            estimate_probabilities(&reg, &pulse, &params, 10_000, 1, &opts, &phys()).unwrap();
        let b =
            estimate_probabilities(&reg, &pulse, &params, 10_000, 2, &opts, &phys()).unwrap();
        let tv = a.total_variation(&b).unwrap();
        let bound = 5.0 * (4.0f64 / 10_000.0).sqrt();
        assert!(tv < bound, "tv = {tv}, bound {bound}");
    }

    #[test]
    fn trace_shape_and_normalization() {
        let trace = probability_trace(
            &one_atom(),
            &PulseSequence::gaussian_sweep_500ns(),
            &NoiseParams::default(),
            10,
            25,
            3,
            &SimOptions::default(),
            &phys(),
        )
        .unwrap();
        assert_eq!(trace.len(), 25);
        let flat: Vec<f64> = trace.iter().flat_map(|p| p.values.clone()).collect();
        assert_eq!(flat.len(), 50);
        for p in &trace {
            assert_relative_eq!(p.values.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn trace_noiseless_equals_exact_intermediates() {
        let reg = one_atom();
        let pulse = PulseSequence::constant_rabi_660ns();
        let opts = SimOptions::default();
        let trace = probability_trace(
            &reg,
            &pulse,
            &NoiseParams::noiseless(),
            10,
            11,
            17,
            &opts,
            &phys(),
        )
        .unwrap();
        // Averaging identical noiseless runs reproduces the exact populations.
        for (k, p) in trace.iter().enumerate() {
            let t = (k + 1) as f64 * 60.0;
            let expect = (PI * t / 1000.0).sin().powi(2);
            assert!((p.values[1] - expect).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn trace_is_spam_invariant() {
        let reg = one_atom();
        let pulse = PulseSequence::gaussian_sweep_500ns();
        let opts = SimOptions::default();
        let base = NoiseParams::default();
        let spammed = NoiseParams {
            eps: 0.15,
            eps_prime: 0.15,
            ..base
        };
        let a = probability_trace(&reg, &pulse, &base, 5, 8, 21, &opts, &phys()).unwrap();
        let b = probability_trace(&reg, &pulse, &spammed, 5, 8, 21, &opts, &phys()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_shots() {
        let r = estimate_probabilities(
            &one_atom(),
            &PulseSequence::empty(),
            &NoiseParams::noiseless(),
            0,
            1,
            &SimOptions::default(),
            &phys(),
        );
        assert!(r.is_err());
    }
}
