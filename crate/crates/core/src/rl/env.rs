//! The correction-pulse environment.
//!
//! Episodes tune the parameters of a correction pulse appended after a fixed
//! base pulse. The agent observes an averaged intermediate-time probability
//! trace of the corrected noisy dynamics; the reward is 1 exactly when the
//! latest action moved the corrected noisy outcome strictly closer (ℓ1) to
//! the ideal outcome of the base pulse alone.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::noise::{derive_seed, NoiseParams};
use crate::physics::PhysicsConfig;
use crate::register::AtomRegister;
use crate::rl::{kl_divergence_clamped, CorrectionParams, KL_FLOOR, N_ACTIONS};
use crate::sim::{
    ideal_probabilities, probability_trace, SimOptions, DEFAULT_TRACE_SAMPLES, DEFAULT_TRACE_SIMS,
};
use crate::waveform::{PulseSequence, Waveform};

/// Anything a DQN agent can be trained against.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Starts a new episode and returns the initial state.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    /// Applies one action. Must not be called on a finished episode.
    fn step(&mut self, action: usize) -> Result<StepOutcome>;
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Monitoring metric for this step, when the step ran a simulation.
    pub kl: Option<f64>,
}

/// Configuration of the correction environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionEnvConfig {
    /// Noise applied during the corrected runs (device characterization
    /// values by default).
    pub noise: NoiseParams,
    /// Independent noisy simulations averaged per state estimate.
    pub n_sims: usize,
    /// Intermediate states sampled along the corrected sequence.
    pub n_trace_samples: usize,
    /// Episode length cap.
    pub max_steps: usize,
    /// Integrator step, ns.
    pub dt_ns: f64,
    pub physics: PhysicsConfig,
}

impl Default for CorrectionEnvConfig {
    fn default() -> Self {
        Self {
            noise: NoiseParams::default(),
            n_sims: DEFAULT_TRACE_SIMS,
            n_trace_samples: DEFAULT_TRACE_SAMPLES,
            max_steps: 100,
            dt_ns: crate::evolve::DEFAULT_DT_NS,
            physics: PhysicsConfig::default(),
        }
    }
}

/// Single-qubit correction environment around the 500 ns Gaussian-sweep base
/// pulse.
pub struct CorrectionEnv {
    config: CorrectionEnvConfig,
    register: AtomRegister,
    base: PulseSequence,
    /// Ideal outcome of the base pulse alone (no noise, no correction).
    ideal: Vec<f64>,
    params: CorrectionParams,
    step_idx: usize,
    last_l1: f64,
    episode_seed: u64,
    done: bool,
}

impl CorrectionEnv {
    pub fn new(config: CorrectionEnvConfig) -> Result<Self> {
        config.noise.validate()?;
        if config.n_sims == 0 || config.n_trace_samples == 0 || config.max_steps == 0 {
            return Err(CoreError::Config(
                "n_sims, n_trace_samples and max_steps must be ≥ 1".into(),
            ));
        }
        let register = AtomRegister::new(vec![(0.0, 0.0)], None)?;
        let base = PulseSequence::gaussian_sweep_500ns();
        let opts = SimOptions { dt_ns: config.dt_ns };
        let ideal = ideal_probabilities(&register, &base, &opts, &config.physics)?.values;
        Ok(Self {
            config,
            register,
            base,
            ideal,
            params: CorrectionParams::initial(),
            step_idx: 0,
            last_l1: f64::INFINITY,
            episode_seed: 0,
            done: true,
        })
    }

    pub fn params(&self) -> CorrectionParams {
        self.params
    }

    pub fn step_index(&self) -> usize {
        self.step_idx
    }

    /// Ideal reference distribution of the base pulse.
    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }

    /// The corrected sequence P + P′ for the given parameters.
    pub fn corrected_pulse(&self, params: &CorrectionParams) -> Result<PulseSequence> {
        let duration = 500.0;
        let rabi = Waveform::gaussian(params.area, duration)?;
        let det = Waveform::ramp(params.delta_i, params.delta_f, duration)?;
        let correction = PulseSequence::single(rabi, det)?;
        Ok(self.base.then(&correction))
    }

    /// Noisy trace over the corrected sequence; returns the flattened state
    /// and the final-time probability vector (its last sample).
    fn simulate(&self, trace_seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let pulse = self.corrected_pulse(&self.params)?;
        let opts = SimOptions {
            dt_ns: self.config.dt_ns,
        };
        let trace = probability_trace(
            &self.register,
            &pulse,
            &self.config.noise,
            self.config.n_sims,
            self.config.n_trace_samples,
            trace_seed,
            &opts,
            &self.config.physics,
        )?;
        let final_pv = trace.last().expect("n_trace_samples ≥ 1").values.clone();
        let state: Vec<f64> = trace.into_iter().flat_map(|pv| pv.values).collect();
        Ok((state, final_pv))
    }

    fn l1_to_ideal(&self, pv: &[f64]) -> f64 {
        pv.iter()
            .zip(&self.ideal)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl Environment for CorrectionEnv {
    fn state_dim(&self) -> usize {
        self.config.n_trace_samples * (1 << self.register.len())
    }

    fn n_actions(&self) -> usize {
        N_ACTIONS
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.params = CorrectionParams::initial();
        self.step_idx = 0;
        self.episode_seed = seed;
        self.done = false;
        let (state, final_pv) = self.simulate(derive_seed(seed, 0))?;
        self.last_l1 = self.l1_to_ideal(&final_pv);
        Ok(state)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(CoreError::Config("episode already finished".into()));
        }
        let next_params = self.params.apply_action(action)?;
        self.step_idx += 1;
        if !next_params.in_bounds() {
            // Leaving the allowed box ends the episode without a simulation.
            self.done = true;
            return Ok(StepOutcome {
                state: vec![0.0; self.state_dim()],
                reward: 0.0,
                done: true,
                kl: None,
            });
        }
        self.params = next_params;
        let (state, final_pv) = self.simulate(derive_seed(self.episode_seed, self.step_idx as u64))?;
        let l1 = self.l1_to_ideal(&final_pv);
        let reward = if l1 < self.last_l1 { 1.0 } else { 0.0 };
        let kl = kl_divergence_clamped(&final_pv, &self.ideal, KL_FLOOR)?;
        self.last_l1 = l1;
        if self.step_idx >= self.config.max_steps {
            self.done = true;
        }
        Ok(StepOutcome {
            state,
            reward,
            done: self.done,
            kl: Some(kl),
        })
    }
}

/// Reference value for the monitoring curve: the KL divergence between the
/// uncorrected noisy outcome and the ideal one, averaged over `n_runs`
/// single-shot noisy simulations of the base pulse.
pub fn uncorrected_baseline(config: &CorrectionEnvConfig, n_runs: usize, seed: u64) -> Result<f64> {
    if n_runs == 0 {
        return Err(CoreError::Config("n_runs must be ≥ 1".into()));
    }
    let register = AtomRegister::new(vec![(0.0, 0.0)], None)?;
    let base = PulseSequence::gaussian_sweep_500ns();
    let opts = SimOptions { dt_ns: config.dt_ns };
    let ideal = ideal_probabilities(&register, &base, &opts, &config.physics)?.values;
    let mut total = 0.0;
    for run in 0..n_runs {
        let tr = probability_trace(
            &register,
            &base,
            &config.noise,
            1,
            1,
            derive_seed(seed, run as u64),
            &opts,
            &config.physics,
        )?;
        total += kl_divergence_clamped(&tr[0].values, &ideal, KL_FLOOR)?;
    }
    Ok(total / n_runs as f64)
}
