//! Closed-loop pulse correction: an environment that tunes the appended
//! correction pulse and a DQN agent trained on the improvement reward, with
//! KL-divergence monitoring against the ideal outcome distribution.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub mod dqn;
pub mod env;

pub use dqn::{train_dqn, DqnConfig, EpisodeLog, ReplayBuffer, Transition};
pub use env::{uncorrected_baseline, CorrectionEnv, CorrectionEnvConfig, Environment, StepOutcome};

/// Default clamp floor for KL monitoring.
pub const KL_FLOOR: f64 = 1e-12;

/// Parameters of the correction pulse: Gaussian Rabi area `a` and the
/// endpoints of the detuning ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionParams {
    /// Rabi area, rad; allowed range [0, π/2].
    pub area: f64,
    /// Initial detuning, rad/μs; allowed range [−20, 20].
    pub delta_i: f64,
    /// Final detuning, rad/μs; allowed range [−20, 20].
    pub delta_f: f64,
}

/// Allowed area range.
pub const AREA_RANGE: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_2);
/// Allowed detuning-endpoint range, rad/μs.
pub const DELTA_RANGE: (f64, f64) = (-20.0, 20.0);
/// Per-action area increment, rad.
pub const DELTA_AREA: f64 = std::f64::consts::PI / 200.0;
/// Per-action detuning increment, rad/μs.
pub const DELTA_DETUNING: f64 = 0.2;

impl CorrectionParams {
    /// Episode-start values: a = π/20, both detunings zero.
    pub fn initial() -> Self {
        Self {
            area: std::f64::consts::PI / 20.0,
            delta_i: 0.0,
            delta_f: 0.0,
        }
    }

    pub fn in_bounds(&self) -> bool {
        (AREA_RANGE.0..=AREA_RANGE.1).contains(&self.area)
            && (DELTA_RANGE.0..=DELTA_RANGE.1).contains(&self.delta_i)
            && (DELTA_RANGE.0..=DELTA_RANGE.1).contains(&self.delta_f)
    }

    /// Applies one of the six actions: {±Δa, ±Δδᵢ, ±Δδ_f}.
    pub fn apply_action(&self, action: usize) -> Result<Self> {
        let mut next = *self;
        match action {
            0 => next.area += DELTA_AREA,
            1 => next.area -= DELTA_AREA,
            2 => next.delta_i += DELTA_DETUNING,
            3 => next.delta_i -= DELTA_DETUNING,
            4 => next.delta_f += DELTA_DETUNING,
            5 => next.delta_f -= DELTA_DETUNING,
            a => {
                return Err(CoreError::Config(format!(
                    "action index {a} out of range 0..6"
                )))
            }
        }
        Ok(next)
    }
}

/// Number of discrete actions.
pub const N_ACTIONS: usize = 6;

/// Exact KL divergence Σ pᵢ ln(pᵢ/qᵢ) in nats, with 0·ln 0 = 0.
///
/// Returns +∞ when some pᵢ > 0 has qᵢ = 0 (the divergence is defined
/// infinite there); use [`kl_divergence_clamped`] for monitoring.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CoreError::Dimension(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total)
}

/// KL divergence with both distributions clamped below by `floor`
/// (monitoring mode; keeps the value finite).
pub fn kl_divergence_clamped(p: &[f64], q: &[f64], floor: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CoreError::Dimension(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            let pi = pi.max(floor);
            let qi = qi.max(floor);
            pi * (pi / qi).ln()
        })
        .sum())
}

/// Huber loss of a temporal-difference error: quadratic within |δ| ≤ 1,
/// linear beyond.
pub fn huber_loss(delta: f64) -> f64 {
    let a = delta.abs();
    if a <= 1.0 {
        0.5 * delta * delta
    } else {
        a - 0.5
    }
}

/// d(huber)/dδ.
pub fn huber_grad(delta: f64) -> f64 {
    delta.clamp(-1.0, 1.0)
}

/// Bellman regression target: r + γ·maxₐQ(s′,a), or just r on terminal
/// transitions.
pub fn td_target(reward: f64, done: bool, gamma: f64, max_next_q: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * max_next_q
    }
}
