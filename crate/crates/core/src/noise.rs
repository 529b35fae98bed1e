//! Noise model: the five device parameters, per-shot realizations, and
//! measurement (SPAM) bit flips.

use rand::{Rng, RngExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::physics::PhysicsConfig;
use crate::register::AtomRegister;

/// Waist value used as the "no beam profile" proxy (exp(−(r/w)²) ≈ 1 for any
/// register-scale r).
pub const NOISELESS_WAIST_UM: f64 = 1e9;

/// The five noise parameters of the device model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Relative standard deviation of the global Rabi-amplitude fluctuation.
    pub sigma_r: f64,
    /// Gaussian beam waist, μm.
    pub waist: f64,
    /// Atom temperature, μK (enters through Doppler detuning shifts).
    pub temperature: f64,
    /// False-positive measurement probability (ground read as excited).
    pub eps: f64,
    /// False-negative measurement probability (excited read as ground).
    pub eps_prime: f64,
}

impl Default for NoiseParams {
    /// The device characterization values: σ_R = 3%, w = 68 μm, T = 30 μK,
    /// ε = 3%, ε′ = 8%.
    fn default() -> Self {
        Self {
            sigma_r: 0.03,
            waist: 68.0,
            temperature: 30.0,
            eps: 0.03,
            eps_prime: 0.08,
        }
    }
}

impl NoiseParams {
    /// All channels off.
    pub fn noiseless() -> Self {
        Self {
            sigma_r: 0.0,
            waist: NOISELESS_WAIST_UM,
            temperature: 0.0,
            eps: 0.0,
            eps_prime: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_r >= 0.0) {
            return Err(CoreError::Config(format!(
                "sigma_r must be ≥ 0, got {}",
                self.sigma_r
            )));
        }
        if !(self.waist > 0.0) {
            return Err(CoreError::Config(format!(
                "waist must be > 0, got {}",
                self.waist
            )));
        }
        if !(self.temperature >= 0.0) {
            return Err(CoreError::Config(format!(
                "temperature must be ≥ 0, got {}",
                self.temperature
            )));
        }
        for (name, p) in [("eps", self.eps), ("eps_prime", self.eps_prime)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::Config(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Names of the five parameters, in dataset-column order.
    pub fn names() -> [&'static str; 5] {
        ["sigma_r", "waist", "temperature", "eps", "eps_prime"]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.sigma_r,
            self.waist,
            self.temperature,
            self.eps,
            self.eps_prime,
        ]
    }
}

/// One concrete draw of the coherent noise channels for a single shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    /// Per-atom multiplicative factor on the Rabi drive (≥ 0).
    pub omega_multiplier: Vec<f64>,
    /// Per-atom additive detuning shift, rad/μs.
    pub doppler_shift: Vec<f64>,
}

impl NoiseRealization {
    /// The identity realization (multipliers 1, shifts 0).
    pub fn noiseless(n_atoms: usize) -> Self {
        Self {
            omega_multiplier: vec![1.0; n_atoms],
            doppler_shift: vec![0.0; n_atoms],
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.omega_multiplier.len()
    }
}

/// Draws one shot's noise realization.
///
/// The intensity fluctuation η ~ N(0, σ_R) is drawn once per shot and shared
/// by all atoms; the beam profile contributes a static factor exp(−(r_i/w)²)
/// with r_i the atom's distance from the beam center (the origin); Doppler
/// shifts are i.i.d. N(0, σ_D) per atom with σ_D = k_eff·sqrt(k_B T/m).
/// Multipliers are clamped at zero.
pub fn draw_realization<R: Rng>(
    params: &NoiseParams,
    register: &AtomRegister,
    physics: &PhysicsConfig,
    rng: &mut R,
) -> NoiseRealization {
    let n = register.len();
    let intensity = if params.sigma_r > 0.0 {
        let normal = Normal::new(0.0, params.sigma_r).expect("validated sigma_r");
        (1.0 + normal.sample(rng)).max(0.0)
    } else {
        1.0
    };
    let omega_multiplier = (0..n)
        .map(|i| {
            let r = register.radial_distance(i);
            let beam = if params.waist > 0.0 {
                (-(r / params.waist).powi(2)).exp()
            } else if r == 0.0 {
                1.0
            } else {
                0.0
            };
            intensity * beam
        })
        .collect();
    let sigma_d = physics.doppler_sigma(params.temperature);
    let doppler_shift = if sigma_d > 0.0 {
        let normal = Normal::new(0.0, sigma_d).expect("validated temperature");
        (0..n).map(|_| normal.sample(rng)).collect()
    } else {
        vec![0.0; n]
    };
    NoiseRealization {
        omega_multiplier,
        doppler_shift,
    }
}

/// Seeded convenience wrapper around [`draw_realization`].
pub fn draw_realization_seeded(
    params: &NoiseParams,
    register: &AtomRegister,
    physics: &PhysicsConfig,
    seed: u64,
) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_realization(params, register, physics, &mut rng)
}

/// Applies measurement errors to a bitstring: each 0 flips to 1 with
/// probability `eps`, each 1 flips to 0 with probability `eps_prime`,
/// independently per atom.
pub fn apply_spam<R: Rng>(bits: &[u8], eps: f64, eps_prime: f64, rng: &mut R) -> Vec<u8> {
    bits.iter()
        .map(|&b| {
            let p = if b == 0 { eps } else { eps_prime };
            if p > 0.0 && rng.random::<f64>() < p {
                1 - b
            } else {
                b
            }
        })
        .collect()
}

/// Deterministic per-task seed stream: mixes a base seed with an index so
/// that parallel workers can draw independent, reproducible substreams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-level seed derivation for nested task structures (register/sample,
/// episode/step, ...).
pub fn derive_seed2(base: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(base, a), b)
}
