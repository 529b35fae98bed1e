//! Physical constants and device-level configuration.
//!
//! Units across the crate: lengths in μm, times in ns at API boundaries
//! (converted to μs inside the integrator), angular frequencies in rad/μs,
//! temperatures in μK. ħ = 1 throughout.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Mass of a rubidium-87 atom, kg.
pub const RB87_MASS_KG: f64 = 1.443_160_6e-25;

/// Van der Waals coefficient C6/ħ for the rubidium Rydberg level targeted by
/// the device, rad·μm⁶/μs.
pub const DEFAULT_C6: f64 = 5_420_158.53;

/// Effective optical wavevector entering the Doppler width, rad/μm.
pub const DEFAULT_K_EFF: f64 = 8.7;

/// Minimum allowed atom separation, μm.
pub const MIN_ATOM_DISTANCE_UM: f64 = 4.0;

/// Maximum register radius around the origin, μm.
pub const MAX_REGISTER_RADIUS_UM: f64 = 50.0;

/// Hard cap on register size accepted by the hardware model.
pub const MAX_REGISTER_ATOMS: usize = 100;

/// Largest register the state-vector simulator will evolve.
pub const MAX_SIM_ATOMS: usize = 8;

/// Device-level physical parameters. All fields are overridable; the defaults
/// describe the rubidium machine this crate models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    /// Van der Waals coefficient, rad·μm⁶/μs.
    pub c6: f64,
    /// Effective wavevector for Doppler detuning shifts, rad/μm.
    pub k_eff: f64,
    /// Atomic mass, kg.
    pub atom_mass_kg: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            c6: DEFAULT_C6,
            k_eff: DEFAULT_K_EFF,
            atom_mass_kg: RB87_MASS_KG,
        }
    }
}

impl PhysicsConfig {
    /// Standard deviation of the per-atom Doppler detuning shift, rad/μs,
    /// for a cloud at `temperature_uk` μK: k_eff · sqrt(k_B T / m).
    ///
    /// The thermal velocity comes out in m/s, which equals μm/μs, so the
    /// product with k_eff (rad/μm) is directly rad/μs.
    pub fn doppler_sigma(&self, temperature_uk: f64) -> f64 {
        if temperature_uk <= 0.0 {
            return 0.0;
        }
        let temp_k = temperature_uk * 1e-6;
        self.k_eff * (K_B * temp_k / self.atom_mass_kg).sqrt()
    }
}

/// Van der Waals interaction strength C6/r⁶ in rad/μs between two atoms
/// separated by `r_um` μm.
pub fn interaction_strength(r_um: f64, physics: &PhysicsConfig) -> Result<f64> {
    if !(r_um >= MIN_ATOM_DISTANCE_UM) {
        return Err(CoreError::RegisterConstraint(format!(
            "atom separation {r_um} μm is below the minimum {MIN_ATOM_DISTANCE_UM} μm"
        )));
    }
    Ok(physics.c6 / r_um.powi(6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interaction_matches_direct_evaluation() {
        let phys = PhysicsConfig::default();
        let u8um = interaction_strength(8.0, &phys).unwrap();
        assert_relative_eq!(u8um, DEFAULT_C6 / 8.0f64.powi(6), max_relative = 1e-15);
        // ≈ 20.68 rad/μs, comparable to the 2π drive used in the experiments.
        assert!((u8um - 20.68).abs() < 0.01);
    }

    #[test]
    fn interaction_power_law_scaling() {
        let phys = PhysicsConfig::default();
        let u1 = interaction_strength(6.0, &phys).unwrap();
        let u2 = interaction_strength(12.0, &phys).unwrap();
        assert_relative_eq!(u2 / u1, 1.0 / 64.0, max_relative = 1e-12);
    }

    #[test]
    fn interaction_negligible_at_40um() {
        let phys = PhysicsConfig::default();
        let u = interaction_strength(40.0, &phys).unwrap();
        assert!((u - 1.32e-3).abs() < 1e-5);
        assert!(u < 2.0 * std::f64::consts::PI * 1e-3);
    }

    #[test]
    fn interaction_rejects_close_atoms() {
        let phys = PhysicsConfig::default();
        assert!(interaction_strength(3.9, &phys).is_err());
        assert!(interaction_strength(f64::NAN, &phys).is_err());
    }

    #[test]
    fn doppler_sigma_at_known_temperatures() {
        let phys = PhysicsConfig::default();
        assert_eq!(phys.doppler_sigma(0.0), 0.0);
        // 30 μK: k_eff·sqrt(k_B T/m) ≈ 0.466 rad/μs for ⁸⁷Rb.
        assert_relative_eq!(phys.doppler_sigma(30.0), 0.46609, max_relative = 1e-4);
        // Scales as sqrt(T).
        assert_relative_eq!(
            phys.doppler_sigma(120.0),
            2.0 * phys.doppler_sigma(30.0),
            max_relative = 1e-12
        );
    }
}
