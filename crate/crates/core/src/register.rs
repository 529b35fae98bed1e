//! Atom registers: 2D coordinates defining the interaction graph.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::physics::{MAX_REGISTER_ATOMS, MAX_REGISTER_RADIUS_UM, MIN_ATOM_DISTANCE_UM};

/// A 2D arrangement of atoms, positions in μm relative to the trap center.
///
/// Atom order is significant: atom 0 maps to the most significant bit of the
/// measurement bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRegister {
    positions: Vec<(f64, f64)>,
    names: Option<Vec<String>>,
}

impl AtomRegister {
    /// Validates the geometric constraints: 1..=100 atoms, pairwise distance
    /// ≥ 4 μm, every atom within 50 μm of the origin.
    pub fn new(positions: Vec<(f64, f64)>, names: Option<Vec<String>>) -> Result<Self> {
        let n = positions.len();
        if n == 0 || n > MAX_REGISTER_ATOMS {
            return Err(CoreError::RegisterConstraint(format!(
                "register must hold between 1 and {MAX_REGISTER_ATOMS} atoms, got {n}"
            )));
        }
        if let Some(names) = &names
            && names.len() != n
        {
            return Err(CoreError::RegisterConstraint(format!(
                "{} names for {n} atoms",
                names.len()
            )));
        }
        for (i, &(x, y)) in positions.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(CoreError::RegisterConstraint(format!(
                    "atom {i} has non-finite coordinates"
                )));
            }
            let r = (x * x + y * y).sqrt();
            if r > MAX_REGISTER_RADIUS_UM {
                return Err(CoreError::RegisterConstraint(format!(
                    "atom {i} lies {r:.2} μm from the origin, beyond the {MAX_REGISTER_RADIUS_UM} μm limit"
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(positions[i], positions[j]);
                if d < MIN_ATOM_DISTANCE_UM {
                    return Err(CoreError::RegisterConstraint(format!(
                        "atoms {i} and {j} are {d:.3} μm apart, closer than {MIN_ATOM_DISTANCE_UM} μm"
                    )));
                }
            }
        }
        Ok(Self { positions, names })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Distance between atoms `i` and `j`, μm.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.positions[i], self.positions[j])
    }

    /// Distance of atom `i` from the origin (the beam center), μm.
    pub fn radial_distance(&self, i: usize) -> f64 {
        let (x, y) = self.positions[i];
        (x * x + y * y).sqrt()
    }

    /// Register with the atom order permuted: new atom `k` is old atom
    /// `perm[k]`. Used to test the basis-ordering contract.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(CoreError::Dimension(format!(
                "permutation of length {} for {} atoms",
                perm.len(),
                self.len()
            )));
        }
        let positions = perm.iter().map(|&i| self.positions[i]).collect();
        let names = self
            .names
            .as_ref()
            .map(|ns| perm.iter().map(|&i| ns[i].clone()).collect());
        Self::new(positions, names)
    }

    /// One of the register layouts shipped with the crate, by name.
    ///
    /// `s2`..`s5` form the size-scaling family on a 14 μm grid — outside the
    /// mutual blockade radius (≈9.8 μm at Ω = 2π), so every atom contributes
    /// an independent look at the global drive — with the containment
    /// structure s2 ⊂ s4a ⊂ s5 and s3 ⊂ s5 (s3 shares exactly one atom with
    /// s2, and s4a exactly two with s3). `s4b` duplicates `s4a`;
    /// `s4c`..`s4f` are alternative four-atom layouts. `s6` is the six-atom
    /// triangular patch used for multi-parameter runs, 8 μm pitch
    /// (blockade-coupled).
    pub fn builtin(name: &str) -> Result<Self> {
        // Shared grid points for the containment family.
        const P: f64 = 14.0;
        const A: (f64, f64) = (0.0, 0.0);
        const B: (f64, f64) = (P, 0.0);
        const C: (f64, f64) = (P, P);
        const D: (f64, f64) = (0.0, P);
        const E: (f64, f64) = (2.0 * P, 0.0);
        let positions: Vec<(f64, f64)> = match name {
            "s2" => vec![A, B],
            "s3" => vec![A, C, E],
            "s4a" | "s4b" => vec![A, B, C, D],
            "s4c" => vec![A, B, E, (3.0 * P, 0.0)],
            "s4d" => vec![A, B, D, (0.0, 2.0 * P)],
            "s4e" => vec![A, B, C, (2.0 * P, P)],
            "s4f" => vec![A, B, (P / 2.0, P), (1.5 * P, P)],
            "s5" => vec![A, B, C, D, E],
            "s6" => {
                let h = 8.0 * 3.0f64.sqrt() / 2.0;
                vec![
                    (0.0, 0.0),
                    (8.0, 0.0),
                    (16.0, 0.0),
                    (4.0, h),
                    (12.0, h),
                    (8.0, 2.0 * h),
                ]
            }
            other => {
                return Err(CoreError::Config(format!(
                    "unknown register name '{other}' (expected s2, s3, s4a..s4f, s5 or s6)"
                )))
            }
        };
        Self::new(positions, None)
    }

    /// Names of all built-in registers.
    pub fn builtin_names() -> &'static [&'static str] {
        &[
            "s2", "s3", "s4a", "s4b", "s4c", "s4d", "s4e", "s4f", "s5", "s6",
        ]
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_geometry() {
        assert!(AtomRegister::new(vec![], None).is_err());
        assert!(AtomRegister::new(vec![(0.0, 0.0), (3.0, 0.0)], None).is_err());
        assert!(AtomRegister::new(vec![(60.0, 0.0)], None).is_err());
        assert!(AtomRegister::new(vec![(0.0, 0.0)], Some(vec![])).is_err());
        let many: Vec<(f64, f64)> = (0..101).map(|i| (4.0 * i as f64, 0.0)).collect();
        assert!(AtomRegister::new(many, None).is_err());
    }

    #[test]
    fn accepts_minimum_distance_exactly() {
        let reg = AtomRegister::new(vec![(0.0, 0.0), (4.0, 0.0)], None).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.distance(0, 1), 4.0);
    }

    #[test]
    fn builtin_registers_are_valid() {
        for name in AtomRegister::builtin_names() {
            let reg = AtomRegister::builtin(name).unwrap();
            assert!(!reg.is_empty(), "register {name}");
        }
        assert!(AtomRegister::builtin("s9").is_err());
    }

    #[test]
    fn builtin_containment_structure() {
        let contains = |big: &AtomRegister, small: &AtomRegister| {
            small
                .positions()
                .iter()
                .filter(|p| big.positions().contains(p))
                .count()
        };
        let s2 = AtomRegister::builtin("s2").unwrap();
        let s3 = AtomRegister::builtin("s3").unwrap();
        let s4a = AtomRegister::builtin("s4a").unwrap();
        let s4b = AtomRegister::builtin("s4b").unwrap();
        let s5 = AtomRegister::builtin("s5").unwrap();
        // s2 ⊂ s4a ⊂ s5 and s3 ⊂ s5.
        assert_eq!(contains(&s4a, &s2), 2);
        assert_eq!(contains(&s5, &s4a), 4);
        assert_eq!(contains(&s5, &s3), 3);
        // s3 shares exactly one atom with s2; s4a exactly two with s3.
        assert_eq!(contains(&s3, &s2), 1);
        assert_eq!(contains(&s4a, &s3), 2);
        // s4b is the same layout re-measured.
        assert_eq!(s4a.positions(), s4b.positions());
    }

    #[test]
    fn permutation_reorders_positions() {
        let reg = AtomRegister::new(vec![(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)], None).unwrap();
        let p = reg.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.positions()[0], (0.0, 5.0));
        assert_eq!(p.positions()[1], (0.0, 0.0));
        assert!(reg.permuted(&[0, 1]).is_err());
    }
}
