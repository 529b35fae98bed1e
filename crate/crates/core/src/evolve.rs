//! Hamiltonian construction and state-vector time evolution.
//!
//! The drive Hamiltonian (ħ = 1, rad/μs) is
//!
//!   H(t) = Σ_i (Ω_i(t)/2) σ_i^x − Σ_i (δ_i(t)/2) σ_i^z + Σ_{i<j} U_ij n_i n_j
//!
//! with per-atom Ω_i(t) = Ω(t)·m_i and δ_i(t) = δ(t) + d_i where (m_i, d_i)
//! come from a [`NoiseRealization`]. Basis states are ordered
//! lexicographically over bitstrings with atom 0 as the most significant bit
//! and bit 1 the Rydberg-excited level; σ_i^z has eigenvalue +1 on excited.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::noise::NoiseRealization;
use crate::physics::{interaction_strength, PhysicsConfig, MAX_SIM_ATOMS};
use crate::register::AtomRegister;
use crate::waveform::{PulseSequence, NS_TO_US};

/// Default integrator step, ns.
pub const DEFAULT_DT_NS: f64 = 0.5;

/// Largest step the integrator accepts, ns.
pub const MAX_DT_NS: f64 = 1.0;

/// A pure state of `n` atoms: 2ⁿ complex amplitudes, unit ℓ2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n_atoms: usize,
}

impl StateVector {
    /// All atoms in the ground state |0…0⟩.
    pub fn ground(n_atoms: usize) -> Self {
        let mut amplitudes = vec![Complex64::ZERO; 1 << n_atoms];
        amplitudes[0] = Complex64::ONE;
        Self {
            amplitudes,
            n_atoms,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// |amplitude|² for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Bit of atom `atom` in basis state `index` (atom 0 = MSB).
    pub fn bit(n_atoms: usize, index: usize, atom: usize) -> u8 {
        ((index >> (n_atoms - 1 - atom)) & 1) as u8
    }

    /// Basis-state label, e.g. "0110" (atom 0 leftmost).
    pub fn bitstring(n_atoms: usize, index: usize) -> String {
        (0..n_atoms)
            .map(|a| char::from(b'0' + Self::bit(n_atoms, index, a)))
            .collect()
    }
}

/// Dense Hermitian matrix in the bitstring basis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Largest |H[i][j] − conj(H[j][i])| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.get(i, j) * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }
}

/// Pairwise interaction energies U_ij = C6/r_ij⁶ for a register.
fn pair_interactions(register: &AtomRegister, physics: &PhysicsConfig) -> Result<Vec<Vec<f64>>> {
    let n = register.len();
    let mut u = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = interaction_strength(register.distance(i, j), physics)?;
            u[i][j] = v;
            u[j][i] = v;
        }
    }
    Ok(u)
}

/// Interaction energy of every basis state: Σ_{i<j excited} U_ij.
fn interaction_diagonal(register: &AtomRegister, physics: &PhysicsConfig) -> Result<Vec<f64>> {
    let n = register.len();
    let u = pair_interactions(register, physics)?;
    let dim = 1usize << n;
    let mut diag = vec![0.0; dim];
    for b in 0..dim {
        let mut e = 0.0;
        for i in 0..n {
            if StateVector::bit(n, b, i) == 1 {
                for j in (i + 1)..n {
                    if StateVector::bit(n, b, j) == 1 {
                        e += u[i][j];
                    }
                }
            }
        }
        diag[b] = e;
    }
    Ok(diag)
}

/// Builds the dense 2ⁿ×2ⁿ Hamiltonian for per-atom drive values, rad/μs.
pub fn build_hamiltonian(
    register: &AtomRegister,
    omega_per_atom: &[f64],
    delta_per_atom: &[f64],
    physics: &PhysicsConfig,
) -> Result<HermitianMatrix> {
    let n = register.len();
    if omega_per_atom.len() != n || delta_per_atom.len() != n {
        return Err(CoreError::Dimension(format!(
            "expected {n} per-atom drive values, got {} Ω and {} δ",
            omega_per_atom.len(),
            delta_per_atom.len()
        )));
    }
    if n > MAX_SIM_ATOMS {
        return Err(CoreError::Config(format!(
            "state-vector simulation is limited to {MAX_SIM_ATOMS} atoms, register has {n}"
        )));
    }
    let dim = 1usize << n;
    let udiag = interaction_diagonal(register, physics)?;
    let mut data = vec![Complex64::ZERO; dim * dim];
    for b in 0..dim {
        let mut diag = udiag[b];
        for i in 0..n {
            let sz = if StateVector::bit(n, b, i) == 1 { 1.0 } else { -1.0 };
            diag -= 0.5 * delta_per_atom[i] * sz;
        }
        data[b * dim + b] = Complex64::new(diag, 0.0);
        for i in 0..n {
            let flipped = b ^ (1 << (n - 1 - i));
            data[b * dim + flipped] += Complex64::new(0.5 * omega_per_atom[i], 0.0);
        }
    }
    Ok(HermitianMatrix { dim, data })
}

/// Result of an [`evolve`] call.
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub final_state: StateVector,
    /// States at the requested sample times (nearest grid point), in request
    /// order. Empty when no sample times were given.
    pub sampled: Vec<StateVector>,
}

/// Pulse waveforms pre-sampled on the half-step grid required by RK4.
///
/// Sampling the waveforms is independent of the noise realization, so one
/// table serves every shot of the same pulse.
#[derive(Debug, Clone)]
pub struct PulseTable {
    n_steps: usize,
    dt_ns: f64,
    /// Ω and δ at times k·dt/2 for k = 0..=2·n_steps.
    omega: Vec<f64>,
    delta: Vec<f64>,
}

impl PulseTable {
    pub fn new(pulse: &PulseSequence, dt_ns: f64) -> Result<Self> {
        if !(dt_ns > 0.0) || dt_ns > MAX_DT_NS {
            return Err(CoreError::Config(format!(
                "integrator step must lie in (0, {MAX_DT_NS}] ns, got {dt_ns}"
            )));
        }
        let total = pulse.total_duration_ns();
        let n_steps = if total <= 0.0 {
            0
        } else {
            (total / dt_ns - 1e-9).ceil().max(1.0) as usize
        };
        let dt = if n_steps == 0 { dt_ns } else { total / n_steps as f64 };
        let mut omega = Vec::with_capacity(2 * n_steps + 1);
        let mut delta = Vec::with_capacity(2 * n_steps + 1);
        for k in 0..=(2 * n_steps) {
            let (o, d) = pulse.sample(k as f64 * dt / 2.0);
            omega.push(o);
            delta.push(d);
        }
        Ok(Self {
            n_steps,
            dt_ns: dt,
            omega,
            delta,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt_ns(&self) -> f64 {
        self.dt_ns
    }

    /// Total duration covered, ns.
    pub fn duration_ns(&self) -> f64 {
        self.dt_ns * self.n_steps as f64
    }

    /// Nearest grid index for a time in ns (grid points at k·dt).
    pub fn nearest_grid_index(&self, t_ns: f64) -> usize {
        ((t_ns / self.dt_ns).round().max(0.0) as usize).min(self.n_steps)
    }
}

/// Scratch buffers reused across RK4 steps and across shots.
struct Workspace {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
    delta_sum: Vec<f64>,
    omega_half: Vec<f64>,
    delta_atom: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let dim = 1 << n;
        Self {
            k1: vec![Complex64::ZERO; dim],
            k2: vec![Complex64::ZERO; dim],
            k3: vec![Complex64::ZERO; dim],
            k4: vec![Complex64::ZERO; dim],
            tmp: vec![Complex64::ZERO; dim],
            delta_sum: vec![0.0; dim],
            omega_half: vec![0.0; n],
            delta_atom: vec![0.0; n],
        }
    }
}

/// Reusable evolution context: register-dependent tables prepared once, then
/// [`Evolver::run`] integrates one realization per call.
pub struct Evolver {
    n: usize,
    udiag: Vec<f64>,
    table: PulseTable,
    ws: Workspace,
}

impl Evolver {
    pub fn new(
        register: &AtomRegister,
        pulse: &PulseSequence,
        dt_ns: f64,
        physics: &PhysicsConfig,
    ) -> Result<Self> {
        let n = register.len();
        if n > MAX_SIM_ATOMS {
            return Err(CoreError::Config(format!(
                "state-vector simulation is limited to {MAX_SIM_ATOMS} atoms, register has {n}"
            )));
        }
        Ok(Self {
            n,
            udiag: interaction_diagonal(register, physics)?,
            table: PulseTable::new(pulse, dt_ns)?,
            ws: Workspace::new(n),
        })
    }

    pub fn table(&self) -> &PulseTable {
        &self.table
    }

    /// dψ/dt = −i H(stage) ψ, written into `out`.
    fn rhs(
        n: usize,
        udiag: &[f64],
        omega_half: &[f64],
        delta_atom: &[f64],
        delta_sum: &mut [f64],
        psi: &[Complex64],
        out: &mut [Complex64],
    ) {
        let dim = psi.len();
        // delta_sum[b] = Σ_{i excited in b} δ_i via subset DP over bits.
        delta_sum[0] = 0.0;
        for b in 1..dim {
            let low = b & b.wrapping_sub(1);
            let bitpos = b.trailing_zeros() as usize;
            let atom = n - 1 - bitpos;
            delta_sum[b] = delta_sum[low] + delta_atom[atom];
        }
        let half_delta_total: f64 = 0.5 * delta_atom.iter().sum::<f64>();
        for b in 0..dim {
            // −Σ(δ_i/2)s_i = (Σδ_i)/2 − Σ_{excited} δ_i.
            let diag = udiag[b] + half_delta_total - delta_sum[b];
            let mut acc = Complex64::new(diag, 0.0) * psi[b];
            for (i, &oh) in omega_half.iter().enumerate() {
                acc += oh * psi[b ^ (1 << (n - 1 - i))];
            }
            out[b] = Complex64::new(acc.im, -acc.re);
        }
    }

    fn load_stage(&mut self, grid_half_index: usize, realization: &NoiseRealization) {
        let omega = self.table.omega[grid_half_index];
        let delta = self.table.delta[grid_half_index];
        for i in 0..self.n {
            self.ws.omega_half[i] = 0.5 * omega * realization.omega_multiplier[i];
            self.ws.delta_atom[i] = delta + realization.doppler_shift[i];
        }
    }

    /// Integrates the full pulse from |0…0⟩ under one noise realization.
    ///
    /// The state is renormalized after every step, so the returned states are
    /// unit norm by construction; `sample_indices` selects grid points whose
    /// states are copied out (use [`PulseTable::nearest_grid_index`]).
    pub fn run(
        &mut self,
        realization: &NoiseRealization,
        sample_indices: &[usize],
    ) -> Result<EvolveOutput> {
        if realization.n_atoms() != self.n {
            return Err(CoreError::Dimension(format!(
                "realization covers {} atoms, register has {}",
                realization.n_atoms(),
                self.n
            )));
        }
        let n = self.n;
        let dim = 1usize << n;
        let dt_us = self.table.dt_ns * NS_TO_US;
        let mut psi = StateVector::ground(n).amplitudes;
        let mut sampled: Vec<Option<StateVector>> = vec![None; sample_indices.len()];
        let record = |step: usize, psi: &[Complex64], sampled: &mut Vec<Option<StateVector>>| {
            for (slot, &want) in sampled.iter_mut().zip(sample_indices) {
                if want == step && slot.is_none() {
                    *slot = Some(StateVector {
                        amplitudes: psi.to_vec(),
                        n_atoms: n,
                    });
                }
            }
        };
        record(0, &psi, &mut sampled);
        let n_steps = self.table.n_steps;
        for step in 0..n_steps {
            // Stage times t, t+dt/2, t+dt live at half-grid indices 2k, 2k+1, 2k+2.
            self.load_stage(2 * step, realization);
            Self::rhs(
                n,
                &self.udiag,
                &self.ws.omega_half,
                &self.ws.delta_atom,
                &mut self.ws.delta_sum,
                &psi,
                &mut self.ws.k1,
            );
            self.load_stage(2 * step + 1, realization);
            for b in 0..dim {
                self.ws.tmp[b] = psi[b] + 0.5 * dt_us * self.ws.k1[b];
            }
            Self::rhs(
                n,
                &self.udiag,
                &self.ws.omega_half,
                &self.ws.delta_atom,
                &mut self.ws.delta_sum,
                &self.ws.tmp,
                &mut self.ws.k2,
            );
            for b in 0..dim {
                self.ws.tmp[b] = psi[b] + 0.5 * dt_us * self.ws.k2[b];
            }
            Self::rhs(
                n,
                &self.udiag,
                &self.ws.omega_half,
                &self.ws.delta_atom,
                &mut self.ws.delta_sum,
                &self.ws.tmp,
                &mut self.ws.k3,
            );
            self.load_stage(2 * step + 2, realization);
            for b in 0..dim {
                self.ws.tmp[b] = psi[b] + dt_us * self.ws.k3[b];
            }
            Self::rhs(
                n,
                &self.udiag,
                &self.ws.omega_half,
                &self.ws.delta_atom,
                &mut self.ws.delta_sum,
                &self.ws.tmp,
                &mut self.ws.k4,
            );
            let ws = &self.ws;
            let sixth = dt_us / 6.0;
            let mut norm_sqr = 0.0;
            for b in 0..dim {
                let next = psi[b]
                    + sixth * (ws.k1[b] + 2.0 * ws.k2[b] + 2.0 * ws.k3[b] + ws.k4[b]);
                psi[b] = next;
                norm_sqr += next.norm_sqr();
            }
            if !norm_sqr.is_finite() || norm_sqr <= 0.0 {
                return Err(CoreError::Integration(format!(
                    "non-finite amplitudes at step {step} (t = {:.3} ns)",
                    (step + 1) as f64 * self.table.dt_ns
                )));
            }
            let inv = 1.0 / norm_sqr.sqrt();
            for a in psi.iter_mut() {
                *a *= inv;
            }
            record(step + 1, &psi, &mut sampled);
        }
        let final_state = StateVector {
            amplitudes: psi,
            n_atoms: n,
        };
        let sampled = sampled.into_iter().map(|s| s.expect("grid index in range")).collect();
        Ok(EvolveOutput {
            final_state,
            sampled,
        })
    }
}

/// One-call evolution of `register` under `pulse` and a noise realization.
///
/// `dt_ns` must not exceed 1 ns; the actual step is shortened so the grid
/// lands exactly on the pulse end. `sample_times_ns` selects intermediate
/// states (nearest grid point).
pub fn evolve(
    register: &AtomRegister,
    pulse: &PulseSequence,
    realization: &NoiseRealization,
    dt_ns: f64,
    sample_times_ns: Option<&[f64]>,
    physics: &PhysicsConfig,
) -> Result<EvolveOutput> {
    let mut evolver = Evolver::new(register, pulse, dt_ns, physics)?;
    let indices: Vec<usize> = sample_times_ns
        .unwrap_or(&[])
        .iter()
        .map(|&t| evolver.table.nearest_grid_index(t))
        .collect();
    evolver.run(realization, &indices)
}
