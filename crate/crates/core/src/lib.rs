//! Noisy analog neutral-atom simulation, noise-parameter regression, and
//! reinforcement-learning pulse correction.
//!
//! The crate is organized around the measurement pipeline of a Rydberg
//! analog device:
//!
//! - [`register`] / [`waveform`]: atom layouts and laser pulse shapes;
//! - [`evolve`]: Schrödinger state-vector integration (fixed-step RK4);
//! - [`noise`]: the five-parameter device noise model and SPAM errors;
//! - [`sim`]: Monte-Carlo occupation-probability estimates;
//! - [`dataset`]: labeled dataset generation and CSV persistence;
//! - [`learn`]: linear / MLP regressors, cross-validation, random search;
//! - [`rl`]: the correction-pulse environment and DQN training loop;
//! - [`config`]: on-disk register/pulse schemas.

pub mod config;
pub mod dataset;
pub mod error;
pub mod evolve;
pub mod learn;
pub mod noise;
pub mod physics;
pub mod register;
pub mod rl;
pub mod sim;
pub mod waveform;

pub use error::{CoreError, Result};
pub use evolve::{build_hamiltonian, evolve, EvolveOutput, StateVector, DEFAULT_DT_NS};
pub use noise::{apply_spam, draw_realization, NoiseParams, NoiseRealization};
pub use physics::{interaction_strength, PhysicsConfig};
pub use register::AtomRegister;
pub use sim::{
    estimate_probabilities, ideal_probabilities, probability_trace, ProbabilityVector,
    SimOptions, DEFAULT_SHOTS,
};
pub use waveform::{PulseSequence, Waveform, WaveformShape};
