//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation, data-generation, and learning layers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A register violates a geometric or size constraint.
    #[error("register constraint violated: {0}")]
    RegisterConstraint(String),

    /// A waveform or pulse sequence is malformed.
    #[error("invalid pulse: {0}")]
    Pulse(String),

    /// A caller-supplied option is out of its allowed range.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator produced non-finite amplitudes.
    #[error("integration failure: {0}")]
    Integration(String),

    /// Mismatched vector or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Inconsistent datasets (labels, sample counts, feature blocks).
    #[error("data consistency error: {0}")]
    Data(String),

    /// Model training failed (divergence, degenerate targets, ...).
    #[error("training error: {0}")]
    Training(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl CoreError {
    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            CoreError::RegisterConstraint(_) => "register",
            CoreError::Pulse(_) => "pulse",
            CoreError::Config(_) => "config",
            CoreError::Integration(_) => "integration",
            CoreError::Dimension(_) => "dimension",
            CoreError::Data(_) => "data",
            CoreError::Training(_) => "train",
            CoreError::Io(_) => "io",
            CoreError::Serialization(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
