//! Error type shared by every module.

use thiserror::Error;

/// Everything that can go wrong in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("missing coupling constant: {0}")]
    MissingCoupling(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "overdamped regime: |Ω_R3|² = {coupling_sq:.6e} must exceed \
         (γ_110 − γ_001)²/4 = {damping_sq:.6e}"
    )]
    Overdamped { coupling_sq: f64, damping_sq: f64 },

    #[error("closed forms hold at exact resonance only, detuning ω + Ω − ω_e = {0:.6e}")]
    NotResonant(f64),

    #[error("correlator does not decay: {0}")]
    NonDecaying(String),

    #[error("inconsistent ratios: {0}")]
    InconsistentRatios(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{aborted} of {total} trajectories aborted (limit 1%)")]
    TooManyAborted { aborted: usize, total: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("model validity (RWA) check failed: {0}")]
    Rwa(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.to_string(), reason: reason.into() }
    }

    /// Short machine-readable tag used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidBasis(_) => "invalid_basis",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::MissingCoupling(_) => "missing_coupling",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Overdamped { .. } => "overdamped",
            Error::NotResonant(_) => "not_resonant",
            Error::NonDecaying(_) => "non_decaying",
            Error::InconsistentRatios(_) => "inconsistent_ratios",
            Error::Invariant(_) => "invariant_violation",
            Error::TooManyAborted { .. } => "trajectories_aborted",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Config(_) => "config",
            Error::Rwa(_) => "rwa_validity",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
