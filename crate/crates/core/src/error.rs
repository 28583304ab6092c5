use thiserror::Error;

use crate::fock::TruncationSpec;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation mismatch: {left:?} vs {right:?}")]
    TruncationMismatch {
        left: TruncationSpec,
        right: TruncationSpec,
    },

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeCountMismatch { expected: usize, found: usize },

    #[error("invalid mode index {mode} for a {num_modes}-mode operator")]
    InvalidMode { mode: usize, num_modes: usize },

    #[error("mode index {0} listed more than once")]
    DuplicateMode(usize),

    #[error("cannot trace out every mode; use trace() instead")]
    TraceAllModes,

    #[error("photon count {n} exceeds the truncation n_max = {n_max}")]
    PhotonCountOutOfRange { n: usize, n_max: usize },

    #[error(
        "truncation leakage: a populated component carries {photons} photons on the acted \
         modes but n_max = {n_max}"
    )]
    TruncationLeakage { photons: usize, n_max: usize },

    #[error("{what} is not normalized (value {value:.3e})")]
    NotNormalized { what: &'static str, value: f64 },

    #[error("impossible branch: herald probability {probability:.3e}")]
    ImpossibleBranch { probability: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}
