use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("operator {0} is not Hermitian")]
    NonHermitian(String),
    #[error("cannot parse Pauli string {input:?}: {reason}")]
    PauliParse { input: String, reason: String },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("invalid holonomic path: {0}")]
    InvalidPath(String),
    #[error("state is not in the code space (projector expectation {0})")]
    NotInCodeSpace(f64),
    #[error("both projector branches vanish (norms {kept:.3e}, {rejected:.3e})")]
    DegenerateProjector { kept: f64, rejected: f64 },
    #[error("state norm collapsed to {0:.3e}")]
    NormCollapse(f64),
    #[error("stationary density is not normalizable: {0}")]
    NonNormalizable(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateProjector { .. }
                | Error::NormCollapse(_)
                | Error::NonNormalizable(_)
                | Error::Integration(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
