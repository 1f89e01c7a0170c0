use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid Hamiltonian: {0}")]
    Validation(String),

    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("{n_qubits} qubits exceeds the dense-matrix cap of {cap}")]
    DimensionCap { n_qubits: u32, cap: u32 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input state is not normalized (norm deviates by {0:e})")]
    Unnormalized(f64),

    #[error("reference evolution did not converge within {0} substeps")]
    NonConvergence(usize),

    #[error("plan too large: {0}")]
    PlanTooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
