use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("{n_qubits} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n_qubits: usize, limit: usize },

    #[error("operator is not Hermitian (largest imaginary coefficient {max_imag:e})")]
    NonHermitian { max_imag: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cannot route ladder for {string}: {reason}")]
    Routing { string: String, reason: String },

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("calibration data incomplete: {0}")]
    Calibration(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error JSON and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::QubitMismatch { .. } => "qubit_mismatch",
            Error::DenseLimit { .. } => "dense_limit",
            Error::NonHermitian { .. } => "non_hermitian",
            Error::InvalidParams(_) => "invalid_params",
            Error::Routing { .. } => "routing",
            Error::InvalidProbability { .. } => "invalid_probability",
            Error::Calibration(_) => "calibration",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
