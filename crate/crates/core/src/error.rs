use thiserror::Error;

/// Errors raised by the library and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("column {column} has zero norm; mutual coherence is undefined")]
    DegenerateColumn { column: usize },

    #[error(
        "degenerate design: S has non-positive diagonal entry {value:e} at index {index} \
         (transmit direction {index} is never excited)"
    )]
    DegenerateDesign { index: usize, value: f64 },

    #[error(
        "pilot subset must contain DFT column 0: without it the first entry of every \
         F_m x_m vanishes and the first N_r columns of the sensing matrix are zero"
    )]
    MissingFirstPilot,

    #[error("invalid pilot selection: {0}")]
    PilotSelection(String),

    #[error("invalid permutation: {0}")]
    Permutation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("true channel has zero Frobenius norm; NMSE is undefined")]
    ZeroChannel,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
