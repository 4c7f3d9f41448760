use thiserror::Error;

/// Errors produced by the bank builder, phantom synthesizer and estimators.
#[derive(Error, Debug)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("partial-wave series did not converge for size {size_um} um at {frequency_mhz} MHz after {terms} terms")]
    NonConvergence {
        size_um: f64,
        frequency_mhz: f64,
        terms: usize,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("phantom materials do not match bank materials")]
    MaterialMismatch,

    #[error("size distribution has no mass on the size grid")]
    EmptySupport,

    #[error("suppression covers every size; nothing left to fit")]
    FullSuppression,

    #[error("all weights are non-positive; no probability view exists")]
    DegenerateEstimate,

    #[error("malformed bank file: {0}")]
    MalformedFile(String),

    #[error("bank matrix shape {rows}x{cols} does not match grids {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("unsupported bank file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 2 for configuration
    /// and contract violations, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. }
            | Error::FullSuppression
            | Error::DegenerateEstimate => 3,
            _ => 2,
        }
    }
}
