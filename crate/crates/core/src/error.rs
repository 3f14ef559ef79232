use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// `exit_class` distinguishes configuration/usage problems (CLI exit code 2)
/// from runtime failures (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing column '{0}' in input header")]
    MissingColumn(String),

    #[error("{skipped} of {total} rows malformed (> {limit_percent}% limit)")]
    TooManyMalformed {
        skipped: usize,
        total: usize,
        limit_percent: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in input vector")]
    NonFiniteInput,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("degenerate gradient for loss '{loss}': {reason}")]
    DegenerateGradient {
        loss: &'static str,
        reason: &'static str,
    },

    #[error("Pearson correlation undefined: zero variance")]
    DegeneratePcc,

    #[error("training diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("{0}")]
    Invalid(String),

    #[error("unsupported {kind} file version {found} (expected {expected})")]
    FileVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },
}

impl Error {
    /// CLI exit code class: 2 for usage/config/schema problems, 1 otherwise.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::Schema(_)
            | Error::MissingColumn(_)
            | Error::Config(_)
            | Error::FileVersion { .. } => 2,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
