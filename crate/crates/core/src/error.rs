use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {detail}")]
    Shape { context: &'static str, detail: String },

    #[error("matrix is not symmetric: max |m_ij - m_ji| = {max_asymmetry:e}")]
    Asymmetric { max_asymmetry: f64 },

    #[error("singular system in {context}: condition number {condition:e}")]
    Singular { context: &'static str, condition: f64 },

    #[error("index {index} out of range for {len} UAVs")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("LMI infeasible: largest mu attempted {mu_attempted:e} ({reason})")]
    Infeasible { mu_attempted: f64, reason: String },

    #[error("unsupported LMI structure: {0}")]
    UnsupportedStructure(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error(
        "steering matrix ill-conditioned: angles {i} and {j} have |sin diff| = {sin_gap:e} \
         (threshold {threshold:e})"
    )]
    Conditioning {
        i: usize,
        j: usize,
        sin_gap: f64,
        threshold: f64,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line harness: 1 validation, 2 infeasibility, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } | Error::Bracket(_) => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
