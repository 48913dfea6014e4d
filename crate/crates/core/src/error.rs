use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A file did not follow its on-disk format. `field` names the offending part.
    #[error("format error in {field}: {detail}")]
    Format { field: String, detail: String },

    /// Caller broke an operation contract (mismatched inputs, inconsistent data).
    #[error("contract error: {0}")]
    Contract(String),

    /// A tunable parameter was out of range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A scene description was invalid or could not be satisfied.
    #[error("scene spec error: {0}")]
    Spec(String),

    #[error("pose error: {0}")]
    Pose(String),

    /// The tactile sensor never reached the contact threshold.
    #[error("no contact: frame did not reach the press threshold")]
    NoContact,

    /// Nothing was reconstructed, so distance metrics are undefined.
    #[error("empty reconstruction: no crack points to evaluate")]
    EmptyReconstruction,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for contract-type failures, 3 for I/O or format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
