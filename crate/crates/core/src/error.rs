use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("weight file format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),

    #[error("rotation angle {angle} rad is within 1e-6 of pi; logarithm is ambiguous")]
    AngleNearPi { angle: f64 },

    #[error("mesh has zero total surface area")]
    DegenerateMesh,

    #[error("point cloud has zero extent")]
    DegenerateCloud,

    #[error("degenerate correspondence configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("visibility test kept no points")]
    EmptyVisibleSet,

    #[error("mask removed every point")]
    EmptyAfterMask,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
