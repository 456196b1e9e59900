use std::path::PathBuf;

/// Errors surfaced by the front-end. Variants mirror the failure modes of the
/// individual stages so callers can dispatch on them (e.g. fall back to
/// flow-only anomaly detection on `InsufficientMatches`).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("rotation angle at pi, logarithm axis is ambiguous")]
    AxisAmbiguous,
    #[error("point has non-positive depth along the optical axis")]
    BehindCamera,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("no frames available")]
    NoFrames,
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient matches for epipolar estimation: got {0}, need 8")]
    InsufficientMatches(usize),
    #[error("feature tracking lost: only {0} usable static matches")]
    TrackingLost(usize),
    #[error("no reference frames buffered for direct refinement")]
    NoReferences,
    #[error("keyframe ledger cold start: BAD window is empty")]
    ColdStart,
    #[error("degenerate normal equations")]
    Degenerate,
    #[error("degenerate alignment: matched positions are collinear or too few")]
    DegenerateAlignment,
    #[error("insufficient trajectory overlap: {got} matched poses, need {need}")]
    InsufficientOverlap { got: usize, need: usize },
    #[error("invalid baseline value {0} (must be > 0)")]
    InvalidBaseline(f64),
    #[error("empty sequence: no rgb/depth pairs associated within tolerance")]
    EmptySequence,
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
