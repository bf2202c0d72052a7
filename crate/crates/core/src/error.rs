use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid depth value {value} at pixel ({row}, {col}); depths must be finite and > 0")]
    NonPositiveDepth { row: usize, col: usize, value: f64 },

    #[error("d_max = {d_max} must exceed every interior depth (max interior {max_interior})")]
    InvalidDMax { d_max: f64, max_interior: f64 },

    #[error("grid of {height}x{width} is too small; need at least 2x2")]
    DimensionTooSmall { height: usize, width: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("pose rotation is not orthonormal (max deviation {deviation:e})")]
    NonOrthonormalPose { deviation: f64 },

    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid orbit spec: {0}")]
    InvalidSpec(String),

    #[error("track {id} sample at frame {frame} is outside the {width}x{height} video of {frames} frames")]
    OutOfBoundsTrack { id: i64, frame: usize, width: usize, height: usize, frames: usize },

    #[error("track {id} has non-increasing frame index {frame}")]
    NonMonotoneTrack { id: i64, frame: i64 },

    #[error("mesh invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error on {path}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("image error on {path}")]
    Image { path: PathBuf, source: ::image::ImageError },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
