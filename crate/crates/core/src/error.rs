use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid response map: {0}")]
    InvalidMap(String),

    #[error("grid point ({m}, {q}) outside {rows}x{cols} map")]
    OutOfBounds {
        m: usize,
        q: usize,
        rows: usize,
        cols: usize,
    },

    #[error("degenerate map: peak value {peak} is not positive")]
    DegenerateMap { peak: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid feature pyramid: {0}")]
    InvalidPyramid(String),

    #[error("patch {width}x{height} is smaller than one {cell}-pixel cell")]
    PatchTooSmall {
        width: usize,
        height: usize,
        cell: usize,
    },

    #[error("malformed feature file header: {0}")]
    MalformedHeader(String),

    #[error("truncated feature file: {0}")]
    Truncated(String),

    #[error("frame {0} not present in feature file")]
    FrameNotFound(u32),

    #[error("image decode error in {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{0}")]
    CountMismatch(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sequence has no ground truth")]
    MissingGroundTruth,

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        match self {
            e @ Error::Frame { .. } => e,
            e => Error::Frame {
                index,
                source: Box::new(e),
            },
        }
    }
}
