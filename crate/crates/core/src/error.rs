use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `line` is 1-based (0 when the failure has no
    /// meaningful line, e.g. truncated binary payloads).
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("mesh contains no objects")]
    EmptyMesh,

    #[error("duplicate object name '{0}'")]
    DuplicateObjectName(String),

    #[error("triangle index {index} out of range for object '{object}' ({vertices} vertices)")]
    TriangleIndexOutOfRange {
        object: String,
        index: usize,
        vertices: usize,
    },

    #[error("degenerate triangle (repeated vertex index) in object '{0}'")]
    RepeatedTriangleIndex(String),

    #[error("no objects pass the layer filter")]
    NoPassingObjects,

    #[error("object '{0}' has no vertices")]
    EmptyObject(String),

    #[error("passing objects have zero total surface area")]
    ZeroSurfaceArea,

    #[error("every layer is assigned to ignore; nothing to sample")]
    AllLayersIgnored,

    #[error("correspondence sets are empty")]
    EmptyCorrespondences,

    #[error("correspondence sets differ in length ({source_len} vs {target_len})")]
    CorrespondenceLengthMismatch {
        source_len: usize,
        target_len: usize,
    },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("scale is undefined: all source points are identical (set fix_scale to place without scaling)")]
    DegenerateScale,

    #[error("optimal scale is not positive; the point sets are anti-correlated")]
    NonPositiveScale,

    #[error("source points have zero variance along the {0} axis; anisotropic scale is undefined")]
    ZeroVarianceAxis(char),

    #[error("target bounding box has zero diagonal; cannot normalize")]
    ZeroDiagonal,

    #[error("per-point error count ({errors}) does not match cloud size ({points})")]
    PerPointLengthMismatch { errors: usize, points: usize },

    #[error("invalid glob pattern '{pattern}': {message}")]
    InvalidPattern { pattern: String, message: String },

    #[error("no files matching '{pattern}' in {dir}")]
    NoScenesMatched { dir: PathBuf, pattern: String },

    #[error("duplicate scene id '{0}' in dataset")]
    DuplicateSceneId(String),

    #[error("every scene in the dataset failed: first error: {0}")]
    AllScenesFailed(String),

    #[error("invalid transform JSON: {0}")]
    TransformJson(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
