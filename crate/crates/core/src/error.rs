use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    /// Artifacts produced under different configurations were combined.
    #[error("incompatible artifacts: {0}")]
    Incompatible(String),

    #[error("insufficient matches: need at least 4, got {0}")]
    InsufficientMatches(usize),

    #[error("no consensus: best hypothesis has {best} inliers, need {required}")]
    NoConsensus { best: usize, required: usize },

    #[error("point projects to infinity")]
    ProjectionAtInfinity,

    #[error("homography cannot be normalized (h22 vanishes)")]
    Normalization,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}
