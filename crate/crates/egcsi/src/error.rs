//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no paths")]
    NoPaths,
    #[error("mixed cluster ids in path list")]
    MixedClusterIds,
    #[error("degenerate sample: zero matrix")]
    DegenerateSample,
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("rank {r} out of range [1, {max}]")]
    RankOutOfRange { r: usize, max: usize },
    #[error("empty singular value list")]
    EmptySingularValues,
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error("zero peak")]
    ZeroPeak,
    #[error("metadata out of range: {0}")]
    MetadataOutOfRange(String),
    #[error("codeword length mismatch: expected {expected}, got {got}")]
    CodewordDimMismatch { expected: usize, got: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty cluster list")]
    EmptyClusters,
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("cluster count {r_hat} exceeds r_max {r_max}")]
    TooManyClusters { r_hat: usize, r_max: usize },
    #[error("frame underflow")]
    FrameUnderflow,
    #[error("not a csit file")]
    BadMagic,
    #[error("unsupported csit version {0}")]
    BadVersion(u16),
    #[error("file truncated")]
    TruncatedFile,
    #[error("missing ground-truth path table")]
    MissingPathTable,
    #[error("zero reference matrix")]
    ZeroReference,
    #[error("bad model file: {0}")]
    BadModel(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    ConfigParse(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it surfaced in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
