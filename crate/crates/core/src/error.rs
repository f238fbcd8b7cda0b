use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("bad row at line {line_no}: {reason}")]
    BadRow { line_no: usize, reason: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset too small: need at least {needed}, got {got}")]
    DatasetTooSmall { needed: usize, got: usize },
    #[error("group `{query}` has {available} foreign candidates, {requested} requested")]
    NotEnoughForeignCandidates {
        query: String,
        available: usize,
        requested: usize,
    },
    #[error("group has no candidates")]
    EmptyGroup,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range for {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("forward cache no longer matches model parameters")]
    StaleCache,
    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("input width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("no labels")]
    EmptyLabels,
    #[error("no ranking groups")]
    EmptyGroups,
    #[error("list is empty")]
    EmptyList,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
