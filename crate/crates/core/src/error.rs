use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("dataset has no {0}")]
    EmptyDataset(&'static str),

    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("cannot split {datasets} datasets into non-empty train/val/test parts")]
    TooFewDatasets { datasets: usize },

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("attribute `{0}` has no non-missing values")]
    EmptyAttribute(String),

    #[error("schema mismatch: expected {expected} dimensions, got {actual}")]
    SchemaMismatch { expected: usize, actual: usize },

    #[error("corpus has no visualizations")]
    EmptyCorpus,

    #[error("no negative visualizations available for dataset `{0}`")]
    NoNegativesAvailable(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown configuration `{0}`")]
    UnknownConfig(String),

    #[error("index {index} out of range for sparse vector of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid model shape: {0}")]
    InvalidShape(String),

    #[error("model file version mismatch: file has version {found}, this build reads version {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("training loss diverged at epoch {epoch}: {detail}")]
    DivergedLoss { epoch: usize, detail: String },

    #[error("dataset `{0}` has no positive visualizations")]
    NoPositives(String),

    #[error("invalid rule spec: {0}")]
    InvalidRuleSpec(String),

    #[error("no candidates satisfy the query: {0}")]
    NoCandidates(String),

    #[error("candidate space of {bound} exceeds the limit of {limit}")]
    TooManyCandidates { bound: u64, limit: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant, used in service error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::DuplicateAttribute(_) => "DuplicateAttribute",
            Error::DanglingReference(_) => "DanglingReference",
            Error::TooFewDatasets { .. } => "TooFewDatasets",
            Error::InvalidFractions(_) => "InvalidFractions",
            Error::EmptyAttribute(_) => "EmptyAttribute",
            Error::SchemaMismatch { .. } => "SchemaMismatch",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::NoNegativesAvailable(_) => "NoNegativesAvailable",
            Error::UnknownAttribute(_) => "UnknownAttribute",
            Error::UnknownConfig(_) => "UnknownConfig",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidShape(_) => "InvalidShape",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::CorruptFile(_) => "CorruptFile",
            Error::DivergedLoss { .. } => "DivergedLoss",
            Error::NoPositives(_) => "NoPositives",
            Error::InvalidRuleSpec(_) => "InvalidRuleSpec",
            Error::NoCandidates(_) => "NoCandidates",
            Error::TooManyCandidates { .. } => "TooManyCandidates",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "IoError",
        }
    }
}
