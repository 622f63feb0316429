use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: model expects {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid label {label}: labels must be 0 or 1")]
    InvalidLabel { label: u8 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("AUC is undefined: dataset contains only {class} examples")]
    SingleClass { class: &'static str },

    #[error("compatibility score is undefined: h1 is correct on no example")]
    CompatibilityUndefined,

    #[error("dissonance {kind} requires h1 probability and correctness for every example")]
    MissingReference { kind: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset too small: need {required} examples ({detail}), have {available}")]
    DatasetTooSmall {
        required: usize,
        available: usize,
        detail: String,
    },

    #[error("infeasible split: requested {requested} examples, only {available} available")]
    InfeasibleSplit { requested: usize, available: usize },

    #[error("training failed at lambda_c = {lambda_c}: {source}")]
    AtLambda {
        lambda_c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}: label `{value}` is not binary (expected 0 or 1)")]
    NonBinaryLabel {
        path: PathBuf,
        row: usize,
        value: String,
    },

    #[error("{path}: row {row}: column `{column}`: cannot parse `{value}` as a number")]
    UnparseableValue {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: malformed file: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
