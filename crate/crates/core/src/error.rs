use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}, column {column}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("environment {0:?} has no normalization entry")]
    UnknownEnvironment(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("singular design: column {column:?} is (numerically) a combination of the others")]
    Singular { column: String },

    #[error("too few rows: {rows} rows for {columns} fitted parameters")]
    InsufficientRows { rows: usize, columns: usize },

    #[error("missing input for environment {environment:?}")]
    MissingInput { environment: String },

    #[error(
        "no viable candidate subsets ({total} enumerated, {too_few_algorithms} with too few \
         algorithms, {singular} singular)"
    )]
    EmptySearch {
        total: u64,
        too_few_algorithms: u64,
        singular: u64,
    },

    #[error("pipeline stage {stage}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("relative error undefined for true value {0}")]
    UndefinedRelativeError(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Pipeline {
            stage,
            source: Box::new(self),
        }
    }
}
