use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line that could not be parsed at all.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    /// A parsed record that breaks a table invariant.
    #[error("{file}:{line}: field `{field}`: {message}")]
    Validation {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Shape or variant mismatch between inputs and scorer parameters.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("missing performance entry for model `{model}`, language `{lang}`, eval set `{eval_set}`")]
    MissingPerf {
        model: String,
        lang: String,
        eval_set: String,
    },

    #[error("missing features for model `{model}` on corpus `{corpus}`")]
    MissingFeature { model: String, corpus: String },

    #[error("missing {kind} embedding for language `{lang}`")]
    MissingEmbedding { lang: String, kind: String },

    #[error("no training signal: the gold pair set is empty")]
    NoTrainingSignal,

    #[error("unsupported parameter file version `{0}` (expected `lmsparams v1`)")]
    ParamVersion(String),

    #[error("parameter file is missing tensor `{0}`")]
    MissingTensor(String),

    #[error("tensor `{name}`: {message}")]
    TensorShape { name: String, message: String },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
