use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus shape mismatch: {src_lines} source lines vs {tgt_lines} target lines")]
    CorpusShape { src_lines: usize, tgt_lines: usize },

    #[error("malformed sentence at {path}:{line}: {reason}")]
    MalformedSentence {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("invalid token sequence: {0}")]
    InvalidTokens(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),

    /// An external endpoint misbehaved. `raw` carries the offending response
    /// line when one was received.
    #[error("gateway error: {message}")]
    Gateway { message: String, raw: Option<String> },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("metric input error in `{field}`: {reason}")]
    MetricInput { field: &'static str, reason: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("alignment error: missing sids {missing:?}")]
    Alignment { missing: Vec<String> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
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

    pub(crate) fn gateway(message: impl Into<String>) -> Self {
        Error::Gateway {
            message: message.into(),
            raw: None,
        }
    }

    pub(crate) fn gateway_raw(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Error::Gateway {
            message: message.into(),
            raw: Some(raw.into()),
        }
    }

    /// True for failures that come from a model or classifier endpoint.
    pub fn is_endpoint_failure(&self) -> bool {
        matches!(self, Error::Gateway { .. })
    }
}
