use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TesaError>;

#[derive(Debug, Error)]
pub enum TesaError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("empty corpus: the filter removed every page")]
    EmptyCorpus,

    #[error("unknown {kind} '{id}'")]
    Unknown { kind: &'static str, id: String },

    #[error("category '{0}' has no descendant pages")]
    EmptyCategory(String),

    #[error("word '{0}' has empty concept vector")]
    EmptyConceptVector(String),

    #[error("degenerate vector for {0}")]
    Degenerate(String),

    #[error("{} node(s) cannot reach the sink: {}", .0.len(), .0.join(", "))]
    Unreachable(Vec<String>),

    #[error("index format version {found} is not supported (expected {expected})")]
    IndexVersion { found: u32, expected: u32 },

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<TesaError>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl TesaError {
    pub(crate) fn unknown(kind: &'static str, id: impl Into<String>) -> Self {
        TesaError::Unknown { kind, id: id.into() }
    }

    /// Attach a pipeline stage name.
    pub fn in_stage(self, stage: &'static str) -> Self {
        TesaError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        TesaError::Io {
            context: context.into(),
            source,
        }
    }
}
