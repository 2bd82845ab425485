use std::path::PathBuf;

use thiserror::Error;

use crate::stage::Stage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },
    #[error("sidecar token {line}: `{surface}` not found in text after byte {offset}")]
    SidecarAlignment {
        line: usize,
        surface: String,
        offset: usize,
    },
    #[error("sidecar line {line}: {message}")]
    SidecarFormat { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LexiconError {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        LexiconError::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StageError {
    #[error("producer {0:?} is not the scheduled stage")]
    NotScheduled(Option<Stage>),
    #[error("stage {0} is still open")]
    StillOpen(Stage),
    #[error("stage {0} already ran on this store")]
    AlreadyRun(Stage),
    #[error("unknown annotation id {0}")]
    UnknownAnnotation(usize),
    #[error("stage list out of order: {0} cannot follow {1}")]
    Order(Stage, Stage),
}

#[derive(Debug, Error)]
#[error("stage {stage} failed{}: {source}", clause.map(|c| format!(" at clause {c}")).unwrap_or_default())]
pub struct PipelineError {
    pub stage: Stage,
    pub clause: Option<usize>,
    #[source]
    pub source: StageError,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct GemParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

/// A malformed line in one of the TSV/text interchange formats.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{format} line {line}: {message}")]
pub struct FormatError {
    pub format: &'static str,
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub(crate) fn new(format: &'static str, line: usize, message: &str) -> Self {
        FormatError {
            format,
            line,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold couple set is empty")]
    EmptyGold,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training needs at least 2 gold documents, got {0}")]
    TooFewDocuments(usize),
    #[error("gold segment for unknown document `{0}`")]
    UnknownDocument(String),
    #[error("gold segment {doc_id}:{first}..{last} outside document")]
    OutOfRange {
        doc_id: String,
        first: usize,
        last: usize,
    },
    #[error(transparent)]
    Gold(#[from] FormatError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key `{0}` is not recognised")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
}
