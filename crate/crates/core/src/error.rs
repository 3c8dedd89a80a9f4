use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("mixed language pairs at line {line}: expected {expected}, found {found}")]
    MixedLanguagePairs {
        line: usize,
        expected: String,
        found: String,
    },

    #[error("invalid language pair: {0}")]
    InvalidLanguagePair(String),

    #[error("language pair unknown for {0}; pass one explicitly or provide a manifest")]
    UnknownLanguagePair(PathBuf),

    #[error("invalid segment {id}: {reason}")]
    InvalidSegment { id: String, reason: String },

    #[error("{kind} provider failed at index {index}: {reason}")]
    Provider {
        kind: &'static str,
        index: usize,
        reason: String,
    },

    #[error("protocol error (request {request_id}): {reason}")]
    Protocol { request_id: String, reason: String },

    #[error("no precomputed score for segment {0}")]
    MissingScore(String),

    #[error("segment {segment} lacks the {field} field required by {metric}")]
    MissingField {
        segment: String,
        field: &'static str,
        metric: &'static str,
    },

    #[error("pair {0} has no similarity score")]
    MissingSimilarity(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("non-finite embedding value at position {0}")]
    NonFinite(usize),

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error("segment ids differ at position {0}")]
    IdMismatch(usize),

    #[error("metric mismatch: {0} vs {1}")]
    MetricMismatch(String, String),

    #[error("unknown metric: {0}")]
    UnknownMetric(String),

    #[error("invalid prompt template: {0}")]
    Template(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fixture cell missing: ({system}, {lp}, {metric})")]
    MissingFixtureCell {
        system: String,
        lp: String,
        metric: String,
    },

    #[error("no accuracy table for metric {0}")]
    NoAccuracyTable(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
