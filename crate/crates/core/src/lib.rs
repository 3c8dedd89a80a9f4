//! Parallel-corpus curation and machine-translation evaluation.
//!
//! The curation side segments, aligns, filters and deduplicates sentence
//! pairs and assembles instruction-tuning mixtures. The evaluation side
//! computes surface metrics, wraps external neural scorers, tests paired
//! significance, correlates metrics at system level and renders reports.

pub mod align;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod exec;
pub mod fixture;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod protocol;
pub mod report;
pub mod scorer;
pub mod segment;
pub mod stats;

pub use corpus::{LangCode, LanguagePair, ParallelCorpus, Segment, SegmentPair, SegmentScores, Stage};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metrics::MetricId;
