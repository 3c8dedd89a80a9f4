//! Surface-overlap metrics (BLEU, chrF2, TER) and the metric identifiers
//! shared across the toolkit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod bleu;
pub mod chrf;
pub mod ter;
pub mod tokenize;

pub use bleu::{bleu, bleu_with, BleuConfig, BleuStats};
pub use chrf::{chrf2, chrf_segment, ChrfConfig};
pub use ter::{ter, ter_with, TerConfig, TerStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    LuxembedderQe,
    Bertscore,
    Bleurt20,
    XcometXl,
    Bleu,
    Chrf2,
    Ter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl MetricId {
    /// Column order used in every table: LE, BS, B-20, xC, BLEU, chrF2, TER.
    pub const ALL: [MetricId; 7] = [
        MetricId::LuxembedderQe,
        MetricId::Bertscore,
        MetricId::Bleurt20,
        MetricId::XcometXl,
        MetricId::Bleu,
        MetricId::Chrf2,
        MetricId::Ter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::LuxembedderQe => "luxembedder_qe",
            MetricId::Bertscore => "bertscore",
            MetricId::Bleurt20 => "bleurt20",
            MetricId::XcometXl => "xcomet_xl",
            MetricId::Bleu => "bleu",
            MetricId::Chrf2 => "chrf2",
            MetricId::Ter => "ter",
        }
    }

    /// Short column label.
    pub fn label(self) -> &'static str {
        match self {
            MetricId::LuxembedderQe => "LE",
            MetricId::Bertscore => "BS",
            MetricId::Bleurt20 => "B-20",
            MetricId::XcometXl => "xC",
            MetricId::Bleu => "BLEU",
            MetricId::Chrf2 => "chrF2",
            MetricId::Ter => "TER",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricId::Ter => Orientation::LowerBetter,
            _ => Orientation::HigherBetter,
        }
    }

    /// Surface metrics are computed natively and rescored from corpus
    /// statistics rather than averaged.
    pub fn is_surface(self) -> bool {
        matches!(self, MetricId::Bleu | MetricId::Chrf2 | MetricId::Ter)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let id = match key.as_str() {
            "luxembedder_qe" | "luxembedder" | "le" | "qe" => MetricId::LuxembedderQe,
            "bertscore" | "bs" => MetricId::Bertscore,
            "bleurt20" | "bleurt_20" | "b_20" => MetricId::Bleurt20,
            "xcomet_xl" | "xcomet" | "xc" => MetricId::XcometXl,
            "bleu" | "bl" => MetricId::Bleu,
            "chrf2" | "chrf" | "cf2" => MetricId::Chrf2,
            "ter" => MetricId::Ter,
            _ => return Err(Error::UnknownMetric(s.to_string())),
        };
        Ok(id)
    }
}

/// Corpus-level value of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub metric: MetricId,
    pub value: f64,
    pub n_segments: usize,
}

pub(crate) fn check_parallel(hyps: usize, refs: usize) -> Result<()> {
    if hyps != refs {
        return Err(Error::LengthMismatch {
            left: hyps,
            right: refs,
        });
    }
    if hyps == 0 {
        return Err(Error::Empty("corpus"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_labels_and_ids() {
        for m in MetricId::ALL {
            assert_eq!(m.as_str().parse::<MetricId>().unwrap(), m);
            assert_eq!(m.label().parse::<MetricId>().unwrap(), m);
        }
        assert!("metricx".parse::<MetricId>().is_err());
    }

    #[test]
    fn only_ter_is_lower_better() {
        for m in MetricId::ALL {
            let expected = if m == MetricId::Ter {
                Orientation::LowerBetter
            } else {
                Orientation::HigherBetter
            };
            assert_eq!(m.orientation(), expected);
        }
    }
}
