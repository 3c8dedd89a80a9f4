//! Access to externally computed metrics and the embedding-based QE score.
//!
//! Neural metrics arrive either from a precomputed TSV (`segment_id<TAB>score`)
//! or from a scorer process over the NDJSON protocol. Required inputs are
//! checked for every segment before anything is sent.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::{LanguagePair, SegmentScores};
use crate::embed::{cosine, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{bleu, chrf, ter, BleuConfig, BleuStats, ChrfConfig, MetricId, TerConfig, TerStats};
use crate::protocol::{ProtocolClient, ScorerRequest};

/// One evaluation item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSegment {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    pub hyp: String,
    #[serde(default, rename = "ref", skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Needs {
    pub source: bool,
    pub hypothesis: bool,
    pub reference: bool,
}

impl Needs {
    pub fn of(metric: MetricId) -> Needs {
        match metric {
            MetricId::XcometXl => Needs {
                source: true,
                hypothesis: true,
                reference: true,
            },
            MetricId::LuxembedderQe => Needs {
                source: true,
                hypothesis: true,
                reference: false,
            },
            _ => Needs {
                source: false,
                hypothesis: true,
                reference: true,
            },
        }
    }

    pub fn check(&self, metric: MetricId, segments: &[EvalSegment]) -> Result<()> {
        for seg in segments {
            let missing = |field| Error::MissingField {
                segment: seg.id.clone(),
                field,
                metric: metric.as_str(),
            };
            if self.source && seg.src.is_none() {
                return Err(missing("source"));
            }
            if self.reference && seg.reference.is_none() {
                return Err(missing("reference"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    PrecomputedFile,
    SubprocessProtocol,
}

enum Backend {
    Precomputed(HashMap<String, f64>),
    Subprocess(Mutex<ProtocolClient>),
}

pub struct ExternalScorerAdapter {
    metric: MetricId,
    model_id: String,
    backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub adapter: AdapterKind,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScores {
    pub scores: SegmentScores,
    pub provenance: Provenance,
}

impl ExternalScorerAdapter {
    pub fn precomputed(metric: MetricId, scores: HashMap<String, f64>, model_id: impl Into<String>) -> Self {
        ExternalScorerAdapter {
            metric,
            model_id: model_id.into(),
            backend: Backend::Precomputed(scores),
        }
    }

    /// Reads a `segment_id<TAB>score` file; an optional `segment_id` header
    /// line is skipped.
    pub fn load_precomputed(metric: MetricId, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scores = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || (idx == 0 && line.starts_with("segment_id")) {
                continue;
            }
            let malformed = |reason: String| Error::MalformedRecord { line: idx + 1, reason };
            let (id, score) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected segment_id<TAB>score".into()))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| malformed(format!("bad score {score:?}")))?;
            scores.insert(id.to_string(), score);
        }
        Ok(ExternalScorerAdapter::precomputed(metric, scores, path.display().to_string()))
    }

    pub fn subprocess(metric: MetricId, program: &str, args: &[String]) -> Result<Self> {
        let mut client = ProtocolClient::spawn(program, args)?;
        let info = client.info()?;
        if !info.metrics.is_empty() && !info.metrics.contains(&metric) {
            return Err(Error::Protocol {
                request_id: "info".into(),
                reason: format!("scorer does not offer {metric}"),
            });
        }
        let model_id = info
            .models
            .get(metric.as_str())
            .cloned()
            .unwrap_or_else(|| program.to_string());
        Ok(ExternalScorerAdapter {
            metric,
            model_id,
            backend: Backend::Subprocess(Mutex::new(client)),
        })
    }

    pub fn metric(&self) -> MetricId {
        self.metric
    }

    pub fn kind(&self) -> AdapterKind {
        match self.backend {
            Backend::Precomputed(_) => AdapterKind::PrecomputedFile,
            Backend::Subprocess(_) => AdapterKind::SubprocessProtocol,
        }
    }

    pub fn needs(&self) -> Needs {
        Needs::of(self.metric)
    }
}

/// Scores every segment through `adapter`, preserving order.
pub fn external_score(
    segments: &[EvalSegment],
    adapter: &ExternalScorerAdapter,
    system: &str,
    lp: &LanguagePair,
) -> Result<ExternalScores> {
    let needs = adapter.needs();
    needs.check(adapter.metric, segments)?;
    let ids: Vec<String> = segments.iter().map(|s| s.id.clone()).collect();
    let values = match &adapter.backend {
        Backend::Precomputed(table) => segments
            .iter()
            .map(|s| table.get(&s.id).copied().ok_or_else(|| Error::MissingScore(s.id.clone())))
            .collect::<Result<Vec<f64>>>()?,
        Backend::Subprocess(client) => {
            let mut client = client.lock().expect("client lock");
            let id = client.next_request_id();
            let field = |f: fn(&EvalSegment) -> Option<String>| segments.iter().map(f).collect::<Option<Vec<_>>>();
            let request = ScorerRequest::score(
                id.clone(),
                adapter.metric,
                if needs.source { field(|s| s.src.clone()) } else { None },
                segments.iter().map(|s| s.hyp.clone()).collect(),
                if needs.reference { field(|s| s.reference.clone()) } else { None },
            );
            let resp = client.call(&request)?;
            let scores = resp.scores.unwrap_or_default();
            if scores.len() != segments.len() {
                return Err(Error::Protocol {
                    request_id: id,
                    reason: format!("expected {} scores, got {}", segments.len(), scores.len()),
                });
            }
            scores
        }
    };
    Ok(ExternalScores {
        scores: SegmentScores::new(system, adapter.metric, lp.clone(), ids, values)?,
        provenance: Provenance {
            adapter: adapter.kind(),
            model_id: adapter.model_id.clone(),
        },
    })
}

/// Affine map of the clamped cosine from [0, 1] onto [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QeNormalization {
    pub lo: f64,
    pub hi: f64,
}

impl Default for QeNormalization {
    fn default() -> Self {
        QeNormalization { lo: 80.0, hi: 100.0 }
    }
}

impl QeNormalization {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("QE range [{lo}, {hi}] is empty")));
        }
        Ok(QeNormalization { lo, hi })
    }

    pub fn apply(&self, cosine: f64) -> f64 {
        self.lo + (self.hi - self.lo) * cosine.clamp(0.0, 1.0)
    }
}

/// Reference-free score from source/hypothesis embedding similarity.
pub fn qe_luxembedder(
    ids: &[String],
    sources: &[String],
    hypotheses: &[String],
    provider: &dyn EmbeddingProvider,
    norm: &QeNormalization,
    system: &str,
    lp: &LanguagePair,
) -> Result<SegmentScores> {
    if sources.len() != hypotheses.len() {
        return Err(Error::LengthMismatch {
            left: sources.len(),
            right: hypotheses.len(),
        });
    }
    if ids.len() != sources.len() {
        return Err(Error::LengthMismatch {
            left: ids.len(),
            right: sources.len(),
        });
    }
    let src_vecs = provider.embed(sources)?;
    let hyp_vecs = provider.embed(hypotheses)?;
    let values = src_vecs
        .iter()
        .zip(&hyp_vecs)
        .map(|(s, h)| cosine(s, h).map(|c| norm.apply(c)))
        .collect::<Result<Vec<f64>>>()?;
    SegmentScores::new(system, MetricId::LuxembedderQe, lp.clone(), ids.to_vec(), values)
}

/// Arithmetic mean of segment scores.
pub fn system_score(scores: &SegmentScores) -> Result<f64> {
    mean(&scores.values)
}

pub(crate) fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("segment scores"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-segment material from which a system score can be recomputed on any
/// subset (or resample) of segments. BLEU and TER keep corpus sufficient
/// statistics; every other metric, chrF2 included, averages segment scores.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentStatistics {
    Mean(Vec<f64>),
    Bleu(Vec<BleuStats>, BleuConfig),
    Ter(Vec<TerStats>),
}

impl SegmentStatistics {
    pub fn len(&self) -> usize {
        match self {
            SegmentStatistics::Mean(v) => v.len(),
            SegmentStatistics::Bleu(v, _) => v.len(),
            SegmentStatistics::Ter(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn score(&self) -> Result<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.score_indices(&all)
    }

    /// System score over the segments at `indices` (repeats allowed).
    pub fn score_indices(&self, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Err(Error::Empty("segment selection"));
        }
        match self {
            SegmentStatistics::Mean(v) => Ok(indices.iter().map(|&i| v[i]).sum::<f64>() / indices.len() as f64),
            SegmentStatistics::Bleu(v, cfg) => {
                let mut total = BleuStats::default();
                for &i in indices {
                    total += &v[i];
                }
                Ok(total.score(cfg))
            }
            SegmentStatistics::Ter(v) => {
                let mut total = TerStats::default();
                for &i in indices {
                    total += &v[i];
                }
                total.score()
            }
        }
    }

    /// Statistics for a surface metric computed from hypothesis/reference text.
    pub fn surface(metric: MetricId, hyps: &[String], refs: &[String], exec: Execution) -> Result<Self> {
        match metric {
            MetricId::Bleu => Ok(SegmentStatistics::Bleu(
                bleu::segment_stats(hyps, refs, exec)?,
                BleuConfig::default(),
            )),
            MetricId::Chrf2 => Ok(SegmentStatistics::Mean(chrf::segment_scores(
                hyps,
                refs,
                &ChrfConfig::default(),
                exec,
            )?)),
            MetricId::Ter => Ok(SegmentStatistics::Ter(ter::segment_stats(hyps, refs, &TerConfig::default(), exec)?)),
            other => Err(Error::MetricMismatch(other.to_string(), "surface metric".into())),
        }
    }
}

impl From<&SegmentScores> for SegmentStatistics {
    fn from(s: &SegmentScores) -> Self {
        SegmentStatistics::Mean(s.values.clone())
    }
}
