//! System output files: one JSON object per line with `id`, `hyp`, and
//! optionally `src`, `ref` and precomputed `scores` keyed by metric.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use luxkit::embed::EmbeddingProvider;
use luxkit::preprocess::strip_quotes;
use luxkit::scorer::{external_score, qe_luxembedder, EvalSegment, ExternalScorerAdapter, Needs, SegmentStatistics};
use luxkit::{Error, Execution, LanguagePair, MetricId, Result, SegmentScores};
use serde::Deserialize;

use crate::config::Config;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRecord {
    id: String,
    #[serde(default)]
    src: Option<String>,
    hyp: String,
    #[serde(default, rename = "ref")]
    reference: Option<String>,
    #[serde(default)]
    scores: BTreeMap<MetricId, f64>,
}

#[derive(Debug, Clone)]
pub struct SystemOutput {
    pub name: String,
    pub segments: Vec<EvalSegment>,
    scores: Vec<BTreeMap<MetricId, f64>>,
}

impl SystemOutput {
    pub fn load(path: &Path, name: Option<&str>, strip: bool) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut segments = Vec::new();
        let mut scores = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: SystemRecord = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                line: idx + 1,
                reason: format!("{}: {e}", path.display()),
            })?;
            let clean = |s: String| if strip { strip_quotes(&s) } else { s };
            segments.push(EvalSegment {
                id: rec.id,
                src: rec.src.map(clean),
                hyp: clean(rec.hyp),
                reference: rec.reference.map(clean),
            });
            scores.push(rec.scores);
        }
        if segments.is_empty() {
            return Err(Error::Empty("system output"));
        }
        let name = name.map(str::to_string).unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "system".into())
        });
        Ok(SystemOutput { name, segments, scores })
    }

    pub fn ids(&self) -> Vec<String> {
        self.segments.iter().map(|s| s.id.clone()).collect()
    }

    /// Errors unless both outputs cover the same segments in the same order.
    pub fn check_paired(&self, other: &SystemOutput) -> Result<()> {
        if self.segments.len() != other.segments.len() {
            return Err(Error::LengthMismatch {
                left: self.segments.len(),
                right: other.segments.len(),
            });
        }
        match self.segments.iter().zip(&other.segments).position(|(a, b)| a.id != b.id) {
            Some(pos) => Err(Error::IdMismatch(pos)),
            None => Ok(()),
        }
    }
}

/// Where neural metric scores come from when they are not computed locally.
#[derive(Debug, Clone, Default)]
pub struct ExternalSource {
    pub precomputed: Option<PathBuf>,
    pub scorer: Option<(String, Vec<String>)>,
}

pub struct Scorer<'a> {
    cfg: &'a Config,
    exec: Execution,
    external: ExternalSource,
    provider: OnceCell<Box<dyn EmbeddingProvider>>,
}

pub struct Scored {
    pub statistics: SegmentStatistics,
    pub segment_values: Option<SegmentScores>,
    pub provenance: String,
}

impl<'a> Scorer<'a> {
    pub fn new(cfg: &'a Config, exec: Execution, external: ExternalSource) -> Self {
        let external = ExternalSource {
            scorer: external
                .scorer
                .or_else(|| cfg.scorer.command.clone().map(|c| (c, cfg.scorer.args.clone()))),
            ..external
        };
        Scorer {
            cfg,
            exec,
            external,
            provider: OnceCell::new(),
        }
    }

    fn provider(&self) -> Result<&dyn EmbeddingProvider> {
        if self.provider.get().is_none() {
            let p = self.cfg.embedding.provider()?;
            let _ = self.provider.set(p);
        }
        Ok(self.provider.get().expect("provider initialized").as_ref())
    }

    pub fn score(&self, sys: &SystemOutput, metric: MetricId, lp: &LanguagePair) -> Result<Scored> {
        Needs::of(metric).check(metric, &sys.segments)?;
        if metric.is_surface() {
            let hyps: Vec<String> = sys.segments.iter().map(|s| s.hyp.clone()).collect();
            let refs: Vec<String> = sys
                .segments
                .iter()
                .map(|s| s.reference.clone().unwrap_or_default())
                .collect();
            return Ok(Scored {
                statistics: SegmentStatistics::surface(metric, &hyps, &refs, self.exec)?,
                segment_values: None,
                provenance: "native".into(),
            });
        }
        let (scores, provenance) = if metric == MetricId::LuxembedderQe {
            let srcs: Vec<String> = sys.segments.iter().map(|s| s.src.clone().unwrap_or_default()).collect();
            let hyps: Vec<String> = sys.segments.iter().map(|s| s.hyp.clone()).collect();
            let provider = self.provider()?;
            let scores = qe_luxembedder(&sys.ids(), &srcs, &hyps, provider, &self.cfg.qe, &sys.name, lp)?;
            (scores, format!("embedding:{}", provider.kind().as_str()))
        } else if let Some(path) = &self.external.precomputed {
            let adapter = ExternalScorerAdapter::load_precomputed(metric, path)?;
            let out = external_score(&sys.segments, &adapter, &sys.name, lp)?;
            (out.scores, out.provenance.model_id)
        } else if let Some((program, args)) = &self.external.scorer {
            let adapter = ExternalScorerAdapter::subprocess(metric, program, args)?;
            let out = external_score(&sys.segments, &adapter, &sys.name, lp)?;
            (out.scores, out.provenance.model_id)
        } else {
            let values = sys
                .segments
                .iter()
                .zip(&sys.scores)
                .map(|(seg, s)| s.get(&metric).copied().ok_or_else(|| Error::MissingScore(seg.id.clone())))
                .collect::<Result<Vec<f64>>>()?;
            (SegmentScores::new(&sys.name, metric, lp.clone(), sys.ids(), values)?, "input".into())
        };
        Ok(Scored {
            statistics: SegmentStatistics::from(&scores),
            segment_values: Some(scores),
            provenance,
        })
    }
}
