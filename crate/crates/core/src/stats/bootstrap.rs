use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SegmentScores;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scorer::SegmentStatistics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            confidence: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        BootstrapConfig {
            seed,
            ..BootstrapConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Config(format!("bootstrap needs at least 2 replicates, got {}", self.replicates)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("confidence {} not in (0, 1)", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub delta: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub significant: bool,
}

/// Replicate `b` draws its indices from ChaCha8 seeded with `seed`, stream `b`.
fn replicate_indices(seed: u64, b: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Linear interpolation between order statistics, `q` in [0, 1].
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let w = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

enum Paired<'a> {
    Differences(Vec<f64>),
    Systems(&'a SegmentStatistics, &'a SegmentStatistics),
}

impl Paired<'_> {
    fn delta(&self, indices: &[usize]) -> Result<f64> {
        match self {
            Paired::Differences(d) => Ok(indices.iter().map(|&i| d[i]).sum::<f64>() / indices.len() as f64),
            Paired::Systems(base, cand) => Ok(cand.score_indices(indices)? - base.score_indices(indices)?),
        }
    }
}

pub fn paired_bootstrap(
    baseline: &SegmentStatistics,
    candidate: &SegmentStatistics,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult> {
    paired_bootstrap_with(baseline, candidate, cfg, Execution::default())
}

/// Delta is candidate minus baseline, on the full set and on each resample.
/// Mean-type statistics resample per-segment differences; BLEU and TER
/// recompute both corpus scores from the resampled sufficient statistics.
pub fn paired_bootstrap_with(
    baseline: &SegmentStatistics,
    candidate: &SegmentStatistics,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Result<SignificanceResult> {
    cfg.validate()?;
    let n = baseline.len();
    if n != candidate.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: candidate.len(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("bootstrap input"));
    }
    let paired = match (baseline, candidate) {
        (SegmentStatistics::Mean(b), SegmentStatistics::Mean(c)) => {
            Paired::Differences(c.iter().zip(b).map(|(c, b)| c - b).collect())
        }
        (SegmentStatistics::Bleu(..), SegmentStatistics::Bleu(..)) | (SegmentStatistics::Ter(_), SegmentStatistics::Ter(_)) => {
            Paired::Systems(baseline, candidate)
        }
        _ => return Err(Error::MetricMismatch("baseline statistics".into(), "candidate statistics".into())),
    };
    let all: Vec<usize> = (0..n).collect();
    let delta = paired.delta(&all)?;
    let mut deltas = exec
        .map_indexed(cfg.replicates, |b| paired.delta(&replicate_indices(cfg.seed, b, n)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    deltas.sort_by(f64::total_cmp);
    let alpha = 1.0 - cfg.confidence;
    let ci_lo = quantile(&deltas, alpha / 2.0);
    let ci_hi = quantile(&deltas, 1.0 - alpha / 2.0);
    Ok(SignificanceResult {
        delta,
        ci_lo,
        ci_hi,
        significant: ci_lo > 0.0 || ci_hi < 0.0,
    })
}

/// Bootstrap on two score lists for the same segments and metric.
pub fn paired_bootstrap_scores(
    baseline: &SegmentScores,
    candidate: &SegmentScores,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult> {
    if baseline.metric != candidate.metric {
        return Err(Error::MetricMismatch(baseline.metric.to_string(), candidate.metric.to_string()));
    }
    if baseline.ids.len() != candidate.ids.len() {
        return Err(Error::LengthMismatch {
            left: baseline.ids.len(),
            right: candidate.ids.len(),
        });
    }
    if let Some(pos) = baseline.ids.iter().zip(&candidate.ids).position(|(a, b)| a != b) {
        return Err(Error::IdMismatch(pos));
    }
    paired_bootstrap(&baseline.into(), &candidate.into(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricId, TerStats};

    fn mean(v: Vec<f64>) -> SegmentStatistics {
        SegmentStatistics::Mean(v)
    }

    #[test]
    fn equal_systems_degenerate() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 10.0 + 60.0).collect();
        let r = paired_bootstrap(&mean(a.clone()), &mean(a), &BootstrapConfig::with_seed(3)).unwrap();
        assert_eq!((r.delta, r.ci_lo, r.ci_hi, r.significant), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn constant_shift() {
        let a: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        let r = paired_bootstrap(&mean(a), &mean(b), &BootstrapConfig::with_seed(1)).unwrap();
        assert_eq!((r.ci_lo, r.ci_hi), (5.0, 5.0));
        assert!(r.significant);
    }

    #[test]
    fn strategies_bit_identical() {
        let a: Vec<f64> = (0..100).map(|i| ((i * 7919) % 101) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| ((i * 104729) % 97) as f64).collect();
        let cfg = BootstrapConfig::with_seed(11);
        let s = paired_bootstrap_with(&mean(a.clone()), &mean(b.clone()), &cfg, Execution::Sequential).unwrap();
        let p = paired_bootstrap_with(&mean(a), &mean(b), &cfg, Execution::Parallel).unwrap();
        assert_eq!(s.ci_lo.to_bits(), p.ci_lo.to_bits());
        assert_eq!(s.ci_hi.to_bits(), p.ci_hi.to_bits());
    }

    #[test]
    fn ter_resamples_corpus_statistics() {
        let base: Vec<TerStats> = (0..30).map(|i| TerStats { edits: i % 4, ref_len: 10 }).collect();
        let cand: Vec<TerStats> = base.iter().map(|s| TerStats { edits: s.edits + 1, ..*s }).collect();
        let r = paired_bootstrap(&SegmentStatistics::Ter(base), &SegmentStatistics::Ter(cand), &BootstrapConfig::default())
            .unwrap();
        assert!((r.delta - 10.0).abs() < 1e-9);
        assert!(r.significant);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.125), 0.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn rejects_bad_input() {
        let one = || mean(vec![1.0, 2.0]);
        let cfg = BootstrapConfig {
            replicates: 1,
            ..BootstrapConfig::default()
        };
        assert!(paired_bootstrap(&one(), &one(), &cfg).is_err());
        assert!(paired_bootstrap(&one(), &mean(vec![1.0]), &BootstrapConfig::default()).is_err());

        let lp: crate::corpus::LanguagePair = "lb-en".parse().unwrap();
        let a = SegmentScores::new("a", MetricId::Chrf2, lp.clone(), vec!["1".into()], vec![1.0]).unwrap();
        let b = SegmentScores::new("b", MetricId::Chrf2, lp.clone(), vec!["2".into()], vec![1.0]).unwrap();
        assert!(matches!(paired_bootstrap_scores(&a, &b, &BootstrapConfig::default()), Err(Error::IdMismatch(0))));
        let c = SegmentScores::new("c", MetricId::Bertscore, lp, vec!["1".into()], vec![1.0]).unwrap();
        assert!(matches!(paired_bootstrap_scores(&a, &c, &BootstrapConfig::default()), Err(Error::MetricMismatch(..))));
    }
}
