//! Corpus BLEU (4-gram, single reference, 13a tokenization).
//!
//! Clipped n-gram matches and hypothesis n-gram totals are summed over the
//! corpus, together with hypothesis and reference lengths. The score is
//! `100 · BP · exp(mean_n ln p_n)` with `BP = exp(1 − r/c)` when `c < r`.
//!
//! With [`Smoothing::Exp`] (the default) an order with zero matches gets
//! `p_n = 1 / (2^k · total_n)`, `k` counting the zero-match orders so far,
//! and orders with no hypothesis n-grams at all are left out of the mean.
//! Zero unigram matches always score 0. With [`Smoothing::None`] any zero
//! precision scores 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize_13a;
use super::{check_parallel, CorpusScore, MetricId};
use crate::error::Result;
use crate::exec::Execution;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    #[default]
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BleuConfig {
    pub smoothing: Smoothing,
}

/// Sufficient statistics of one segment; they add up over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign<&BleuStats> for BleuStats {
    fn add_assign(&mut self, rhs: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += rhs.matches[n];
            self.totals[n] += rhs.totals[n];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn from_tokens(hyp: &[String], reference: &[String]) -> Self {
        let mut stats = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..BleuStats::default()
        };
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
            stats.matches[n - 1] = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
        }
        stats
    }

    pub fn from_text(hyp: &str, reference: &str) -> Self {
        BleuStats::from_tokens(&tokenize_13a(hyp), &tokenize_13a(reference))
    }

    pub fn score(&self, cfg: &BleuConfig) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut smooth = 1.0;
        let mut log_sum = 0.0;
        let mut order = 0usize;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                match cfg.smoothing {
                    Smoothing::Exp => break,
                    Smoothing::None => return 0.0,
                }
            }
            let p = if self.matches[n] == 0 {
                match cfg.smoothing {
                    Smoothing::Exp => {
                        smooth *= 2.0;
                        1.0 / (smooth * self.totals[n] as f64)
                    }
                    Smoothing::None => return 0.0,
                }
            } else {
                self.matches[n] as f64 / self.totals[n] as f64
            };
            log_sum += p.ln();
            order += 1;
        }
        let bp = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        100.0 * bp * (log_sum / order as f64).exp()
    }
}

/// Per-segment statistics, computed in parallel and returned in order.
pub fn segment_stats(hypotheses: &[String], references: &[String], exec: Execution) -> Result<Vec<BleuStats>> {
    check_parallel(hypotheses.len(), references.len())?;
    Ok(exec.map_indexed(hypotheses.len(), |i| BleuStats::from_text(&hypotheses[i], &references[i])))
}

pub fn corpus_stats(stats: &[BleuStats]) -> BleuStats {
    let mut total = BleuStats::default();
    for s in stats {
        total += s;
    }
    total
}

pub fn bleu(hypotheses: &[String], references: &[String]) -> Result<CorpusScore> {
    bleu_with(hypotheses, references, &BleuConfig::default(), Execution::default())
}

pub fn bleu_with(hypotheses: &[String], references: &[String], cfg: &BleuConfig, exec: Execution) -> Result<CorpusScore> {
    let stats = segment_stats(hypotheses, references, exec)?;
    Ok(CorpusScore {
        metric: MetricId::Bleu,
        value: corpus_stats(&stats).score(cfg),
        n_segments: stats.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn perfect_match_is_100() {
        let h = s(&["the cat sat on the mat", "Moien, wéi geet et?"]);
        assert_eq!(bleu(&h, &h).unwrap().value, 100.0);
    }

    #[test]
    fn no_shared_tokens_is_zero() {
        let v = bleu(&s(&["x y z"]), &s(&["a b c"])).unwrap().value;
        assert_eq!(v, 0.0);
    }

    #[test]
    fn short_hypothesis_uses_observed_orders() {
        // p1 = p2 = p3 = 1, no 4-grams; BP = exp(1 - 6/3)
        let v = bleu(&s(&["the cat sat"]), &s(&["the cat sat on the mat"])).unwrap().value;
        assert!((v - 36.787944117144235).abs() < 1e-12, "{v}");
        let none = BleuConfig {
            smoothing: Smoothing::None,
        };
        let v = bleu_with(&s(&["the cat sat"]), &s(&["the cat sat on the mat"]), &none, Execution::Sequential)
            .unwrap()
            .value;
        assert_eq!(v, 0.0);
    }

    #[test]
    fn exp_smoothing_on_missing_higher_orders() {
        // hyp "a b c d" vs ref "a c b d": p1 = 4/4, p2 = 0/3 -> 1/(2*3),
        // p3 = 0/2 -> 1/(4*2), p4 = 0/1 -> 1/(8*1)
        let v = bleu(&s(&["a b c d"]), &s(&["a c b d"])).unwrap().value;
        let expected = 100.0 * (1.0f64 / (6.0 * 8.0 * 8.0)).powf(0.25);
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn errors() {
        assert!(bleu(&s(&["a"]), &s(&[])).is_err());
        assert!(bleu(&[], &[]).is_err());
    }
}
