//! chrF2: character n-gram F-score, orders 1 to 6, β = 2, whitespace
//! removed before extracting n-grams.
//!
//! Per segment and order `n`, precision and recall of clipped n-gram
//! matches give `F_n = (1 + β²) P R / (β² P + R)`. The segment score is
//! `100 · mean(F_n)` over orders where both sides have n-grams. A segment
//! where neither side has any non-whitespace character scores 100; one where
//! only one side does scores 0. The corpus score is the mean of segment
//! scores.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_parallel, CorpusScore, MetricId};
use crate::error::Result;
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            char_order: 6,
            beta: 2.0,
        }
    }
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn chrf_segment(hyp: &str, reference: &str, cfg: &ChrfConfig) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    let b2 = cfg.beta * cfg.beta;
    let mut f_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=cfg.char_order {
        let hc = char_ngrams(&h, n);
        let rc = char_ngrams(&r, n);
        let h_total: u64 = hc.values().sum();
        let r_total: u64 = rc.values().sum();
        if h_total == 0 || r_total == 0 {
            continue;
        }
        let m: u64 = hc.iter().map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0))).sum();
        let p = m as f64 / h_total as f64;
        let rec = m as f64 / r_total as f64;
        let denom = b2 * p + rec;
        if denom > 0.0 {
            f_sum += (1.0 + b2) * p * rec / denom;
        }
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    100.0 * f_sum / orders as f64
}

pub fn segment_scores(hypotheses: &[String], references: &[String], cfg: &ChrfConfig, exec: Execution) -> Result<Vec<f64>> {
    check_parallel(hypotheses.len(), references.len())?;
    Ok(exec.map_indexed(hypotheses.len(), |i| chrf_segment(&hypotheses[i], &references[i], cfg)))
}

pub fn chrf2(hypotheses: &[String], references: &[String]) -> Result<CorpusScore> {
    let scores = segment_scores(hypotheses, references, &ChrfConfig::default(), Execution::default())?;
    Ok(CorpusScore {
        metric: MetricId::Chrf2,
        value: scores.iter().sum::<f64>() / scores.len() as f64,
        n_segments: scores.len(),
    })
}
