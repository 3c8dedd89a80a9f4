//! Translation edit rate with greedy block shifts.
//!
//! Tokens are whitespace-separated and compared case-sensitively. Edits are
//! word insertions, deletions, substitutions and shifts, each costing 1.
//! The corpus score is `100 · Σ edits / Σ reference tokens`.
//!
//! Shift search, repeated until no shift helps:
//!
//! * a candidate moves the span `hyp[start..start+len]` (`len ≤
//!   max_shift_size`) so that it begins at index `dest` of the resulting
//!   sequence, with `dest ≠ start` and `|dest − start| ≤ max_shift_dist`;
//! * the span must occur contiguously somewhere in the reference, and the
//!   move must change the sequence;
//! * gain = Levenshtein before − Levenshtein after; the candidate with the
//!   largest gain wins, ties broken by longer span, then smaller `start`,
//!   then smaller `dest`;
//! * the winner is applied if its gain is at least 1.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_parallel, CorpusScore, MetricId};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerConfig {
    pub max_shift_size: usize,
    pub max_shift_dist: usize,
}

impl Default for TerConfig {
    fn default() -> Self {
        TerConfig {
            max_shift_size: 10,
            max_shift_dist: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TerStats {
    pub edits: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign<&TerStats> for TerStats {
    fn add_assign(&mut self, rhs: &TerStats) {
        self.edits += rhs.edits;
        self.ref_len += rhs.ref_len;
    }
}

impl TerStats {
    pub fn score(&self) -> Result<f64> {
        if self.ref_len == 0 {
            return Err(Error::Empty("reference tokens"));
        }
        Ok(100.0 * self.edits as f64 / self.ref_len as f64)
    }
}

/// Token-level Levenshtein distance, two-row DP.
pub fn levenshtein(a: &[u32], b: &[u32]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn apply_shift(seq: &[u32], start: usize, len: usize, dest: usize) -> Vec<u32> {
    let mut rest: Vec<u32> = Vec::with_capacity(seq.len());
    rest.extend_from_slice(&seq[..start]);
    rest.extend_from_slice(&seq[start + len..]);
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&seq[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

struct Best {
    gain: usize,
    len: usize,
    start: usize,
    dest: usize,
    seq: Vec<u32>,
}

impl Best {
    fn beats(&self, gain: usize, len: usize, start: usize, dest: usize) -> bool {
        (gain, len, std::cmp::Reverse(start), std::cmp::Reverse(dest))
            > (self.gain, self.len, std::cmp::Reverse(self.start), std::cmp::Reverse(self.dest))
    }
}

/// Number of edits (shifts plus Levenshtein) turning `hyp` into `reference`.
pub fn ter_edits(hyp: &[u32], reference: &[u32], cfg: &TerConfig) -> u64 {
    if reference.is_empty() {
        return hyp.len() as u64;
    }
    let mut ref_phrases: HashSet<&[u32]> = HashSet::new();
    for n in 1..=cfg.max_shift_size.min(reference.len()) {
        ref_phrases.extend(reference.windows(n));
    }

    let mut cur = hyp.to_vec();
    let mut shifts = 0u64;
    loop {
        let cur_ed = levenshtein(&cur, reference);
        if cur_ed == 0 {
            break;
        }
        let n = cur.len();
        let mut best: Option<Best> = None;
        for len in (1..=cfg.max_shift_size.min(n)).rev() {
            // a shift of `len` tokens changes the distance by at most 2·len
            if best.as_ref().is_some_and(|b| 2 * len < b.gain) {
                break;
            }
            for start in 0..=n - len {
                if !ref_phrases.contains(&cur[start..start + len]) {
                    continue;
                }
                let lo = start.saturating_sub(cfg.max_shift_dist);
                let hi = (start + cfg.max_shift_dist).min(n - len);
                for dest in lo..=hi {
                    if dest == start {
                        continue;
                    }
                    let shifted = apply_shift(&cur, start, len, dest);
                    if shifted == cur {
                        continue;
                    }
                    let ed = levenshtein(&shifted, reference);
                    if ed >= cur_ed {
                        continue;
                    }
                    let gain = cur_ed - ed;
                    if best.as_ref().is_none_or(|b| b.beats(gain, len, start, dest)) {
                        best = Some(Best {
                            gain,
                            len,
                            start,
                            dest,
                            seq: shifted,
                        });
                    }
                }
            }
        }
        match best {
            Some(b) => {
                cur = b.seq;
                shifts += 1;
            }
            None => break,
        }
    }
    shifts + levenshtein(&cur, reference) as u64
}

/// Maps whitespace tokens of both strings onto shared integer ids.
pub fn intern_pair(hyp: &str, reference: &str) -> (Vec<u32>, Vec<u32>) {
    let mut vocab: HashMap<&str, u32> = HashMap::new();
    let mut id = |w| {
        let next = vocab.len() as u32;
        *vocab.entry(w).or_insert(next)
    };
    let h: Vec<u32> = hyp.split_whitespace().map(&mut id).collect();
    let r: Vec<u32> = reference.split_whitespace().map(&mut id).collect();
    (h, r)
}

pub fn segment_stats_one(hyp: &str, reference: &str, cfg: &TerConfig) -> TerStats {
    let (h, r) = intern_pair(hyp, reference);
    TerStats {
        edits: ter_edits(&h, &r, cfg),
        ref_len: r.len() as u64,
    }
}

pub fn segment_stats(hypotheses: &[String], references: &[String], cfg: &TerConfig, exec: Execution) -> Result<Vec<TerStats>> {
    check_parallel(hypotheses.len(), references.len())?;
    Ok(exec.map_indexed(hypotheses.len(), |i| segment_stats_one(&hypotheses[i], &references[i], cfg)))
}

pub fn corpus_stats(stats: &[TerStats]) -> TerStats {
    let mut total = TerStats::default();
    for s in stats {
        total += s;
    }
    total
}

pub fn ter(hypotheses: &[String], references: &[String]) -> Result<CorpusScore> {
    ter_with(hypotheses, references, &TerConfig::default(), Execution::default())
}

pub fn ter_with(hypotheses: &[String], references: &[String], cfg: &TerConfig, exec: Execution) -> Result<CorpusScore> {
    let stats = segment_stats(hypotheses, references, cfg, exec)?;
    Ok(CorpusScore {
        metric: MetricId::Ter,
        value: corpus_stats(&stats).score()?,
        n_segments: stats.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn edits(h: &str, r: &str) -> u64 {
        segment_stats_one(h, r, &TerConfig::default()).edits
    }

    #[test]
    fn identity_is_zero() {
        let h = s(&["a b c", "Moien alleguer"]);
        assert_eq!(ter(&h, &h).unwrap().value, 0.0);
    }

    #[test]
    fn empty_hypothesis_is_100() {
        assert_eq!(ter(&s(&[""]), &s(&["a b c d"])).unwrap().value, 100.0);
    }

    #[test]
    fn adjacent_swap_is_one_shift() {
        assert_eq!(edits("a c b d", "a b c d"), 1);
        assert_eq!(ter(&s(&["a c b d"]), &s(&["a b c d"])).unwrap().value, 25.0);
    }

    #[test]
    fn block_move() {
        // moving "on the mat" to the end is one shift
        assert_eq!(edits("on the mat the cat sat", "the cat sat on the mat"), 1);
    }

    #[test]
    fn asymmetric() {
        let a = ter(&s(&["a b"]), &s(&["a b c d"])).unwrap().value;
        let b = ter(&s(&["a b c d"]), &s(&["a b"])).unwrap().value;
        assert_eq!(a, 50.0);
        assert_eq!(b, 100.0);
    }

    #[test]
    fn empty_reference_corpus_errors() {
        assert!(ter(&s(&["a"]), &s(&[""])).is_err());
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein(&[1, 2, 3], &[1, 2, 3]), 0);
        assert_eq!(levenshtein(&[], &[1, 2]), 2);
        assert_eq!(levenshtein(&[1, 2, 3], &[1, 3]), 1);
        assert_eq!(levenshtein(&[1, 2], &[3, 4]), 2);
    }
}
