//! Cosine alignment of segment lists, threshold filtering and top-K
//! selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{Segment, SegmentPair};
use crate::embed::{cosine, EmbeddingProvider, EmbeddingVector};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    /// Each source takes its best target; targets may repeat.
    Nearest,
    /// Candidates by descending similarity, accepted while both sides are free.
    #[default]
    GreedyOneToOne,
}

/// Minimum similarity a pair needs to be kept (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FilterThreshold(f64);

impl FilterThreshold {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Config(format!("threshold {theta} outside [0, 1]")));
        }
        Ok(FilterThreshold(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn keeps(self, similarity: f64) -> bool {
        similarity >= self.0
    }
}

fn embed_segments(segments: &[Segment], provider: &dyn EmbeddingProvider) -> Result<Vec<EmbeddingVector>> {
    let texts: Vec<String> = segments.iter().map(|s| s.text.clone()).collect();
    let vectors = provider.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Provider {
            kind: provider.kind().as_str(),
            index: vectors.len().min(texts.len()),
            reason: format!("returned {} vectors for {} texts", vectors.len(), texts.len()),
        });
    }
    Ok(vectors)
}

/// Row-major `sources × targets` cosine matrix.
pub fn similarity_matrix(
    sources: &[EmbeddingVector],
    targets: &[EmbeddingVector],
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    exec.map_slice(sources, |s| targets.iter().map(|t| cosine(s, t)).collect::<Result<Vec<f64>>>())
        .into_iter()
        .collect()
}

pub fn align(
    sources: &[Segment],
    targets: &[Segment],
    provider: &dyn EmbeddingProvider,
    policy: AlignPolicy,
) -> Result<Vec<SegmentPair>> {
    align_with(sources, targets, provider, policy, Execution::default())
}

pub fn align_with(
    sources: &[Segment],
    targets: &[Segment],
    provider: &dyn EmbeddingProvider,
    policy: AlignPolicy,
    exec: Execution,
) -> Result<Vec<SegmentPair>> {
    if sources.is_empty() || targets.is_empty() {
        return Err(Error::Empty("alignment side"));
    }
    let src_vecs = embed_segments(sources, provider)?;
    let tgt_vecs = embed_segments(targets, provider)?;
    let sims = similarity_matrix(&src_vecs, &tgt_vecs, exec)?;
    let matches = match policy {
        AlignPolicy::Nearest => nearest_matches(&sims),
        AlignPolicy::GreedyOneToOne => greedy_matches(&sims),
    };
    Ok(matches
        .into_iter()
        .map(|(i, j, sim)| SegmentPair::aligned(sources[i].clone(), targets[j].clone(), sim))
        .collect())
}

/// Argmax per row; ties go to the lowest target index.
pub fn nearest_matches(sims: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    sims.iter()
        .enumerate()
        .filter_map(|(i, row)| {
            let mut best: Option<(usize, f64)> = None;
            for (j, &s) in row.iter().enumerate() {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
            best.map(|(j, s)| (i, j, s))
        })
        .collect()
}

/// Greedy one-to-one matching. Candidates sorted by similarity descending,
/// then source index, then target index. Output is ordered by source index.
pub fn greedy_matches(sims: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n_tgt = sims.first().map_or(0, Vec::len);
    let mut candidates: Vec<(usize, usize, f64)> = sims
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &s)| (i, j, s)))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut src_used = vec![false; sims.len()];
    let mut tgt_used = vec![false; n_tgt];
    let mut out = Vec::new();
    for (i, j, s) in candidates {
        if src_used[i] || tgt_used[j] {
            continue;
        }
        src_used[i] = true;
        tgt_used[j] = true;
        out.push((i, j, s));
        if out.len() == sims.len().min(n_tgt) {
            break;
        }
    }
    out.sort_by_key(|m| m.0);
    out
}

fn similarity_of(pair: &SegmentPair, index: usize) -> Result<f64> {
    pair.similarity.ok_or(Error::MissingSimilarity(index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFiltered {
    pub pairs: Vec<SegmentPair>,
    pub total: usize,
}

impl ThresholdFiltered {
    pub fn kept(&self) -> usize {
        self.pairs.len()
    }

    /// Share of input pairs retained; 1.0 for empty input.
    pub fn retained_fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.pairs.len() as f64 / self.total as f64
        }
    }
}

pub fn filter_by_threshold(pairs: &[SegmentPair], threshold: FilterThreshold) -> Result<ThresholdFiltered> {
    let mut kept = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if threshold.keeps(similarity_of(p, i)?) {
            kept.push(p.clone());
        }
    }
    Ok(ThresholdFiltered {
        pairs: kept,
        total: pairs.len(),
    })
}

/// Stable descending sort by similarity, truncated to `k`.
pub fn top_k_by_similarity(pairs: &[SegmentPair], k: usize) -> Result<Vec<SegmentPair>> {
    let mut keyed: Vec<(f64, &SegmentPair)> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| similarity_of(p, i).map(|s| (s, p)))
        .collect::<Result<_>>()?;
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    Ok(keyed.into_iter().take(k).map(|(_, p)| p.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LangCode;
    use crate::embed::{MockProvider, PrecomputedProvider};

    fn segs(texts: &[&str], lang: &str) -> Vec<Segment> {
        let lang = LangCode::new(lang).unwrap();
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Segment::new(i.to_string(), t, lang.clone()).unwrap())
            .collect()
    }

    fn with_sims(sims: &[f64]) -> Vec<SegmentPair> {
        let lb = segs(&["x"], "lb").remove(0);
        let fr = segs(&["y"], "fr").remove(0);
        sims.iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut src = lb.clone();
                src.id = i.to_string();
                SegmentPair::aligned(src, fr.clone(), s)
            })
            .collect()
    }

    fn ids(pairs: &[SegmentPair]) -> Vec<String> {
        pairs.iter().map(|p| p.source.id.clone()).collect()
    }

    #[test]
    fn self_alignment_is_identity() {
        let texts = ["Moien.", "Wéi geet et?", "Äddi.", "Moien."];
        let a = segs(&texts, "lb");
        let pairs = align(&a, &a, &MockProvider::default(), AlignPolicy::GreedyOneToOne).unwrap();
        assert_eq!(pairs.len(), 4);
        for (i, p) in pairs.iter().enumerate() {
            assert_eq!(p.source.id, i.to_string());
            assert_eq!(p.target.id, i.to_string());
            assert!((p.similarity.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn nearest_picks_argmax() {
        let src = segs(&["s"], "lb");
        let tgt = segs(&["a", "b", "c"], "fr");
        let mut p = PrecomputedProvider::default();
        p.insert("s", EmbeddingVector::new(vec![1.0, 0.2]).unwrap());
        p.insert("a", EmbeddingVector::new(vec![0.0, 1.0]).unwrap());
        p.insert("b", EmbeddingVector::new(vec![1.0, 0.1]).unwrap());
        p.insert("c", EmbeddingVector::new(vec![-1.0, 0.0]).unwrap());
        let pairs = align(&src, &tgt, &p, AlignPolicy::Nearest).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target.text, "b");
    }

    #[test]
    fn nearest_ties_go_to_lowest_index() {
        let out = nearest_matches(&[vec![0.5, 0.9, 0.9]]);
        assert_eq!(out, vec![(0, 1, 0.9)]);
    }

    #[test]
    fn empty_side_rejected() {
        let a = segs(&["x"], "lb");
        assert!(align(&a, &[], &MockProvider::default(), AlignPolicy::Nearest).is_err());
    }

    #[test]
    fn threshold_boundary_inclusive() {
        let pairs = with_sims(&[0.89, 0.90, 0.99]);
        let out = filter_by_threshold(&pairs, FilterThreshold::new(0.90).unwrap()).unwrap();
        assert_eq!(ids(&out.pairs), vec!["1", "2"]);
        assert!((out.retained_fraction() - 2.0 / 3.0).abs() < 1e-12);
        let all = filter_by_threshold(&pairs, FilterThreshold::new(0.0).unwrap()).unwrap();
        assert_eq!(all.pairs, pairs);
        assert!(FilterThreshold::new(1.5).is_err());
    }

    #[test]
    fn threshold_needs_similarity() {
        let mut pairs = with_sims(&[0.5]);
        pairs[0].similarity = None;
        assert!(matches!(
            filter_by_threshold(&pairs, FilterThreshold::new(0.1).unwrap()),
            Err(Error::MissingSimilarity(0))
        ));
    }

    #[test]
    fn top_k_is_stable_sorted_prefix() {
        let pairs = with_sims(&[0.5, 0.9, 0.5, 0.7]);
        assert_eq!(ids(&top_k_by_similarity(&pairs, 3).unwrap()), vec!["1", "3", "0"]);
        assert_eq!(ids(&top_k_by_similarity(&pairs, 10).unwrap()), vec!["1", "3", "0", "2"]);
        let equal = with_sims(&[0.4, 0.4, 0.4]);
        assert_eq!(ids(&top_k_by_similarity(&equal, 3).unwrap()), vec!["0", "1", "2"]);
    }

    #[test]
    fn top_500_of_600() {
        let sims: Vec<f64> = (0..600).map(|i| ((i * 7919) % 600) as f64 / 600.0).collect();
        let pairs = with_sims(&sims);
        let top = top_k_by_similarity(&pairs, 500).unwrap();
        assert_eq!(top.len(), 500);
        let min_kept = top.iter().map(|p| p.similarity.unwrap()).fold(f64::INFINITY, f64::min);
        let kept: std::collections::HashSet<String> = ids(&top).into_iter().collect();
        let max_dropped = pairs
            .iter()
            .filter(|p| !kept.contains(&p.source.id))
            .map(|p| p.similarity.unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_kept >= max_dropped);
    }

    /// Exhaustive oracle: for tiny matrices, the greedy rule equals picking,
    /// among all full matchings, the lexicographically largest sorted
    /// similarity sequence when all similarities are distinct.
    fn greedy_oracle(sims: &[Vec<f64>]) -> Vec<(usize, usize)> {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = sims.len();
        let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
        for p in perms(n) {
            let mut key: Vec<f64> = (0..n).map(|i| sims[i][p[i]]).collect();
            key.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let better = match &best {
                None => true,
                Some((k, _)) => key.partial_cmp(k) == Some(Ordering::Greater),
            };
            if better {
                best = Some((key, p));
            }
        }
        best.unwrap().1.into_iter().enumerate().collect()
    }

    #[test]
    fn greedy_matches_exhaustive_oracle_3x3() {
        let sims = vec![vec![0.9, 0.8, 0.1], vec![0.85, 0.2, 0.3], vec![0.7, 0.6, 0.5]];
        let got: Vec<(usize, usize)> = greedy_matches(&sims).into_iter().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(got, greedy_oracle(&sims));
        assert_eq!(got, vec![(0, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn greedy_matches_oracle_on_random_4x4() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let sims: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let got: Vec<(usize, usize)> = greedy_matches(&sims).into_iter().map(|(i, j, _)| (i, j)).collect();
            assert_eq!(got, greedy_oracle(&sims));
        }
    }
}
