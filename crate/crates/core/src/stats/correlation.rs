use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LanguagePair;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixture::ScoreTable;
use crate::metrics::{MetricId, Orientation};

/// Largest `n` for which p-values enumerate all `n!` orderings.
pub const EXACT_PERMUTATION_MAX_N: usize = 9;
pub const MONTE_CARLO_PERMUTATIONS: usize = 100_000;
const MC_CHUNK: usize = 1000;
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationStat {
    Rho,
    TauB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub tau: f64,
    pub p_rho: f64,
    pub p_tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: MetricId,
    pub result: CorrelationResult,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::Undefined("correlation needs at least 3 points"));
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

struct Centered {
    values: Vec<f64>,
    ss: f64,
}

fn centered(x: &[f64]) -> Centered {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let values: Vec<f64> = x.iter().map(|v| v - m).collect();
    let ss = values.iter().map(|v| v * v).sum();
    Centered { values, ss }
}

fn pearson_centered(a: &Centered, b: &Centered, perm: impl Fn(usize) -> usize) -> f64 {
    let num: f64 = (0..a.values.len()).map(|i| a.values[i] * b.values[perm(i)]).sum();
    (num / (a.ss * b.ss).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let a = centered(&average_ranks(x));
    let b = centered(&average_ranks(y));
    if a.ss == 0.0 || b.ss == 0.0 {
        return Err(Error::Undefined("spearman rho of a constant vector"));
    }
    Ok(pearson_centered(&a, &b, |i| i))
}

struct TauParts {
    ties_x: u64,
    ties_y: u64,
    n_pairs: u64,
}

fn tau_parts(x: &[f64], y: &[f64]) -> TauParts {
    let n = x.len();
    let mut parts = TauParts {
        ties_x: 0,
        ties_y: 0,
        n_pairs: (n * (n - 1) / 2) as u64,
    };
    for i in 0..n {
        for j in i + 1..n {
            parts.ties_x += u64::from(x[i] == x[j]);
            parts.ties_y += u64::from(y[i] == y[j]);
        }
    }
    parts
}

fn concordance(x: &[f64], y: &[f64], perm: impl Fn(usize) -> usize) -> i64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[perm(i)] - y[perm(j)];
            let p = dx * dy;
            if p > 0.0 {
                s += 1;
            } else if p < 0.0 {
                s -= 1;
            }
        }
    }
    s
}

fn tau_from(s: i64, parts: &TauParts) -> f64 {
    let dx = (parts.n_pairs - parts.ties_x) as f64;
    let dy = (parts.n_pairs - parts.ties_y) as f64;
    (s as f64 / (dx * dy).sqrt()).clamp(-1.0, 1.0)
}

/// τ-b = (C − D) / sqrt((P − T_x)(P − T_y)), P the number of pairs.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let parts = tau_parts(x, y);
    if parts.ties_x == parts.n_pairs || parts.ties_y == parts.n_pairs {
        return Err(Error::Undefined("kendall tau of an all-tied vector"));
    }
    Ok(tau_from(concordance(x, y, |i| i), &parts))
}

/// Statistic evaluated with `y` permuted; the fixed parts are computed once.
struct PermutedStat<'a> {
    stat: CorrelationStat,
    x: &'a [f64],
    y: &'a [f64],
    rank_x: Centered,
    rank_y: Centered,
    parts: TauParts,
}

impl<'a> PermutedStat<'a> {
    fn new(x: &'a [f64], y: &'a [f64], stat: CorrelationStat) -> Self {
        PermutedStat {
            stat,
            x,
            y,
            rank_x: centered(&average_ranks(x)),
            rank_y: centered(&average_ranks(y)),
            parts: tau_parts(x, y),
        }
    }

    fn eval(&self, perm: &[usize]) -> f64 {
        match self.stat {
            CorrelationStat::Rho => pearson_centered(&self.rank_x, &self.rank_y, |i| perm[i]),
            CorrelationStat::TauB => tau_from(concordance(self.x, self.y, |i| perm[i]), &self.parts),
        }
    }
}

/// Calls `f` on every ordering of `prefix ++ permutations(rest)` (Heap's algorithm).
fn for_each_permutation(prefix: &[usize], rest: &mut [usize], mut f: impl FnMut(&[usize])) {
    let mut buf: Vec<usize> = prefix.iter().chain(rest.iter()).copied().collect();
    let off = prefix.len();
    let k = rest.len();
    let mut c = vec![0usize; k];
    f(&buf);
    let mut i = 1;
    while i < k {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            buf.swap(off + j, off + i);
            f(&buf);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn correlation_pvalue(x: &[f64], y: &[f64], stat: CorrelationStat) -> Result<f64> {
    correlation_pvalue_with(x, y, stat, 0, Execution::default())
}

/// Two-sided permutation p-value: the fraction of orderings of `y` whose
/// statistic is at least as extreme as the observed one. Exact for
/// `n ≤ EXACT_PERMUTATION_MAX_N`; otherwise `MONTE_CARLO_PERMUTATIONS`
/// random orderings, chunk `c` drawing from ChaCha8 stream `c` of `seed`.
pub fn correlation_pvalue_with(x: &[f64], y: &[f64], stat: CorrelationStat, seed: u64, exec: Execution) -> Result<f64> {
    let observed = match stat {
        CorrelationStat::Rho => spearman_rho(x, y)?,
        CorrelationStat::TauB => kendall_tau_b(x, y)?,
    };
    let model = PermutedStat::new(x, y, stat);
    let threshold = observed.abs() - TIE_EPS;
    let n = x.len();
    if n <= EXACT_PERMUTATION_MAX_N {
        let counts = exec.map_indexed(n, |first| {
            let mut rest: Vec<usize> = (0..n).filter(|&v| v != first).collect();
            let mut hits = 0u64;
            let mut total = 0u64;
            for_each_permutation(&[first], &mut rest, |p| {
                total += 1;
                hits += u64::from(model.eval(p).abs() >= threshold);
            });
            (hits, total)
        });
        let (hits, total) = counts.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
        return Ok(hits as f64 / total as f64);
    }
    let chunks = MONTE_CARLO_PERMUTATIONS / MC_CHUNK;
    let hits: u64 = exec
        .map_indexed(chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut hits = 0u64;
            for _ in 0..MC_CHUNK {
                perm.shuffle(&mut rng);
                hits += u64::from(model.eval(&perm).abs() >= threshold);
            }
            hits
        })
        .iter()
        .sum();
    Ok(hits as f64 / MONTE_CARLO_PERMUTATIONS as f64)
}

/// Correlation of the QE column with every other metric for one language
/// pair, across all systems of `table`. Lower-better metrics are negated.
pub fn system_correlation_matrix(table: &ScoreTable, lp: &LanguagePair) -> Result<Vec<MetricCorrelation>> {
    let systems = table.systems();
    let qe = table.column(&systems, lp, MetricId::LuxembedderQe)?;
    MetricId::ALL
        .iter()
        .filter(|&&m| m != MetricId::LuxembedderQe)
        .map(|&metric| {
            let mut col = table.column(&systems, lp, metric)?;
            if metric.orientation() == Orientation::LowerBetter {
                col.iter_mut().for_each(|v| *v = -*v);
            }
            Ok(MetricCorrelation {
                metric,
                result: CorrelationResult {
                    rho: spearman_rho(&qe, &col)?,
                    tau: kendall_tau_b(&qe, &col)?,
                    p_rho: correlation_pvalue(&qe, &col, CorrelationStat::Rho)?,
                    p_tau: correlation_pvalue(&qe, &col, CorrelationStat::TauB)?,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty, mut p) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..x.len() {
            for j in 0..i {
                p += 1.0;
                let sx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
                let sy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
                tx += f64::from(sx == 0.0);
                ty += f64::from(sy == 0.0);
                if sx * sy > 0.0 {
                    c += 1.0;
                } else if sx * sy < 0.0 {
                    d += 1.0;
                }
            }
        }
        (c - d) / ((p - tx) * (p - ty)).sqrt()
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn identity_and_reversal() {
        let x = [1.0, 3.0, 2.0, 7.0, 5.0];
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(spearman_rho(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman_rho(&x, &rev).unwrap(), -1.0);
        assert_eq!(kendall_tau_b(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn four_with_tie() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 3.0, 2.0];
        // C = 3, D = 2, one y tie among 6 pairs
        let expected = 1.0 / (6.0f64 * 5.0).sqrt();
        assert!((kendall_tau_b(&x, &y).unwrap() - expected).abs() < 1e-12);
        assert!((kendall_tau_b(&x, &y).unwrap() - brute_tau_b(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        assert!(spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(kendall_tau_b(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_pvalues() {
        let x = [1.0, 2.0, 3.0];
        assert!((correlation_pvalue(&x, &x, CorrelationStat::TauB).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        assert!((correlation_pvalue(&x, &x, CorrelationStat::Rho).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        let x: Vec<f64> = (0..7).map(f64::from).collect();
        assert!((correlation_pvalue(&x, &x, CorrelationStat::TauB).unwrap() - 2.0 / 5040.0).abs() < 1e-15);
    }

    #[test]
    fn permutation_enumeration_complete() {
        let mut seen = std::collections::HashSet::new();
        for first in 0..4 {
            let mut rest: Vec<usize> = (0..4).filter(|&v| v != first).collect();
            for_each_permutation(&[first], &mut rest, |p| {
                seen.insert(p.to_vec());
            });
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn monte_carlo_deterministic() {
        let x: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64).collect();
        let y: Vec<f64> = (0..12).map(|i| ((i * 5) % 12) as f64 + 0.5 * i as f64).collect();
        let a = correlation_pvalue_with(&x, &y, CorrelationStat::Rho, 9, Execution::Sequential).unwrap();
        let b = correlation_pvalue_with(&x, &y, CorrelationStat::Rho, 9, Execution::Parallel).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((0.0..=1.0).contains(&a));
    }

    proptest! {
        #[test]
        fn negation_antisymmetry(v in prop::collection::vec((0u8..6, 0u8..6), 3..9)) {
            let x: Vec<f64> = v.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = v.iter().map(|p| f64::from(p.1)).collect();
            let neg: Vec<f64> = y.iter().map(|t| -t).collect();
            if let (Ok(r), Ok(t)) = (spearman_rho(&x, &y), kendall_tau_b(&x, &y)) {
                prop_assert!((spearman_rho(&x, &neg).unwrap() + r).abs() < 1e-12);
                prop_assert!((kendall_tau_b(&x, &neg).unwrap() + t).abs() < 1e-12);
                prop_assert!((t - brute_tau_b(&x, &y)).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&r) && (-1.0..=1.0).contains(&t));
            }
        }
    }
}
