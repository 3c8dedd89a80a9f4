//! Reference implementations used as test oracles. They favour directness
//! over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 7] = ["de", "an", "Haus", "ass", "grouss", "mat", "Kaz"];

/// Random token pairs: reference 1..=8 tokens, hypothesis 0..=8 tokens.
pub fn random_token_pairs(seed: u64, n: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let vocab = rng.random_range(2..=VOCAB.len());
            let h_len = rng.random_range(0..=8);
            let r_len = rng.random_range(1..=8);
            let mut draw = |len: usize| -> Vec<String> {
                (0..len).map(|_| VOCAB[rng.random_range(0..vocab)].to_string()).collect()
            };
            let h = draw(h_len);
            let r = draw(r_len);
            (h, r)
        })
        .collect()
}

fn count(haystack: &[String], needle: &[String]) -> usize {
    if needle.len() > haystack.len() {
        return 0;
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()] == *needle)
        .count()
}

/// Corpus BLEU with exponential smoothing over pre-tokenized pairs.
pub fn oracle_bleu(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let mut matches = [0f64; 4];
    let mut totals = [0f64; 4];
    let (mut c, mut r) = (0f64, 0f64);
    for (h, rf) in pairs {
        c += h.len() as f64;
        r += rf.len() as f64;
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let mut distinct: Vec<&[String]> = Vec::new();
            for i in 0..=h.len() - n {
                let g = &h[i..i + n];
                totals[n - 1] += 1.0;
                if !distinct.contains(&g) {
                    distinct.push(g);
                }
            }
            for g in distinct {
                matches[n - 1] += count(h, g).min(count(rf, g)) as f64;
            }
        }
    }
    if c == 0.0 || matches[0] == 0.0 {
        return 0.0;
    }
    let mut logs = Vec::new();
    let mut k = 0i32;
    for n in 0..4 {
        if totals[n] == 0.0 {
            break;
        }
        let p = if matches[n] > 0.0 {
            matches[n] / totals[n]
        } else {
            k += 1;
            1.0 / (2f64.powi(k) * totals[n])
        };
        logs.push(p.ln());
    }
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    100.0 * bp * (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Segment chrF with β = 2 and character orders 1..=6.
pub fn oracle_chrf(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    let grams = |s: &[char], n: usize| -> Vec<Vec<char>> {
        if s.len() < n {
            Vec::new()
        } else {
            (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
        }
    };
    let mut fs = Vec::new();
    for n in 1..=6 {
        let hg = grams(&h, n);
        let rg = grams(&r, n);
        if hg.is_empty() || rg.is_empty() {
            continue;
        }
        let mut pool = rg.clone();
        let mut m = 0.0;
        for g in &hg {
            if let Some(pos) = pool.iter().position(|x| x == g) {
                pool.swap_remove(pos);
                m += 1.0;
            }
        }
        let p = m / hg.len() as f64;
        let rc = m / rg.len() as f64;
        fs.push(if p + rc == 0.0 { 0.0 } else { 5.0 * p * rc / (4.0 * p + rc) });
    }
    if fs.is_empty() {
        return 0.0;
    }
    100.0 * fs.iter().sum::<f64>() / fs.len() as f64
}

/// Full-matrix Levenshtein distance over tokens.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Every sequence reachable by moving one block of at most `max_len` tokens
/// by at most `max_dist` positions, with its (start, len, dest) key.
fn all_shifts(seq: &[String], max_len: usize, max_dist: usize) -> Vec<((usize, usize, usize), Vec<String>)> {
    let n = seq.len();
    let mut out = Vec::new();
    for len in 1..=max_len.min(n) {
        for start in 0..=n - len {
            let block = &seq[start..start + len];
            let mut rest = seq[..start].to_vec();
            rest.extend_from_slice(&seq[start + len..]);
            for dest in 0..=rest.len() {
                if dest == start || dest.abs_diff(start) > max_dist {
                    continue;
                }
                let mut moved = rest[..dest].to_vec();
                moved.extend_from_slice(block);
                moved.extend_from_slice(&rest[dest..]);
                if moved != seq {
                    out.push(((start, len, dest), moved));
                }
            }
        }
    }
    out
}

fn occurs_in(reference: &[String], block: &[String]) -> bool {
    count(reference, block) > 0
}

/// TER edits by the greedy shift procedure, scanning every candidate shift
/// at every step without pruning.
pub fn oracle_ter_edits(hyp: &[String], reference: &[String]) -> usize {
    let mut cur = hyp.to_vec();
    let mut shifts = 0;
    loop {
        let base = edit_distance(&cur, reference);
        let mut best: Option<(usize, usize, std::cmp::Reverse<usize>, std::cmp::Reverse<usize>, Vec<String>)> = None;
        for ((start, len, dest), moved) in all_shifts(&cur, 10, 50) {
            if !occurs_in(reference, &cur[start..start + len]) {
                continue;
            }
            let ed = edit_distance(&moved, reference);
            if ed >= base {
                continue;
            }
            let key = (base - ed, len, std::cmp::Reverse(start), std::cmp::Reverse(dest), moved);
            if best.as_ref().is_none_or(|b| (key.0, key.1, key.2, key.3) > (b.0, b.1, b.2, b.3)) {
                best = Some(key);
            }
        }
        match best {
            Some(b) => {
                cur = b.4;
                shifts += 1;
            }
            None => return shifts + edit_distance(&cur, reference),
        }
    }
}

/// Minimum over all shift sequences (unrestricted blocks) of
/// `shifts + Levenshtein`; a lower bound for any shift heuristic.
pub fn exhaustive_min_edits(hyp: &[String], reference: &[String]) -> usize {
    let mut best = edit_distance(hyp, reference);
    let mut seen: HashSet<Vec<String>> = HashSet::from([hyp.to_vec()]);
    let mut queue = VecDeque::from([(hyp.to_vec(), 0usize)]);
    while let Some((seq, depth)) = queue.pop_front() {
        best = best.min(depth + edit_distance(&seq, reference));
        if depth + 1 >= best {
            continue;
        }
        for (_, moved) in all_shifts(&seq, seq.len(), seq.len()) {
            if seen.insert(moved.clone()) {
                queue.push_back((moved, depth + 1));
            }
        }
    }
    best
}

pub fn join(tokens: &[String]) -> String {
    tokens.join(" ")
}
