use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use luxkit::metrics::{ter, TerConfig};
use luxkit::scorer::SegmentStatistics;
use luxkit::stats::{correlation_pvalue_with, paired_bootstrap_with, BootstrapConfig, CorrelationStat};
use luxkit::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scores(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(40.0..95.0)).collect()
}

fn sentences(seed: u64, n: usize) -> Vec<String> {
    const WORDS: [&str; 10] = ["de", "Mann", "ass", "an", "d'Stad", "gaang", "mat", "sengem", "Hond", "gëschter"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(8..25);
            (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

fn bootstrap(c: &mut Criterion) {
    let a = SegmentStatistics::Mean(scores(1, 500));
    let b = SegmentStatistics::Mean(scores(2, 500));
    let cfg = BootstrapConfig::with_seed(7);
    let mut g = c.benchmark_group("paired_bootstrap_500x1000");
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| paired_bootstrap_with(&a, &b, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

fn permutation(c: &mut Criterion) {
    let x = scores(3, 9);
    let y = scores(4, 9);
    let mut g = c.benchmark_group("exact_permutation_tau_n9");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| correlation_pvalue_with(&x, &y, CorrelationStat::TauB, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn ter_stats(c: &mut Criterion) {
    let hyps = sentences(5, 200);
    let refs = sentences(6, 200);
    let cfg = TerConfig::default();
    let mut g = c.benchmark_group("ter_segment_stats_200");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |bench| {
            bench.iter(|| ter::segment_stats(&hyps, &refs, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bootstrap, permutation, ter_stats);
criterion_main!(benches);
