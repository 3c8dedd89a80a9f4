//! Paired bootstrap significance and rank correlation of system scores.

mod bootstrap;
mod correlation;

pub use bootstrap::{paired_bootstrap, paired_bootstrap_scores, paired_bootstrap_with, BootstrapConfig, SignificanceResult};
pub use correlation::{
    average_ranks, correlation_pvalue, correlation_pvalue_with, kendall_tau_b, spearman_rho, system_correlation_matrix,
    CorrelationResult, CorrelationStat, MetricCorrelation, EXACT_PERMUTATION_MAX_N, MONTE_CARLO_PERMUTATIONS,
};
