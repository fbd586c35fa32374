//! The rank-consistency and error-landscape smoothness studies.

pub mod consistency;
pub mod smoothness;
pub mod spearman;

pub use consistency::{
    consistency_experiment, corpus_fingerprint, mean_rank_correlation, row_ranking,
    shuffled_baseline, ConsistencyCell, ConsistencyConfig, ConsistencyReport,
};
pub use smoothness::{
    fit_corpus, neighbor_table, optimal_outputs, smoothness_curve, smoothness_study, Aggr1, Aggr2, Curve,
    SmoothnessConfig, SmoothnessCurves, SmoothnessError, SmoothnessReport,
};
pub use spearman::{average_ranks, spearman_of_values, spearman_rho};
