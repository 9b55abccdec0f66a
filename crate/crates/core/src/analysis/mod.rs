//! Metrics over simulation logs: sentiment aggregation, polarity error,
//! rank consistency and the signed-rank test.

mod series;
mod stats;

pub use series::{
    consistency, dot_valence, group_trajectories, paired_wilcoxon, parse_plot_csv, plot_csv,
    polarity_mae, sentiment_score, AgentConsistency, ConsistencyReport, Grouping, SentimentSeries,
};
pub use stats::{
    average_ranks, spearman_rho, wilcoxon_signed_rank, TestResult, SPEARMAN_EXACT_MAX,
    WILCOXON_EXACT_MAX,
};
