//! Cross-validated experiments, quality criteria and rank statistics.

mod experiment;
mod metrics;
mod ranks;
mod records;
mod stats;

pub use experiment::{fit_split_models, run_experiment, ExperimentSettings, SplitModels, DEFAULT_SNR_GRID};
pub use metrics::{balanced_accuracy, balanced_accuracy_labels, cohens_kappa, micro_f1, ConfusionMatrix};
pub use ranks::{average_ranks, rank_group, rank_table, PairTest, RankRow, RankTable, SIGNIFICANCE_LEVEL};
pub use records::{to_rows, Criterion, Method, MetricRecord, ResultRow};
pub use stats::{
    average_ranks_of, exact_p, holm_correction, normal_p, wilcoxon, wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N,
};
