//! Evaluation pipeline: ground truth, metrics over raw and rebalanced
//! rankings, per-year snapshots, window sweeps and synthetic data.

mod experiment;
mod report;
mod synth;
mod truth;

pub use experiment::{
    award_cutoff, evaluate, evaluate_scores, ranked_list, recall_by_year, sweep_window, sweep_window_scores,
    EvalConfig, SweepPoint, YearRecallConfig,
};
pub use report::{EvalReport, MetricSet, MetricValue, RunInfo, SkippedYear, YearRecall, YearRecallTable};
pub use synth::{generate_synthetic, SynthConfig, SynthItem, SyntheticData};
pub use truth::{load_ground_truth, read_ground_truth, GroundTruth, ResolvedTruth, TruthItem};
