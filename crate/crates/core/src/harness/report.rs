use serde::{Serialize, Serializer};

use crate::graph::WeightingMode;
use crate::ranking::{Algorithm, ScoreVector};
use crate::rebalance::RebalanceConfig;

/// A metric value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Value(f64),
    NotApplicable(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::NotApplicable(_) => None,
        }
    }

    pub(crate) fn from_result(r: crate::error::Result<f64>) -> Self {
        match r {
            Ok(v) => MetricValue::Value(v),
            Err(e) => MetricValue::NotApplicable(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSet {
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub auc: MetricValue,
    pub ndcg: MetricValue,
    pub imbalance: MetricValue,
}

impl MetricSet {
    /// `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, &MetricValue); 5] {
        [
            ("precision", &self.precision),
            ("recall", &self.recall),
            ("auc", &self.auc),
            ("ndcg", &self.ndcg),
            ("imbalance", &self.imbalance),
        ]
    }
}

/// How the ranker ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub seed: u64,
    pub threshold: f64,
    pub max_iterations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub components: usize,
    /// BGRM damping; absent for the other algorithms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
}

impl RunInfo {
    pub(crate) fn new(ranker: &crate::ranking::Ranker, scores: &ScoreVector) -> Self {
        Self {
            seed: ranker.convergence.seed,
            threshold: ranker.convergence.threshold,
            max_iterations: ranker.convergence.max_iterations,
            iterations: scores.iterations,
            converged: scores.converged,
            components: scores.components,
            damping: (ranker.algorithm == Algorithm::Bgrm).then_some(ranker.damping),
        }
    }
}

fn rebalance_or_none<S: Serializer>(r: &Option<RebalanceConfig>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(cfg) => cfg.serialize(s),
        None => s.serialize_str("none"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearRecall {
    pub year: i32,
    /// Truth items awarded in `year` that are present in the snapshot.
    pub truth_items: usize,
    pub snapshot_items: usize,
    pub recall_raw: f64,
    pub recall_rebalanced: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedYear {
    pub year: i32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct YearRecallTable {
    pub rows: Vec<YearRecall>,
    pub skipped: Vec<SkippedYear>,
}

/// All metrics for one (algorithm, rebalance, L) combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub truth_label: String,
    pub algorithm: Algorithm,
    pub weighting: WeightingMode,
    #[serde(serialize_with = "rebalance_or_none")]
    pub rebalance: Option<RebalanceConfig>,
    pub top_fraction: f64,
    pub groups: usize,
    pub ndcg_depth: usize,
    pub items: usize,
    pub top_size: usize,
    pub truth_size: usize,
    pub truth_dropped: usize,
    pub metrics: MetricSet,
    /// Top-list members per time group, oldest first.
    pub group_counts: Option<Vec<usize>>,
    pub per_year_recall: Option<YearRecallTable>,
    pub run: RunInfo,
}

impl EvalReport {
    /// Display name in the `RB-<algorithm>` convention for rebalanced runs.
    pub fn method_name(&self) -> String {
        match self.rebalance {
            Some(_) => format!("RB-{}", self.algorithm),
            None => self.algorithm.to_string(),
        }
    }

    pub fn rebalance_label(&self) -> String {
        match &self.rebalance {
            Some(r) => format!("window={}", r.window),
            None => "none".into(),
        }
    }
}
