use serde::{Deserialize, Serialize};

use super::report::{EvalReport, MetricSet, MetricValue, RunInfo, SkippedYear, YearRecall, YearRecallTable};
use super::truth::{GroundTruth, ResolvedTruth};
use crate::catalog::{parse_instant, ItemCatalog};
use crate::error::{Error, Result};
use crate::graph::{build_graph, RatingGraph, WeightingMode};
use crate::interactions::filter_min_degree;
use crate::metrics::{self, imbalance, top_list, ImbalanceConfig, RankedList};
use crate::ranking::{Ranker, ScoreVector};
use crate::rebalance::{assign_windows, rebalance_scores, RebalanceConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub dataset: String,
    pub ranker: Ranker,
    pub rebalance: Option<RebalanceConfig>,
    pub imbalance: ImbalanceConfig,
    /// NDCG cut-off; defaults to the top-list size.
    pub ndcg_depth: Option<usize>,
}

impl EvalConfig {
    pub fn new(dataset: impl Into<String>, ranker: Ranker) -> Self {
        Self {
            dataset: dataset.into(),
            ranker,
            rebalance: None,
            imbalance: ImbalanceConfig::default(),
            ndcg_depth: None,
        }
    }
}

/// Ranks, optionally rebalances, and orders the items. Rebalanced ties are
/// settled by the raw score.
pub fn ranked_list(
    catalog: &ItemCatalog,
    raw: &ScoreVector,
    rebalance: Option<&RebalanceConfig>,
) -> Result<(RankedList, ScoreVector)> {
    match rebalance {
        None => Ok((RankedList::from_scores(&raw.items, catalog.ids())?, raw.clone())),
        Some(cfg) => {
            let windows = assign_windows(catalog, cfg.window)?;
            let rb = rebalance_scores(raw, &windows, cfg)?;
            let list = RankedList::from_scores_with_tiebreak(&rb.items, &raw.items, catalog.ids())?;
            Ok((list, rb))
        }
    }
}

/// Runs ranker → optional rebalance → every metric.
pub fn evaluate(
    graph: &RatingGraph,
    catalog: &ItemCatalog,
    truth: &GroundTruth,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    catalog.check_matches(graph)?;
    let raw = cfg.ranker.rank(graph)?;
    evaluate_scores(graph, catalog, truth, cfg, &raw)
}

/// Like [`evaluate`], reusing already computed raw scores.
pub fn evaluate_scores(
    graph: &RatingGraph,
    catalog: &ItemCatalog,
    truth: &GroundTruth,
    cfg: &EvalConfig,
    raw: &ScoreVector,
) -> Result<EvalReport> {
    catalog.check_matches(graph)?;
    let resolved = truth.resolve(catalog)?;
    let (list, _) = ranked_list(catalog, raw, cfg.rebalance.as_ref())?;
    let top_fraction = cfg.imbalance.top_fraction;
    let top = top_list(&list, top_fraction)?;
    let depth = cfg.ndcg_depth.unwrap_or(top.len().max(1));
    let (precision, recall) = match metrics::precision_recall(top, &resolved.items) {
        Ok((p, r)) => (MetricValue::Value(p), MetricValue::Value(r)),
        Err(e) => (
            MetricValue::NotApplicable(e.to_string()),
            MetricValue::NotApplicable(e.to_string()),
        ),
    };
    let imb = imbalance(&list, catalog, &cfg.imbalance);
    let group_counts = imb.as_ref().ok().map(|i| i.counts.clone());
    let metrics = MetricSet {
        precision,
        recall,
        auc: MetricValue::from_result(metrics::auc(&list, &resolved.items)),
        ndcg: MetricValue::from_result(metrics::ndcg(&list, &resolved.items, depth)),
        imbalance: MetricValue::from_result(imb.map(|i| i.value)),
    };
    Ok(EvalReport {
        dataset: cfg.dataset.clone(),
        truth_label: truth.label.clone(),
        algorithm: cfg.ranker.algorithm,
        weighting: graph.weighting(),
        rebalance: cfg.rebalance,
        top_fraction,
        groups: cfg.imbalance.groups,
        ndcg_depth: depth,
        items: catalog.len(),
        top_size: top.len(),
        truth_size: resolved.items.len(),
        truth_dropped: resolved.dropped,
        metrics,
        group_counts,
        per_year_recall: None,
        run: RunInfo::new(&cfg.ranker, raw),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearRecallConfig {
    pub ranker: Ranker,
    pub rebalance: Option<RebalanceConfig>,
    pub top_fraction: f64,
    /// Min-degree thresholds re-applied to every snapshot.
    pub min_user: usize,
    pub min_item: usize,
}

/// Last second (UTC) of the year before `year`: the latest moment an item
/// can enter the network to compete for an award given in `year`.
pub fn award_cutoff(year: i32) -> Result<i64> {
    parse_instant(&format!("{year:04}-01-01")).map(|t| t - 1)
}

/// Recall per award year, each computed on a snapshot holding only the
/// interactions up to that year's cutoff.
///
/// Time-decay graphs are rebuilt with the cutoff as the decay reference
/// instant. Ground-truth items missing from a snapshot do not count.
pub fn recall_by_year(
    graph: &RatingGraph,
    catalog: &ItemCatalog,
    truth: &GroundTruth,
    cfg: &YearRecallConfig,
) -> Result<YearRecallTable> {
    catalog.check_matches(graph)?;
    if !truth.has_award_years() {
        return Err(Error::InvalidInput("ground truth has no award years".into()));
    }
    let mut all = graph.interactions();
    all.sort_by_key(|i| i.timestamp);
    let mut table = YearRecallTable::default();
    for year in truth.award_years() {
        let cutoff = award_cutoff(year)?;
        let end = all.partition_point(|i| i.timestamp <= cutoff);
        let edges = filter_min_degree(all[..end].to_vec(), cfg.min_user, cfg.min_item);
        if edges.is_empty() {
            table.skipped.push(SkippedYear {
                year,
                reason: "snapshot is empty".into(),
            });
            continue;
        }
        let weighting = match graph.weighting() {
            WeightingMode::Rating => WeightingMode::Rating,
            WeightingMode::TimeDecay { delta, rate, .. } => WeightingMode::TimeDecay {
                delta,
                rate,
                now: cutoff,
            },
        };
        let snapshot = build_graph(&edges, weighting)?;
        let snap_catalog = catalog.reindex(&snapshot)?;
        let ResolvedTruth { items: year_truth, .. } =
            truth.resolve_where(&snap_catalog, |t| t.award_year == Some(year));
        if year_truth.is_empty() {
            table.skipped.push(SkippedYear {
                year,
                reason: "no truth items for this year in the snapshot".into(),
            });
            continue;
        }
        let raw = cfg.ranker.rank(&snapshot)?;
        let recall = |rb: Option<&RebalanceConfig>| -> Result<f64> {
            let (list, _) = ranked_list(&snap_catalog, &raw, rb)?;
            let top = top_list(&list, cfg.top_fraction)?;
            Ok(metrics::precision_recall(top, &year_truth)?.1)
        };
        table.rows.push(YearRecall {
            year,
            truth_items: year_truth.len(),
            snapshot_items: snapshot.item_count(),
            recall_raw: recall(None)?,
            recall_rebalanced: cfg.rebalance.as_ref().map(|r| recall(Some(r))).transpose()?,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta_p: usize,
    pub raw_imbalance: f64,
    pub rebalanced_imbalance: f64,
    /// Rebalanced over raw imbalance; undefined when the raw ranking is
    /// exactly balanced.
    pub relative_imbalance: Option<f64>,
}

/// Imbalance of the rebalanced ranking for each window size, relative to the
/// raw ranking. The ranker runs once; every point reuses its scores.
pub fn sweep_window(
    graph: &RatingGraph,
    catalog: &ItemCatalog,
    ranker: &Ranker,
    windows: &[usize],
    imbalance_cfg: &ImbalanceConfig,
) -> Result<Vec<SweepPoint>> {
    catalog.check_matches(graph)?;
    let raw = ranker.rank(graph)?;
    sweep_window_scores(catalog, &raw, windows, imbalance_cfg)
}

/// [`sweep_window`] over precomputed raw scores.
pub fn sweep_window_scores(
    catalog: &ItemCatalog,
    raw: &ScoreVector,
    windows: &[usize],
    imbalance_cfg: &ImbalanceConfig,
) -> Result<Vec<SweepPoint>> {
    for &w in windows {
        RebalanceConfig::with_window(w).validate()?;
    }
    let raw_list = RankedList::from_scores(&raw.items, catalog.ids())?;
    let raw_imbalance = imbalance(&raw_list, catalog, imbalance_cfg)?.value;
    windows
        .iter()
        .map(|&w| {
            let (list, _) = ranked_list(catalog, raw, Some(&RebalanceConfig::with_window(w)))?;
            let rebalanced = imbalance(&list, catalog, imbalance_cfg)?.value;
            Ok(SweepPoint {
                delta_p: w,
                raw_imbalance,
                rebalanced_imbalance: rebalanced,
                relative_imbalance: (raw_imbalance > 0.0).then(|| rebalanced / raw_imbalance),
            })
        })
        .collect()
}
