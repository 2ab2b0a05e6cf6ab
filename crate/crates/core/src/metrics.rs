//! Accuracy metrics against a ground-truth set, and the time-balance
//! (imbalance) metric.
//!
//! Item sets are dense item indices of the graph the ranking came from.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::catalog::ItemCatalog;
use crate::error::{Error, Result};

/// Items best-first. Ties in score fall back to an optional secondary key
/// (higher first), then to ascending item id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    order: Vec<u32>,
    scores: Vec<f64>,
}

impl RankedList {
    pub fn from_scores(scores: &[f64], ids: &[String]) -> Result<Self> {
        Self::build(scores, None, ids)
    }

    /// Orders by `scores`, breaking exact ties by `secondary`. Used for
    /// rebalanced scores, where the raw score settles ties.
    pub fn from_scores_with_tiebreak(scores: &[f64], secondary: &[f64], ids: &[String]) -> Result<Self> {
        if secondary.len() != scores.len() {
            return Err(Error::InvalidInput("tie-break scores differ in length".into()));
        }
        Self::build(scores, Some(secondary), ids)
    }

    fn build(scores: &[f64], secondary: Option<&[f64]>, ids: &[String]) -> Result<Self> {
        if scores.len() != ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} scores for {} items",
                scores.len(),
                ids.len()
            )));
        }
        if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite score for item '{}'", ids[k])));
        }
        let mut order: Vec<u32> = (0..scores.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| match secondary {
                    Some(s) => s[b].total_cmp(&s[a]),
                    None => std::cmp::Ordering::Equal,
                })
                .then_with(|| ids[a].cmp(&ids[b]))
        });
        Ok(Self {
            order,
            scores: scores.to_vec(),
        })
    }

    /// Item indices, best first.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Scores indexed by item.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// ⌈L·m⌉, guarded against `L·m` landing a hair above an integer.
pub fn top_count(m: usize, fraction: f64) -> usize {
    let raw = fraction * m as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(m)
}

/// The first ⌈L·m⌉ items of the ranking.
pub fn top_list(ranked: &RankedList, fraction: f64) -> Result<&[u32]> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "top fraction must be in (0,1], got {fraction}"
        )));
    }
    Ok(&ranked.order[..top_count(ranked.len(), fraction)])
}

pub fn precision_recall(top: &[u32], truth: &HashSet<u32>) -> Result<(f64, f64)> {
    if truth.is_empty() {
        return Err(Error::Undefined("recall needs a non-empty ground truth".into()));
    }
    if top.is_empty() {
        return Err(Error::Undefined("precision needs a non-empty top list".into()));
    }
    let hits = top.iter().filter(|a| truth.contains(a)).count() as f64;
    Ok((hits / top.len() as f64, hits / truth.len() as f64))
}

/// Probability that a random truth item outscores a random non-truth item,
/// ties counting one half. Computed from tie-averaged rank sums.
pub fn auc(ranked: &RankedList, truth: &HashSet<u32>) -> Result<f64> {
    let m = ranked.len();
    let pos = truth.iter().filter(|&&a| (a as usize) < m).count();
    if pos == 0 || pos == m {
        return Err(Error::Undefined(
            "AUC needs truth to be a non-empty strict subset of the items".into(),
        ));
    }
    let neg = m - pos;
    let scores = ranked.scores();
    // Ascending score order; `order` is descending.
    let asc: Vec<u32> = ranked.order.iter().rev().copied().collect();
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < m {
        let s = scores[asc[k] as usize];
        let mut end = k + 1;
        while end < m && scores[asc[end] as usize] == s {
            end += 1;
        }
        // Ranks k+1..=end share their average.
        let avg = (k + 1 + end) as f64 / 2.0;
        let in_truth = asc[k..end].iter().filter(|a| truth.contains(a)).count();
        rank_sum += avg * in_truth as f64;
        k = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Binary-relevance NDCG over the first `depth` positions.
pub fn ndcg(ranked: &RankedList, truth: &HashSet<u32>, depth: usize) -> Result<f64> {
    if depth == 0 {
        return Err(Error::InvalidParameter("NDCG depth must be >= 1".into()));
    }
    if truth.is_empty() {
        return Err(Error::Undefined("NDCG needs a non-empty ground truth".into()));
    }
    let gain = |i: usize| 1.0 / ((i + 1) as f64).log2();
    let dcg: f64 = ranked
        .order
        .iter()
        .take(depth)
        .enumerate()
        .filter(|(_, a)| truth.contains(a))
        .fold(0.0, |acc, (k, _)| acc + gain(k + 1));
    let ideal: f64 = (1..=depth.min(truth.len())).map(gain).sum();
    Ok(dcg / ideal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceConfig {
    /// S: number of equal-count time groups.
    pub groups: usize,
    /// L: fraction of the ranking counted as the top list.
    pub top_fraction: f64,
}

impl Default for ImbalanceConfig {
    fn default() -> Self {
        Self {
            groups: 40,
            top_fraction: 0.01,
        }
    }
}

impl ImbalanceConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.groups < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 groups, got {}",
                self.groups
            )));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "top fraction must be in (0,1), got {}",
                self.top_fraction
            )));
        }
        if self.groups > m {
            return Err(Error::InvalidParameter(format!(
                "{} groups for only {m} items",
                self.groups
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Imbalance {
    /// |σ/σ₀ − 1|. A perfectly even split gives 1.0, not 0: the reference is
    /// the hypergeometric spread σ₀, not zero spread.
    pub value: f64,
    /// Top-list members per time group, oldest group first.
    pub counts: Vec<usize>,
    pub sigma: f64,
    pub sigma0: f64,
    /// n⁰ = mL/S.
    pub expected: f64,
}

/// Group of time-order position `p` when `m` items are split into `s`
/// contiguous groups; the first `m mod s` groups hold one extra item.
pub fn group_of(p: usize, m: usize, s: usize) -> usize {
    let base = m / s;
    let extra = m % s;
    let big = extra * (base + 1);
    if p < big {
        p / (base + 1)
    } else {
        extra + (p - big) / base
    }
}

/// Hypergeometric standard deviation of per-group top-list counts.
pub fn sigma0(m: usize, groups: usize, top_fraction: f64) -> f64 {
    let (m, s, l) = (m as f64, groups as f64, top_fraction);
    (m * l / s * (1.0 - 1.0 / s) * (1.0 - l) * m / (m - 1.0)).sqrt()
}

pub fn imbalance(ranked: &RankedList, catalog: &ItemCatalog, cfg: &ImbalanceConfig) -> Result<Imbalance> {
    let m = ranked.len();
    if catalog.len() != m {
        return Err(Error::InvalidInput(format!(
            "catalog has {} items, ranking has {m}",
            catalog.len()
        )));
    }
    cfg.validate(m)?;
    let s0 = sigma0(m, cfg.groups, cfg.top_fraction);
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::Undefined(format!("ideal deviation σ₀ is {s0} for m={m}")));
    }
    let top = top_list(ranked, cfg.top_fraction)?;
    let mut counts = vec![0usize; cfg.groups];
    for &a in top {
        counts[group_of(catalog.position(a as usize), m, cfg.groups)] += 1;
    }
    let expected = m as f64 * cfg.top_fraction / cfg.groups as f64;
    let sigma = (counts.iter().map(|&n| (n as f64 - expected).powi(2)).sum::<f64>() / cfg.groups as f64).sqrt();
    Ok(Imbalance {
        value: (sigma / s0 - 1.0).abs(),
        counts,
        sigma,
        sigma0: s0,
        expected,
    })
}
