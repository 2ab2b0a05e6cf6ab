//! Time rebalancing: each item's score is standardized against the items
//! released closest to it in time.
//!
//! Items are sorted by release (ties by id). The window of the item at sorted
//! position `k` is positions `k − Δp/2 ..= k + Δp/2`; near either end of the
//! timeline the window is shifted inwards so that it still holds `Δp + 1`
//! items (or the whole catalog when it is smaller). The rebalanced score is
//! the z-score `(F − mean) / std` over the window, with population standard
//! deviation.

use serde::{Deserialize, Serialize};

use crate::catalog::ItemCatalog;
use crate::error::{Error, Result};
use crate::ranking::ScoreVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebalanceConfig {
    /// Δp: number of neighbours in the window (the item itself not counted).
    pub window: usize,
    /// Score assigned when every score in the window is identical.
    pub fallback: f64,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        Self {
            window: 100,
            fallback: 0.0,
        }
    }
}

impl RebalanceConfig {
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window size must be an even integer >= 2, got {}",
                self.window
            )));
        }
        if !self.fallback.is_finite() {
            return Err(Error::InvalidParameter("fallback score must be finite".into()));
        }
        Ok(())
    }
}

/// Window statistics for one item.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindow {
    pub members: Vec<u32>,
    pub mean: f64,
    pub std: f64,
}

/// Window assignment for every item of a catalog. Windows are contiguous runs
/// of the catalog's time order, stored as `(first, last)` positions.
#[derive(Debug, Clone)]
pub struct WindowMap {
    ids: Vec<String>,
    order: Vec<u32>,
    bounds: Vec<(u32, u32)>,
    window: usize,
}

pub fn assign_windows(catalog: &ItemCatalog, window: usize) -> Result<WindowMap> {
    RebalanceConfig::with_window(window).validate()?;
    let n = catalog.len();
    let half = window / 2;
    let mut bounds = vec![(0u32, 0u32); n];
    for a in 0..n {
        bounds[a] = window_bounds(catalog.position(a), n, half);
    }
    Ok(WindowMap {
        ids: catalog.ids().to_vec(),
        order: catalog.order().to_vec(),
        bounds,
        window,
    })
}

fn window_bounds(k: usize, n: usize, half: usize) -> (u32, u32) {
    let span = 2 * half;
    let (lo, hi) = if n <= span + 1 {
        (0, n - 1)
    } else if k < half {
        (0, span)
    } else if k + half > n - 1 {
        (n - 1 - span, n - 1)
    } else {
        (k - half, k + half)
    };
    (lo as u32, hi as u32)
}

impl WindowMap {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.window
    }

    /// Item indices in the window of `item`, oldest first.
    pub fn members(&self, item: usize) -> &[u32] {
        let (lo, hi) = self.bounds[item];
        &self.order[lo as usize..=hi as usize]
    }

    /// First and last time-order positions of the window of `item`.
    pub fn positions(&self, item: usize) -> (usize, usize) {
        let (lo, hi) = self.bounds[item];
        (lo as usize, hi as usize)
    }

    pub fn window(&self, item: usize, scores: &[f64]) -> TimeWindow {
        let members = self.members(item);
        let (mean, std) = mean_std(members.iter().map(|&m| scores[m as usize]), members.len());
        TimeWindow {
            members: members.to_vec(),
            mean,
            std,
        }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Replaces item scores by their window z-scores; user scores pass through.
pub fn rebalance_scores(scores: &ScoreVector, windows: &WindowMap, cfg: &RebalanceConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    let n = scores.items.len();
    if n > windows.len() {
        return Err(Error::MissingWindow(format!("#{}", windows.len())));
    }
    if n < windows.len() {
        return Err(Error::InvalidInput(format!(
            "score vector has {n} items but the windows cover {} (first unscored: '{}')",
            windows.len(),
            windows.ids[n]
        )));
    }
    let raw = &scores.items;
    let mut items = vec![0.0; n];
    for (a, out) in items.iter_mut().enumerate() {
        let members = windows.members(a);
        let first = raw[members[0] as usize];
        if members.iter().all(|&m| raw[m as usize] == first) {
            *out = cfg.fallback;
            continue;
        }
        let (mean, std) = mean_std(members.iter().map(|&m| raw[m as usize]), members.len());
        *out = if std > 0.0 { (raw[a] - mean) / std } else { cfg.fallback };
    }
    Ok(ScoreVector {
        items,
        users: scores.users.clone(),
        iterations: scores.iterations,
        converged: scores.converged,
        components: scores.components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(n: usize) -> ItemCatalog {
        // Release order deliberately differs from index order.
        let ids: Vec<String> = (0..n).map(|k| format!("item{k:02}")).collect();
        let release: Vec<i64> = (0..n).map(|k| ((n - k) * 10) as i64).collect();
        ItemCatalog::from_releases(ids, release).unwrap()
    }

    fn positions_of(map: &WindowMap, cat: &ItemCatalog, pos: usize) -> Vec<usize> {
        let item = cat.order()[pos] as usize;
        map.members(item).iter().map(|&m| cat.position(m as usize)).collect()
    }

    #[test]
    fn interior_window() {
        let cat = catalog(5);
        let map = assign_windows(&cat, 2).unwrap();
        assert_eq!(positions_of(&map, &cat, 2), vec![1, 2, 3]);
    }

    #[test]
    fn oldest_item_window_anchored_at_start() {
        let cat = catalog(5);
        let map = assign_windows(&cat, 2).unwrap();
        assert_eq!(positions_of(&map, &cat, 0), vec![0, 1, 2]);
        assert_eq!(positions_of(&map, &cat, 4), vec![2, 3, 4]);
    }

    #[test]
    fn small_catalog_window_is_everything() {
        let cat = catalog(3);
        let map = assign_windows(&cat, 100).unwrap();
        for a in 0..3 {
            assert_eq!(map.members(a).len(), 3);
        }
    }

    #[test]
    fn singleton_catalog() {
        let cat = catalog(1);
        let map = assign_windows(&cat, 2).unwrap();
        let s = ScoreVector {
            items: vec![7.0],
            users: vec![],
            iterations: 1,
            converged: true,
            components: 1,
        };
        let out = rebalance_scores(&s, &map, &RebalanceConfig::with_window(2)).unwrap();
        assert_eq!(out.items, vec![0.0]);
    }

    #[test]
    fn window_sizes_are_delta_plus_one() {
        let cat = catalog(20);
        let map = assign_windows(&cat, 6).unwrap();
        for a in 0..20 {
            assert_eq!(map.members(a).len(), 7);
            assert!(map.members(a).contains(&(a as u32)));
        }
    }

    #[test]
    fn invalid_window_sizes() {
        assert!(assign_windows(&catalog(5), 3).is_err());
        assert!(assign_windows(&catalog(5), 0).is_err());
    }

    fn vector(items: Vec<f64>) -> ScoreVector {
        ScoreVector {
            items,
            users: vec![1.0],
            iterations: 3,
            converged: true,
            components: 1,
        }
    }

    #[test]
    fn z_score_of_window() {
        // Release order equals index order here.
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let cat = ItemCatalog::from_releases(ids, vec![1, 2, 3]).unwrap();
        let map = assign_windows(&cat, 2).unwrap();
        let out = rebalance_scores(&vector(vec![1.0, 2.0, 3.0]), &map, &RebalanceConfig::with_window(2)).unwrap();
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((out.items[2] - expect).abs() < 1e-12);
        assert!(out.items[1].abs() < 1e-15);
        assert_eq!(out.users, vec![1.0]);
        let w = map.window(2, &[1.0, 2.0, 3.0]);
        assert_eq!(w.mean, 2.0);
    }

    #[test]
    fn constant_window_gets_fallback() {
        let cat = catalog(3);
        let map = assign_windows(&cat, 2).unwrap();
        let cfg = RebalanceConfig {
            window: 2,
            fallback: -1.5,
        };
        let out = rebalance_scores(&vector(vec![0.1, 0.1, 0.1]), &map, &cfg).unwrap();
        assert_eq!(out.items, vec![-1.5; 3]);
    }

    #[test]
    fn missing_item_is_named() {
        let cat = catalog(3);
        let map = assign_windows(&cat, 2).unwrap();
        match rebalance_scores(
            &vector(vec![1.0, 2.0, 3.0, 4.0]),
            &map,
            &RebalanceConfig::with_window(2),
        ) {
            Err(Error::MissingWindow(id)) => assert_eq!(id, "#3"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(rebalance_scores(&vector(vec![1.0, 2.0]), &map, &RebalanceConfig::with_window(2)).is_err());
    }
}
