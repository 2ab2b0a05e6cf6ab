//! Seeded synthetic rating data with a tunable age/popularity bias and a
//! known latent quality per item.
//!
//! Items arrive uniformly over the horizon with quality `q ~ Beta(α, β_q)`.
//! Users arrive over the same horizon with density growing like `t^g`
//! (`g = user_growth`, uniform by default) and, on arrival, rate a
//! Poisson-sized set of distinct items already released. With
//! `release_seed`, items released since the previous user are rated first;
//! every other pick is drawn with probability proportional to
//!
//! ```text
//! (1 + ln(1 + degree))^popularity_bias · q
//! ```
//!
//! so `popularity_bias = 0` is quality-only attachment and larger values add
//! rich-get-richer on top of the exposure advantage older items already
//! have. Ratings are `clamp(round(1 + 4q + noise), 1, 5)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::truth::{GroundTruth, TruthItem};
use crate::catalog::{year_of, ReleaseMetadata};
use crate::error::{Error, Result};
use crate::graph::SECONDS_PER_YEAR;
use crate::interactions::Interaction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub items: usize,
    pub users: usize,
    /// Mean number of ratings per user (at least one each).
    pub edges_per_user: f64,
    pub quality_alpha: f64,
    pub quality_beta: f64,
    /// Strength of preferential attachment; 0 disables it.
    pub popularity_bias: f64,
    /// User arrival density grows like `t^user_growth` over the horizon.
    pub user_growth: f64,
    pub horizon_years: f64,
    /// Instant at which the horizon starts.
    pub start: i64,
    pub rating_noise: f64,
    /// Each newly released item is rated by the next arriving user, so every
    /// item ends up in the graph.
    pub release_seed: bool,
    /// Share of items planted as ground truth.
    pub truth_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            items: 4000,
            users: 20000,
            edges_per_user: 10.0,
            quality_alpha: 1.0,
            quality_beta: 1.0,
            popularity_bias: 2.0,
            user_growth: 0.0,
            horizon_years: 20.0,
            start: 946_684_800,
            rating_noise: 0.5,
            release_seed: true,
            truth_fraction: 0.01,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.items == 0 || self.users == 0 {
            return bad("item and user counts must be positive".into());
        }
        if !(self.edges_per_user >= 1.0) || self.edges_per_user > self.items as f64 {
            return bad(format!(
                "infeasible edge budget: {} ratings per user over {} items",
                self.edges_per_user, self.items
            ));
        }
        if !(self.quality_alpha > 0.0 && self.quality_beta > 0.0) {
            return bad("quality distribution parameters must be positive".into());
        }
        if !(self.popularity_bias >= 0.0) || !(self.user_growth >= 0.0) {
            return bad("popularity bias and user growth must be >= 0".into());
        }
        if !(self.horizon_years > 0.0) || !(self.rating_noise >= 0.0) {
            return bad("horizon must be positive and noise non-negative".into());
        }
        if !(self.truth_fraction > 0.0 && self.truth_fraction <= 1.0) {
            return bad(format!("truth fraction must be in (0,1], got {}", self.truth_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthItem {
    pub id: String,
    pub release: i64,
    pub quality: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Every generated item in arrival order, rated or not.
    pub items: Vec<SynthItem>,
    pub interactions: Vec<Interaction>,
    pub metadata: ReleaseMetadata,
    /// Highest-quality items, the same number from each tenth of the
    /// timeline, with award year = release year + 1.
    pub truth: GroundTruth,
}

/// Fenwick tree over non-negative weights with prefix-sum sampling.
struct WeightTree {
    tree: Vec<f64>,
    leaf: Vec<f64>,
    updates: usize,
}

impl WeightTree {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0.0; n + 1],
            leaf: vec![0.0; n],
            updates: 0,
        }
    }

    fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.leaf[i];
        self.leaf[i] = w;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
        self.updates += 1;
        if self.updates.is_multiple_of(65_536) {
            self.rebuild();
        }
    }

    // Clears accumulated rounding drift.
    fn rebuild(&mut self) {
        let n = self.leaf.len();
        self.tree.iter_mut().for_each(|t| *t = 0.0);
        for i in 0..n {
            let k = i + 1;
            self.tree[k] += self.leaf[i];
            let parent = k + (k & k.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[k];
            }
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.leaf.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.leaf.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Option<usize> {
        for _ in 0..8 {
            let total = self.total();
            if !(total > 0.0) {
                return None;
            }
            let i = self.find(rng.random::<f64>() * total);
            if self.leaf[i] > 0.0 {
                return Some(i);
            }
        }
        // Rounding left the tree pointing at a zero leaf; fall back to a scan.
        let total: f64 = self.leaf.iter().sum();
        let mut target = rng.random::<f64>() * total;
        for (i, w) in self.leaf.iter().enumerate() {
            if *w > 0.0 {
                if target < *w {
                    return Some(i);
                }
                target -= w;
            }
        }
        self.leaf.iter().rposition(|w| *w > 0.0)
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let horizon = cfg.horizon_years * SECONDS_PER_YEAR;
    let instant = |frac: f64| cfg.start + (frac * horizon).floor() as i64;

    let mut arrival: Vec<f64> = (0..cfg.items).map(|_| rng.random::<f64>()).collect();
    arrival.sort_by(f64::total_cmp);
    let beta = Beta::new(cfg.quality_alpha, cfg.quality_beta)
        .map_err(|e| Error::InvalidParameter(format!("quality distribution: {e}")))?;
    let quality: Vec<f64> = (0..cfg.items).map(|_| beta.sample(&mut rng)).collect();
    let mut labels: Vec<usize> = (0..cfg.items).collect();
    labels.shuffle(&mut rng);
    let items: Vec<SynthItem> = (0..cfg.items)
        .map(|k| SynthItem {
            id: format!("i{:06}", labels[k]),
            release: instant(arrival[k]),
            quality: quality[k],
        })
        .collect();

    let growth = 1.0 / (1.0 + cfg.user_growth);
    let mut user_arrival: Vec<f64> = (0..cfg.users).map(|_| rng.random::<f64>().powf(growth)).collect();
    user_arrival.sort_by(f64::total_cmp);

    let extra = Poisson::new(cfg.edges_per_user - 1.0).ok();
    let noise =
        Normal::new(0.0, cfg.rating_noise).map_err(|e| Error::InvalidParameter(format!("rating noise: {e}")))?;
    let kernel = |degree: u32, q: f64| (1.0 + (degree as f64).ln_1p()).powf(cfg.popularity_bias) * q;

    let mut tree = WeightTree::new(cfg.items);
    let mut degree = vec![0u32; cfg.items];
    let mut released = 0usize;
    let mut picked = Vec::new();
    let mut interactions = Vec::with_capacity((cfg.users as f64 * cfg.edges_per_user) as usize);

    for (u, &t) in user_arrival.iter().enumerate() {
        picked.clear();
        while released < cfg.items && arrival[released] <= t {
            tree.set(released, kernel(0, quality[released]));
            if cfg.release_seed {
                tree.set(released, 0.0);
                picked.push(released);
            }
            released += 1;
        }
        let wanted = 1 + extra.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        let count = wanted.min(released).saturating_sub(picked.len());
        for _ in 0..count {
            let Some(a) = tree.sample(&mut rng) else { break };
            tree.set(a, 0.0);
            picked.push(a);
        }
        let user = format!("u{u:07}");
        let timestamp = instant(t);
        for &a in &picked {
            degree[a] += 1;
            tree.set(a, kernel(degree[a], quality[a]));
            let raw = 1.0 + 4.0 * quality[a] + noise.sample(&mut rng);
            let rating = raw.round().clamp(1.0, 5.0);
            interactions.push(Interaction::new(user.clone(), items[a].id.clone(), rating, timestamp));
        }
    }

    let metadata = items.iter().map(|it| (it.id.clone(), it.release)).collect();
    let truth = planted_truth(&items, cfg.truth_fraction);
    Ok(SyntheticData {
        items,
        interactions,
        metadata,
        truth,
    })
}

fn planted_truth(items: &[SynthItem], fraction: f64) -> GroundTruth {
    let n = items.len();
    let total = ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut chosen = Vec::with_capacity(total);
    for decile in 0..10 {
        let quota = total / 10 + usize::from(decile < total % 10);
        let lo = decile * n / 10;
        let hi = (decile + 1) * n / 10;
        let mut slice: Vec<&SynthItem> = items[lo..hi].iter().collect();
        slice.sort_by(|a, b| b.quality.total_cmp(&a.quality).then_with(|| a.id.cmp(&b.id)));
        chosen.extend(slice.into_iter().take(quota).map(|it| TruthItem {
            id: it.id.clone(),
            award_year: Some(year_of(it.release) + 1),
        }));
    }
    GroundTruth::new("planted-quality", chosen)
}
