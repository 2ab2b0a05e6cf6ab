//! Immutable weighted bipartite user–item graph in compressed sparse form.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::Interaction;

/// Length of the year used by the time-decay exponent (365.25 days).
pub const SECONDS_PER_YEAR: f64 = 31_557_600.0;

/// How an interaction becomes an edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightingMode {
    /// The rating itself.
    Rating,
    /// `delta ^ (rate * (now - t) / year)`: recent ratings weigh more.
    TimeDecay {
        delta: f64,
        /// Decay rate in inverse years.
        rate: f64,
        /// Reference instant, seconds since epoch.
        now: i64,
    },
}

impl WeightingMode {
    pub fn time_decay(delta: f64, rate: f64, now: i64) -> Result<Self> {
        let mode = WeightingMode::TimeDecay { delta, rate, now };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightingMode::TimeDecay { delta, rate, .. } = *self {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "decay delta must be in (0,1), got {delta}"
                )));
            }
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParameter(format!("decay rate must be > 0, got {rate}")));
            }
        }
        Ok(())
    }

    pub fn weight(&self, rating: f64, timestamp: i64) -> f64 {
        match *self {
            WeightingMode::Rating => rating,
            WeightingMode::TimeDecay { delta, rate, now } => {
                let age_years = (now - timestamp) as f64 / SECONDS_PER_YEAR;
                delta.powf(rate * age_years)
            }
        }
    }

    pub fn is_time_decay(&self) -> bool {
        matches!(self, WeightingMode::TimeDecay { .. })
    }
}

/// Edge as seen from one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Dense index of the node on the other side.
    pub node: u32,
    pub rating: f64,
    pub timestamp: i64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    edges: Vec<Edge>,
}

impl Csr {
    fn row(&self, n: usize) -> &[Edge] {
        &self.edges[self.offsets[n]..self.offsets[n + 1]]
    }
}

/// Bipartite rating graph. Users and items get dense ids `0..n` in ascending
/// order of their string ids, so the layout does not depend on input order.
#[derive(Debug, Clone)]
pub struct RatingGraph {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    item_lookup: HashMap<String, u32>,
    by_user: Csr,
    by_item: Csr,
    user_degree: Vec<f64>,
    item_degree: Vec<f64>,
    weighting: WeightingMode,
    user_component: Vec<u32>,
    item_component: Vec<u32>,
    component_weight: Vec<f64>,
    future_edges: usize,
}

fn dense_ids<'a>(keys: impl Iterator<Item = &'a str>) -> (Vec<String>, HashMap<&'a str, u32>) {
    let mut ids: Vec<&str> = keys.collect();
    ids.sort_unstable();
    ids.dedup();
    let lookup = ids.iter().enumerate().map(|(k, s)| (*s, k as u32)).collect();
    (ids.into_iter().map(str::to_owned).collect(), lookup)
}

fn csr(n: usize, pairs: &[(u32, Edge)]) -> Csr {
    let mut offsets = vec![0usize; n + 1];
    for (src, _) in pairs {
        offsets[*src as usize + 1] += 1;
    }
    for k in 0..n {
        offsets[k + 1] += offsets[k];
    }
    let mut cursor = offsets.clone();
    let mut edges = vec![
        Edge {
            node: 0,
            rating: 0.0,
            timestamp: 0,
            weight: 0.0
        };
        pairs.len()
    ];
    for (src, e) in pairs {
        let slot = &mut cursor[*src as usize];
        edges[*slot] = *e;
        *slot += 1;
    }
    for k in 0..n {
        edges[offsets[k]..offsets[k + 1]].sort_unstable_by_key(|e| e.node);
    }
    Csr { offsets, edges }
}

/// Builds the graph from duplicate-free interactions.
pub fn build_graph(interactions: &[Interaction], weighting: WeightingMode) -> Result<RatingGraph> {
    weighting.validate()?;
    let (user_ids, user_lookup) = dense_ids(interactions.iter().map(|i| i.user.as_str()));
    let (item_ids, item_lookup) = dense_ids(interactions.iter().map(|i| i.item.as_str()));

    let mut user_side = Vec::with_capacity(interactions.len());
    let mut item_side = Vec::with_capacity(interactions.len());
    let mut future_edges = 0usize;
    for it in interactions {
        let u = user_lookup[it.user.as_str()];
        let a = item_lookup[it.item.as_str()];
        if let WeightingMode::TimeDecay { now, .. } = weighting {
            if it.timestamp > now {
                future_edges += 1;
            }
        }
        let weight = weighting.weight(it.rating, it.timestamp);
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}) has invalid weight {weight}",
                it.user, it.item
            )));
        }
        let e = Edge {
            node: a,
            rating: it.rating,
            timestamp: it.timestamp,
            weight,
        };
        user_side.push((u, e));
        item_side.push((a, Edge { node: u, ..e }));
    }
    if future_edges > 0 {
        log::warn!("{future_edges} interactions are newer than the decay reference time; their weights exceed 1");
    }

    let by_user = csr(user_ids.len(), &user_side);
    let by_item = csr(item_ids.len(), &item_side);
    for (u, id) in user_ids.iter().enumerate() {
        if let Some(w) = by_user.row(u).windows(2).find(|w| w[0].node == w[1].node) {
            return Err(Error::DuplicateEdge {
                user: id.clone(),
                item: item_ids[w[0].node as usize].clone(),
            });
        }
    }

    let user_degree = (0..user_ids.len())
        .map(|u| by_user.row(u).iter().map(|e| e.weight).sum())
        .collect();
    let item_degree: Vec<f64> = (0..item_ids.len())
        .map(|a| by_item.row(a).iter().map(|e| e.weight).sum())
        .collect();

    let item_lookup = item_lookup.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    let mut g = RatingGraph {
        user_ids,
        item_ids,
        item_lookup,
        by_user,
        by_item,
        user_degree,
        item_degree,
        weighting,
        user_component: Vec::new(),
        item_component: Vec::new(),
        component_weight: Vec::new(),
        future_edges,
    };
    g.label_components();
    Ok(g)
}

impl RatingGraph {
    pub fn user_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.by_user.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn item_index(&self, id: &str) -> Option<u32> {
        self.item_lookup.get(id).copied()
    }

    /// Edges of user `u`, sorted by item index.
    pub fn user_edges(&self, u: usize) -> &[Edge] {
        self.by_user.row(u)
    }

    /// Edges of item `a`, sorted by user index.
    pub fn item_edges(&self, a: usize) -> &[Edge] {
        self.by_item.row(a)
    }

    pub fn user_degrees(&self) -> &[f64] {
        &self.user_degree
    }

    pub fn item_degrees(&self) -> &[f64] {
        &self.item_degree
    }

    pub fn weighting(&self) -> WeightingMode {
        self.weighting
    }

    /// Number of interactions newer than the time-decay reference instant.
    pub fn future_edge_count(&self) -> usize {
        self.future_edges
    }

    pub fn component_count(&self) -> usize {
        self.component_weight.len()
    }

    pub fn user_component(&self, u: usize) -> usize {
        self.user_component[u] as usize
    }

    pub fn item_component(&self, a: usize) -> usize {
        self.item_component[a] as usize
    }

    /// Total edge weight per connected component.
    pub fn component_weights(&self) -> &[f64] {
        &self.component_weight
    }

    pub fn total_weight(&self) -> f64 {
        self.by_user.edges.iter().map(|e| e.weight).sum()
    }

    /// Fails on the first node whose weighted degree is not positive.
    pub fn check_degrees(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let bad = |side, ids: &[String], deg: &[f64]| {
            deg.iter().position(|d| !(*d > 0.0)).map(|k| Error::IsolatedNode {
                side,
                id: ids[k].clone(),
                degree: deg[k],
            })
        };
        match bad("user", &self.user_ids, &self.user_degree).or_else(|| bad("item", &self.item_ids, &self.item_degree))
        {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Reconstructs the duplicate-free interaction list, ordered by user then item.
    pub fn interactions(&self) -> Vec<Interaction> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, uid) in self.user_ids.iter().enumerate() {
            for e in self.user_edges(u) {
                out.push(Interaction::new(
                    uid.clone(),
                    self.item_ids[e.node as usize].clone(),
                    e.rating,
                    e.timestamp,
                ));
            }
        }
        out
    }

    /// Earliest interaction timestamp of item `a`.
    pub fn first_rating_time(&self, a: usize) -> Option<i64> {
        self.item_edges(a).iter().map(|e| e.timestamp).min()
    }

    pub fn max_timestamp(&self) -> Option<i64> {
        self.by_user.edges.iter().map(|e| e.timestamp).max()
    }

    fn label_components(&mut self) {
        let nu = self.user_count();
        let ni = self.item_count();
        // Union-find over users `0..nu` and items `nu..nu+ni`.
        let mut parent: Vec<usize> = (0..nu + ni).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for u in 0..nu {
            for e in self.by_user.row(u) {
                let a = find(&mut parent, u);
                let b = find(&mut parent, nu + e.node as usize);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut label = vec![u32::MAX; nu + ni];
        let mut next = 0u32;
        let mut comp = vec![0u32; nu + ni];
        for x in 0..nu + ni {
            let r = find(&mut parent, x);
            if label[r] == u32::MAX {
                label[r] = next;
                next += 1;
            }
            comp[x] = label[r];
        }
        let mut weight = vec![0.0; next as usize];
        for u in 0..nu {
            weight[comp[u] as usize] += self.user_degree[u];
        }
        self.item_component = comp.split_off(nu);
        self.user_component = comp;
        self.component_weight = weight;
    }
}
