//! Iterative item/user scoring on a [`RatingGraph`].
//!
//! All rankers share one convergence loop: each sweep recomputes user scores
//! from the previous item scores and item scores from the fresh user scores,
//! and iteration stops once both vectors move less than the threshold (L2)
//! between consecutive sweeps.

mod bgrm;
mod bihits;
mod birank;
mod qrep;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RatingGraph;

pub use bgrm::{bgrm, DEFAULT_DAMPING};
pub use bihits::bihits;
pub use birank::{birank, birank_time};
pub use qrep::{qrep, QREP_EPSILON};

/// Output of a ranker, indexed by the graph's dense ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub items: Vec<f64>,
    pub users: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Connected components of the ranked graph.
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            threshold: 1e-8,
            max_iterations: 1000,
            seed: 42,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be > 0, got {}",
                self.threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "birank-r")]
    BiRankR,
    #[serde(rename = "birank-t")]
    BiRankT,
    #[serde(rename = "bihits")]
    BiHits,
    #[serde(rename = "qrep")]
    QRep,
    #[serde(rename = "bgrm")]
    Bgrm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::BiHits,
        Algorithm::BiRankR,
        Algorithm::BiRankT,
        Algorithm::QRep,
        Algorithm::Bgrm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BiRankR => "birank-r",
            Algorithm::BiRankT => "birank-t",
            Algorithm::BiHits => "bihits",
            Algorithm::QRep => "qrep",
            Algorithm::Bgrm => "bgrm",
        }
    }

    /// `Some(true)` if the graph must carry time-decay weights, `Some(false)`
    /// if it must carry rating weights, `None` if either works.
    pub fn needs_time_decay(self) -> Option<bool> {
        match self {
            Algorithm::BiRankR => Some(false),
            Algorithm::BiRankT => Some(true),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown algorithm '{s}' (expected one of birank-r, birank-t, bihits, qrep, bgrm)"
                ))
            })
    }
}

/// An algorithm together with everything needed to run it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranker {
    pub algorithm: Algorithm,
    pub convergence: ConvergenceConfig,
    /// Damping factor for BGRM; ignored by the other algorithms.
    pub damping: f64,
}

impl Ranker {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            convergence: ConvergenceConfig::default(),
            damping: DEFAULT_DAMPING,
        }
    }

    pub fn with_convergence(mut self, convergence: ConvergenceConfig) -> Self {
        self.convergence = convergence;
        self
    }

    pub fn rank(&self, graph: &RatingGraph) -> Result<ScoreVector> {
        match self.algorithm.needs_time_decay() {
            Some(true) if !graph.weighting().is_time_decay() => {
                return Err(Error::InvalidParameter(format!(
                    "{} needs a graph built with time-decay weights",
                    self.algorithm
                )))
            }
            Some(false) if graph.weighting().is_time_decay() => {
                return Err(Error::InvalidParameter(format!(
                    "{} needs a graph built with rating weights",
                    self.algorithm
                )))
            }
            _ => {}
        }
        match self.algorithm {
            Algorithm::BiRankR | Algorithm::BiRankT => birank(graph, &self.convergence),
            Algorithm::BiHits => bihits(graph, &self.convergence),
            Algorithm::QRep => qrep(graph, &self.convergence),
            Algorithm::Bgrm => bgrm(graph, &self.convergence, self.damping),
        }
    }
}

/// Uniform(0,1) starting scores (open interval, so no component starts at zero).
pub(crate) fn random_init(cfg: &ConvergenceConfig, users: usize, items: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(rand::distr::Open01)).collect() };
    let items = draw(items);
    let users = draw(users);
    (users, items)
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Norm {
    L1,
    L2,
}

/// Rescales each connected component's slice of `v` so that its norm equals
/// `target(c)`. Fails if a component has collapsed to zero.
pub(crate) fn normalize_by_component(
    v: &mut [f64],
    component_of: impl Fn(usize) -> usize,
    targets: &[f64],
    norm: Norm,
) -> bool {
    let mut acc = vec![0.0; targets.len()];
    for (k, x) in v.iter().enumerate() {
        acc[component_of(k)] += match norm {
            Norm::L1 => x.abs(),
            Norm::L2 => x * x,
        };
    }
    let scale: Vec<f64> = acc
        .iter()
        .zip(targets)
        .map(|(a, t)| {
            let n = match norm {
                Norm::L1 => *a,
                Norm::L2 => a.sqrt(),
            };
            t / n
        })
        .collect();
    if scale.iter().any(|s| !s.is_finite()) {
        return false;
    }
    for (k, x) in v.iter_mut().enumerate() {
        *x *= scale[component_of(k)];
    }
    true
}

/// Per-component norm targets: each component gets its share of the total
/// edge weight (L1) or the square root of that share (L2), so the full vector
/// has unit norm.
pub(crate) fn component_targets(graph: &RatingGraph, norm: Norm) -> Vec<f64> {
    let total: f64 = graph.component_weights().iter().sum();
    graph
        .component_weights()
        .iter()
        .map(|w| match norm {
            Norm::L1 => w / total,
            Norm::L2 => (w / total).sqrt(),
        })
        .collect()
}

/// Shared sweep loop. `sweep(prev_users, prev_items, next_users, next_items)`
/// must fill both output buffers and return `false` if it could not
/// normalize.
pub(crate) fn iterate<F>(
    algorithm: &'static str,
    cfg: &ConvergenceConfig,
    init: (Vec<f64>, Vec<f64>),
    mut sweep: F,
) -> Result<(Vec<f64>, Vec<f64>, usize, bool)>
where
    F: FnMut(&[f64], &[f64], &mut [f64], &mut [f64]) -> bool,
{
    cfg.validate()?;
    let (mut users, mut items) = init;
    let mut next_users = vec![0.0; users.len()];
    let mut next_items = vec![0.0; items.len()];
    for iteration in 1..=cfg.max_iterations {
        let ok = sweep(&users, &items, &mut next_users, &mut next_items);
        if !ok || next_users.iter().chain(&next_items).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { algorithm, iteration });
        }
        let du = l2_distance(&users, &next_users);
        let di = l2_distance(&items, &next_items);
        std::mem::swap(&mut users, &mut next_users);
        std::mem::swap(&mut items, &mut next_items);
        if du < cfg.threshold && di < cfg.threshold {
            return Ok((users, items, iteration, true));
        }
    }
    log::warn!(
        "{algorithm} did not converge within {} iterations (threshold {})",
        cfg.max_iterations,
        cfg.threshold
    );
    Ok((users, items, cfg.max_iterations, false))
}
