use super::{iterate, random_init, ConvergenceConfig, ScoreVector};
use crate::error::{Error, Result};
use crate::graph::RatingGraph;

pub const DEFAULT_DAMPING: f64 = 0.85;

/// Damped mutual reinforcement with uniform priors:
///
/// ```text
/// R = λ·P_u·F + (1−λ)·R⁰      (P_u)_iα = w_iα / d_i,  R⁰ = 1/U
/// F = λ·P_v·R + (1−λ)·F⁰      (P_v)_αi = w_iα / d_α,  F⁰ = 1/I
/// ```
///
/// The map is a contraction for λ < 1, so the fixed point is unique. Scores
/// are returned as the raw fixed point, without normalization.
pub fn bgrm(graph: &RatingGraph, cfg: &ConvergenceConfig, damping: f64) -> Result<ScoreVector> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::InvalidParameter(format!(
            "damping must be in [0,1), got {damping}"
        )));
    }
    graph.check_degrees()?;
    let user_prior = (1.0 - damping) / graph.user_count() as f64;
    let item_prior = (1.0 - damping) / graph.item_count() as f64;
    let du = graph.user_degrees();
    let di = graph.item_degrees();

    let (users, items, iterations, converged) = iterate(
        "bgrm",
        cfg,
        random_init(cfg, graph.user_count(), graph.item_count()),
        |_, prev_items, users, items| {
            for (u, r) in users.iter_mut().enumerate() {
                let acc: f64 = graph
                    .user_edges(u)
                    .iter()
                    .map(|e| e.weight * prev_items[e.node as usize])
                    .sum();
                *r = damping * acc / du[u] + user_prior;
            }
            for (a, f) in items.iter_mut().enumerate() {
                let acc: f64 = graph
                    .item_edges(a)
                    .iter()
                    .map(|e| e.weight * users[e.node as usize])
                    .sum();
                *f = damping * acc / di[a] + item_prior;
            }
            true
        },
    )?;
    Ok(ScoreVector {
        items,
        users,
        iterations,
        converged,
        components: graph.component_count(),
    })
}
