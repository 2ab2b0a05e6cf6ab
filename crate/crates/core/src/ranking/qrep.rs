use super::{ConvergenceConfig, ScoreVector};
use crate::error::{Error, Result};
use crate::graph::RatingGraph;

/// Keeps a user who agrees perfectly with every quality estimate at finite
/// reputation.
pub const QREP_EPSILON: f64 = 1e-3;

/// Quality/reputation refinement on raw ratings.
///
/// Item quality starts at the mean rating. Each sweep sets a user's
/// reputation to the inverse of their mean absolute deviation from current
/// qualities (plus [`QREP_EPSILON`]), then recomputes quality as the
/// reputation-weighted mean rating. Stops when no quality moves by
/// `threshold` or more.
///
/// Item scores stay on the rating scale; user scores are reputations
/// normalized to sum to one.
pub fn qrep(graph: &RatingGraph, cfg: &ConvergenceConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    graph.check_degrees()?;
    let mut quality: Vec<f64> = (0..graph.item_count())
        .map(|a| {
            let edges = graph.item_edges(a);
            edges.iter().map(|e| e.rating).sum::<f64>() / edges.len() as f64
        })
        .collect();
    let mut reputation = vec![0.0; graph.user_count()];
    let mut next = vec![0.0; graph.item_count()];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        for (u, rep) in reputation.iter_mut().enumerate() {
            let edges = graph.user_edges(u);
            let dev: f64 = edges
                .iter()
                .map(|e| (e.rating - quality[e.node as usize]).abs())
                .sum::<f64>()
                / edges.len() as f64;
            *rep = 1.0 / (dev + QREP_EPSILON);
        }
        let mut delta: f64 = 0.0;
        for (a, q) in next.iter_mut().enumerate() {
            let (num, den) = graph.item_edges(a).iter().fold((0.0, 0.0), |(n, d), e| {
                let r = reputation[e.node as usize];
                (n + r * e.rating, d + r)
            });
            *q = num / den;
            delta = delta.max((*q - quality[a]).abs());
        }
        if !delta.is_finite() {
            return Err(Error::NonFinite {
                algorithm: "qrep",
                iteration: iterations,
            });
        }
        std::mem::swap(&mut quality, &mut next);
        if delta < cfg.threshold {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("qrep did not converge within {} iterations", cfg.max_iterations);
    }
    let total: f64 = reputation.iter().sum();
    reputation.iter_mut().for_each(|r| *r /= total);
    Ok(ScoreVector {
        items: quality,
        users: reputation,
        iterations,
        converged,
        components: graph.component_count(),
    })
}
