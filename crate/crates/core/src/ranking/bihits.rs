use super::{component_targets, iterate, normalize_by_component, random_init, ConvergenceConfig, Norm, ScoreVector};
use crate::error::Result;
use crate::graph::RatingGraph;

/// Co-HITS style propagation through transition probabilities:
///
/// ```text
/// R_i = Σ_α (w_iα / d_α) · F_α
/// F_α = Σ_i (w_iα / d_i) · R_i
/// ```
///
/// with L1 normalization of each vector after every sweep (per connected
/// component, to the component's share of total edge weight). The fixed point
/// is the weighted degree vector.
pub fn bihits(graph: &RatingGraph, cfg: &ConvergenceConfig) -> Result<ScoreVector> {
    graph.check_degrees()?;
    let inv = |d: &[f64]| -> Vec<f64> { d.iter().map(|x| 1.0 / x).collect() };
    let user_inv = inv(graph.user_degrees());
    let item_inv = inv(graph.item_degrees());
    let targets = component_targets(graph, Norm::L1);
    let mut scaled_items = vec![0.0; graph.item_count()];
    let mut scaled_users = vec![0.0; graph.user_count()];

    let (users, items, iterations, converged) = iterate(
        "bihits",
        cfg,
        random_init(cfg, graph.user_count(), graph.item_count()),
        |_, prev_items, users, items| {
            for (s, (f, k)) in scaled_items.iter_mut().zip(prev_items.iter().zip(&item_inv)) {
                *s = f * k;
            }
            for (u, r) in users.iter_mut().enumerate() {
                *r = graph
                    .user_edges(u)
                    .iter()
                    .map(|e| e.weight * scaled_items[e.node as usize])
                    .sum();
            }
            if !normalize_by_component(users, |u| graph.user_component(u), &targets, Norm::L1) {
                return false;
            }
            for (s, (r, k)) in scaled_users.iter_mut().zip(users.iter().zip(&user_inv)) {
                *s = r * k;
            }
            for (a, f) in items.iter_mut().enumerate() {
                *f = graph
                    .item_edges(a)
                    .iter()
                    .map(|e| e.weight * scaled_users[e.node as usize])
                    .sum();
            }
            normalize_by_component(items, |a| graph.item_component(a), &targets, Norm::L1)
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
