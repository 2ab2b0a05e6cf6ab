use super::{component_targets, iterate, normalize_by_component, random_init, ConvergenceConfig, Norm, ScoreVector};
use crate::error::{Error, Result};
use crate::graph::RatingGraph;

/// BiRank with symmetric degree normalization:
///
/// ```text
/// R_i = Σ_α w_iα / (√d_i √d_α) · F_α
/// F_α = Σ_i w_iα / (√d_α √d_i) · R_i
/// ```
///
/// Both vectors are L2-normalized after every sweep. On a graph with several
/// connected components each component is normalized on its own, to the
/// square root of its share of the total edge weight, so the result is the
/// same as ranking the components separately and concatenating.
pub fn birank(graph: &RatingGraph, cfg: &ConvergenceConfig) -> Result<ScoreVector> {
    graph.check_degrees()?;
    let inv_sqrt = |d: &[f64]| -> Vec<f64> { d.iter().map(|x| 1.0 / x.sqrt()).collect() };
    let user_scale = inv_sqrt(graph.user_degrees());
    let item_scale = inv_sqrt(graph.item_degrees());
    let targets = component_targets(graph, Norm::L2);
    let mut scaled_items = vec![0.0; graph.item_count()];
    let mut scaled_users = vec![0.0; graph.user_count()];

    let (users, items, iterations, converged) = iterate(
        "birank",
        cfg,
        random_init(cfg, graph.user_count(), graph.item_count()),
        |_, prev_items, users, items| {
            for (s, (f, k)) in scaled_items.iter_mut().zip(prev_items.iter().zip(&item_scale)) {
                *s = f * k;
            }
            for (u, r) in users.iter_mut().enumerate() {
                let acc: f64 = graph
                    .user_edges(u)
                    .iter()
                    .map(|e| e.weight * scaled_items[e.node as usize])
                    .sum();
                *r = acc * user_scale[u];
            }
            if !normalize_by_component(users, |u| graph.user_component(u), &targets, Norm::L2) {
                return false;
            }
            for (s, (r, k)) in scaled_users.iter_mut().zip(users.iter().zip(&user_scale)) {
                *s = r * k;
            }
            for (a, f) in items.iter_mut().enumerate() {
                let acc: f64 = graph
                    .item_edges(a)
                    .iter()
                    .map(|e| e.weight * scaled_users[e.node as usize])
                    .sum();
                *f = acc * item_scale[a];
            }
            normalize_by_component(items, |a| graph.item_component(a), &targets, Norm::L2)
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

/// BiRank on a graph whose edge weights are time-decayed.
pub fn birank_time(graph: &RatingGraph, cfg: &ConvergenceConfig) -> Result<ScoreVector> {
    if !graph.weighting().is_time_decay() {
        return Err(Error::InvalidParameter(
            "birank_time needs a graph built with time-decay weights".into(),
        ));
    }
    birank(graph, cfg)
}
