//! Shared fixtures and independent reference implementations for the
//! integration tests. Nothing here calls into the ranking or metric code it
//! is used to check.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbrank::graph::RatingGraph;
use tbrank::interactions::Interaction;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected bipartite graph with at most `max_nodes` nodes: a random
/// spanning tree plus extra random edges, integer ratings 1..=5 and
/// timestamps in `[0, 1000)`.
pub fn random_connected(rng: &mut ChaCha8Rng, max_nodes: usize) -> Vec<Interaction> {
    let users = rng.random_range(1..max_nodes);
    let items = rng.random_range(1..=(max_nodes - users)).max(1);
    // Nodes 0..users are users, the rest items; attach each new node to an
    // earlier node of the other side.
    let mut order: Vec<usize> = (0..users + items).collect();
    for k in (1..order.len()).rev() {
        let j = rng.random_range(0..=k);
        order.swap(k, j);
    }
    let is_user = |n: usize| n < users;
    // Make sure both sides are present before the tree grows.
    let first_user = order.iter().position(|&n| is_user(n)).unwrap();
    let first_item = order.iter().position(|&n| !is_user(n)).unwrap();
    let (a, b) = (order[first_user], order[first_item]);
    order.retain(|&n| n != a && n != b);
    let mut placed = vec![a, b];
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    edges.insert((a, b - users));
    for n in order {
        let others: Vec<usize> = placed.iter().copied().filter(|&m| is_user(m) != is_user(n)).collect();
        let m = others[rng.random_range(0..others.len())];
        let (u, i) = if is_user(n) { (n, m) } else { (m, n) };
        edges.insert((u, i - users));
        placed.push(n);
    }
    let extra = rng.random_range(0..=users * items / 2);
    for _ in 0..extra {
        edges.insert((rng.random_range(0..users), rng.random_range(0..items)));
    }
    edges
        .into_iter()
        .map(|(u, i)| {
            Interaction::new(
                format!("u{u:02}"),
                format!("i{i:02}"),
                rng.random_range(1..=5) as f64,
                rng.random_range(0..1000),
            )
        })
        .collect()
}

/// Dense weight matrix `w[user][item]` from a graph's edge lists.
pub fn dense_weights(g: &RatingGraph) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; g.item_count()]; g.user_count()];
    for (u, row) in w.iter_mut().enumerate() {
        for e in g.user_edges(u) {
            row[e.node as usize] = e.weight;
        }
    }
    w
}

fn l2_normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// BiRank item scores by plain dense power iteration on the symmetric
/// normalization `S = D_u^-1/2 W D_i^-1/2`, from a uniform start, for a
/// connected graph.
pub fn birank_oracle(w: &[Vec<f64>]) -> Vec<f64> {
    let (nu, ni) = (w.len(), w[0].len());
    let du: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let di: Vec<f64> = (0..ni).map(|i| w.iter().map(|r| r[i]).sum()).collect();
    let s: Vec<Vec<f64>> = (0..nu)
        .map(|u| (0..ni).map(|i| w[u][i] / (du[u].sqrt() * di[i].sqrt())).collect())
        .collect();
    let mut f = vec![1.0; ni];
    l2_normalize(&mut f);
    for _ in 0..100_000 {
        let mut r: Vec<f64> = (0..nu).map(|u| (0..ni).map(|i| s[u][i] * f[i]).sum()).collect();
        l2_normalize(&mut r);
        let mut next: Vec<f64> = (0..ni).map(|i| (0..nu).map(|u| s[u][i] * r[u]).sum()).collect();
        l2_normalize(&mut next);
        let diff = next.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = next;
        if diff < 1e-15 {
            break;
        }
    }
    f
}

/// `√d_i / √(Σ d)`: the BiRank fixed point in closed form.
pub fn sqrt_degree_closed_form(w: &[Vec<f64>]) -> Vec<f64> {
    let ni = w[0].len();
    let di: Vec<f64> = (0..ni).map(|i| w.iter().map(|r| r[i]).sum()).collect();
    let total: f64 = di.iter().sum();
    di.iter().map(|d| (d / total).sqrt()).collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Two-pass mean and population standard deviation.
pub fn brute_zscore(x: f64, window: &[f64], fallback: f64) -> f64 {
    if window.iter().all(|&v| v == window[0]) {
        return fallback;
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (x - mean) / var.sqrt()
}

/// Share of (positive, negative) pairs with the positive ranked ahead; ties
/// count one half. `scores` are indexed by item.
pub fn pairwise_auc(scores: &[f64], truth: &HashSet<u32>) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (p, &sp) in scores.iter().enumerate() {
        if !truth.contains(&(p as u32)) {
            continue;
        }
        for (n, &sn) in scores.iter().enumerate() {
            if truth.contains(&(n as u32)) {
                continue;
            }
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
                j += 1;
            }
            let avg = (k + j) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=j] {
                r[i] = avg;
            }
            k = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("item{k:05}")).collect()
}
