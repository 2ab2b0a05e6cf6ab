#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use tbrank::graph::{build_graph, WeightingMode};
use tbrank::ranking::{bgrm, bihits, birank, qrep, Algorithm, ConvergenceConfig, Ranker};

fn cfg(seed: u64) -> ConvergenceConfig {
    ConvergenceConfig {
        threshold: 1e-12,
        seed,
        ..ConvergenceConfig::default()
    }
}

#[test]
fn birank_matches_closed_form_and_power_iteration() {
    let mut r = rng(11);
    for _ in 0..25 {
        let g = build_graph(&random_connected(&mut r, 30), WeightingMode::Rating).unwrap();
        assert_eq!(g.component_count(), 1);
        let w = dense_weights(&g);
        let s = birank(&g, &cfg(42)).unwrap();
        assert!(s.converged);
        assert!(linf(&s.items, &sqrt_degree_closed_form(&w)) < 1e-6);
        assert!(linf(&s.items, &birank_oracle(&w)) < 1e-8);
    }
}

#[test]
fn bihits_fixed_point_is_degree_share() {
    let mut r = rng(12);
    for _ in 0..20 {
        let g = build_graph(&random_connected(&mut r, 30), WeightingMode::Rating).unwrap();
        let w = dense_weights(&g);
        let total: f64 = w.iter().flatten().sum();
        let expect: Vec<f64> = (0..g.item_count())
            .map(|i| w.iter().map(|row| row[i]).sum::<f64>() / total)
            .collect();
        let s = bihits(&g, &cfg(42)).unwrap();
        assert!(linf(&s.items, &expect) < 1e-6, "{:?} vs {expect:?}", s.items);
    }
}

/// Solves the BGRM linear system `x = λAx + b` with Gaussian elimination.
fn bgrm_solve(w: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let (nu, ni) = (w.len(), w[0].len());
    let n = nu + ni;
    let du: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let di: Vec<f64> = (0..ni).map(|i| w.iter().map(|r| r[i]).sum()).collect();
    // Rows: (I − λA) x = b.
    let mut m = vec![vec![0.0; n + 1]; n];
    for u in 0..nu {
        m[u][u] = 1.0;
        for i in 0..ni {
            m[u][nu + i] -= lambda * w[u][i] / du[u];
        }
        m[u][n] = (1.0 - lambda) / nu as f64;
    }
    for i in 0..ni {
        m[nu + i][nu + i] = 1.0;
        for u in 0..nu {
            m[nu + i][u] -= lambda * w[u][i] / di[i];
        }
        m[nu + i][n] = (1.0 - lambda) / ni as f64;
    }
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    (nu..n).map(|k| m[k][n] / m[k][k]).collect()
}

#[test]
fn bgrm_matches_linear_solve() {
    let mut r = rng(13);
    for _ in 0..20 {
        let g = build_graph(&random_connected(&mut r, 25), WeightingMode::Rating).unwrap();
        let s = bgrm(&g, &cfg(42), 0.85).unwrap();
        assert!(linf(&s.items, &bgrm_solve(&dense_weights(&g), 0.85)) < 1e-9);
    }
}

#[test]
fn iterative_rankers_ignore_the_seed() {
    let mut r = rng(14);
    for _ in 0..10 {
        let g = build_graph(&random_connected(&mut r, 30), WeightingMode::Rating).unwrap();
        for algo in [Algorithm::BiRankR, Algorithm::BiHits, Algorithm::Bgrm, Algorithm::QRep] {
            let a = Ranker::new(algo).with_convergence(cfg(1)).rank(&g).unwrap();
            let b = Ranker::new(algo).with_convergence(cfg(987_654)).rank(&g).unwrap();
            assert!(linf(&a.items, &b.items) < 1e-9, "{algo}");
        }
    }
}

#[test]
fn qrep_stays_on_rating_scale() {
    let mut r = rng(15);
    for _ in 0..10 {
        let g = build_graph(&random_connected(&mut r, 30), WeightingMode::Rating).unwrap();
        let s = qrep(&g, &cfg(42)).unwrap();
        assert!(s.items.iter().all(|q| (1.0..=5.0).contains(q)));
        assert!((s.users.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn time_decay_ranker_reproduces_closed_form_on_decayed_weights() {
    let mut r = rng(16);
    for _ in 0..10 {
        let edges = random_connected(&mut r, 30);
        let weighting = WeightingMode::time_decay(0.85, 1.0, 1000).unwrap();
        let g = build_graph(&edges, weighting).unwrap();
        let s = Ranker::new(Algorithm::BiRankT)
            .with_convergence(cfg(42))
            .rank(&g)
            .unwrap();
        assert!(linf(&s.items, &sqrt_degree_closed_form(&dense_weights(&g))) < 1e-6);
    }
}
