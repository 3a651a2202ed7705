//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use hajlasz_core::corpus::CorpusSpec;
use hajlasz_core::mmspace::MetricMeasureSpace;
use nalgebra::{DMatrix, DVector};

/// Every generator family with the exponent `s` it is designed around.
pub fn corpus() -> Vec<(CorpusSpec, MetricMeasureSpace, f64)> {
    ["grid:1:65", "grid:2:9", "cantor:5", "snowflake:0.7:cantor:5", "vanishing:32:1", "random:12:0", "random:12:1"]
        .iter()
        .map(|t| {
            let spec: CorpusSpec = t.parse().unwrap();
            let space = spec.build().unwrap();
            let s = spec.expected_s();
            (spec, space, s)
        })
        .collect()
}

/// Pair constraints `g_i + g_j ≥ |u_i − u_j| / d(i,j)` over all points.
pub fn pair_constraints(space: &MetricMeasureSpace, u: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = space.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = (u[i] - u[j]).abs() / space.d(i, j);
            if c > 0.0 {
                out.push((i, j, c));
            }
        }
    }
    out
}

/// `min Σ w_i g_i` over `g ≥ 0`, `g_i + g_j ≥ c_ij` by visiting every basis
/// of the constraint system.
pub fn lp_by_vertices(w: &[f64], cons: &[(usize, usize, f64)]) -> f64 {
    let n = w.len();
    // Rows: pair constraints, then g_i ≥ 0.
    let mut rows: Vec<(Vec<f64>, f64)> = cons
        .iter()
        .map(|&(i, j, c)| {
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            a[j] = 1.0;
            (a, c)
        })
        .collect();
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = 1.0;
        rows.push((a, 0.0));
    }
    let feasible = |g: &[f64]| rows.iter().all(|(a, b)| a.iter().zip(g).map(|(x, y)| x * y).sum::<f64>() >= b - 1e-10 * (1.0 + b.abs()));
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let m = DMatrix::from_fn(n, n, |r, c| rows[pick[r]].0[c]);
        let rhs = DVector::from_fn(n, |r, _| rows[pick[r]].1);
        if let Some(sol) = m.lu().solve(&rhs) {
            let g: Vec<f64> = sol.iter().copied().collect();
            if g.iter().all(|v| v.is_finite()) && feasible(&g) {
                best = best.min(w.iter().zip(&g).map(|(a, b)| a * b).sum());
            }
        }
        // Next n-subset in lexicographic order.
        let total = rows.len();
        let mut k = n;
        while k > 0 && pick[k - 1] == total - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return best;
        }
        pick[k - 1] += 1;
        for t in k..n {
            pick[t] = pick[t - 1] + 1;
        }
    }
}

/// `min Σ w_i g_i²` over the same constraints by dual coordinate ascent
/// (Hildreth's method), `iters` single-constraint updates. Returns `g`.
pub fn qp_by_descent(w: &[f64], cons: &[(usize, usize, f64)], iters: usize) -> Vec<f64> {
    let mut y = vec![0.0; cons.len()];
    let mut g = vec![0.0; w.len()];
    if cons.is_empty() {
        return g;
    }
    for t in 0..iters {
        let e = t % cons.len();
        let (i, j, c) = cons[e];
        let curv = 1.0 / (2.0 * w[i]) + 1.0 / (2.0 * w[j]);
        let new = (y[e] + (c - g[i] - g[j]) / curv).max(0.0);
        let dy = new - y[e];
        y[e] = new;
        g[i] += dy / (2.0 * w[i]);
        g[j] += dy / (2.0 * w[j]);
    }
    g
}
