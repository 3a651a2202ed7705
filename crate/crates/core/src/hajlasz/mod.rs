//! Generalized (Hajłasz) gradients: membership, minimal gradients, norms,
//! means and best constant shifts.

mod interior;
mod simplex;
mod vertices;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mmspace::{MetricMeasureSpace, PointSet};
use crate::num::{abs, powf, sqrt};

pub use simplex::{maximize, LpOutcome};

/// Relative slack accepted by [`is_generalized_gradient`].
pub const GRADIENT_RTOL: f64 = 1e-12;

/// Largest domain for which `p < 1` is solved by exhaustive vertex search.
pub const VERTEX_ENUMERATION_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GradientError {
    #[error("domain has {0} points, at least two are needed")]
    DegenerateDomain(usize),
    #[error("the set has zero measure")]
    EmptySet,
    #[error("exponent {0} must be positive")]
    BadExponent(f64),
    #[error("got {got} values for a space of {expected} points")]
    LengthMismatch { got: usize, expected: usize },
    #[error("solver failed: {0}")]
    SolverFailure(&'static str),
}

/// `u`, a candidate gradient `g`, an exponent and the domain where the
/// pointwise inequality is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HajlaszPair {
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub p: f64,
    pub domain: PointSet,
}

impl HajlaszPair {
    pub fn check(&self, space: &MetricMeasureSpace) -> GradientCheck {
        is_generalized_gradient(space, &self.u, &self.g, &self.domain)
    }
}

/// `(Σ_{i∈domain} μ_i |v_i|^p)^{1/p}`.
pub fn lp_norm(space: &MetricMeasureSpace, values: &[f64], p: f64, domain: &PointSet) -> f64 {
    let sum: f64 = domain.iter().map(|i| space.weight(i) * powf(abs(values[i]), p)).sum();
    powf(sum, 1.0 / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub holds: bool,
    /// Pair with the smallest slack `d(x,y)(g(x)+g(y)) − |u(x)−u(y)|`.
    pub worst_pair: Option<(usize, usize)>,
    pub slack: f64,
}

/// Whether `|u(x)−u(y)| ≤ d(x,y)(g(x)+g(y))` on every pair of the domain.
pub fn is_generalized_gradient(space: &MetricMeasureSpace, u: &[f64], g: &[f64], domain: &PointSet) -> GradientCheck {
    let idx = domain.members();
    let mut holds = true;
    let mut worst = None;
    let mut worst_slack = f64::INFINITY;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let du = abs(u[i] - u[j]);
            let bound = space.d(i, j) * (g[i] + g[j]);
            let slack = bound - du;
            if slack < worst_slack {
                worst_slack = slack;
                worst = Some((i, j));
            }
            if slack < -GRADIENT_RTOL * du.max(bound) {
                holds = false;
            }
        }
    }
    GradientCheck { holds, worst_pair: worst, slack: if worst.is_some() { worst_slack } else { 0.0 } }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    ExactLp,
    InteriorPoint,
    VertexEnumeration,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// Primal and dual optimal values of the linear program and the dual
    /// solution, one weight per active pair.
    DualCertificate { primal: f64, dual: f64, pivots: usize, dual_solution: Vec<DualWeight> },
    /// Scale-free KKT residual and worst constraint violation.
    Kkt { residual: f64, violation: f64, iterations: usize },
    Enumeration { bases: u64, feasible_vertices: u64 },
    Heuristic { rounds: usize, certified: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualWeight {
    pub i: usize,
    pub j: usize,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Optimal gradient, zero outside the domain.
    pub g: Vec<f64>,
    /// Weighted p-norm of `g` over the domain.
    pub value: f64,
    pub p: f64,
    pub method: SolverMethod,
    pub evidence: Evidence,
}

/// Active pairwise constraint `g_i + g_j ≥ c` in local indices.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Edge {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

fn edges(space: &MetricMeasureSpace, u: &[f64], idx: &[usize]) -> Vec<Edge> {
    let mut out = Vec::new();
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let c = abs(u[idx[a]] - u[idx[b]]) / space.d(idx[a], idx[b]);
            if c > 0.0 {
                out.push(Edge { i: a, j: b, c });
            }
        }
    }
    out
}

/// Minimizes the weighted p-norm of `g` over `D(u)` restricted to the domain.
///
/// `p = 1` is an exact linear program, `p > 1` a convex program solved by a
/// primal-dual interior-point method, and `p < 1` a concave minimization that
/// is solved exactly on at most [`VERTEX_ENUMERATION_LIMIT`] points and by a
/// reweighted descent from the linear-program vertex otherwise.
pub fn minimal_gradient(space: &MetricMeasureSpace, u: &[f64], p: f64, domain: &PointSet) -> Result<SolverReport, GradientError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(GradientError::BadExponent(p));
    }
    if u.len() != space.len() {
        return Err(GradientError::LengthMismatch { got: u.len(), expected: space.len() });
    }
    let idx = domain.members();
    if idx.len() < 2 {
        return Err(GradientError::DegenerateDomain(idx.len()));
    }
    let w: Vec<f64> = idx.iter().map(|&i| space.weight(i)).collect();
    let es = edges(space, u, idx);
    let (local, method, evidence) = if p == 1.0 {
        let (g, ev) = solve_linear(&w, &es, idx)?;
        (g, SolverMethod::ExactLp, ev)
    } else if p > 1.0 {
        let sol = interior::solve(&w, &es, p)?;
        (sol.g, SolverMethod::InteriorPoint, Evidence::Kkt { residual: sol.residual, violation: sol.violation, iterations: sol.iterations })
    } else if idx.len() <= VERTEX_ENUMERATION_LIMIT {
        let sol = vertices::minimize(&w, &es, |g| weighted_power(&w, g, p));
        (sol.g, SolverMethod::VertexEnumeration, Evidence::Enumeration { bases: sol.bases, feasible_vertices: sol.feasible })
    } else {
        let (g, rounds) = reweighted_descent(&w, &es, idx, p)?;
        (g, SolverMethod::Heuristic, Evidence::Heuristic { rounds, certified: false })
    };
    let mut g = vec![0.0; space.len()];
    for (a, &i) in idx.iter().enumerate() {
        g[i] = local[a];
    }
    let value = lp_norm(space, &g, p, domain);
    Ok(SolverReport { g, value, p, method, evidence })
}

fn weighted_power(w: &[f64], g: &[f64], p: f64) -> f64 {
    w.iter().zip(g).map(|(&wi, &gi)| wi * powf(gi, p)).sum()
}

/// Weighted-sum LP through its dual packing problem
/// `max Σ c_e y_e` subject to `Σ_{e∋i} y_e ≤ w_i`, `y ≥ 0`.
fn solve_linear(w: &[f64], es: &[Edge], idx: &[usize]) -> Result<(Vec<f64>, Evidence), GradientError> {
    let k = w.len();
    if es.is_empty() {
        let ev = Evidence::DualCertificate { primal: 0.0, dual: 0.0, pivots: 0, dual_solution: Vec::new() };
        return Ok((vec![0.0; k], ev));
    }
    let cscale = es.iter().map(|e| e.c).fold(0.0, f64::max);
    let wscale = w.iter().copied().fold(0.0, f64::max);
    let columns: Vec<[usize; 2]> = es.iter().map(|e| [e.i, e.j]).collect();
    let b: Vec<f64> = w.iter().map(|&x| x / wscale).collect();
    let c: Vec<f64> = es.iter().map(|e| e.c / cscale).collect();
    let out = simplex::maximize_pairs(k, &columns, &b, &c).map_err(GradientError::SolverFailure)?;
    let g: Vec<f64> = out.duals.iter().map(|&x| x.max(0.0) * cscale).collect();
    let y: Vec<f64> = out.x.iter().map(|&x| x.max(0.0) * wscale).collect();
    let primal: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
    let dual: f64 = es.iter().zip(&y).map(|(e, y)| e.c * y).sum();
    let dual_solution = es
        .iter()
        .zip(&y)
        .filter(|(_, &y)| y > 0.0)
        .map(|(e, &y)| DualWeight { i: idx[e.i], j: idx[e.j], y })
        .collect();
    Ok((g, Evidence::DualCertificate { primal, dual, pivots: out.pivots, dual_solution }))
}

/// Majorize-minimize for the concave objective `Σ w (g+ε)^p`: each round solves
/// the LP with weights from the tangent at the current point.
fn reweighted_descent(w: &[f64], es: &[Edge], idx: &[usize], p: f64) -> Result<(Vec<f64>, usize), GradientError> {
    let (mut g, _) = solve_linear(w, es, idx)?;
    let scale = es.iter().map(|e| e.c).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = 1e-9 * scale;
    let mut best = weighted_power(w, &g, p);
    let mut rounds = 0;
    for _ in 0..100 {
        rounds += 1;
        let tw: Vec<f64> = w.iter().zip(&g).map(|(&wi, &gi)| wi * p * powf(gi + eps, p - 1.0)).collect();
        let (next, _) = solve_linear(&tw, es, idx)?;
        let val = weighted_power(w, &next, p);
        if val < best * (1.0 - 1e-12) {
            best = val;
            g = next;
        } else {
            break;
        }
    }
    Ok((g, rounds))
}

/// `‖u‖_{L^p} + inf_{g∈D(u)} ‖g‖_{L^p}` on the whole space.
pub fn m_norm(space: &MetricMeasureSpace, u: &[f64], p: f64) -> Result<f64, GradientError> {
    let all = space.all_points();
    let grad = minimal_gradient(space, u, p, &all)?;
    Ok(lp_norm(space, u, p, &all) + grad.value)
}

/// `u_E = Σ μ_i u_i / Σ μ_i`.
pub fn ball_mean(space: &MetricMeasureSpace, u: &[f64], e: &PointSet) -> Result<f64, GradientError> {
    let m = e.measure(space);
    if !(m > 0.0) {
        return Err(GradientError::EmptySet);
    }
    Ok(e.iter().map(|i| space.weight(i) * u[i]).sum::<f64>() / m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub gamma: f64,
    pub value: f64,
}

/// Minimizes `γ ↦ (⨍_E |u−γ|^q)^{1/q}`.
pub fn best_constant_shift(space: &MetricMeasureSpace, u: &[f64], q: f64, e: &PointSet) -> Result<Shift, GradientError> {
    if !(q > 0.0) {
        return Err(GradientError::BadExponent(q));
    }
    if !(e.measure(space) > 0.0) {
        return Err(GradientError::EmptySet);
    }
    let samples: Vec<(f64, f64)> = e.iter().map(|i| (u[i], space.weight(i))).collect();
    Ok(shift_weighted(&samples, q))
}

/// [`best_constant_shift`] on a weighted sample `(value, weight)`.
///
/// For `q ≤ 1` the objective is concave between consecutive sample values, so
/// the minimum sits at a sample value and a scan is exact. For `q > 1` it is
/// convex and a golden-section search to `1e-10` is used; `q = 2` returns the
/// mean directly.
pub fn shift_weighted(samples: &[(f64, f64)], q: f64) -> Shift {
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (v, w) in pts {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += w,
            _ => merged.push((v, w)),
        }
    }
    let total: f64 = merged.iter().map(|p| p.1).sum();
    let objective = |gamma: f64| -> f64 {
        let s: f64 = merged.iter().map(|&(v, w)| w * powf(abs(v - gamma), q)).sum();
        s / total
    };
    let finish = |gamma: f64, raw: f64| Shift { gamma, value: powf(raw, 1.0 / q) };
    if merged.len() == 1 {
        return Shift { gamma: merged[0].0, value: 0.0 };
    }
    if q <= 1.0 {
        let mut best = (merged[0].0, f64::INFINITY);
        for &(v, _) in &merged {
            let f = objective(v);
            if f < best.1 {
                best = (v, f);
            }
        }
        return finish(best.0, best.1);
    }
    let mean = merged.iter().map(|&(v, w)| v * w).sum::<f64>() / total;
    if q == 2.0 {
        return finish(mean, objective(mean));
    }
    let (mut lo, mut hi) = (merged[0].0, merged[merged.len() - 1].0);
    let ratio = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > 1e-10 * (1.0 + abs(lo) + abs(hi)) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let fm = objective(mean);
    if fm < best.1 {
        best = (mean, fm);
    }
    finish(best.0, best.1)
}

#[cfg(test)]
mod tests;
