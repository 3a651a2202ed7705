//! Primal-dual interior-point method for
//! `min Σ w_i g_i^p` subject to `g_i + g_j ≥ c_e`, `g ≥ 0`, with `p > 1`.
//!
//! Iterates stay strictly feasible. Each step solves the reduced Newton system
//! `[∇²f + Aᵀ(Λ/S)A + N/G] Δg = −∇φ_τ(g)` by Cholesky and backtracks on the
//! barrier function `φ_τ`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{Edge, GradientError};
use crate::num::{abs, ln, powf};

const TARGET: f64 = 1e-12;
const MAX_ITER: usize = 500;

pub(super) struct Solution {
    pub g: Vec<f64>,
    pub residual: f64,
    pub violation: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    w: Vec<f64>,
    es: &'a [Edge],
    c: Vec<f64>,
    p: f64,
}

impl Problem<'_> {
    fn f(&self, g: &[f64]) -> f64 {
        self.w.iter().zip(g).map(|(&w, &x)| w * powf(x, self.p)).sum()
    }

    fn grad(&self, g: &[f64]) -> Vec<f64> {
        self.w.iter().zip(g).map(|(&w, &x)| self.p * w * powf(x, self.p - 1.0)).collect()
    }

    fn hess(&self, g: &[f64]) -> Vec<f64> {
        self.w.iter().zip(g).map(|(&w, &x)| self.p * (self.p - 1.0) * w * powf(x, self.p - 2.0)).collect()
    }

    fn slacks(&self, g: &[f64]) -> Vec<f64> {
        self.es.iter().zip(&self.c).map(|(e, &c)| g[e.i] + g[e.j] - c).collect()
    }

    fn barrier(&self, g: &[f64], tau: f64) -> f64 {
        let s = self.slacks(g);
        if s.iter().any(|&v| !(v > 0.0)) || g.iter().any(|&v| !(v > 0.0)) {
            return f64::INFINITY;
        }
        self.f(g) - tau * (s.iter().map(|&v| ln(v)).sum::<f64>() + g.iter().map(|&v| ln(v)).sum::<f64>())
    }

    /// Scale-free KKT residual: stationarity and complementarity relative to
    /// the size of the objective gradient.
    fn residual(&self, g: &[f64], lam: &[f64], nu: &[f64]) -> f64 {
        let grad = self.grad(g);
        let mut stat = grad.clone();
        for (e, &l) in self.es.iter().zip(lam) {
            stat[e.i] -= l;
            stat[e.j] -= l;
        }
        for (v, &n) in stat.iter_mut().zip(nu) {
            *v -= n;
        }
        let s = self.slacks(g);
        let scale = grad.iter().fold(0.0f64, |m, &v| m.max(abs(v))).max(1e-300);
        let gscale = g.iter().fold(0.0f64, |m, &v| m.max(v)).max(1e-300);
        let stat_norm = stat.iter().fold(0.0f64, |m, &v| m.max(abs(v)));
        let comp = lam.iter().zip(&s).map(|(l, s)| l * s).chain(nu.iter().zip(g).map(|(n, g)| n * g)).fold(0.0f64, f64::max);
        (stat_norm / scale).max(comp / (scale * gscale))
    }
}

pub(super) fn solve(w: &[f64], es: &[Edge], p: f64) -> Result<Solution, GradientError> {
    let k = w.len();
    if es.is_empty() {
        return Ok(Solution { g: vec![0.0; k], residual: 0.0, violation: 0.0, iterations: 0 });
    }
    // Normalize so that max c = 1 and Σ w = 1; the minimizer scales with c.
    let cscale = es.iter().map(|e| e.c).fold(0.0, f64::max);
    let wsum: f64 = w.iter().sum();
    let prob = Problem { w: w.iter().map(|&x| x / wsum).collect(), es, c: es.iter().map(|e| e.c / cscale).collect(), p };
    let m = es.len();

    let mut g = vec![0.1f64; k];
    for (e, &c) in es.iter().zip(&prob.c) {
        g[e.i] = g[e.i].max(c + 0.1);
        g[e.j] = g[e.j].max(c + 0.1);
    }
    let grad0 = prob.grad(&g);
    let scale0 = g.iter().zip(&grad0).map(|(a, b)| a * b).sum::<f64>() / (m + k) as f64;
    let s0 = prob.slacks(&g);
    let mut lam: Vec<f64> = s0.iter().map(|&s| scale0 / s).collect();
    let mut nu: Vec<f64> = g.iter().map(|&x| scale0 / x).collect();

    let mut iterations = 0;
    let mut residual = prob.residual(&g, &lam, &nu);
    while iterations < MAX_ITER && residual > TARGET {
        iterations += 1;
        let s = prob.slacks(&g);
        let mu = (lam.iter().zip(&s).map(|(l, s)| l * s).sum::<f64>() + nu.iter().zip(&g).map(|(n, g)| n * g).sum::<f64>()) / (m + k) as f64;
        let tau = 0.1 * mu;

        let h = prob.hess(&g);
        let grad = prob.grad(&g);
        let mut mat = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            mat[(i, i)] += h[i] + nu[i] / g[i];
            rhs[i] += -grad[i] + tau / g[i];
        }
        for (idx, e) in es.iter().enumerate() {
            let d = lam[idx] / s[idx];
            mat[(e.i, e.i)] += d;
            mat[(e.j, e.j)] += d;
            mat[(e.i, e.j)] += d;
            mat[(e.j, e.i)] += d;
            rhs[e.i] += tau / s[idx];
            rhs[e.j] += tau / s[idx];
        }
        let dg = match mat.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                let shift = 1e-12 * (0..k).map(|i| mat[(i, i)]).fold(0.0, f64::max);
                for i in 0..k {
                    mat[(i, i)] += shift;
                }
                mat.cholesky().ok_or(GradientError::SolverFailure("interior-point system is not positive definite"))?.solve(&rhs)
            }
        };
        let ds: Vec<f64> = es.iter().map(|e| dg[e.i] + dg[e.j]).collect();
        let dlam: Vec<f64> = (0..m).map(|i| tau / s[i] - lam[i] - lam[i] / s[i] * ds[i]).collect();
        let dnu: Vec<f64> = (0..k).map(|i| tau / g[i] - nu[i] - nu[i] / g[i] * dg[i]).collect();

        let mut alpha_p: f64 = 1.0;
        for i in 0..m {
            if ds[i] < 0.0 {
                alpha_p = alpha_p.min(-0.99 * s[i] / ds[i]);
            }
        }
        for i in 0..k {
            if dg[i] < 0.0 {
                alpha_p = alpha_p.min(-0.99 * g[i] / dg[i]);
            }
        }
        let mut alpha_d: f64 = 1.0;
        for i in 0..m {
            if dlam[i] < 0.0 {
                alpha_d = alpha_d.min(-0.99 * lam[i] / dlam[i]);
            }
        }
        for i in 0..k {
            if dnu[i] < 0.0 {
                alpha_d = alpha_d.min(-0.99 * nu[i] / dnu[i]);
            }
        }
        // Armijo backtracking on the barrier; the direction is a descent
        // direction because the system matrix is positive definite.
        let phi0 = prob.barrier(&g, tau);
        let slope: f64 = -rhs.dot(&dg);
        let mut trial: Vec<f64>;
        loop {
            trial = g.iter().zip(dg.iter()).map(|(&x, &d)| x + alpha_p * d).collect();
            let phi1 = prob.barrier(&trial, tau);
            if phi1 <= phi0 + 1e-4 * alpha_p * slope || alpha_p < 1e-12 {
                break;
            }
            alpha_p *= 0.5;
        }
        if prob.slacks(&trial).iter().all(|&v| v > 0.0) && trial.iter().all(|&v| v > 0.0) {
            g = trial;
        }
        for i in 0..m {
            lam[i] += alpha_d * dlam[i];
        }
        for i in 0..k {
            nu[i] += alpha_d * dnu[i];
        }
        residual = prob.residual(&g, &lam, &nu);
    }
    if !(residual <= 1e-8) {
        return Err(GradientError::SolverFailure("interior-point method did not reach the KKT tolerance"));
    }
    let g: Vec<f64> = g.iter().map(|&x| x * cscale).collect();
    let violation = es.iter().map(|e| e.c - g[e.i] - g[e.j]).fold(0.0f64, f64::max);
    Ok(Solution { g, residual, violation, iterations })
}
