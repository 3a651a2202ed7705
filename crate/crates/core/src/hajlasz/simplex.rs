//! Dense tableau simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! The origin is feasible, so no phase one is needed. Dantzig pricing is used
//! until a degenerate pivot occurs; Bland's rule then takes over until the
//! objective moves again, which rules out cycling.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    /// Primal solution.
    pub x: Vec<f64>,
    /// Optimal dual multipliers, one per row.
    pub duals: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

/// Solves the LP for a dense row-major constraint matrix `a` (`rows × c.len()`).
pub fn maximize(a: &[f64], b: &[f64], c: &[f64]) -> Result<LpOutcome, &'static str> {
    let m = b.len();
    let nvar = c.len();
    if a.len() != m * nvar {
        return Err("constraint matrix has the wrong size");
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err("right-hand side must be nonnegative");
    }
    let column = |j: usize| -> Vec<f64> { (0..m).map(|i| a[i * nvar + j]).collect() };
    solve(m, nvar, &column, b, c)
}

/// Specialization where every column has two unit entries, at the given rows.
pub(crate) fn maximize_pairs(m: usize, columns: &[[usize; 2]], b: &[f64], c: &[f64]) -> Result<LpOutcome, &'static str> {
    let column = |j: usize| -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[columns[j][0]] = 1.0;
        v[columns[j][1]] = 1.0;
        v
    };
    solve(m, columns.len(), &column, b, c)
}

fn solve(m: usize, nvar: usize, column: &dyn Fn(usize) -> Vec<f64>, b: &[f64], c: &[f64]) -> Result<LpOutcome, &'static str> {
    let width = nvar + m + 1;
    let rhs = width - 1;
    let mut t = vec![0.0; (m + 1) * width];
    for j in 0..nvar {
        for (i, v) in column(j).into_iter().enumerate() {
            t[i * width + j] = v;
        }
        t[m * width + j] = -c[j];
    }
    for i in 0..m {
        t[i * width + nvar + i] = 1.0;
        t[i * width + rhs] = b[i];
    }
    let mut basis: Vec<usize> = (nvar..nvar + m).collect();
    let mut bland = false;
    let mut pivots = 0;
    let limit = 50 * (m + nvar) + 1000;
    loop {
        let obj = &t[m * width..m * width + nvar + m];
        let entering = if bland {
            obj.iter().position(|&v| v < -PIVOT_EPS)
        } else {
            let (j, v) = obj.iter().enumerate().fold((usize::MAX, -PIVOT_EPS), |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc });
            let _ = v;
            (j != usize::MAX).then_some(j)
        };
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[i * width + e];
            if aij > PIVOT_EPS {
                let ratio = t[i * width + rhs] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 * lr.abs().max(1.0) || (ratio <= lr + 1e-14 * lr.abs().max(1.0) && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((l, ratio)) = leave else { return Err("linear program is unbounded") };
        bland = ratio <= PIVOT_EPS;
        pivot(&mut t, width, m, l, e);
        basis[l] = e;
        pivots += 1;
        if pivots > limit {
            return Err("simplex iteration limit reached");
        }
    }
    let mut x = vec![0.0; nvar];
    for i in 0..m {
        if basis[i] < nvar {
            x[basis[i]] = t[i * width + rhs];
        }
    }
    let mut duals: Vec<f64> = (0..m).map(|i| t[m * width + nvar + i]).collect();
    if let Some((rx, rd)) = refine(m, nvar, column, b, c, &basis) {
        x = rx;
        duals = rd;
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpOutcome { x, duals, value, pivots })
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for (v, &pv) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            t[i * width + col] = 0.0;
        }
    }
}

/// Recomputes primal and dual values from the final basis with a fresh LU
/// factorization; kept only if both remain feasible.
fn refine(m: usize, nvar: usize, column: &dyn Fn(usize) -> Vec<f64>, b: &[f64], c: &[f64], basis: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let full_column = |j: usize| -> Vec<f64> {
        if j < nvar {
            column(j)
        } else {
            let mut v = vec![0.0; m];
            v[j - nvar] = 1.0;
            v
        }
    };
    let mut bm = DMatrix::<f64>::zeros(m, m);
    for (k, &j) in basis.iter().enumerate() {
        for (i, v) in full_column(j).into_iter().enumerate() {
            bm[(i, k)] = v;
        }
    }
    let cb = DVector::from_iterator(m, basis.iter().map(|&j| if j < nvar { c[j] } else { 0.0 }));
    let lu = bm.clone().lu();
    let xb = lu.solve(&DVector::from_column_slice(b))?;
    let pi = bm.transpose().lu().solve(&cb)?;
    if xb.iter().any(|&v| v < -1e-12) || pi.iter().any(|&v| v < -1e-10) {
        return None;
    }
    for j in 0..nvar {
        let col = column(j);
        let reduced: f64 = col.iter().zip(pi.iter()).map(|(a, p)| a * p).sum::<f64>() - c[j];
        if reduced < -1e-10 * (1.0 + c[j].abs()) {
            return None;
        }
    }
    let mut x = vec![0.0; nvar];
    for (k, &j) in basis.iter().enumerate() {
        if j < nvar {
            x[j] = xb[k].max(0.0);
        }
    }
    Some((x, pi.iter().map(|&v| v.max(0.0)).collect()))
}
