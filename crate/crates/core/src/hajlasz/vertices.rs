//! Exhaustive vertex search over `{g ≥ 0, g_i + g_j ≥ c_e}`.
//!
//! The feasible set is pointed and every recession direction is nonnegative,
//! so a concave objective that is nondecreasing in each coordinate attains its
//! minimum at a vertex. Vertices are enumerated as `k`-subsets of constraints
//! with independent normals, built depth-first in reduced row echelon form.

use alloc::vec;
use alloc::vec::Vec;

use super::Edge;

const EPS: f64 = 1e-12;

pub(super) struct Solution {
    pub g: Vec<f64>,
    pub bases: u64,
    pub feasible: u64,
}

struct Search<'a, F> {
    k: usize,
    normals: Vec<(Vec<f64>, f64)>,
    es: &'a [Edge],
    objective: F,
    best: Option<(f64, Vec<f64>)>,
    bases: u64,
    feasible: u64,
}

impl<F: Fn(&[f64]) -> f64> Search<'_, F> {
    fn is_feasible(&self, g: &[f64]) -> bool {
        let scale = self.es.iter().map(|e| e.c).fold(0.0, f64::max);
        g.iter().all(|&v| v >= -EPS * scale) && self.es.iter().all(|e| g[e.i] + g[e.j] >= e.c - EPS * scale)
    }

    /// `rows` holds reduced rows `(coeffs, rhs, pivot)`.
    fn dfs(&mut self, start: usize, rows: &[(Vec<f64>, f64, usize)]) {
        if rows.len() == self.k {
            self.bases += 1;
            let mut g = vec![0.0; self.k];
            for (_, rhs, piv) in rows {
                g[*piv] = *rhs;
            }
            if self.is_feasible(&g) {
                self.feasible += 1;
                for v in &mut g {
                    *v = v.max(0.0);
                }
                let val = (self.objective)(&g);
                if self.best.as_ref().map_or(true, |b| val < b.0) {
                    self.best = Some((val, g));
                }
            }
            return;
        }
        let need = self.k - rows.len();
        for idx in start..self.normals.len() {
            if self.normals.len() - idx < need {
                break;
            }
            let (mut a, mut b) = self.normals[idx].clone();
            for (row, rhs, piv) in rows {
                let f = a[*piv];
                if f != 0.0 {
                    for (x, y) in a.iter_mut().zip(row) {
                        *x -= f * y;
                    }
                    b -= f * rhs;
                }
            }
            let Some(piv) = (0..self.k).max_by(|&x, &y| a[x].abs().total_cmp(&a[y].abs())) else { continue };
            if a[piv].abs() < 1e-9 {
                continue;
            }
            let p = a[piv];
            for x in &mut a {
                *x /= p;
            }
            b /= p;
            let mut next: Vec<(Vec<f64>, f64, usize)> = Vec::with_capacity(rows.len() + 1);
            for (row, rhs, rp) in rows {
                let f = row[piv];
                if f != 0.0 {
                    let r: Vec<f64> = row.iter().zip(&a).map(|(x, y)| x - f * y).collect();
                    next.push((r, rhs - f * b, *rp));
                } else {
                    next.push((row.clone(), *rhs, *rp));
                }
            }
            next.push((a, b, piv));
            self.dfs(idx + 1, &next);
        }
    }
}

pub(super) fn minimize<F: Fn(&[f64]) -> f64>(w: &[f64], es: &[Edge], objective: F) -> Solution {
    let k = w.len();
    let mut normals = Vec::with_capacity(k + es.len());
    for e in es {
        let mut a = vec![0.0; k];
        a[e.i] = 1.0;
        a[e.j] = 1.0;
        normals.push((a, e.c));
    }
    for i in 0..k {
        let mut a = vec![0.0; k];
        a[i] = 1.0;
        normals.push((a, 0.0));
    }
    let mut search = Search { k, normals, es, objective, best: None, bases: 0, feasible: 0 };
    search.dfs(0, &[]);
    let g = search.best.map(|b| b.1).unwrap_or_else(|| vec![0.0; k]);
    Solution { g, bases: search.bases, feasible: search.feasible }
}
