use super::*;
use crate::constructions::{bump, construction1_through};
use crate::geometry::lower_mass_constant;
use crate::hajlasz::minimal_gradient;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

fn path() -> MetricMeasureSpace {
    let d = vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0];
    MetricMeasureSpace::from_parts("path", d, vec![1.0 / 3.0; 3], None).unwrap()
}

fn line(n: usize) -> MetricMeasureSpace {
    let h = 1.0 / (n - 1) as f64;
    let mut d = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            d.push((i as f64 - j as f64).abs() * h);
        }
    }
    MetricMeasureSpace::from_parts("line", d, vec![1.0 / n as f64; n], None).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// `g(x) = max_y |u(x)−u(y)| / d(x,y)`, a gradient by construction.
fn pair_bound(space: &MetricMeasureSpace, u: &[f64]) -> Vec<f64> {
    space
        .point_ids()
        .map(|x| space.point_ids().filter(|&y| y != x).map(|y| (u[x] - u[y]).abs() / space.d(x, y)).fold(0.0, f64::max))
        .collect()
}

#[test]
fn constant_function_has_zero_poincare_ratio() {
    let s = path();
    let case = InequalityCase::new(InequalityKind::Poincare, 1.0, 0.5, 2.0);
    let ev = eval_inequality(&s, &case, Ball::open(1, 0.6), &[3.0; 3], &[0.0; 3]).unwrap();
    assert_eq!((ev.lhs, ev.ratio), (0.0, 0.0));
    let corpus = [TestPair { id: "c".to_string(), u: vec![3.0; 3], g: vec![1.0; 3] }];
    let rep = estimate_constant(&s, &case, &corpus, &[Ball::open(0, 0.6), Ball::open(1, 1.1)]).unwrap();
    assert_eq!(rep.constant, 0.0);
}

#[test]
fn path_sobolev_matches_direct_summation() {
    let s = path();
    let u = [0.0, 0.0, 1.0];
    let g = pair_bound(&s, &u);
    let case = InequalityCase::new(InequalityKind::Sobolev, 1.0, 0.5, 2.0);
    let ev = eval_inequality(&s, &case, Ball::open(1, 0.6), &u, &g).unwrap();
    // B₀ = B(x₂,0.6) and σB₀ both hold all three points of mass 1/3; p* = 1.
    let lhs = (0.0 + 0.0 + 1.0) / 3.0;
    let avg_g = (g[0].sqrt() + g[1].sqrt() + g[2].sqrt()) / 3.0;
    let avg_u = 1.0 / 3.0;
    let rhs = (1.0f64 / 0.6).powi(2) * (0.6 * avg_g * avg_g + avg_u * avg_u);
    assert!(close(ev.lhs, lhs, 1e-14));
    assert!(close(ev.rhs_core, rhs, 1e-14), "{} vs {}", ev.rhs_core, rhs);
    assert!(ev.ratio.is_finite() && ev.ratio > 0.0);
    assert!(close(ev.ratio, lhs / rhs, 1e-13));
}

#[test]
fn construction1_pairs_match_closed_forms() {
    let s = line(33);
    let (x, r, sp, p) = (16, 0.25, 1.0, 0.5);
    let q = sp * p / (sp - p);
    let case = InequalityCase::new(InequalityKind::Sobolev, sp, p, 2.0);
    let fam = construction1_through(&s, Ball::open(x, r), 5);
    let b = s.ball_measure(Ball::open(x, r));
    for m in &fam.members {
        let ev = eval_inequality(&s, &case, Ball::open(x, r), &m.u, &m.g).unwrap();
        let j = m.j as i32;
        let g_term = 2f64.powi(j + 2) / r.powf(sp / p) * m.inner_measure.powf(1.0 / p);
        let u_term = (s.weights().iter().zip(&m.u).map(|(w, v)| w * v.abs().powf(p)).sum::<f64>() / r.powf(sp)).powf(1.0 / p);
        assert!(close(ev.rhs_core - u_term, g_term, 1e-10), "j={j}");
        assert!(u_term <= m.inner_measure.powf(1.0 / p) / r.powf(sp / p) * (1.0 + 1e-12));
        assert!(ev.lhs >= (m.next_measure / b).powf(1.0 / q) * (1.0 - 1e-12));
    }
}

#[test]
fn exp_integral_examples() {
    let s = path();
    let b0 = Ball::open(1, 0.6);
    assert_eq!(exp_integral(&s, b0, 2.0, 1.0, 1.0, 1.0, &[2.0; 3], &[1.0; 3]).unwrap(), 1.0);
    assert_eq!(exp_integral(&s, b0, 2.0, 1.0, 1.0, 1.0, &[2.0; 3], &[0.0; 3]), Err(EmbeddingError::ZeroGradientNorm));

    let u = [0.0, 0.0, 1.0];
    let g = minimal_gradient(&s, &u, 1.0, &s.all_points()).unwrap().g;
    let v = exp_integral(&s, b0, 2.0, 1.0, 1.0, 1.0, &u, &g).unwrap();
    let norm: f64 = g.iter().map(|x| x / 3.0).sum();
    let mean = 1.0 / 3.0;
    let direct = u.iter().map(|&x| ((x - mean).abs() / norm).exp() / 3.0).sum::<f64>();
    assert!(v > 1.0);
    assert!(close(v, direct, 1e-14));

    let mut last = f64::INFINITY;
    for c1 in [1.0, 0.1, 0.01, 0.001] {
        let v = exp_integral(&s, b0, 2.0, c1, 1.0, 1.0, &u, &g).unwrap();
        assert!(v < last && v >= 1.0);
        last = v;
    }
    assert!(last - 1.0 < 1e-2);
}

#[test]
fn holder_examples() {
    let s = line(9);
    let case = InequalityCase::new(InequalityKind::HolderGlobal, 1.0, 2.0, 1.0);
    let (u, g) = bump(&s, 4, 0.0, 0.25).unwrap();
    let c = holder_constant(&s, &case, &u, &g, None).unwrap();
    // The pair (x, y) with d = λr = 0.25 gives 1 ≤ C_H d^{1/2} ‖g‖₂.
    let norm: f64 = g.iter().zip(s.weights()).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
    assert!(c >= 1.0 / (0.25f64.sqrt() * norm) * (1.0 - 1e-12));
    let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
    let g2: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
    let c2 = holder_constant(&s, &case, &u2, &g, None);
    assert!(matches!(c2, Err(EmbeddingError::NotAGradient { .. })));
    let c2 = holder_constant(&s, &case, &u2, &g2, None).unwrap();
    assert!(close(c2, c, 1e-14));
    assert_eq!(holder_constant(&s, &case, &[1.0; 9], &[1.0; 9], None).unwrap(), 0.0);
}

#[test]
fn parameter_domains() {
    let bad = InequalityCase::new(InequalityKind::Sobolev, 1.0, 1.5, 2.0);
    assert!(bad.validate().is_err());
    let bad = InequalityCase::new(InequalityKind::HolderLocal, 1.0, 0.5, 2.0);
    assert!(bad.validate().is_err());
    assert!(InequalityCase::exponential(InequalityKind::Exponential, 1.0, 2.0, 1.0, 1.0).validate().is_ok());
    assert_eq!(InequalityCase::new(InequalityKind::Poincare, 2.0, 1.0, 1.0).p_star(), Some(2.0));
}

#[test]
fn chaining_trace_on_grid() {
    let s = line(33);
    let h = 1.0 / 32.0;
    let (sigma, sp, p) = (2.0f64, 1.0, 0.5);
    let (kappa, _) = lower_mass_constant(&s, sp, h);
    let b = kappa * sigma.powf(-sp);
    let b0 = Ball::open(16, 0.25);
    let (u, g) = bump(&s, 16, 0.0625, 0.125).unwrap();
    let cert = chaining_trace(&s, b0, sigma, sp, p, b, &u, &g, None).unwrap();
    assert!(!cert.trivial);
    assert!(cert.verified, "{cert:?}");
    assert!(!cert.chains.is_empty());
    for c in &cert.chains {
        assert_eq!(c.points.len() as i64, c.k - cert.k0 + 1);
        for st in &c.steps {
            assert!(st.distance < st.radius);
            assert!(st.joasia.hypothesis && st.joasia.conclusion);
        }
    }
    for l in &cert.levels {
        assert!(l.complement <= l.chebyshev_bound * (1.0 + 1e-12));
    }
}

#[test]
fn chaining_trace_constant_is_trivial() {
    let s = line(17);
    let cert = chaining_trace(&s, Ball::open(8, 0.25), 2.0, 1.0, 0.5, 0.1, &[5.0; 17], &[0.0; 17], None).unwrap();
    assert!(cert.trivial && cert.verified);
    assert_eq!(cert.gamma, 5.0);
}

#[test]
fn chaining_trace_rejects_bad_v_condition() {
    let s = line(17);
    let (u, g) = bump(&s, 8, 0.0, 0.25).unwrap();
    let r = chaining_trace(&s, Ball::open(8, 0.25), 2.0, 1.0, 0.5, 100.0, &u, &g, None);
    assert!(matches!(r, Err(EmbeddingError::VConditionFails { .. })));
    let r = chaining_trace(&s, Ball::open(8, 0.25), 1.0, 1.0, 0.5, 0.1, &u, &g, None);
    assert!(matches!(r, Err(EmbeddingError::BadParameters(_))));
}
