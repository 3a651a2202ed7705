use super::*;
use crate::mmspace::MetricMeasureSpace;
use alloc::vec;

fn two_point() -> MetricMeasureSpace {
    MetricMeasureSpace::from_parts("two", vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 1.0], None).unwrap()
}

fn path(weights: [f64; 3]) -> MetricMeasureSpace {
    let d = vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0];
    MetricMeasureSpace::from_parts("path", d, weights.to_vec(), None).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn lp_norm_examples() {
    let s = two_point();
    let all = s.all_points();
    assert!(close(lp_norm(&s, &[1.0, 1.0], 2.0, &all), 2f64.sqrt(), 1e-15));
    assert!(close(lp_norm(&s, &[3.0, 4.0], 1.0, &all), 7.0, 1e-15));
    let half = MetricMeasureSpace::from_parts("h", vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], None).unwrap();
    assert!(close(lp_norm(&half, &[0.0, 1.0], 1.0, &half.all_points()), 0.5, 1e-15));
}

#[test]
fn gradient_membership_examples() {
    let s = two_point();
    let all = s.all_points();
    let ok = is_generalized_gradient(&s, &[0.0, 1.0], &[0.5, 0.5], &all);
    assert!(ok.holds);
    assert_eq!(ok.slack, 0.0);
    let bad = is_generalized_gradient(&s, &[0.0, 1.0], &[0.4, 0.4], &all);
    assert!(!bad.holds);
    assert_eq!(bad.worst_pair, Some((0, 1)));
    assert!(is_generalized_gradient(&s, &[2.0, 2.0], &[0.0, 0.0], &all).holds);
}

#[test]
fn minimal_gradient_examples() {
    let s = two_point();
    let all = s.all_points();
    let r = minimal_gradient(&s, &[0.0, 1.0], 1.0, &all).unwrap();
    assert!(close(r.value, 1.0, 1e-12));
    assert_eq!(r.method, SolverMethod::ExactLp);
    let Evidence::DualCertificate { primal, dual, .. } = r.evidence else { panic!("expected a dual certificate") };
    assert!(close(primal, dual, 1e-12));

    let p3 = path([1.0 / 3.0; 3]);
    let all3 = p3.all_points();
    let r = minimal_gradient(&p3, &[0.0, 0.0, 1.0], 1.0, &all3).unwrap();
    assert!(close(r.value, 2.0 / 3.0, 1e-12), "{}", r.value);
    assert!(is_generalized_gradient(&p3, &[0.0, 0.0, 1.0], &r.g, &all3).holds);

    for p in [0.5, 1.0, 2.0, 3.5] {
        let r = minimal_gradient(&p3, &[4.0, 4.0, 4.0], p, &all3).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.g.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn minimal_gradient_errors() {
    let s = two_point();
    let one = PointSet::new(2, [0]);
    assert_eq!(minimal_gradient(&s, &[0.0, 1.0], 1.0, &one), Err(GradientError::DegenerateDomain(1)));
    assert_eq!(minimal_gradient(&s, &[0.0, 1.0], 0.0, &s.all_points()), Err(GradientError::BadExponent(0.0)));
}

#[test]
fn two_point_closed_forms() {
    // g1 + g2 ≥ 1 with equal weights: p > 1 splits evenly, p < 1 puts all mass on one point.
    let s = two_point();
    let all = s.all_points();
    let r = minimal_gradient(&s, &[0.0, 1.0], 2.0, &all).unwrap();
    assert_eq!(r.method, SolverMethod::InteriorPoint);
    assert!(close(r.value, 0.5f64.sqrt(), 1e-9), "{}", r.value);
    let r = minimal_gradient(&s, &[0.0, 1.0], 0.5, &all).unwrap();
    assert_eq!(r.method, SolverMethod::VertexEnumeration);
    assert!(close(r.value, 1.0, 1e-12), "{}", r.value);
}

#[test]
fn path_interior_point_matches_closed_form() {
    // u = (0,0,1) on the path: g2 + g3 ≥ 2, g1 + g3 ≥ 1. For p = 2 the
    // optimum has g1 = 0 and g2 = g3 = 1, value sqrt(2/3).
    let p3 = path([1.0 / 3.0; 3]);
    let r = minimal_gradient(&p3, &[0.0, 0.0, 1.0], 2.0, &p3.all_points()).unwrap();
    assert!(close(r.value, (2.0f64 / 3.0).sqrt(), 1e-9), "{}", r.value);
    let Evidence::Kkt { residual, violation, .. } = r.evidence else { panic!("expected KKT evidence") };
    assert!(residual <= 1e-8 && violation <= 1e-10);
}

#[test]
fn m_norm_examples() {
    let s = two_point();
    assert!(close(m_norm(&s, &[3.0, 3.0], 1.0).unwrap(), 6.0, 1e-15));
    assert!(close(m_norm(&s, &[0.0, 1.0], 1.0).unwrap(), 2.0, 1e-12));
    assert_eq!(m_norm(&s, &[0.0, 0.0], 1.0).unwrap(), 0.0);
}

#[test]
fn mean_and_shift_examples() {
    let s = two_point();
    assert!(close(ball_mean(&s, &[0.0, 1.0], &s.all_points()).unwrap(), 0.5, 1e-15));
    let p3 = path([1.0 / 3.0; 3]);
    let all = p3.all_points();
    assert!(close(ball_mean(&p3, &[0.0, 0.0, 1.0], &all).unwrap(), 1.0 / 3.0, 1e-15));
    assert!(close(ball_mean(&p3, &[2.5, 2.5, 2.5], &all).unwrap(), 2.5, 1e-15));
    assert_eq!(ball_mean(&p3, &[0.0; 3], &PointSet::empty(3)), Err(GradientError::EmptySet));

    let q1 = best_constant_shift(&p3, &[0.0, 0.0, 1.0], 1.0, &all).unwrap();
    assert_eq!(q1.gamma, 0.0);
    assert!(close(q1.value, 1.0 / 3.0, 1e-15));
    let q2 = best_constant_shift(&p3, &[0.0, 0.0, 1.0], 2.0, &all).unwrap();
    assert!(close(q2.gamma, 1.0 / 3.0, 1e-15));
    assert!(close(q2.value, (2.0f64 / 9.0).sqrt(), 1e-14));
    let c = best_constant_shift(&p3, &[7.0; 3], 1.5, &all).unwrap();
    assert_eq!((c.gamma, c.value), (7.0, 0.0));
}

#[test]
fn golden_section_against_dense_scan() {
    let samples = [(0.0, 1.0), (0.3, 2.0), (1.0, 0.5), (2.0, 0.25)];
    let q = 3.0;
    let f = |g: f64| samples.iter().map(|&(v, w)| w * (v - g).abs().powf(q)).sum::<f64>() / 3.75;
    let got = shift_weighted(&samples, q);
    let scan = (0..=20000).map(|k| f(2.0 * k as f64 / 20000.0)).fold(f64::INFINITY, f64::min);
    assert!(got.value.powf(q) <= scan * (1.0 + 1e-9));
}
