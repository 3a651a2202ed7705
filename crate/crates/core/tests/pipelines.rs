//! End-to-end runs of the reverse implications.

use hajlasz_core::constructions::{construction1, DEFAULT_J_MAX};
use hajlasz_core::corpus::{cantor, random_space};
use hajlasz_core::extraction::{extract_kappa, extract_relative_kappa, pipeline_verify, BallPath, CaseTag, ExtractionError, KappaInputs, PipelineParams};
use hajlasz_core::geometry::{lower_mass_constant, uniform_perfectness};
use hajlasz_core::mmspace::{Ball, MetricMeasureSpace};
use proptest::prelude::*;

fn path() -> MetricMeasureSpace {
    let d = vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0];
    MetricMeasureSpace::from_parts("path", d, vec![1.0 / 3.0; 3], None).unwrap()
}

/// Sup over the first construction of the Sobolev ratio on `B(x,r)`, summed
/// point by point.
fn sobolev_sup_by_hand(space: &MetricMeasureSpace, ball: Ball, s: f64, p: f64, sigma: f64) -> f64 {
    let q = s * p / (s - p);
    let n = space.len();
    let inside: Vec<usize> = (0..n).filter(|&y| space.d(ball.center, y) < ball.radius).collect();
    let big: Vec<usize> = (0..n).filter(|&y| space.d(ball.center, y) < sigma * ball.radius).collect();
    let mass = |set: &[usize]| set.iter().map(|&y| space.weight(y)).sum::<f64>();
    let avg = |set: &[usize], f: &dyn Fn(usize) -> f64, e: f64| (set.iter().map(|&y| space.weight(y) * f(y).abs().powf(e)).sum::<f64>() / mass(set)).powf(1.0 / e);
    let fam = construction1(space, ball, DEFAULT_J_MAX).unwrap();
    fam.members
        .iter()
        .map(|m| {
            let lhs = avg(&inside, &|y| m.u[y], q);
            let core = ball.radius * avg(&big, &|y| m.g[y], p) + avg(&big, &|y| m.u[y], p);
            lhs / ((mass(&big) / ball.radius.powf(s)).powf(1.0 / p) * core)
        })
        .fold(0.0, f64::max)
}

#[test]
fn path_rows_match_hand_computation() {
    let params = PipelineParams { resolution: Some(0.5), ..Default::default() };
    let rep = pipeline_verify(&path(), CaseTag::Thm41b, &params).unwrap();
    for row in &rep.rows {
        let c = sobolev_sup_by_hand(&path(), row.ball, 1.0, 0.5, 2.0);
        assert!((row.constant - c).abs() <= 1e-12 * c, "{row:?}");
        let kappa = 0.5 * (8.0 * c).powf(-0.5);
        assert!((row.kappa - kappa).abs() <= 1e-12 * kappa);
        assert!(row.mass >= kappa * row.ball.radius);
    }
}

#[test]
fn cantor_spot_balls_match_hand_computation() {
    let space = cantor(5).unwrap();
    let s = 2f64.ln() / 3f64.ln();
    let params = PipelineParams { s, p: s / 2.0, ..Default::default() };
    let rep = pipeline_verify(&space, CaseTag::Thm41b, &params).unwrap();
    for row in rep.rows.iter().step_by(97) {
        let c = sobolev_sup_by_hand(&space, row.ball, s, s / 2.0, 2.0);
        assert!((row.constant - c).abs() <= 1e-10 * c);
        let direct = space.point_ids().filter(|&y| space.d(row.ball.center, y) < row.ball.radius).map(|y| space.weight(y)).sum::<f64>();
        assert!(direct >= row.bound * (1.0 - 1e-9));
    }
}

/// Points of a line: a light point at 0, a heavy atom at 0.001 and light
/// points at 0.1, 0.2, …, 1.
fn heavy_line() -> MetricMeasureSpace {
    let mut xs = vec![0.0, 0.001];
    let mut w = vec![0.1, 10.0];
    for k in 1..=10 {
        xs.push(k as f64 / 10.0);
        w.push(0.1);
    }
    let n = xs.len();
    let d = (0..n * n).map(|k| (xs[k / n] - xs[k % n]).abs()).collect();
    MetricMeasureSpace::from_parts("heavy", d, w, None).unwrap()
}

#[test]
fn thin_balls_go_through_fat_balls() {
    let space = heavy_line();
    for case in [CaseTag::Thm41c, CaseTag::Thm51, CaseTag::Thm44c, CaseTag::Thm54] {
        let params = PipelineParams { s: 1.0, p: 0.5, resolution: Some(0.2), ..Default::default() };
        let rep = pipeline_verify(&space, case, &params).unwrap();
        let lambda = rep.lambda_eff.unwrap();
        let fat: Vec<_> = rep.rows.iter().filter(|r| matches!(r.path, BallPath::FatBall { .. })).collect();
        assert!(!fat.is_empty(), "{case}");
        for row in fat {
            let BallPath::FatBall { ball } = row.path else { unreachable!() };
            assert!(ball.radius > lambda * row.ball.radius && ball.radius <= row.ball.radius);
            assert!(space.ball_subset(ball, row.ball));
        }
    }
}

#[test]
fn relative_rows_use_nested_balls() {
    let space = random_space(10, 5).unwrap();
    let params = PipelineParams { s: 2.0, p: 1.0, ..Default::default() };
    let rep = pipeline_verify(&space, CaseTag::Thm44b, &params).unwrap();
    for row in &rep.rows {
        let outer = row.outer.unwrap();
        assert!(space.ball_subset(row.ball, outer));
        assert!(outer.radius >= row.ball.radius);
    }
}

#[test]
fn globalized_kappa_bounds_the_lower_mass_constant() {
    let space = cantor(5).unwrap();
    let s = 2f64.ln() / 3f64.ln();
    for case in [CaseTag::Thm41b, CaseTag::Thm41c, CaseTag::Thm51, CaseTag::Thm61] {
        let p = if case == CaseTag::Thm61 { 2.0 * s } else { s / 2.0 };
        let rep = pipeline_verify(&space, case, &PipelineParams { s, p, ..Default::default() }).unwrap();
        let (truth, _) = lower_mass_constant(&space, s, rep.resolution);
        assert!(rep.kappa <= truth * (1.0 + 1e-9), "{case}: {} > {truth}", rep.kappa);
    }
}

#[test]
fn missing_perfectness_is_reported() {
    // Two far clusters: annuli around either cluster are empty.
    let d = vec![0.0, 0.01, 10.0, 0.01, 0.0, 10.0, 10.0, 10.0, 0.0];
    let space = MetricMeasureSpace::from_parts("gap", d, vec![1.0; 3], None).unwrap();
    assert!(uniform_perfectness(&space, 0.03).lambda_eff.is_none());
    let r = pipeline_verify(&space, CaseTag::Thm41c, &PipelineParams { resolution: Some(0.03), ..Default::default() });
    assert!(matches!(r, Err(ExtractionError::NotUniformlyPerfect(_))));
}

fn inputs(c: f64, c1: f64, lambda: f64) -> KappaInputs {
    KappaInputs {
        s: 1.3,
        p: Some(0.6),
        c_s: Some(c),
        c_p: Some(c),
        c_h: Some(c),
        c2: Some(c),
        c1: Some(c1),
        gamma: Some(1.5),
        lambda: Some(lambda),
        beta: Some(2.5),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sobolev_reverse_holds_on_random_spaces(seed in 0u64..100_000, n in 3usize..10) {
        let space = random_space(n, seed).unwrap();
        let r = pipeline_verify(&space, CaseTag::Thm41b, &PipelineParams { s: 2.0, p: 1.0, ..Default::default() });
        prop_assert!(r.is_ok(), "{:?}", r.err());
    }

    #[test]
    fn holder_reverse_holds_on_random_spaces(seed in 0u64..100_000, n in 3usize..10) {
        let space = random_space(n, seed).unwrap();
        for case in [CaseTag::Thm61, CaseTag::Thm62] {
            match pipeline_verify(&space, case, &PipelineParams { s: 2.0, p: 4.0, ..Default::default() }) {
                Ok(_) | Err(ExtractionError::NotUniformlyPerfect(_)) => {}
                Err(e) => prop_assert!(false, "{case}: {e}"),
            }
        }
    }

    #[test]
    fn kappa_is_monotone(c in 0.05f64..20.0, c1 in 0.05f64..5.0, lambda in 0.01f64..0.18) {
        let h = 1.01;
        for case in [CaseTag::Thm41b, CaseTag::Thm41c, CaseTag::Thm51, CaseTag::Thm61] {
            let base = extract_kappa(case, &inputs(c, c1, lambda)).unwrap();
            prop_assert!(extract_kappa(case, &inputs(c * h, c1, lambda)).unwrap() < base);
            prop_assert!(extract_kappa(case, &inputs(c, c1, lambda * h)).unwrap() >= base);
            prop_assert!(extract_kappa(case, &inputs(c, c1 * h, lambda)).unwrap() >= base);
        }
        for case in [CaseTag::Thm44b, CaseTag::Thm44c, CaseTag::Thm54, CaseTag::Thm62] {
            let base = extract_relative_kappa(case, &inputs(c, c1, lambda)).unwrap().kappa;
            prop_assert!(extract_relative_kappa(case, &inputs(c * h, c1, lambda)).unwrap().kappa < base);
            prop_assert!(extract_relative_kappa(case, &inputs(c, c1, lambda * h)).unwrap().kappa >= base);
        }
    }
}
