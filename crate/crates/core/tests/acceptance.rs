//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::time::{Duration, Instant};

use hajlasz_core::constructions::{bump, check_family, construction1, construction2, verify_halfmass, DEFAULT_J_MAX};
use hajlasz_core::corpus::{cantor, grid, random_space, snowflake, vanishing_density, CorpusSpec};
use hajlasz_core::embeddings::{chaining_trace, estimate_constant, exp_integral, InequalityCase, InequalityKind, TestPair};
use hajlasz_core::extraction::{iteration_check, pipeline_verify, CaseTag, ExtractionError, ExtractionReport, IterationInstance, PipelineParams};
use hajlasz_core::geometry::{lower_mass_constant, phi, uniform_perfectness};
use hajlasz_core::hajlasz::{minimal_gradient, Evidence};
use hajlasz_core::mmspace::{Ball, MetricMeasureSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-ball verdicts of the pipelines.
const PIPELINE_RTOL: f64 = 1e-9;
const SKIP_MAX: f64 = 0.20;
const LP_RTOL: f64 = 1e-7;
const KKT_MAX: f64 = 1e-8;
const QP_TOL: f64 = 1e-6;
const QP_ITERS: usize = 1_000_000;
const TREND_SPREAD: f64 = 0.25;
const BLOWUP_MIN: f64 = 0.20;
const SNOWFLAKE_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn log3_2() -> f64 {
    2f64.ln() / 3f64.ln()
}

fn run_pipeline(space: &MetricMeasureSpace, case: CaseTag, params: &PipelineParams) -> Result<ExtractionReport, String> {
    match pipeline_verify(space, case, params) {
        Ok(r) => Ok(r),
        Err(ExtractionError::ConsequenceViolated { report, witness }) => {
            let row = &report.rows[witness];
            Err(format!("{case} on {}: ball {:?} mass {} < bound {}", space.name(), row.ball, row.mass, row.bound))
        }
        Err(e) => Err(format!("{case} on {}: {e}", space.name())),
    }
}

fn ac1() -> Outcome {
    let mut spaces = vec![
        (grid(1, 65).unwrap(), 1.0),
        (cantor(5).unwrap(), log3_2()),
        (snowflake(&cantor(5).unwrap(), 0.7).unwrap(), log3_2() / 0.7),
    ];
    for seed in 0..20 {
        spaces.push((random_space(12, seed).unwrap(), 2.0));
    }
    let mut rows = 0;
    for (space, s) in &spaces {
        let params = PipelineParams { s: *s, p: s / 2.0, sigma: 2.0, ..Default::default() };
        match run_pipeline(space, CaseTag::Thm41b, &params) {
            Ok(r) => rows += r.rows.len(),
            Err(e) => return ok(false, e),
        }
    }
    ok(true, format!("{} spaces, {rows} balls", spaces.len()))
}

fn ac2() -> Outcome {
    let spaces = [(grid(1, 65).unwrap(), 1.0), (cantor(5).unwrap(), log3_2())];
    let cases = [CaseTag::Thm41c, CaseTag::Thm44b, CaseTag::Thm44c, CaseTag::Thm51, CaseTag::Thm54, CaseTag::Thm61, CaseTag::Thm62];
    let mut notes = Vec::new();
    let mut pass = true;
    for (space, s) in &spaces {
        for case in cases {
            let p = match case {
                CaseTag::Thm61 | CaseTag::Thm62 => 2.0 * s,
                _ => s / 2.0,
            };
            let params = PipelineParams { s: *s, p, sigma: 2.0, gamma: 1.0, beta: 2.0, ..Default::default() };
            let t = Instant::now();
            match run_pipeline(space, case, &params) {
                Ok(r) => {
                    let frac = r.skipped_fraction();
                    if frac > SKIP_MAX {
                        pass = false;
                    }
                    notes.push(format!("{case}/{}: {} rows, skipped {:.1}%, {:.1}s", space.name(), r.rows.len(), 100.0 * frac, t.elapsed().as_secs_f64()));
                }
                Err(e) => {
                    pass = false;
                    notes.push(e);
                }
            }
        }
    }
    ok(pass, notes.join("; "))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_lp = 0.0f64;
    for k in 0..100u64 {
        let n = if k % 2 == 0 { 4 } else { 5 };
        let space = random_space(n, 1000 + k).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let got = minimal_gradient(&space, &u, 1.0, &space.all_points()).unwrap().value;
        let want = common::lp_by_vertices(space.weights(), &common::pair_constraints(&space, &u));
        let err = (got - want).abs() / want.abs().max(1e-300);
        worst_lp = worst_lp.max(err);
    }
    let mut worst_kkt = 0.0f64;
    let mut worst_qp = 0.0f64;
    for k in 0..20u64 {
        let n = if k % 2 == 0 { 4 } else { 5 };
        let space = random_space(n, 2000 + k).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let rep = minimal_gradient(&space, &u, 2.0, &space.all_points()).unwrap();
        match rep.evidence {
            Evidence::Kkt { residual, .. } => worst_kkt = worst_kkt.max(residual),
            _ => return ok(false, "p = 2 did not report KKT evidence"),
        }
        let g = common::qp_by_descent(space.weights(), &common::pair_constraints(&space, &u), QP_ITERS);
        let reference = space.weights().iter().zip(&g).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
        worst_qp = worst_qp.max((rep.value - reference).abs() / (1.0 + reference));
    }
    ok(
        worst_lp <= LP_RTOL && worst_kkt <= KKT_MAX && worst_qp <= QP_TOL,
        format!("LP rel err {worst_lp:.2e}, KKT {worst_kkt:.2e}, QP gap {worst_qp:.2e}"),
    )
}

fn conclusion_oracle(i: &IterationInstance) -> bool {
    let (p, q) = (i.p, i.q);
    i.a_seq[0].powf(1.0 - p / q) * i.rho.powf(p) * i.tau.powf(p * q / (q - p)) >= 1.0 - 1e-12
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut accepted = 0;
    let mut draws = 0;
    while accepted < 1000 {
        draws += 1;
        let p: f64 = rng.random_range(0.2..3.0);
        let q = p * rng.random_range(1.1..4.0);
        let tau: f64 = rng.random_range(1.05..4.0);
        let rho = 10f64.powf(rng.random_range(-2.0..1.0));
        let n = rng.random_range(1..25);
        let mut a_seq = vec![10f64.powf(rng.random_range(-6.0..0.0))];
        for j in 1..n {
            let cap = (rho * tau.powi(j as i32) * a_seq[j - 1].powf(1.0 / p)).powf(q);
            a_seq.push(cap.min(1.0) * rng.random_range(0.5..1.0));
        }
        let a = a_seq.iter().copied().fold(f64::INFINITY, f64::min);
        let b = a_seq.iter().copied().fold(0.0, f64::max);
        let inst = IterationInstance { a_seq, a, b, p, q, rho, tau };
        let v = iteration_check(&inst).unwrap();
        if !v.hypothesis {
            continue;
        }
        accepted += 1;
        if !v.conclusion || !conclusion_oracle(&inst) {
            return ok(false, format!("hypothesis holds but conclusion fails: {inst:?}"));
        }
    }
    for k in 0..1000 {
        let p: f64 = rng.random_range(0.2..3.0);
        let q = p * rng.random_range(1.1..4.0);
        let tau: f64 = rng.random_range(0.5..4.0);
        let rho = 10f64.powf(rng.random_range(-2.0..1.0));
        let factor = rho.powf(p) * tau.powf(p * q / (q - p));
        let a1 = factor.powf(-q / (q - p)) * rng.random_range(0.01..0.99);
        let n = rng.random_range(1..25);
        let mut a_seq = vec![a1];
        for j in 1..n {
            let next = if k % 2 == 0 {
                // Kept positive so the only way out is a failing step.
                ((rho * tau.powi(j as i32) * a_seq[j - 1].powf(1.0 / p)).powf(q) * rng.random_range(0.1..1.0)).max(1e-300)
            } else {
                10f64.powf(rng.random_range(-8.0..1.0))
            };
            a_seq.push(next);
        }
        let a = a_seq.iter().copied().fold(f64::INFINITY, f64::min);
        let b = a_seq.iter().copied().fold(0.0, f64::max);
        let inst = IterationInstance { a_seq, a, b, p, q, rho, tau };
        let v = iteration_check(&inst).unwrap();
        if conclusion_oracle(&inst) || v.conclusion {
            return ok(false, format!("engineered instance satisfies the conclusion: {inst:?}"));
        }
        if v.hypothesis || v.first_failure.is_none() {
            return ok(false, format!("conclusion fails but hypothesis holds: {inst:?}"));
        }
    }
    ok(true, format!("1000 valid of {draws} draws, 1000 violations"))
}

fn ac5() -> Outcome {
    let mut families = 0;
    let mut halfmass = 0;
    for (_, space, _) in common::corpus() {
        let diam = space.diameter();
        let lambda = uniform_perfectness(&space, space.auto_resolution()).lambda_eff;
        for x in space.point_ids() {
            let radii: Vec<f64> = space.critical_radii(x).iter().copied().filter(|&r| r <= diam).collect();
            let mut last = 0.0;
            for &r in &radii {
                let f = phi(&space, x, r);
                let half = space.ball_measure(Ball::open(x, r)) / 2.0;
                if f < last || !(0.0..r).contains(&f) {
                    return ok(false, format!("phi monotonicity or range fails at ({x}, {r}) on {}", space.name()));
                }
                if space.ball_measure(Ball::open(x, f)) > half || half > space.ball_measure(Ball::closed(x, f)) {
                    return ok(false, format!("phi half-mass inequalities fail at ({x}, {r}) on {}", space.name()));
                }
                last = f;
                let c1 = construction1(&space, Ball::open(x, r), DEFAULT_J_MAX).unwrap();
                let check = check_family(&space, &c1);
                if !(check.gradients_hold && check.lipschitz_hold) {
                    return ok(false, format!("construction1 at ({x}, {r}) on {}: {check:?}", space.name()));
                }
                families += 1;
                let Some(l) = lambda else { continue };
                let Ok(c2) = construction2(&space, Ball::open(x, r), l, DEFAULT_J_MAX) else { continue };
                let check = check_family(&space, &c2);
                if !(check.gradients_hold && check.lipschitz_hold) {
                    return ok(false, format!("construction2 at ({x}, {r}) on {}: {check:?}", space.name()));
                }
                families += 1;
                for m in &c2.members {
                    for gamma in [0.0, 0.5, 1.0, 10.0] {
                        let h = verify_halfmass(&space, &c2, m.j, gamma).unwrap();
                        if !h.holds {
                            return ok(false, format!("half-mass fails at ({x}, {r}), j = {}, gamma = {gamma} on {}", m.j, space.name()));
                        }
                        halfmass += 1;
                    }
                }
            }
        }
    }
    ok(true, format!("{families} families, {halfmass} half-mass checks"))
}

fn ac6() -> Outcome {
    let space = grid(1, 65).unwrap();
    let (sigma, s, p) = (2.0f64, 1.0, 0.5);
    let (kappa, _) = lower_mass_constant(&space, s, space.min_positive_distance());
    let b = kappa * sigma.powf(-s);
    let h = 1.0 / 64.0;
    let inputs = [
        (32, 0.25, 4.0, 8.0),
        (32, 0.25, 0.0, 8.0),
        (16, 0.25, 2.0, 4.0),
        (48, 0.25, 2.0, 8.0),
        (32, 0.5, 8.0, 16.0),
        (32, 0.5, 0.0, 4.0),
        (20, 0.125, 1.0, 3.0),
        (40, 0.125, 0.0, 2.0),
        (24, 0.375, 3.0, 9.0),
        (36, 0.3, 0.0, 10.0),
    ];
    let mut chains = 0;
    for (x, r0, r, big_r) in inputs {
        let (u, g) = bump(&space, x, r * h, big_r * h).unwrap();
        let cert = match chaining_trace(&space, Ball::open(x, r0), sigma, s, p, b, &u, &g, None) {
            Ok(c) => c,
            Err(e) => return ok(false, format!("trace at {x}: {e}")),
        };
        let steps_ok = cert.chains.iter().all(|c| c.verified && c.steps.iter().all(|st| st.joasia.hypothesis && st.joasia.conclusion && st.distance < st.radius));
        if !(cert.verified && steps_ok && cert.piotr_holds && cert.levels.iter().all(|l| l.chebyshev_holds)) {
            return ok(false, format!("trace at {x} not verified"));
        }
        chains += cert.chains.len();
    }
    ok(true, format!("10 traces, {chains} chains, no stuck chains"))
}

fn sobolev_sup(space: &MetricMeasureSpace) -> f64 {
    let case = InequalityCase::new(InequalityKind::Sobolev, 1.0, 0.5, 2.0);
    let diam = space.diameter();
    let mut sup = 0.0f64;
    for x in space.point_ids() {
        for &r in space.critical_radii(x).iter().filter(|&&r| r <= diam) {
            let ball = Ball::open(x, r);
            let fam = construction1(space, ball, DEFAULT_J_MAX).unwrap();
            let pairs: Vec<TestPair> = fam.members.iter().map(|m| TestPair { id: format!("c1:{}", m.j), u: m.u.clone(), g: m.g.clone() }).collect();
            sup = sup.max(estimate_constant(space, &case, &pairs, &[ball]).unwrap().constant);
        }
    }
    sup
}

fn ac7() -> Outcome {
    let grids: Vec<f64> = [17, 33, 65].iter().map(|&n| sobolev_sup(&grid(1, n).unwrap())).collect();
    let (lo, hi) = grids.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = (hi - lo) / lo;
    let vanishing: Vec<f64> = [32, 64, 128].iter().map(|&n| sobolev_sup(&vanishing_density(n, 1.0).unwrap())).collect();
    let growth: Vec<f64> = vanishing.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let pass = spread <= TREND_SPREAD && growth.iter().all(|&g| g >= BLOWUP_MIN);
    ok(pass, format!("grid sups {grids:.4?} spread {:.1}%; vanishing sups {vanishing:.4?} growth {growth:.3?}", 100.0 * spread))
}

fn ac8() -> Outcome {
    let mut checked = 0;
    for (spec, space, s) in common::corpus() {
        let res = space.auto_resolution();
        let (truth, _) = lower_mass_constant(&space, s, res);
        for case in [CaseTag::Thm41b, CaseTag::Thm41c, CaseTag::Thm51, CaseTag::Thm61] {
            let p = if case == CaseTag::Thm61 { 2.0 * s } else { s / 2.0 };
            let params = PipelineParams { s, p, resolution: Some(res), ..Default::default() };
            let rep = match pipeline_verify(&space, case, &params) {
                Ok(r) => r,
                Err(ExtractionError::NotUniformlyPerfect(_)) if case.uses_lambda() => continue,
                Err(e) => return ok(false, format!("{case} on {spec}: {e}")),
            };
            if rep.kappa.is_finite() && rep.kappa > truth * (1.0 + PIPELINE_RTOL) {
                return ok(false, format!("{case} on {spec}: global kappa {} > {truth}", rep.kappa));
            }
            for row in &rep.rows {
                let local = row.mass / row.ball.radius.powf(row.exponent);
                if row.kappa > local * (1.0 + PIPELINE_RTOL) {
                    return ok(false, format!("{case} on {spec}: ball kappa {} > {local} at {:?}", row.kappa, row.ball));
                }
            }
            checked += 1;
        }
        let n = space.len();
        let u = vec![2.5; n];
        let g = vec![1.0; n];
        let v = exp_integral(&space, Ball::open(0, space.diameter()), 2.0, 1.0, 1.0, s, &u, &g).unwrap();
        if v != 1.0 {
            return ok(false, format!("exp_integral of a constant is {v} on {spec}"));
        }
        for alpha in [0.5, 0.7] {
            if matches!(spec, CorpusSpec::Snowflake { .. }) {
                break;
            }
            let flake = snowflake(&space, alpha).unwrap();
            let (a, _) = lower_mass_constant(&flake, s / alpha, res.powf(alpha));
            if (a - truth).abs() > SNOWFLAKE_TOL * truth {
                return ok(false, format!("snowflake identity off by {:.2e} on {spec}", (a - truth).abs() / truth));
            }
        }
    }
    ok(true, format!("{checked} pipeline reports"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1", ac1, Duration::from_secs(60)),
        ("AC2", ac2, Duration::from_secs(300)),
        ("AC3", ac3, Duration::from_secs(120)),
        ("AC4", ac4, Duration::from_secs(5)),
        ("AC5", ac5, Duration::from_secs(30)),
        ("AC6", ac6, Duration::from_secs(30)),
        ("AC7", ac7, Duration::from_secs(120)),
        ("AC8", ac8, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (name, f, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|a| a == name) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let elapsed = t.elapsed();
        let pass = out.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{name} {} ({:.2}s of {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
