//! Ball-by-ball execution of the reverse implications.
//!
//! For every candidate ball the proof's own test family is built, the
//! constant that family demands is measured, and the lower mass bound that
//! the argument derives from that constant is checked against the actual
//! measure.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{extract_kappa, extract_relative_kappa, iteration_check_rtol, proven_kappa_beta, CaseTag, ExtractionError, IterationInstance, KappaInputs};
use crate::constructions::{bump, construction1, construction2, ConstructionError, ConstructionFamily, DEFAULT_J_MAX};
use crate::embeddings::{evaluate_on, InequalityCase, InequalityKind};
use crate::geometry::{fat_ball, phi, uniform_perfectness, GeometryError};
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::num::{ge_rel, powf};

/// Relative tolerance of every per-ball verdict.
pub const VERDICT_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub s: f64,
    /// Ignored by the exponential cases, which use `p = s`.
    pub p: f64,
    pub sigma: f64,
    pub c1: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Smallest radius considered; `None` means three times the smallest
    /// distance.
    pub resolution: Option<f64>,
    pub j_max: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams { s: 1.0, p: 0.5, sigma: 2.0, c1: 1.0, gamma: 1.0, beta: 2.0, resolution: None, j_max: DEFAULT_J_MAX }
    }
}

/// How a ball was handled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BallPath {
    /// The test family lives on the ball itself.
    Direct,
    /// The ball is thin; the family lives on a fat ball inside it and the
    /// bound picks up a factor `λ^e`.
    FatBall { ball: Ball },
    /// The ball is the whole space and the bound is elementary.
    WholeSpace,
}

/// The iteration lemma instance behind one verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    pub terms: usize,
    pub hypothesis: bool,
    pub conclusion: bool,
    pub implied_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCheck {
    /// `B(x, r)`.
    pub ball: Ball,
    /// `B(y, R) ⊇ B(x, r)` for relative bounds.
    pub outer: Option<Ball>,
    pub path: BallPath,
    /// Constant demanded by the test family on this ball.
    pub constant: f64,
    pub family_size: usize,
    /// Demanded ratio of the last family member over the sup.
    pub tail_ratio: f64,
    /// κ used for this ball, including the `λ^e` factor on the fat-ball path.
    pub kappa: f64,
    pub exponent: f64,
    /// `μ(B)`, or `μ(B)/μ(B₀)` for relative bounds.
    pub mass: f64,
    /// `κ r^e`, or `κ (r/R)^e`.
    pub bound: f64,
    pub iteration: Option<IterationLog>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBall {
    pub ball: Ball,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub case: CaseTag,
    pub params: PipelineParams,
    pub resolution: f64,
    pub lambda: Option<f64>,
    pub lambda_eff: Option<f64>,
    /// `C_S`, `C_P`, `C₂` or `C_H`.
    pub constant_name: String,
    /// Sup of the per-ball constants.
    pub constant_sup: f64,
    /// The explicit formula evaluated at `constant_sup`.
    pub formula_kappa: f64,
    /// A κ valid for every checked ball: the formula at `constant_sup` with
    /// the thin-ball correction, and for exponential integrability in the
    /// relative form the exponent the iteration actually yields.
    pub kappa: f64,
    pub exponent: f64,
    pub rows: Vec<BallCheck>,
    pub skipped: Vec<SkippedBall>,
    /// Number of candidate balls `B(x, r)`.
    pub candidates: usize,
    pub pass: bool,
}

impl ExtractionReport {
    /// Share of candidate balls that had to be skipped.
    pub fn skipped_fraction(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.skipped.len() as f64 / self.candidates as f64
        }
    }
}

/// Sup of the demanded ratio over a family, and the last ratio over the sup.
fn family_sup(
    space: &MetricMeasureSpace,
    case: &InequalityCase,
    r0: f64,
    ball: &PointSet,
    big: &PointSet,
    family: &ConstructionFamily,
) -> Result<(f64, f64), ExtractionError> {
    let mut sup = 0.0f64;
    let mut last = 0.0;
    for m in &family.members {
        last = evaluate_on(space, case, r0, ball, big, &m.u, &m.g)?.ratio;
        sup = sup.max(last);
    }
    Ok((sup, if sup > 0.0 { last / sup } else { 0.0 }))
}

/// `μ(B^1), …, μ(B^N), μ(B^{N+1})` of a ramp family.
fn family_masses(family: &ConstructionFamily) -> Vec<f64> {
    let mut a: Vec<f64> = family.members.iter().map(|m| m.inner_measure).collect();
    if let Some(m) = family.members.last() {
        a.push(m.next_measure);
    }
    a
}

fn iteration_log(a_seq: Vec<f64>, b: f64, p: f64, q: f64, rho: f64) -> Result<IterationLog, ExtractionError> {
    let a = a_seq.iter().copied().fold(f64::INFINITY, f64::min);
    let terms = a_seq.len();
    let v = iteration_check_rtol(&IterationInstance { a_seq, a, b: b * (1.0 + VERDICT_RTOL), p, q, rho, tau: 2.0 }, VERDICT_RTOL)?;
    Ok(IterationLog { p, q, rho, terms, hypothesis: v.hypothesis, conclusion: v.conclusion, implied_lower_bound: v.implied_lower_bound })
}

/// Candidate radii at `x`: critical radii in `[res, diam]`, then `diam`.
fn candidate_radii(space: &MetricMeasureSpace, x: usize, res: f64) -> Vec<f64> {
    let diam = space.diameter();
    let mut out: Vec<f64> = space.critical_radii(x).iter().copied().filter(|&c| c >= res && c <= diam).collect();
    if diam >= res && out.last() != Some(&diam) {
        out.push(diam);
    }
    out
}

/// Outer balls `B(y, R) ⊇ B(x, r)` with `R ≥ r`: the concentric ones at
/// every critical radius from `r` on, and for every other center the smallest
/// critical radius that swallows the inner ball.
fn outer_balls(space: &MetricMeasureSpace, inner: Ball, members: &PointSet) -> Vec<Ball> {
    let (x, r) = (inner.center, inner.radius);
    let mut out = vec![inner];
    out.extend(space.critical_radii(x).iter().filter(|&&c| c > r).map(|&c| Ball::open(x, c)));
    for y in space.point_ids().filter(|&y| y != x) {
        let reach = members.iter().map(|z| space.d(y, z)).fold(0.0f64, f64::max);
        if let Some(&c) = space.critical_radii(y).iter().find(|&&c| c > reach && c >= r) {
            out.push(Ball::open(y, c));
        }
    }
    out
}

struct Ctx<'a> {
    space: &'a MetricMeasureSpace,
    case: CaseTag,
    params: PipelineParams,
    lambda: f64,
    eval: InequalityCase,
    /// `p` and `q` of the iteration lemma.
    p_iter: f64,
    q_iter: f64,
    exponent: f64,
}

/// A ramp family on the ball the argument actually uses.
struct Prepared {
    family: ConstructionFamily,
    path: BallPath,
    /// Radius of the ball carrying the family.
    radius: f64,
    /// `λ^e` on the fat-ball path, `1` otherwise.
    correction: f64,
}

enum Plan {
    Family(Prepared),
    Bump { u: Vec<f64>, g: Vec<f64> },
    Whole,
}

fn construction_skip(e: ConstructionError) -> Result<Option<Plan>, ExtractionError> {
    match e {
        ConstructionError::ZeroPhi { .. } | ConstructionError::PreconditionRadius { .. } => Ok(None),
        other => Err(other.into()),
    }
}

impl Ctx<'_> {
    /// Builds the test functions for `B(x, r)`, or `None` with a logged
    /// reason when the discrete space does not support them.
    fn plan(&self, inner: Ball, skipped: &mut Vec<SkippedBall>) -> Result<Option<Plan>, ExtractionError> {
        let space = self.space;
        let (x, r) = (inner.center, inner.radius);
        let lambda = self.lambda;
        let mut skip = |reason: String| {
            skipped.push(SkippedBall { ball: inner, reason });
            Ok(None)
        };
        match self.case {
            CaseTag::Thm41b | CaseTag::Thm44b => {
                let family = construction1(space, inner, self.params.j_max)?;
                Ok(Some(Plan::Family(Prepared { family, path: BallPath::Direct, radius: r, correction: 1.0 })))
            }
            CaseTag::Thm41c | CaseTag::Thm44c | CaseTag::Thm51 | CaseTag::Thm54 => {
                let ph = phi(space, x, r);
                if ph > 0.0 && r <= 3.0 * ph / (lambda * lambda) {
                    return match construction2(space, inner, lambda, self.params.j_max) {
                        Ok(family) => Ok(Some(Plan::Family(Prepared { family, path: BallPath::Direct, radius: r, correction: 1.0 }))),
                        Err(e) => {
                            let reason = format!("{e}");
                            construction_skip(e)?;
                            skip(reason)
                        }
                    };
                }
                let fat = match fat_ball(space, x, r, lambda) {
                    Ok(f) => f,
                    Err(e @ (GeometryError::EmptyAnnulus { .. } | GeometryError::InclusionFailed { .. })) => {
                        return skip(format!("construction impossible: {e}"));
                    }
                    Err(e) => return Err(ExtractionError::BadParameters(format!("{e}"))),
                };
                let fb = fat.ball();
                match construction2(space, fb, lambda, self.params.j_max) {
                    Ok(family) => Ok(Some(Plan::Family(Prepared {
                        family,
                        path: BallPath::FatBall { ball: fb },
                        radius: fb.radius,
                        correction: powf(lambda, self.exponent),
                    }))),
                    Err(e) => {
                        let reason = format!("construction impossible on the fat ball: {e}");
                        construction_skip(e)?;
                        skip(reason)
                    }
                }
            }
            CaseTag::Thm61 | CaseTag::Thm62 => {
                if space.ball_is_everything(inner) {
                    return Ok(Some(Plan::Whole));
                }
                let has_annulus = space.point_ids().any(|w| {
                    let d = space.d(x, w);
                    d < r && d >= lambda * r
                });
                if !has_annulus {
                    return skip(format!("construction impossible: B({x}, {r}) minus B({x}, λr) is empty"));
                }
                let (u, g) = bump(space, x, 0.0, lambda * r)?;
                Ok(Some(Plan::Bump { u, g }))
            }
        }
    }

    fn kappa_inputs(&self, constant: f64) -> KappaInputs {
        let pr = &self.params;
        let mut k = KappaInputs { s: pr.s, p: Some(self.eval.p), lambda: Some(self.lambda), gamma: Some(pr.gamma), c1: Some(pr.c1), beta: Some(pr.beta), ..Default::default() };
        match self.case {
            CaseTag::Thm41b | CaseTag::Thm44b => k.c_s = Some(constant),
            CaseTag::Thm41c | CaseTag::Thm44c => k.c_p = Some(constant),
            CaseTag::Thm51 | CaseTag::Thm54 => k.c2 = Some(constant),
            CaseTag::Thm61 | CaseTag::Thm62 => k.c_h = Some(constant),
        }
        k
    }

    /// κ of the argument on a ball where the family needs no correction.
    fn direct_kappa(&self, constant: f64) -> Result<f64, ExtractionError> {
        let k = self.kappa_inputs(constant);
        let s = self.params.s;
        Ok(match self.case {
            // The literal formula carries the thin-ball factor λ^s.
            CaseTag::Thm41c => extract_kappa(self.case, &k)? / powf(self.lambda, s),
            CaseTag::Thm41b | CaseTag::Thm51 | CaseTag::Thm61 => extract_kappa(self.case, &k)?,
            CaseTag::Thm54 => proven_kappa_beta(&k)?.kappa,
            CaseTag::Thm44b | CaseTag::Thm44c | CaseTag::Thm62 => extract_relative_kappa(self.case, &k)?.kappa,
        })
    }

    /// `ρ` of the iteration lemma for a family of radius `rr` on the ball `B`
    /// (absolute) or inside `B₀` (relative).
    fn rho(&self, constant: f64, rr: f64, mass_b: f64, outer: Option<(f64, f64)>) -> f64 {
        let (s, p, lambda) = (self.params.s, self.eval.p, self.lambda);
        let (c1, gamma, beta) = (self.params.c1, self.params.gamma, self.params.beta);
        let q = self.q_iter;
        match (self.case, outer) {
            (CaseTag::Thm41b, _) => 8.0 * constant * powf(mass_b, 1.0 / q) / powf(rr, s / p),
            (CaseTag::Thm41c, _) => 24.0 * constant * powf(mass_b, 1.0 / q) / (lambda * lambda * powf(rr, s / p)),
            (CaseTag::Thm51, _) => {
                24.0 * powf(2.0 * s / gamma, 1.0 / gamma) * powf(constant, 1.0 / (2.0 * s)) * powf(mass_b, 1.0 / (2.0 * s)) / (c1 * lambda * lambda * rr)
            }
            (CaseTag::Thm44b, Some((big_r, m0))) => 8.0 * constant * big_r / (rr * powf(m0, 1.0 / s)),
            (CaseTag::Thm44c, Some((big_r, m0))) => 24.0 * constant * big_r / (lambda * lambda * rr * powf(m0, 1.0 / s)),
            (CaseTag::Thm54, Some((big_r, m0))) => {
                24.0 * big_r * powf(beta * s / gamma, 1.0 / gamma) * powf(constant, 1.0 / (beta * s))
                    / (c1 * lambda * lambda * rr * powf(m0, (beta - 1.0) / (beta * s)))
            }
            _ => f64::NAN,
        }
    }

    fn check(&self, inner: Ball, outer: Option<Ball>, plan: &Plan) -> Result<BallCheck, ExtractionError> {
        let space = self.space;
        let all = space.all_points();
        let mass_b = space.ball_measure(inner);
        let (b0, mass, scale) = match outer {
            Some(o) => {
                let m0 = space.ball_measure(o);
                (o, mass_b / m0, inner.radius / o.radius)
            }
            None => (inner, mass_b, inner.radius),
        };
        let e = self.exponent;
        let row = |path, constant, family_size, tail_ratio, kappa: f64, iteration| {
            let bound = kappa * powf(scale, e);
            BallCheck { ball: inner, outer, path, constant, family_size, tail_ratio, kappa, exponent: e, mass, bound, iteration, pass: ge_rel(mass, bound, VERDICT_RTOL) }
        };
        match plan {
            Plan::Whole => {
                let kappa = match outer {
                    None => space.total_measure() * powf(space.diameter(), -self.params.s),
                    Some(_) => 1.0,
                };
                Ok(row(BallPath::WholeSpace, 0.0, 0, 0.0, kappa, None))
            }
            Plan::Bump { u, g } => {
                let (ball, big) = match self.case {
                    CaseTag::Thm61 => (all.clone(), all.clone()),
                    _ => (space.ball_members(b0), space.ball_members(b0.dilate(self.params.sigma))),
                };
                let constant = evaluate_on(space, &self.eval, b0.radius, &ball, &big, u, g)?.ratio;
                Ok(row(BallPath::Direct, constant, 1, 1.0, self.direct_kappa(constant)?, None))
            }
            Plan::Family(prep) => {
                // The family's own ball stands in for B when there is no outer ball.
                let carrier = match (outer, prep.path) {
                    (Some(o), _) => o,
                    (None, BallPath::FatBall { ball }) => ball,
                    (None, _) => inner,
                };
                let ball = space.ball_members(carrier);
                let big = space.ball_members(carrier.dilate(self.params.sigma));
                let (constant, tail) = family_sup(space, &self.eval, carrier.radius, &ball, &big, &prep.family)?;
                let kappa = self.direct_kappa(constant)? * prep.correction;
                let family_ball = Ball::open(prep.family.base.center, prep.radius);
                let mass_family = space.ball_measure(family_ball);
                let outer_data = outer.map(|o| (o.radius, space.ball_measure(o)));
                let rho = self.rho(constant, prep.radius, mass_family, outer_data);
                let log = iteration_log(family_masses(&prep.family), mass_family, self.p_iter, self.q_iter, rho)?;
                Ok(row(prep.path, constant, prep.family.members.len(), tail, kappa, Some(log)))
            }
        }
    }
}

/// Runs the reverse implication `case` on every candidate ball of `space`.
///
/// Candidate radii are the critical radii in `[resolution, diam]` together
/// with `diam`. Relative cases pair each candidate with the outer balls of
/// [`outer_balls`]. Balls the discrete space cannot support are listed in
/// `skipped`. A failed verdict is returned as
/// [`ExtractionError::ConsequenceViolated`] carrying the full report.
pub fn pipeline_verify(space: &MetricMeasureSpace, case: CaseTag, params: &PipelineParams) -> Result<ExtractionReport, ExtractionError> {
    let pr = *params;
    let bad = |m: &str| Err(ExtractionError::BadParameters(m.into()));
    if !(pr.s > 0.0 && pr.s.is_finite()) {
        return bad("s must be positive");
    }
    if !(pr.sigma >= 1.0 && pr.sigma.is_finite()) {
        return bad("sigma must be at least 1");
    }
    let s = pr.s;
    let (eval, p_iter, q_iter, exponent, constant_name) = match case {
        CaseTag::Thm41b | CaseTag::Thm44b | CaseTag::Thm41c | CaseTag::Thm44c => {
            if !(pr.p > 0.0 && pr.p < s) {
                return bad("this case needs 0 < p < s");
            }
            let kind = match case {
                CaseTag::Thm41b => InequalityKind::Sobolev,
                CaseTag::Thm44b => InequalityKind::SobolevDoubling,
                CaseTag::Thm41c => InequalityKind::Poincare,
                _ => InequalityKind::PoincareDoubling,
            };
            let name = if matches!(case, CaseTag::Thm41b | CaseTag::Thm44b) { "C_S" } else { "C_P" };
            (InequalityCase::new(kind, s, pr.p, pr.sigma), pr.p, s * pr.p / (s - pr.p), s, name)
        }
        CaseTag::Thm51 | CaseTag::Thm54 => {
            if !(pr.c1 > 0.0 && pr.gamma > 0.0) {
                return bad("C1 and gamma must be positive");
            }
            if case == CaseTag::Thm54 && !(pr.beta > 1.0) {
                return Err(ExtractionError::BadBeta(pr.beta));
            }
            let (kind, q, e) = if case == CaseTag::Thm51 {
                (InequalityKind::Exponential, 2.0 * s, s)
            } else {
                (InequalityKind::ExponentialDoubling, pr.beta * s, pr.beta * s / (pr.beta - 1.0))
            };
            (InequalityCase::exponential(kind, s, pr.sigma, pr.c1, pr.gamma), s, q, e, "C2")
        }
        CaseTag::Thm61 | CaseTag::Thm62 => {
            if !(pr.p > s && pr.p.is_finite()) {
                return bad("this case needs p > s");
            }
            let kind = if case == CaseTag::Thm61 { InequalityKind::HolderGlobal } else { InequalityKind::HolderLocal };
            (InequalityCase::new(kind, s, pr.p, pr.sigma), pr.p, f64::NAN, s, "C_H")
        }
    };
    let resolution = pr.resolution.unwrap_or_else(|| space.auto_resolution());
    if !(resolution > 0.0) {
        return bad("resolution must be positive");
    }
    let (lambda_raw, lambda_eff) = if case.uses_lambda() {
        let up = uniform_perfectness(space, resolution);
        match up.lambda_eff {
            Some(l) => (up.lambda, Some(l)),
            None => return Err(ExtractionError::NotUniformlyPerfect(resolution)),
        }
    } else {
        (None, None)
    };
    let ctx = Ctx { space, case, params: pr, lambda: lambda_eff.unwrap_or(f64::NAN), eval, p_iter, q_iter, exponent };

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut candidates = 0;
    for x in space.point_ids() {
        for r in candidate_radii(space, x, resolution) {
            candidates += 1;
            let inner = Ball::open(x, r);
            let Some(plan) = ctx.plan(inner, &mut skipped)? else { continue };
            if case.is_relative() {
                let members = space.ball_members(inner);
                for outer in outer_balls(space, inner, &members) {
                    rows.push(ctx.check(inner, Some(outer), &plan)?);
                }
            } else {
                rows.push(ctx.check(inner, None, &plan)?);
            }
        }
    }

    let constant_sup = rows.iter().filter(|r| r.path != BallPath::WholeSpace).map(|r| r.constant).fold(0.0f64, f64::max);
    let k = ctx.kappa_inputs(constant_sup);
    let has_whole = rows.iter().any(|r| r.path == BallPath::WholeSpace);
    let lambda = ctx.lambda;
    let (formula_kappa, kappa) = if constant_sup > 0.0 {
        match case {
            CaseTag::Thm41b | CaseTag::Thm41c => {
                let f = extract_kappa(case, &k)?;
                (f, f)
            }
            CaseTag::Thm51 => {
                let f = extract_kappa(case, &k)?;
                (f, f * powf(lambda, s))
            }
            CaseTag::Thm61 => {
                let f = extract_kappa(case, &k)?;
                let whole = space.total_measure() * powf(space.diameter(), -s);
                (f, if has_whole { f.min(whole) } else { f })
            }
            CaseTag::Thm44b => {
                let f = extract_relative_kappa(case, &k)?.kappa;
                (f, f)
            }
            CaseTag::Thm44c => {
                let f = extract_relative_kappa(case, &k)?.kappa;
                (f, f * powf(lambda, s))
            }
            CaseTag::Thm54 => (extract_relative_kappa(case, &k)?.kappa, proven_kappa_beta(&k)?.kappa * powf(lambda, exponent)),
            CaseTag::Thm62 => {
                let f = extract_relative_kappa(case, &k)?.kappa;
                (f, f.min(1.0))
            }
        }
    } else {
        (f64::NAN, f64::NAN)
    };

    let failure = rows.iter().position(|r| !r.pass);
    let report = ExtractionReport {
        case,
        params: pr,
        resolution,
        lambda: lambda_raw,
        lambda_eff,
        constant_name: constant_name.into(),
        constant_sup,
        formula_kappa,
        kappa,
        exponent,
        rows,
        skipped,
        candidates,
        pass: failure.is_none(),
    };
    match failure {
        Some(witness) => Err(ExtractionError::ConsequenceViolated { report: alloc::boxed::Box::new(report), witness }),
        None => Ok(report),
    }
}
