//! Evaluators for the Sobolev, Poincaré, exponential and Hölder inequalities,
//! empirical constants over a corpus of test pairs, and the chaining tracer.

mod chaining;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hajlasz::{best_constant_shift, is_generalized_gradient, GradientError};
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::num::{abs, exp, powf};

pub use chaining::{chaining_trace, Chain, ChainCertificate, ChainStep, JoasiaCheck, LevelSet};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("invalid parameters: {0}")]
    BadParameters(&'static str),
    #[error("g is not a generalized gradient of u on {ball}, pair ({i}, {j}) fails")]
    NotAGradient { ball: Ball, i: usize, j: usize },
    #[error("the gradient has zero norm on the dilated ball")]
    ZeroGradientNorm,
    #[error("the corpus is empty")]
    EmptyCorpus,
    #[error("no balls to evaluate")]
    NoBalls,
    #[error("the localized lower mass condition fails (worst ratio {ratio}, witness {witness:?})")]
    VConditionFails { ratio: f64, witness: Option<Ball> },
    #[error("chain from level {k} is stuck at step {step}: no admissible next point")]
    ChainStuck { k: i64, step: usize },
    #[error(transparent)]
    Gradient(#[from] GradientError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityKind {
    Sobolev,
    Poincare,
    SobolevDoubling,
    PoincareDoubling,
    Exponential,
    ExponentialDoubling,
    HolderGlobal,
    HolderLocal,
    GlobalSobolev,
    GlobalPoincare,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 10] = [
        InequalityKind::Sobolev,
        InequalityKind::Poincare,
        InequalityKind::SobolevDoubling,
        InequalityKind::PoincareDoubling,
        InequalityKind::Exponential,
        InequalityKind::ExponentialDoubling,
        InequalityKind::HolderGlobal,
        InequalityKind::HolderLocal,
        InequalityKind::GlobalSobolev,
        InequalityKind::GlobalPoincare,
    ];

    /// Kinds evaluated on the whole space, ignoring the ball.
    pub fn is_global(self) -> bool {
        matches!(self, InequalityKind::HolderGlobal | InequalityKind::GlobalSobolev | InequalityKind::GlobalPoincare)
    }

    fn is_subcritical(self) -> bool {
        matches!(
            self,
            InequalityKind::Sobolev
                | InequalityKind::Poincare
                | InequalityKind::SobolevDoubling
                | InequalityKind::PoincareDoubling
                | InequalityKind::GlobalSobolev
                | InequalityKind::GlobalPoincare
        )
    }
}

/// An inequality together with its exponents. `c1` and `gamma` are only read
/// by the exponential kinds, which use `p = s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCase {
    pub kind: InequalityKind,
    pub s: f64,
    pub p: f64,
    pub sigma: f64,
    pub c1: f64,
    pub gamma: f64,
}

impl InequalityCase {
    pub fn new(kind: InequalityKind, s: f64, p: f64, sigma: f64) -> Self {
        InequalityCase { kind, s, p, sigma, c1: 1.0, gamma: 1.0 }
    }

    pub fn exponential(kind: InequalityKind, s: f64, sigma: f64, c1: f64, gamma: f64) -> Self {
        InequalityCase { kind, s, p: s, sigma, c1, gamma }
    }

    /// `p* = sp/(s−p)`, defined for `p < s`.
    pub fn p_star(&self) -> Option<f64> {
        (self.p < self.s).then(|| self.s * self.p / (self.s - self.p))
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(EmbeddingError::BadParameters("s must be positive"));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(EmbeddingError::BadParameters("p must be positive"));
        }
        if !(self.sigma >= 1.0 && self.sigma.is_finite()) {
            return Err(EmbeddingError::BadParameters("sigma must be at least 1"));
        }
        match self.kind {
            k if k.is_subcritical() && self.p >= self.s => Err(EmbeddingError::BadParameters("this kind needs p < s")),
            InequalityKind::Exponential | InequalityKind::ExponentialDoubling => {
                if self.p != self.s {
                    Err(EmbeddingError::BadParameters("exponential kinds need p = s"))
                } else if !(self.c1 > 0.0 && self.gamma > 0.0) {
                    Err(EmbeddingError::BadParameters("C1 and gamma must be positive"))
                } else {
                    Ok(())
                }
            }
            InequalityKind::HolderGlobal | InequalityKind::HolderLocal if self.p <= self.s => {
                Err(EmbeddingError::BadParameters("Hölder kinds need p > s"))
            }
            _ => Ok(()),
        }
    }
}

/// Both sides of an inequality with the constant stripped from the right.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs_core: f64,
    /// `lhs / rhs_core`; `+∞` when only the right side vanishes and `0` when
    /// both do.
    pub ratio: f64,
}

impl Evaluation {
    fn new(lhs: f64, rhs_core: f64) -> Self {
        let ratio = if rhs_core > 0.0 {
            lhs / rhs_core
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Evaluation { lhs, rhs_core, ratio }
    }
}

/// `(⨍_E |v|^q)^{1/q}`.
fn mean_power(space: &MetricMeasureSpace, v: &[f64], q: f64, e: &PointSet) -> f64 {
    let m = e.measure(space);
    let sum: f64 = e.iter().map(|i| space.weight(i) * powf(abs(v[i]), q)).sum();
    powf(sum / m, 1.0 / q)
}

/// `(∫_E |v|^q)^{1/q}`.
fn norm_on(space: &MetricMeasureSpace, v: &[f64], q: f64, e: &PointSet) -> f64 {
    let sum: f64 = e.iter().map(|i| space.weight(i) * powf(abs(v[i]), q)).sum();
    powf(sum, 1.0 / q)
}

fn require_gradient(space: &MetricMeasureSpace, u: &[f64], g: &[f64], domain: &PointSet, ball: Ball) -> Result<(), EmbeddingError> {
    let check = is_generalized_gradient(space, u, g, domain);
    if check.holds {
        Ok(())
    } else {
        let (i, j) = check.worst_pair.unwrap_or((0, 0));
        Err(EmbeddingError::NotAGradient { ball, i, j })
    }
}

fn check_lengths(space: &MetricMeasureSpace, u: &[f64], g: &[f64]) -> Result<(), EmbeddingError> {
    for v in [u, g] {
        if v.len() != space.len() {
            return Err(GradientError::LengthMismatch { got: v.len(), expected: space.len() }.into());
        }
    }
    Ok(())
}

/// Evaluates both sides of the inequality for one pair `(u, g)` on `B₀`.
///
/// Global kinds ignore `b0` and integrate over the whole space. The pair must
/// satisfy the pointwise gradient inequality on `σB₀` (on `X` for global
/// kinds).
pub fn eval_inequality(space: &MetricMeasureSpace, case: &InequalityCase, b0: Ball, u: &[f64], g: &[f64]) -> Result<Evaluation, EmbeddingError> {
    case.validate()?;
    check_lengths(space, u, g)?;
    let all = space.all_points();
    let (ball, big) = if case.kind.is_global() {
        (all.clone(), all.clone())
    } else {
        if !(b0.radius > 0.0) {
            return Err(EmbeddingError::BadParameters("ball radius must be positive"));
        }
        (space.ball_members(b0), space.ball_members(b0.dilate(case.sigma)))
    };
    require_gradient(space, u, g, &big, b0.dilate(case.sigma))?;
    evaluate_on(space, case, b0.radius, &ball, &big, u, g)
}

/// Both sides of the inequality on the point sets `B₀` and `σB₀` of a ball of
/// radius `r0`, without re-checking the gradient inequality.
pub(crate) fn evaluate_on(
    space: &MetricMeasureSpace,
    case: &InequalityCase,
    r0: f64,
    ball: &PointSet,
    big: &PointSet,
    u: &[f64],
    g: &[f64],
) -> Result<Evaluation, EmbeddingError> {
    let all = space.all_points();
    let (s, p) = (case.s, case.p);
    let ev = match case.kind {
        InequalityKind::Sobolev | InequalityKind::SobolevDoubling => {
            let q = case.p_star().unwrap_or(f64::NAN);
            let lhs = mean_power(space, u, q, ball);
            let core = r0 * mean_power(space, g, p, big) + mean_power(space, u, p, big);
            let scale = if case.kind == InequalityKind::Sobolev { powf(big.measure(space) / powf(r0, s), 1.0 / p) } else { 1.0 };
            Evaluation::new(lhs, scale * core)
        }
        InequalityKind::Poincare | InequalityKind::PoincareDoubling => {
            let q = case.p_star().unwrap_or(f64::NAN);
            let lhs = best_constant_shift(space, u, q, ball)?.value;
            let core = r0 * mean_power(space, g, p, big);
            let scale = if case.kind == InequalityKind::Poincare { powf(big.measure(space) / powf(r0, s), 1.0 / p) } else { 1.0 };
            Evaluation::new(lhs, scale * core)
        }
        InequalityKind::Exponential => Evaluation::new(exp_average(space, ball, big, case.c1, case.gamma, s, u, g)?, 1.0),
        InequalityKind::ExponentialDoubling => {
            let factor = powf(big.measure(space), 1.0 / s) / r0;
            Evaluation::new(exp_average(space, ball, big, case.c1 * factor, case.gamma, s, u, g)?, 1.0)
        }
        InequalityKind::HolderGlobal => Evaluation::new(holder_numerator(space, u, 1.0 - s / p, &all), norm_on(space, g, p, &all)),
        InequalityKind::HolderLocal => {
            let core = powf(r0, s / p) * mean_power(space, g, p, big);
            Evaluation::new(holder_numerator(space, u, 1.0 - s / p, ball), core)
        }
        InequalityKind::GlobalSobolev => {
            let q = case.p_star().unwrap_or(f64::NAN);
            Evaluation::new(norm_on(space, u, q, &all), norm_on(space, g, p, &all) + norm_on(space, u, p, &all))
        }
        InequalityKind::GlobalPoincare => {
            let q = case.p_star().unwrap_or(f64::NAN);
            let shift = best_constant_shift(space, u, q, &all)?.value;
            Evaluation::new(shift * powf(space.total_measure(), 1.0 / q), norm_on(space, g, p, &all))
        }
    };
    Ok(ev)
}

/// `max_{x≠y∈E} |u(x)−u(y)| / d(x,y)^θ`.
fn holder_numerator(space: &MetricMeasureSpace, u: &[f64], theta: f64, e: &PointSet) -> f64 {
    let idx = e.members();
    let mut best = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            best = best.max(abs(u[i] - u[j]) / powf(space.d(i, j), theta));
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn exp_average(
    space: &MetricMeasureSpace,
    ball: &PointSet,
    big: &PointSet,
    c1: f64,
    gamma: f64,
    s: f64,
    u: &[f64],
    g: &[f64],
) -> Result<f64, EmbeddingError> {
    let norm = norm_on(space, g, s, big);
    if !(norm > 0.0) {
        return Err(EmbeddingError::ZeroGradientNorm);
    }
    let m = ball.measure(space);
    if !(m > 0.0) {
        return Err(GradientError::EmptySet.into());
    }
    // Constants keep an exact mean, so their average is exactly 1.
    let first = u[ball.members()[0]];
    let mean = if ball.iter().all(|i| u[i] == first) { first } else { ball.iter().map(|i| space.weight(i) * u[i]).sum::<f64>() / m };
    let sum: f64 = ball.iter().map(|i| space.weight(i) * exp(powf(c1 * abs(u[i] - mean) / norm, gamma))).sum();
    Ok(sum / m)
}

/// `⨍_{B₀} exp((C₁ |u − u_{B₀}| / ‖g‖_{L^s(σB₀)})^γ)`.
#[allow(clippy::too_many_arguments)]
pub fn exp_integral(
    space: &MetricMeasureSpace,
    b0: Ball,
    sigma: f64,
    c1: f64,
    gamma: f64,
    s: f64,
    u: &[f64],
    g: &[f64],
) -> Result<f64, EmbeddingError> {
    check_lengths(space, u, g)?;
    exp_average(space, &space.ball_members(b0), &space.ball_members(b0.dilate(sigma)), c1, gamma, s, u, g)
}

/// Smallest `C_H` for which the Hölder inequality holds for this pair: the
/// global form when `b0` is `None`, the localized form on `b0` otherwise.
pub fn holder_constant(space: &MetricMeasureSpace, case: &InequalityCase, u: &[f64], g: &[f64], b0: Option<Ball>) -> Result<f64, EmbeddingError> {
    let (kind, ball) = match b0 {
        None => (InequalityKind::HolderGlobal, Ball::open(0, space.diameter())),
        Some(b) => (InequalityKind::HolderLocal, b),
    };
    let c = InequalityCase { kind, ..*case };
    let ev = eval_inequality(space, &c, ball, u, g)?;
    if ev.rhs_core <= 0.0 {
        return Err(EmbeddingError::ZeroGradientNorm);
    }
    Ok(ev.ratio)
}

/// A test pair `(u, g)` with a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestPair {
    pub id: alloc::string::String,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub ball: Ball,
    /// Index into the corpus of the pair with the largest ratio on this ball.
    pub best: usize,
    pub best_id: alloc::string::String,
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

/// Empirical constant over a corpus. The value is a lower bound for the
/// universal constant of the inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub case: InequalityCase,
    pub rows: Vec<BallRow>,
    pub constant: f64,
    /// Index into `rows` of the ball achieving the constant.
    pub witness: usize,
    pub lower_bound: bool,
}

/// Largest demanded ratio over every ball and every pair of the corpus.
pub fn estimate_constant(space: &MetricMeasureSpace, case: &InequalityCase, corpus: &[TestPair], balls: &[Ball]) -> Result<EmbeddingReport, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let global_ball = [Ball::open(0, space.diameter())];
    let balls = if case.kind.is_global() { &global_ball[..] } else { balls };
    if balls.is_empty() {
        return Err(EmbeddingError::NoBalls);
    }
    let mut rows = Vec::with_capacity(balls.len());
    for &ball in balls {
        let mut row: Option<BallRow> = None;
        for (k, pair) in corpus.iter().enumerate() {
            let ev = eval_inequality(space, case, ball, &pair.u, &pair.g)?;
            if row.as_ref().map_or(true, |r| ev.ratio > r.ratio) {
                row = Some(BallRow { ball, best: k, best_id: pair.id.clone(), lhs: ev.lhs, rhs_core: ev.rhs_core, ratio: ev.ratio });
            }
        }
        rows.extend(row);
    }
    let (witness, constant) = rows.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r.ratio > acc.1 { (i, r.ratio) } else { acc });
    Ok(EmbeddingReport { case: *case, rows, constant, witness, lower_bound: true })
}

#[cfg(test)]
mod tests;
