//! Executable trace of the chaining argument behind the localized Sobolev
//! embeddings: level sets of the gradient, the starting level `k₀`, and one
//! chain of points per starting point, with every inequality re-checked.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EmbeddingError;
use crate::geometry::v_condition;
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::num::{abs, ceil, floor, log2, pow2, powf};

const RTOL: f64 = 1e-12;
const TELESCOPE_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub j: i64,
    /// `E_j = {x ∈ σB₀ : g̃(x) ≤ 2^j}`.
    pub members: PointSet,
    pub measure: f64,
    /// `μ(σB₀ ∖ E_j)`.
    pub complement: f64,
    /// `2^{-jp} ∫_{σB₀} g̃^p`.
    pub chebyshev_bound: f64,
    pub chebyshev_holds: bool,
    /// `|u(x)−u(y)| ≤ 2^{j+1} d(x,y)` on `E_j`.
    pub lipschitz_holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoasiaCheck {
    pub ball: Ball,
    pub level: i64,
    pub ball_measure: f64,
    /// `μ(σB₀ ∖ E_level)`.
    pub complement: f64,
    pub intersection: f64,
    /// `μ(B) ≥ 2 μ(σB₀ ∖ E)`.
    pub hypothesis: bool,
    /// `μ(B ∩ E) ≥ μ(B)/2 > 0`.
    pub conclusion: bool,
    /// `μ(B) ≥ b r^s` whenever `B ⊆ σB₀`.
    pub volume: bool,
    pub inside: bool,
}

impl JoasiaCheck {
    /// Both sides of the good-ball lemma for `B` against the level set
    /// `E ⊆ σB₀`, and the volume bound `μ(B) ≥ b r^s`.
    ///
    /// For `B ⊆ σB₀` the hypothesis implies the conclusion.
    pub fn evaluate(space: &MetricMeasureSpace, big: &PointSet, level_set: &PointSet, level: i64, ball: Ball, b: f64, s: f64) -> Self {
        let members = space.ball_members(ball);
        let ball_measure = members.measure(space);
        let complement = big.difference(level_set).measure(space);
        let intersection = members.intersection(level_set).measure(space);
        let inside = members.is_subset(big);
        JoasiaCheck {
            ball,
            level,
            ball_measure,
            complement,
            intersection,
            hypothesis: ball_measure >= 2.0 * complement * (1.0 - RTOL),
            conclusion: intersection >= ball_measure / 2.0 * (1.0 - RTOL) && intersection > 0.0,
            volume: !inside || ball_measure >= b * powf(ball.radius, s) * (1.0 - RTOL),
            inside,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub from: usize,
    pub to: usize,
    pub level: i64,
    pub distance: f64,
    pub radius: f64,
    pub joasia: JoasiaCheck,
    /// `|u(from) − u(to)| ≤ 2^{level+2} d(from, to)` with `from, to ∈ E_{level+1}`.
    pub lipschitz_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub k: i64,
    /// `x_k, x_{k−1}, …, x_{k₀}`.
    pub points: Vec<usize>,
    pub steps: Vec<ChainStep>,
    /// `|u(x_k) − γ|`.
    pub deviation: f64,
    /// `Σ |u(x_{k−i}) − u(x_{k−i−1})| + |u(x_{k₀}) − γ|`.
    pub triangle_bound: f64,
    /// `Σ 2^{k−i+1} d(x_{k−i}, x_{k−i−1}) + sup_{E_{k₀}} |u − γ|`.
    pub lipschitz_bound: f64,
    /// `4·2^{1/s} b^{−1/s} (∫ g̃^p)^{1/s} Σ_{j=k₀}^{k−1} 2^{j(1−p/s)} + sup_{E_{k₀}} |u − γ|`.
    pub closed_form_bound: f64,
    /// `Σ 2^{k−i+1} r_{k−i}` evaluated term by term.
    pub radius_sum_weighted: f64,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCertificate {
    pub b0: Ball,
    pub sigma: f64,
    pub s: f64,
    pub p: f64,
    pub b: f64,
    /// `∫_{σB₀} g^p = 0`: `u` is constant on `σB₀` and nothing is traced.
    pub trivial: bool,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    /// `g + (⨍_{σB₀} g^p)^{1/p}` on `σB₀`, unchanged elsewhere.
    pub g_tilde: Vec<f64>,
    /// `∫_{σB₀} g̃^p`.
    pub integral: f64,
    pub gamma: f64,
    /// Point `y ∈ E_{k₀}` with `γ = u(y)`.
    pub anchor: Option<usize>,
    pub k0: i64,
    /// `2^{k₀}` lies at or above the threshold and `2^{k₀−1}` below it.
    pub k0_minimal: bool,
    /// `2^{−k₀p/s} 2^{1/s} b^{−1/s} (1−2^{−p/s})^{−1} (∫ g̃^p)^{1/s} ≤ (σ−1) R₀`.
    pub radius_budget_holds: bool,
    /// `μ(E_{k₀}) ≥ μ(σB₀)/2`.
    pub piotr_holds: bool,
    /// `∫ g̃^p ≤ Σ 2^{jp} μ(E_j ∖ E_{j−1}) ≤ 2^p ∫ g̃^p`.
    pub level_sum: f64,
    pub level_sum_holds: bool,
    /// `g̃ ≥ 2^{−(1+1/p)} (⨍ g̃^p)^{1/p}` on `σB₀`.
    pub lower_bound_holds: bool,
    pub levels: Vec<LevelSet>,
    pub chains: Vec<Chain>,
    pub verified: bool,
}

impl ChainCertificate {
    pub fn level(&self, j: i64) -> Option<&LevelSet> {
        self.levels.iter().find(|l| l.j == j)
    }
}

struct Ctx<'a> {
    space: &'a MetricMeasureSpace,
    big: PointSet,
    gt: Vec<f64>,
    b: f64,
    u: &'a [f64],
    p: f64,
}

impl Ctx<'_> {
    fn level_members(&self, j: i64) -> PointSet {
        let t = pow2(j);
        self.big.filter(|x| self.gt[x] <= t)
    }

    fn lipschitz_on(&self, e: &PointSet, j: i64) -> bool {
        let idx = e.members();
        let lip = pow2(j + 1);
        for (a, &x) in idx.iter().enumerate() {
            for &y in &idx[a + 1..] {
                let du = abs(self.u[x] - self.u[y]);
                let bound = lip * self.space.d(x, y);
                if du > bound * (1.0 + RTOL) {
                    return false;
                }
            }
        }
        true
    }

    fn level(&self, j: i64, integral: f64) -> LevelSet {
        let members = self.level_members(j);
        let measure = members.measure(self.space);
        let complement = self.big.difference(&members).measure(self.space);
        let chebyshev_bound = powf(2.0, -(j as f64) * self.p) * integral;
        LevelSet {
            j,
            lipschitz_holds: self.lipschitz_on(&members, j),
            members,
            measure,
            complement,
            chebyshev_bound,
            chebyshev_holds: complement <= chebyshev_bound * (1.0 + RTOL),
        }
    }
}

/// Runs the chaining argument on `B₀` for the pair `(u, g)`.
///
/// `g` is replaced by `g̃ = g + (⨍_{σB₀} g^p)^{1/p}` first. When `gamma` is
/// `None`, `γ = u(y)` for the heaviest point `y` of `E_{k₀}` (lowest index on
/// ties). Chains start from every point of `E_k ∩ B₀` for every `k > k₀` up to
/// the level where `E_k` exhausts `σB₀`.
#[allow(clippy::too_many_arguments)]
pub fn chaining_trace(
    space: &MetricMeasureSpace,
    b0: Ball,
    sigma: f64,
    s: f64,
    p: f64,
    b: f64,
    u: &[f64],
    g: &[f64],
    gamma: Option<f64>,
) -> Result<ChainCertificate, EmbeddingError> {
    if !(sigma > 1.0 && sigma.is_finite()) {
        return Err(EmbeddingError::BadParameters("the chaining argument needs sigma > 1"));
    }
    if !(s > 0.0 && p > 0.0 && b > 0.0 && b0.radius > 0.0) {
        return Err(EmbeddingError::BadParameters("s, p, b and the radius must be positive"));
    }
    super::check_lengths(space, u, g)?;
    let big_ball = b0.dilate(sigma);
    let big = space.ball_members(big_ball);
    super::require_gradient(space, u, g, &big, big_ball)?;
    let v = v_condition(space, b0, sigma, s, b);
    if !v.holds {
        return Err(EmbeddingError::VConditionFails { ratio: v.worst_ratio, witness: v.witness });
    }
    let big_measure = big.measure(space);
    let raw: f64 = big.iter().map(|x| space.weight(x) * powf(g[x], p)).sum();
    let r0 = b0.radius;
    let mut cert = ChainCertificate {
        b0,
        sigma,
        s,
        p,
        b,
        trivial: false,
        u: u.to_vec(),
        g: g.to_vec(),
        g_tilde: g.to_vec(),
        integral: 0.0,
        gamma: 0.0,
        anchor: None,
        k0: 0,
        k0_minimal: true,
        radius_budget_holds: true,
        piotr_holds: true,
        level_sum: 0.0,
        level_sum_holds: true,
        lower_bound_holds: true,
        levels: Vec::new(),
        chains: Vec::new(),
        verified: true,
    };
    if raw <= 0.0 {
        cert.trivial = true;
        cert.gamma = gamma.unwrap_or_else(|| big.iter().next().map_or(0.0, |x| u[x]));
        return Ok(cert);
    }

    let shift = powf(raw / big_measure, 1.0 / p);
    let mut gt = g.to_vec();
    for x in big.iter() {
        gt[x] += shift;
    }
    let integral: f64 = big.iter().map(|x| space.weight(x) * powf(gt[x], p)).sum();
    let floor_value = powf(2.0, -(1.0 + 1.0 / p)) * powf(integral / big_measure, 1.0 / p);
    cert.lower_bound_holds = big.iter().all(|x| gt[x] >= floor_value);

    // k₀: least integer with 2^{k₀} ≥ threshold.
    let threshold = powf(powf(2.0, 1.0 / s) / ((1.0 - powf(2.0, -p / s)) * (sigma - 1.0)), s / p) * powf(b * powf(r0, s), -1.0 / p) * powf(integral, 1.0 / p);
    let mut k0 = ceil(log2(threshold)) as i64;
    while pow2(k0 - 1) >= threshold {
        k0 -= 1;
    }
    while pow2(k0) < threshold {
        k0 += 1;
    }
    cert.k0 = k0;
    cert.k0_minimal = pow2(k0) >= threshold && pow2(k0 - 1) < threshold;
    let budget = powf(2.0, -(k0 as f64) * p / s) * powf(2.0, 1.0 / s) * powf(b, -1.0 / s) / (1.0 - powf(2.0, -p / s)) * powf(integral, 1.0 / s);
    cert.radius_budget_holds = budget <= (sigma - 1.0) * r0 * (1.0 + RTOL);

    let ctx = Ctx { space, big: big.clone(), gt: gt.clone(), b, u, p };
    let gmin = big.iter().map(|x| gt[x]).fold(f64::INFINITY, f64::min);
    let gmax = big.iter().map(|x| gt[x]).fold(0.0f64, f64::max);
    let top = ceil(log2(gmax)) as i64 + 1;
    let j_lo = (floor(log2(gmin)) as i64 - 1).min(k0);
    let j_hi = top.max(k0 + 1);
    cert.levels = (j_lo..=j_hi).map(|j| ctx.level(j, integral)).collect();

    // Level-set decomposition of ∫ g̃^p.
    let mut level_sum = 0.0;
    for w in cert.levels.windows(2) {
        let shell = w[1].members.difference(&w[0].members).measure(space);
        level_sum += powf(2.0, w[1].j as f64 * p) * shell;
    }
    // Points at or below 2^{j_lo} contribute to the lowest level.
    level_sum += powf(2.0, cert.levels[0].j as f64 * p) * cert.levels[0].measure;
    cert.level_sum = level_sum;
    cert.level_sum_holds = level_sum >= integral * (1.0 - RTOL) && level_sum <= powf(2.0, p) * integral * (1.0 + RTOL);

    let ek0 = ctx.level_members(k0);
    let ek0_measure = ek0.measure(space);
    cert.piotr_holds = ek0_measure >= big_measure / 2.0 * (1.0 - RTOL);
    let anchor = heaviest(space, &ek0);
    cert.anchor = anchor;
    let gamma = match (gamma, anchor) {
        (Some(v), _) => v,
        (None, Some(y)) => u[y],
        (None, None) => return Err(EmbeddingError::ChainStuck { k: k0, step: 0 }),
    };
    cert.gamma = gamma;
    let sup_k0 = ek0.iter().map(|x| abs(u[x] - gamma)).fold(0.0f64, f64::max);

    let base = powf(2.0, 1.0 / s) * powf(b, -1.0 / s) * powf(integral, 1.0 / s);
    let radius = |level: i64| base * powf(2.0, -((level - 1) as f64) * p / s);
    let ball_members = space.ball_members(b0);
    for k in k0 + 1..=j_hi {
        let start = ctx.level_members(k).intersection(&ball_members);
        for x_k in start.iter() {
            let chain = run_chain(&ctx, k, k0, x_k, &radius, gamma, sup_k0, base, s, p)?;
            cert.chains.push(chain);
        }
    }
    cert.verified = cert.lower_bound_holds
        && cert.k0_minimal
        && cert.radius_budget_holds
        && cert.piotr_holds
        && cert.level_sum_holds
        && cert.levels.iter().all(|l| l.chebyshev_holds && l.lipschitz_holds)
        && cert.chains.iter().all(|c| c.verified);
    cert.g_tilde = gt;
    cert.integral = integral;
    Ok(cert)
}

/// Heaviest point of a set, lowest index on ties.
fn heaviest(space: &MetricMeasureSpace, e: &PointSet) -> Option<usize> {
    e.iter().fold(None, |best: Option<usize>, x| match best {
        Some(b) if space.weight(b) >= space.weight(x) => Some(b),
        _ => Some(x),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    ctx: &Ctx<'_>,
    k: i64,
    k0: i64,
    x_k: usize,
    radius: &dyn Fn(i64) -> f64,
    gamma: f64,
    sup_k0: f64,
    base: f64,
    s: f64,
    p: f64,
) -> Result<Chain, EmbeddingError> {
    let space = ctx.space;
    let mut points = vec![x_k];
    let mut steps = Vec::new();
    let mut current = x_k;
    for (step, level) in (k0 + 1..=k).rev().enumerate() {
        let r = radius(level);
        let ball = Ball::open(current, r);
        let target = ctx.level_members(level - 1);
        let joasia = JoasiaCheck::evaluate(space, &ctx.big, &target, level - 1, ball, ctx.b, s);
        let inter = space.ball_members(ball).intersection(&target);
        let Some(next) = heaviest(space, &inter) else { return Err(EmbeddingError::ChainStuck { k, step }) };
        let distance = space.d(current, next);
        let lip = pow2(level + 1);
        let lipschitz_holds = abs(ctx.u[current] - ctx.u[next]) <= lip * distance * (1.0 + RTOL);
        steps.push(ChainStep { from: current, to: next, level: level - 1, distance, radius: r, joasia, lipschitz_holds });
        points.push(next);
        current = next;
    }
    let deviation = abs(ctx.u[x_k] - gamma);
    let sum_du: f64 = steps.iter().map(|st| abs(ctx.u[st.from] - ctx.u[st.to])).sum();
    let triangle_bound = sum_du + abs(ctx.u[current] - gamma);
    let weighted: f64 = steps.iter().map(|st| pow2(st.level + 2) * st.distance).sum();
    let lipschitz_bound = weighted + sup_k0;
    let radius_sum_weighted: f64 = steps.iter().map(|st| pow2(st.level + 2) * st.radius).sum();
    let geometric: f64 = (k0..k).map(|j| powf(2.0, j as f64 * (1.0 - p / s))).sum();
    let closed = 4.0 * base * geometric;
    let closed_form_bound = closed + sup_k0;
    let telescopes = abs(radius_sum_weighted - closed) <= TELESCOPE_RTOL * closed;
    let verified = deviation <= triangle_bound * (1.0 + RTOL) + 1e-15
        && triangle_bound <= lipschitz_bound * (1.0 + RTOL) + 1e-15
        && weighted < radius_sum_weighted * (1.0 + RTOL)
        && telescopes
        && lipschitz_bound <= closed_form_bound * (1.0 + RTOL)
        && steps.iter().all(|st| st.distance < st.radius && st.lipschitz_holds && st.joasia.hypothesis && st.joasia.conclusion && st.joasia.inside && st.joasia.volume);
    Ok(Chain { k, points, steps, deviation, triangle_bound, lipschitz_bound, closed_form_bound, radius_sum_weighted, verified })
}
