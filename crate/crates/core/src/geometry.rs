//! Measure-geometry analyzers: the half-mass radius φ, uniform perfectness,
//! lower mass and doubling constants, the localized lower mass condition, and
//! the fat-ball lemma.
//!
//! On a finite space `r ↦ μ(B(x, r))` is a left-continuous step function that
//! only jumps just after a critical radius. Every infimum or supremum over a
//! continuous radius is therefore evaluated at finitely many interval
//! endpoints.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mmspace::{Ball, MetricMeasureSpace};
use crate::num::{powf, MEASURE_RTOL};

/// Clamp applied to the measured uniform-perfectness constant before it is
/// fed to the constructions, which need `λ < 1/5`.
pub const LAMBDA_CAP: f64 = 0.19;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("lambda = {0} is outside (0, 1/5)")]
    LambdaOutOfRange(f64),
    #[error("radius {r} is at most 3 phi / lambda^2 = {bound}; the ball is already fat")]
    PreconditionRadius { r: f64, bound: f64 },
    #[error("no point of the annulus around {center} with radii [{inner}, {outer})")]
    EmptyAnnulus { center: usize, inner: f64, outer: f64 },
    #[error("fat ball around {center} of radius {radius} fails its inclusions")]
    InclusionFailed { center: usize, radius: f64 },
}

/// `φ_x(r) = sup{t ∈ [0, r] : μ(B(x, t)) ≤ μ(B(x, r)) / 2}`.
pub fn phi(space: &MetricMeasureSpace, x: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let half = space.ball_measure(Ball::open(x, r)) / 2.0;
    // Candidates are the critical radii below r; the measure is constant on
    // each interval (c_k, c_{k+1}] so the admissible set closes on the right.
    let radii = space.critical_radii(x);
    let below = radii.partition_point(|&c| c < r);
    let mut best = 0.0;
    for &c in &radii[..below] {
        if space.ball_measure(Ball::open(x, c)) <= half {
            best = c;
        } else {
            break;
        }
    }
    best
}

/// `φ_x^0(r), φ_x^1(r), …, φ_x^count(r)`.
pub fn phi_iterates(space: &MetricMeasureSpace, x: usize, r: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    let mut t = r.max(0.0);
    out.push(t);
    for _ in 0..count {
        t = phi(space, x, t);
        out.push(t);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformPerfectness {
    pub resolution: f64,
    /// Largest admissible λ, or `None` when some annulus is empty for every λ.
    pub lambda: Option<f64>,
    pub lambda_eff: Option<f64>,
    /// Ball realizing the bound.
    pub witness: Option<Ball>,
}

/// Largest λ with `B(x,r) ∖ B(x,λr) ≠ ∅` whenever `X ∖ B(x,r) ≠ ∅`, over all
/// centers and `r ∈ [resolution, diam]`.
pub fn uniform_perfectness(space: &MetricMeasureSpace, resolution: f64) -> UniformPerfectness {
    let mut lambda = f64::INFINITY;
    let mut witness = None;
    for x in space.point_ids() {
        let radii = space.critical_radii(x);
        // For r in (c_{k-1}, c_k] the farthest point inside B(x,r) sits at
        // c_{k-1}, and X ∖ B(x,r) ∋ the points at distance c_k.
        for (k, &c) in radii.iter().enumerate() {
            if c < resolution {
                continue;
            }
            let prev = if k == 0 { 0.0 } else { radii[k - 1] };
            let ratio = prev / c;
            if ratio < lambda {
                lambda = ratio;
                witness = Some(Ball::open(x, c));
            }
        }
    }
    let lambda = if lambda.is_finite() && lambda > 0.0 { Some(lambda) } else { None };
    UniformPerfectness {
        resolution,
        lambda,
        lambda_eff: lambda.map(|l| l.min(LAMBDA_CAP)),
        witness,
    }
}

/// `inf μ(B(x,r)) / r^s` over centers and `r ∈ [r_min, diam]`, with the
/// minimizing ball.
pub fn lower_mass_constant(space: &MetricMeasureSpace, s: f64, r_min: f64) -> (f64, Ball) {
    let diam = space.diameter();
    let mut best = f64::INFINITY;
    let mut witness = Ball::open(0, diam);
    for x in space.point_ids() {
        let radii = space.critical_radii(x);
        let start = radii.partition_point(|&c| c < r_min);
        let tail = if diam >= r_min { Some(diam) } else { None };
        for r in radii[start..].iter().copied().chain(tail) {
            let ratio = space.ball_measure(Ball::open(x, r)) / powf(r, s);
            if ratio < best {
                best = ratio;
                witness = Ball::open(x, r);
            }
        }
    }
    (best, witness)
}

/// `sup μ(B(x,2r)) / μ(B(x,r))` over all nonempty balls.
pub fn doubling_constant(space: &MetricMeasureSpace) -> (f64, Ball) {
    let mut best = 1.0;
    let mut witness = Ball::open(0, space.diameter());
    for x in space.point_ids() {
        for &c in space.critical_radii(x) {
            let ratio = space.ball_measure(Ball::open(x, 2.0 * c)) / space.ball_measure(Ball::open(x, c));
            if ratio > best {
                best = ratio;
                witness = Ball::open(x, c);
            }
        }
    }
    (best, witness)
}

/// A nested pair `inner ⊆ outer`. When `limit` is set the value is the limit
/// as the outer radius decreases to `outer.radius`, and `outer` is stored as the
/// closed ball with the same members.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedPair {
    pub inner: Ball,
    pub outer: Ball,
    pub limit: bool,
}

/// `inf [μ(B(x,r)) / μ(B(y,R))] (R/r)^s` over nested pairs with `0 < r ≤ R`.
pub fn relative_lower_bound(space: &MetricMeasureSpace, s: f64) -> (f64, NestedPair) {
    let n = space.len();
    let mut best = f64::INFINITY;
    let mut witness = NestedPair {
        inner: Ball::open(0, space.diameter()),
        outer: Ball::open(0, space.diameter()),
        limit: false,
    };
    let mut rho = alloc::vec![0.0f64; n];
    for x in space.point_ids() {
        rho.iter_mut().for_each(|v| *v = 0.0);
        let levels_x = space.level_count(x);
        for k in 0..levels_x {
            for &z in space.level_shell(x, k) {
                for y in 0..n {
                    rho[y] = rho[y].max(space.d(y, z));
                }
            }
            // r ranges over (a1, b1]; the ratio wants r as large as possible.
            let a1 = space.level_radius(x, k);
            let b1 = if k + 1 < levels_x { space.level_radius(x, k + 1) } else { f64::INFINITY };
            let m = space.level_mass(x, k);
            for y in 0..n {
                let first = space.closed_level(y, rho[y]);
                let levels_y = space.level_count(y);
                for l in first..levels_y {
                    let a2 = space.level_radius(y, l);
                    let b2 = if l + 1 < levels_y { space.level_radius(y, l + 1) } else { f64::INFINITY };
                    if a1 >= b2 {
                        continue;
                    }
                    let (scale, limit) = if a2 >= b1 { (powf(a2 / b1, s), true) } else { (1.0, false) };
                    let value = m / space.level_mass(y, l) * scale;
                    if value < best {
                        best = value;
                        witness = if limit {
                            NestedPair { inner: Ball::open(x, b1), outer: Ball::closed(y, a2), limit }
                        } else {
                            // r = R inside the overlap of both intervals.
                            let r = b1.min(b2);
                            let r = if r.is_finite() { r } else { 2.0 * space.diameter() };
                            NestedPair { inner: Ball::open(x, r), outer: Ball::open(y, r), limit }
                        };
                    }
                }
            }
        }
    }
    (best, witness)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VCondition {
    pub holds: bool,
    /// Smallest `μ(B(x,r)) / r^s` among balls inside `σB₀`.
    pub worst_ratio: f64,
    pub witness: Option<Ball>,
}

/// Whether `μ(B(x,r)) ≥ b r^s` for every ball with members inside `σB₀` and
/// `r ∈ (0, σR₀]`.
pub fn v_condition(space: &MetricMeasureSpace, b0: Ball, sigma: f64, s: f64, b: f64) -> VCondition {
    let big = b0.dilate(sigma);
    let members = space.ball_members(big);
    let r_top = big.radius;
    let mut worst = f64::INFINITY;
    let mut witness = None;
    let mut holds = true;
    for x in members.iter() {
        let levels = space.level_count(x);
        for k in 0..levels {
            let lo = space.level_radius(x, k);
            if lo >= r_top {
                break;
            }
            if !space.level_shell(x, k).iter().all(|&y| members.contains(y)) {
                break;
            }
            let hi = if k + 1 < levels { space.level_radius(x, k + 1) } else { f64::INFINITY };
            let r = hi.min(r_top);
            let mass = space.level_mass(x, k);
            let rs = powf(r, s);
            let ratio = mass / rs;
            if ratio < worst {
                worst = ratio;
                witness = Some(Ball::open(x, r));
            }
            if mass < b * rs * (1.0 - MEASURE_RTOL) {
                holds = false;
            }
        }
    }
    VCondition { holds, worst_ratio: worst, witness }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatBall {
    pub center: usize,
    pub radius: f64,
    pub parent: Ball,
    /// `φ_x(r)` of the parent ball.
    pub parent_phi: f64,
}

impl FatBall {
    pub fn ball(&self) -> Ball {
        Ball::open(self.center, self.radius)
    }
}

/// Replaces a thin ball `B(x,r)` (one with `r > 3φ_x(r)/λ²`) by a ball
/// `B(x̃, r̃) ⊆ B(x,r)` with `λr < r̃`.
pub fn fat_ball(space: &MetricMeasureSpace, x: usize, r: f64, lambda: f64) -> Result<FatBall, GeometryError> {
    if !(lambda > 0.0 && lambda < 0.2) {
        return Err(GeometryError::LambdaOutOfRange(lambda));
    }
    let ph = phi(space, x, r);
    let bound = 3.0 * ph / (lambda * lambda);
    if r <= bound {
        return Err(GeometryError::PreconditionRadius { r, bound });
    }
    let inner = ph + 2.0 * lambda * lambda * r;
    let outer = ph / lambda + 2.0 * lambda * r;
    let center = space
        .point_ids()
        .find(|&y| {
            let d = space.d(x, y);
            d >= inner && d < outer
        })
        .ok_or(GeometryError::EmptyAnnulus { center: x, inner, outer })?;
    let radius = 2.0 * ph / lambda + 2.0 * lambda * r;
    let parent = Ball::open(x, r);
    let fat = Ball::open(center, radius);
    let core = Ball::closed(x, ph);
    let hole = Ball::open(center, lambda * radius / 2.0);
    let ok = space.ball_subset(core, fat)
        && space.ball_subset(fat, parent)
        && space.ball_members(hole).iter().all(|y| space.ball_contains(parent, y) && !space.ball_contains(core, y));
    if !ok {
        return Err(GeometryError::InclusionFailed { center, radius });
    }
    Ok(FatBall { center, radius, parent, parent_phi: ph })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub center: usize,
    pub radius: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub s: f64,
    pub resolution: f64,
    pub kappa: f64,
    pub kappa_witness: Ball,
    pub doubling_constant: f64,
    pub doubling_witness: Ball,
    pub relative_kappa: f64,
    pub relative_witness: NestedPair,
    pub lambda: Option<f64>,
    pub lambda_eff: Option<f64>,
    pub lambda_witness: Option<Ball>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_table: Option<Vec<PhiRow>>,
}

/// All measured constants of a space at exponent `s` and the given resolution.
pub fn summarize(space: &MetricMeasureSpace, s: f64, resolution: f64, with_phi: bool) -> GeometrySummary {
    let (kappa, kappa_witness) = lower_mass_constant(space, s, resolution);
    let (doubling_constant, doubling_witness) = doubling_constant(space);
    let (relative_kappa, relative_witness) = relative_lower_bound(space, s);
    let up = uniform_perfectness(space, resolution);
    let phi_table = with_phi.then(|| {
        let mut rows = Vec::new();
        for x in space.point_ids() {
            for &r in space.critical_radii(x) {
                rows.push(PhiRow { center: x, radius: r, phi: phi(space, x, r) });
            }
        }
        rows
    });
    GeometrySummary {
        s,
        resolution,
        kappa,
        kappa_witness,
        doubling_constant,
        doubling_witness,
        relative_kappa,
        relative_witness,
        lambda: up.lambda,
        lambda_eff: up.lambda_eff,
        lambda_witness: up.witness,
        phi_table,
    }
}
