//! Explicit test functions: the Lipschitz bump and the two nested-ramp
//! families used to probe embedding inequalities on a single ball.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::phi;
use crate::hajlasz::is_generalized_gradient;
use crate::mmspace::{Ball, MetricMeasureSpace, PointSet};
use crate::num::{abs, ge_rel, pow2};

/// Default upper index of a family.
pub const DEFAULT_J_MAX: usize = 64;

/// Indices generated past the stabilization index.
pub const EXTRA_INDICES: usize = 4;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("bump radii must satisfy 0 <= r < R < inf, got r = {inner}, R = {outer}")]
    BadRadii { inner: f64, outer: f64 },
    #[error("ball radius {0} is not in (0, diam]")]
    BadRadius(f64),
    #[error("lambda = {0} is outside (0, 1/5)")]
    LambdaOutOfRange(f64),
    #[error("phi vanishes on the ball around {center} of radius {radius}")]
    ZeroPhi { center: usize, radius: f64 },
    #[error("radius {r} exceeds 3 phi / lambda^2 = {bound}")]
    PreconditionRadius { r: f64, bound: f64 },
    #[error("family index {0} is not available")]
    MissingIndex(usize),
    #[error("operation needs a family of kind c2")]
    WrongKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    Bump,
    C1,
    C2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub j: usize,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    /// Support ball `B(x, r_j)` of `g`.
    pub inner: Ball,
    pub lipschitz: f64,
    /// `μ(B(x, r_j))`.
    pub inner_measure: f64,
    /// `μ(B(x, r_{j+1}))`, the set where `u ≡ 1` for open balls.
    pub next_measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionFamily {
    pub kind: ConstructionKind,
    pub base: Ball,
    pub lambda: Option<f64>,
    /// `r` for c1 and `φ_x(r)` for c2; the radii are `(2^{-j-1} + 1/2)·scale`.
    pub scale: f64,
    /// `r_1, …, r_{N+1}`.
    pub radii: Vec<f64>,
    /// First index from which the members no longer change on the point set.
    pub stabilization: usize,
    pub members: Vec<FamilyMember>,
}

impl ConstructionFamily {
    pub fn member(&self, j: usize) -> Option<&FamilyMember> {
        self.members.iter().find(|m| m.j == j)
    }

    pub fn last_index(&self) -> usize {
        self.members.last().map_or(0, |m| m.j)
    }
}

/// `Φ_{r,R}` centered at `x` and the gradient `(R−r)^{-1} χ_{B(x,R)}`.
pub fn bump(space: &MetricMeasureSpace, x: usize, r: f64, big_r: f64) -> Result<(Vec<f64>, Vec<f64>), ConstructionError> {
    if !(r >= 0.0 && r < big_r && big_r.is_finite()) {
        return Err(ConstructionError::BadRadii { inner: r, outer: big_r });
    }
    let slope = 1.0 / (big_r - r);
    let mut u = vec![0.0; space.len()];
    let mut g = vec![0.0; space.len()];
    for y in space.point_ids() {
        let d = space.d(x, y);
        if d <= r {
            u[y] = 1.0;
        } else if d < big_r {
            u[y] = (big_r - d) / (big_r - r);
        }
        if d < big_r {
            g[y] = slope;
        }
    }
    Ok((u, g))
}

/// `max_{i≠j} |u(i)−u(j)| / d(i,j)`.
pub fn measured_lipschitz(space: &MetricMeasureSpace, u: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for i in space.point_ids() {
        for j in i + 1..space.len() {
            best = best.max(abs(u[i] - u[j]) / space.d(i, j));
        }
    }
    best
}

fn ramp_radius(scale: f64, j: usize) -> f64 {
    (pow2(-(j as i64) - 1) + 0.5) * scale
}

/// First `j ≥ 1` with `r_j` at most the smallest distance from `x` above
/// `scale/2`. From there on `B(x, r_j) = B̄(x, scale/2)` and every ramp point
/// set is the same.
fn stabilization_index(space: &MetricMeasureSpace, x: usize, scale: f64) -> usize {
    let half = scale / 2.0;
    let Some(&next) = space.critical_radii(x).iter().find(|&&d| d > half) else { return 1 };
    let mut j = 1;
    while ramp_radius(scale, j) > next {
        j += 1;
    }
    j
}

fn family(
    space: &MetricMeasureSpace,
    kind: ConstructionKind,
    base: Ball,
    lambda: Option<f64>,
    scale: f64,
    last: usize,
    stabilization: usize,
) -> ConstructionFamily {
    let x = base.center;
    let radii: Vec<f64> = (1..=last + 1).map(|j| ramp_radius(scale, j)).collect();
    let members = (1..=last)
        .map(|j| {
            let (outer, inner) = (radii[j - 1], radii[j]);
            let lipschitz = pow2(j as i64 + 2) / scale;
            let mut u = vec![0.0; space.len()];
            let mut g = vec![0.0; space.len()];
            for y in space.point_ids() {
                let d = space.d(x, y);
                if d <= inner {
                    u[y] = 1.0;
                } else if d < outer {
                    u[y] = (outer - d) / (outer - inner);
                }
                if d < outer {
                    g[y] = lipschitz;
                }
            }
            FamilyMember {
                j,
                u,
                g,
                inner: Ball::open(x, outer),
                lipschitz,
                inner_measure: space.ball_measure(Ball::open(x, outer)),
                next_measure: space.ball_measure(Ball::open(x, inner)),
            }
        })
        .collect();
    ConstructionFamily { kind, base, lambda, scale, radii, stabilization, members }
}

fn check_ball(space: &MetricMeasureSpace, ball: Ball) -> Result<(), ConstructionError> {
    let r = ball.radius;
    if !(r > 0.0 && r.is_finite() && r <= space.diameter()) {
        return Err(ConstructionError::BadRadius(r));
    }
    Ok(())
}

/// Ramps `Φ_{r_{j+1}, r_j}` with `r_j = (2^{-j-1} + 1/2) r` around the ball
/// center, for `j = 1 ..= min(j_max, J + 4)` where `J` is the stabilization
/// index.
pub fn construction1(space: &MetricMeasureSpace, ball: Ball, j_max: usize) -> Result<ConstructionFamily, ConstructionError> {
    check_ball(space, ball)?;
    let stab = stabilization_index(space, ball.center, ball.radius);
    Ok(construction1_through(space, ball, j_max.min(stab + EXTRA_INDICES).max(1)))
}

/// [`construction1`] with exactly the indices `1 ..= last`.
pub fn construction1_through(space: &MetricMeasureSpace, ball: Ball, last: usize) -> ConstructionFamily {
    let base = Ball::open(ball.center, ball.radius);
    let stab = stabilization_index(space, ball.center, ball.radius);
    family(space, ConstructionKind::C1, base, None, ball.radius, last.max(1), stab)
}

/// Ramps with radii `(2^{-j-1} + 1/2) φ_x(r)`, defined when the ball is fat:
/// `r ≤ 3 φ_x(r) / λ²`.
pub fn construction2(space: &MetricMeasureSpace, ball: Ball, lambda: f64, j_max: usize) -> Result<ConstructionFamily, ConstructionError> {
    let ph = c2_scale(space, ball, lambda)?;
    let stab = stabilization_index(space, ball.center, ph);
    Ok(family(space, ConstructionKind::C2, Ball::open(ball.center, ball.radius), Some(lambda), ph, j_max.min(stab + EXTRA_INDICES).max(1), stab))
}

/// [`construction2`] with exactly the indices `1 ..= last`.
pub fn construction2_through(space: &MetricMeasureSpace, ball: Ball, lambda: f64, last: usize) -> Result<ConstructionFamily, ConstructionError> {
    let ph = c2_scale(space, ball, lambda)?;
    let stab = stabilization_index(space, ball.center, ph);
    Ok(family(space, ConstructionKind::C2, Ball::open(ball.center, ball.radius), Some(lambda), ph, last.max(1), stab))
}

fn c2_scale(space: &MetricMeasureSpace, ball: Ball, lambda: f64) -> Result<f64, ConstructionError> {
    if !(lambda > 0.0 && lambda < 0.2) {
        return Err(ConstructionError::LambdaOutOfRange(lambda));
    }
    check_ball(space, ball)?;
    let ph = phi(space, ball.center, ball.radius);
    if ph <= 0.0 {
        return Err(ConstructionError::ZeroPhi { center: ball.center, radius: ball.radius });
    }
    let bound = 3.0 * ph / (lambda * lambda);
    if ball.radius > bound {
        return Err(ConstructionError::PreconditionRadius { r: ball.radius, bound });
    }
    Ok(ph)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfMass {
    pub holds: bool,
    /// `μ({y ∈ B : |ũ_j(y) − γ| ≥ 1/2})`.
    pub found: f64,
    /// `μ(B̃^{j+1})`.
    pub required: f64,
}

/// Whether `|ũ_j − γ| ≥ 1/2` on a subset of the base ball of measure at
/// least `μ(B̃^{j+1})`, up to a relative 1e-12 for summation order.
pub fn verify_halfmass(space: &MetricMeasureSpace, family: &ConstructionFamily, j: usize, gamma: f64) -> Result<HalfMass, ConstructionError> {
    if family.kind != ConstructionKind::C2 {
        return Err(ConstructionError::WrongKind);
    }
    let m = family.member(j).ok_or(ConstructionError::MissingIndex(j))?;
    let ball = space.ball_members(family.base);
    let found = ball.filter(|y| abs(m.u[y] - gamma) >= 0.5).measure(space);
    let required = m.next_measure;
    Ok(HalfMass { holds: ge_rel(found, required, 1e-12), found, required })
}

/// Membership and Lipschitz checks for every member of a family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub gradients_hold: bool,
    pub lipschitz_hold: bool,
    pub worst_lipschitz_ratio: f64,
}

pub fn check_family(space: &MetricMeasureSpace, family: &ConstructionFamily) -> FamilyCheck {
    let all = space.all_points();
    let mut gradients_hold = true;
    let mut worst = 0.0f64;
    for m in &family.members {
        gradients_hold &= is_generalized_gradient(space, &m.u, &m.g, &all).holds;
        worst = worst.max(measured_lipschitz(space, &m.u) / m.lipschitz);
    }
    FamilyCheck { gradients_hold, lipschitz_hold: worst <= 1.0 + 1e-12, worst_lipschitz_ratio: worst }
}

/// Points of the base ball, as a set.
pub fn base_members(space: &MetricMeasureSpace, family: &ConstructionFamily) -> PointSet {
    space.ball_members(family.base)
}
