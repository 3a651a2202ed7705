//! Finite metric measure spaces and exact ball arithmetic.
//!
//! A space is a dense symmetric distance matrix plus a positive weight per
//! point. Every ball measure goes through a per-center radial profile so that
//! the same set always gets the same floating-point measure.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::num::abs;

/// Absolute slack for the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Reasons a candidate space is rejected. Indices are zero-based.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("a metric space needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("distance matrix has {rows} rows but {weights} weights were given")]
    SizeMismatch { rows: usize, weights: usize },
    #[error("row {row} of the distance matrix has {len} entries, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("distance d({0},{1}) is not a finite nonnegative number")]
    BadDistance(usize, usize),
    #[error("diagonal entry d({0},{0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("distinct points {0} and {1} are at distance zero")]
    CoincidentPoints(usize, usize),
    #[error("d({0},{1}) differs from d({1},{0})")]
    AsymmetricDistance(usize, usize),
    #[error("triangle inequality fails: d({0},{1}) > d({0},{2}) + d({2},{1})")]
    TriangleViolation(usize, usize, usize),
    #[error("weight of point {0} is not a finite positive number")]
    NonpositiveWeight(usize),
    #[error("coords has {coords} entries for {points} points")]
    CoordsMismatch { coords: usize, points: usize },
    #[error("point {index} is out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Unvalidated interchange record; this is the JSON space document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSpace {
    pub name: String,
    pub dist: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
}

/// A ball with an explicit center and radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub closed: bool,
}

impl Ball {
    pub fn open(center: usize, radius: f64) -> Self {
        Ball { center, radius, closed: false }
    }

    pub fn closed(center: usize, radius: f64) -> Self {
        Ball { center, radius, closed: true }
    }

    /// `σB`: same center, radius scaled by `sigma`.
    pub fn dilate(&self, sigma: f64) -> Self {
        Ball { radius: self.radius * sigma, ..*self }
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.closed {
            write!(f, "closed B({}, {})", self.center, self.radius)
        } else {
            write!(f, "B({}, {})", self.center, self.radius)
        }
    }
}

/// Sorted, duplicate-free subset of the points of a space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointSet {
    members: Vec<usize>,
    universe: usize,
}

impl PointSet {
    /// Builds a set from arbitrary indices; panics if an index is out of range.
    pub fn new(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = indices.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            assert!(last < universe, "point {last} outside a space of {universe} points");
        }
        PointSet { members, universe }
    }

    pub fn empty(universe: usize) -> Self {
        PointSet { members: Vec::new(), universe }
    }

    pub fn full(universe: usize) -> Self {
        PointSet { members: (0..universe).collect(), universe }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        let mut it = other.members.iter().peekable();
        'outer: for &m in &self.members {
            while let Some(&&o) = it.peek() {
                if o < m {
                    it.next();
                } else if o == m {
                    it.next();
                    continue 'outer;
                } else {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        let members = self.members.iter().copied().filter(|&i| other.contains(i)).collect();
        PointSet { members, universe: self.universe }
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        let members = self.members.iter().copied().filter(|&i| !other.contains(i)).collect();
        PointSet { members, universe: self.universe }
    }

    /// Keeps the members satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> PointSet {
        let members = self.members.iter().copied().filter(|&i| keep(i)).collect();
        PointSet { members, universe: self.universe }
    }

    /// Sum of weights in index order.
    pub fn measure(&self, space: &MetricMeasureSpace) -> f64 {
        self.members.iter().map(|&i| space.weights[i]).sum()
    }
}

/// Points sorted by distance from one center, with cumulative masses at each
/// distinct distance ("level"). Level 0 is the center itself.
#[derive(Clone, Debug)]
struct Profile {
    order: Vec<usize>,
    radii: Vec<f64>,
    level_end: Vec<usize>,
    closed_mass: Vec<f64>,
}

impl Profile {
    fn build(n: usize, center: usize, dist: &[f64], weights: &[f64]) -> Self {
        let row = &dist[center * n..(center + 1) * n];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let mut radii = Vec::new();
        let mut level_end = Vec::new();
        let mut closed_mass = Vec::new();
        let mut mass = 0.0;
        let mut i = 0;
        while i < n {
            let d = row[order[i]];
            while i < n && row[order[i]] == d {
                mass += weights[order[i]];
                i += 1;
            }
            if d > 0.0 {
                radii.push(d);
            }
            level_end.push(i);
            closed_mass.push(mass);
        }
        Profile { order, radii, level_end, closed_mass }
    }

    fn level_radius(&self, level: usize) -> f64 {
        if level == 0 {
            0.0
        } else {
            self.radii[level - 1]
        }
    }

    /// Level of the open ball of radius `r > 0`: number of radii below `r`.
    fn open_level(&self, r: f64) -> usize {
        self.radii.partition_point(|&c| c < r)
    }

    fn closed_level(&self, r: f64) -> usize {
        self.radii.partition_point(|&c| c <= r)
    }
}

/// A validated finite metric measure space. Immutable once built.
#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    name: String,
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
    profiles: Vec<Profile>,
    diameter: f64,
    min_gap: f64,
    total: f64,
}

impl PartialEq for MetricMeasureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.dist == other.dist
            && self.weights == other.weights
            && self.coords == other.coords
    }
}

/// Checks every invariant of a space and reports the first violation.
pub fn validate_space(raw: RawSpace) -> Result<MetricMeasureSpace, SpaceError> {
    let n = raw.dist.len();
    if n < 2 {
        return Err(SpaceError::TooFewPoints(n));
    }
    if raw.weights.len() != n {
        return Err(SpaceError::SizeMismatch { rows: n, weights: raw.weights.len() });
    }
    let mut dist = Vec::with_capacity(n * n);
    for (i, row) in raw.dist.iter().enumerate() {
        if row.len() != n {
            return Err(SpaceError::RaggedRow { row: i, len: row.len(), expected: n });
        }
        dist.extend_from_slice(row);
    }
    MetricMeasureSpace::from_parts(raw.name, dist, raw.weights, raw.coords)
}

impl MetricMeasureSpace {
    /// Builds a space from a row-major `n × n` distance matrix.
    pub fn from_parts(
        name: impl Into<String>,
        dist: Vec<f64>,
        weights: Vec<f64>,
        coords: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, SpaceError> {
        let n = weights.len();
        if n < 2 {
            return Err(SpaceError::TooFewPoints(n));
        }
        if dist.len() != n * n {
            return Err(SpaceError::SizeMismatch { rows: dist.len() / n.max(1), weights: n });
        }
        let d = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            for j in 0..n {
                let v = d(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(SpaceError::BadDistance(i, j));
                }
            }
        }
        for i in 0..n {
            if d(i, i) != 0.0 {
                return Err(SpaceError::NonzeroDiagonal(i));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if d(i, j) != d(j, i) {
                    return Err(SpaceError::AsymmetricDistance(i, j));
                }
                if d(i, j) == 0.0 {
                    return Err(SpaceError::CoincidentPoints(i, j));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let dij = d(i, j);
                for k in 0..n {
                    if k != i && k != j && dij > d(i, k) + d(k, j) + TRIANGLE_TOL {
                        return Err(SpaceError::TriangleViolation(i, j, k));
                    }
                }
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(SpaceError::NonpositiveWeight(i));
            }
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(SpaceError::CoordsMismatch { coords: c.len(), points: n });
            }
        }
        let total: f64 = weights.iter().sum();
        if !total.is_finite() {
            return Err(SpaceError::NonpositiveWeight(n - 1));
        }
        let profiles = (0..n).map(|c| Profile::build(n, c, &dist, &weights)).collect();
        let mut diameter = 0.0f64;
        let mut min_gap = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(d(i, j));
                min_gap = min_gap.min(d(i, j));
            }
        }
        Ok(MetricMeasureSpace {
            name: name.into(),
            n,
            dist,
            weights,
            coords,
            profiles,
            diameter,
            min_gap,
            total,
        })
    }

    pub fn to_raw(&self) -> RawSpace {
        RawSpace {
            name: self.name.clone(),
            dist: self.dist.chunks(self.n).map(|r| r.to_vec()).collect(),
            weights: self.weights.clone(),
            coords: self.coords.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: a valid space has at least two points.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point_ids(&self) -> core::ops::Range<usize> {
        0..self.n
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Row-major distance matrix.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn total_measure(&self) -> f64 {
        self.total
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest distance between distinct points.
    pub fn min_positive_distance(&self) -> f64 {
        self.min_gap
    }

    /// Default resolution scale: three times the minimum gap.
    pub fn auto_resolution(&self) -> f64 {
        3.0 * self.min_gap
    }

    pub fn all_points(&self) -> PointSet {
        PointSet::full(self.n)
    }

    pub fn check_index(&self, i: usize) -> Result<(), SpaceError> {
        if i < self.n {
            Ok(())
        } else {
            Err(SpaceError::IndexOutOfRange { index: i, len: self.n })
        }
    }

    /// Sorted distinct positive distances from `center`.
    pub fn critical_radii(&self, center: usize) -> &[f64] {
        &self.profiles[center].radii
    }

    /// Largest distance from `center` to any point.
    pub fn eccentricity(&self, center: usize) -> f64 {
        self.profiles[center].radii.last().copied().unwrap_or(0.0)
    }

    pub fn ball_members(&self, ball: Ball) -> PointSet {
        match self.ball_level(ball) {
            None => PointSet::empty(self.n),
            Some(level) => self.level_members(ball.center, level),
        }
    }

    pub fn ball_measure(&self, ball: Ball) -> f64 {
        match self.ball_level(ball) {
            None => 0.0,
            Some(level) => self.profiles[ball.center].closed_mass[level],
        }
    }

    /// Whether `ball` is the whole space.
    pub fn ball_is_everything(&self, ball: Ball) -> bool {
        match self.ball_level(ball) {
            None => false,
            Some(level) => self.profiles[ball.center].level_end[level] == self.n,
        }
    }

    pub fn ball_contains(&self, ball: Ball, point: usize) -> bool {
        let d = self.d(ball.center, point);
        if ball.closed {
            d <= ball.radius
        } else {
            d < ball.radius
        }
    }

    /// Member-wise inclusion `a ⊆ b`.
    pub fn ball_subset(&self, a: Ball, b: Ball) -> bool {
        match self.ball_level(a) {
            None => true,
            Some(level) => {
                let p = &self.profiles[a.center];
                p.order[..p.level_end[level]].iter().all(|&y| self.ball_contains(b, y))
            }
        }
    }

    /// Number of points in `ball`.
    pub fn ball_size(&self, ball: Ball) -> usize {
        match self.ball_level(ball) {
            None => 0,
            Some(level) => self.profiles[ball.center].level_end[level],
        }
    }

    /// Sub-space on `domain` with induced distances and weights.
    pub fn restrict(&self, domain: &PointSet) -> Result<MetricMeasureSpace, SpaceError> {
        let idx = domain.members();
        if idx.len() < 2 {
            return Err(SpaceError::TooFewPoints(idx.len()));
        }
        if let Some(&last) = idx.last() {
            self.check_index(last)?;
        }
        let m = idx.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                dist.push(self.d(i, j));
            }
        }
        let weights = idx.iter().map(|&i| self.weights[i]).collect();
        let coords = self.coords.as_ref().map(|c| idx.iter().map(|&i| c[i].clone()).collect());
        MetricMeasureSpace::from_parts(self.name.clone(), dist, weights, coords)
    }

    // Radial-profile access for the analyzers.

    pub(crate) fn level_count(&self, center: usize) -> usize {
        self.profiles[center].closed_mass.len()
    }

    pub(crate) fn level_radius(&self, center: usize, level: usize) -> f64 {
        self.profiles[center].level_radius(level)
    }

    /// Measure of the closed ball at a level.
    pub(crate) fn level_mass(&self, center: usize, level: usize) -> f64 {
        self.profiles[center].closed_mass[level]
    }

    /// Points added when going from level `level - 1` to `level`.
    pub(crate) fn level_shell(&self, center: usize, level: usize) -> &[usize] {
        let p = &self.profiles[center];
        let start = if level == 0 { 0 } else { p.level_end[level - 1] };
        &p.order[start..p.level_end[level]]
    }

    pub(crate) fn level_members(&self, center: usize, level: usize) -> PointSet {
        let p = &self.profiles[center];
        PointSet::new(self.n, p.order[..p.level_end[level]].iter().copied())
    }

    pub(crate) fn closed_level(&self, center: usize, r: f64) -> usize {
        self.profiles[center].closed_level(r)
    }

    /// Level describing the member set of `ball`, or `None` when it is empty.
    pub(crate) fn ball_level(&self, ball: Ball) -> Option<usize> {
        let p = &self.profiles[ball.center];
        if ball.closed {
            if ball.radius < 0.0 {
                None
            } else {
                Some(p.closed_level(ball.radius))
            }
        } else if ball.radius <= 0.0 {
            None
        } else {
            Some(p.open_level(ball.radius))
        }
    }
}

impl Serialize for MetricMeasureSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricMeasureSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSpace::deserialize(deserializer)?;
        validate_space(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<RawSpace> for MetricMeasureSpace {
    type Error = SpaceError;

    fn try_from(raw: RawSpace) -> Result<Self, SpaceError> {
        validate_space(raw)
    }
}

/// Largest `|a - b|` entry between two distance matrices of equal size.
pub fn max_distance_gap(a: &MetricMeasureSpace, b: &MetricMeasureSpace) -> f64 {
    a.dist.iter().zip(&b.dist).map(|(x, y)| abs(x - y)).fold(0.0, f64::max)
}
