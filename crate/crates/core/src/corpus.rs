//! Generators for spaces with known geometry: grids, middle-thirds Cantor
//! sets, snowflaked metrics, a power-law density that breaks lower regularity
//! near the origin, and seeded random point clouds.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mmspace::{MetricMeasureSpace, SpaceError};
use crate::num::{ln, powf, sqrt};

pub const CANTOR_MAX_LEVEL: u32 = 8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

fn bad(msg: impl Into<String>) -> CorpusError {
    CorpusError::BadParams(msg.into())
}

/// Lattice points of `[0,1]^dim`, `n` per axis, each of weight `n^{-dim}`.
pub fn grid(dim: usize, n: usize) -> Result<MetricMeasureSpace, CorpusError> {
    if !(dim == 1 || dim == 2) {
        return Err(bad(format!("grid dimension must be 1 or 2, got {dim}")));
    }
    if n < 2 {
        return Err(bad(format!("grid needs at least 2 points per axis, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let coords: Vec<Vec<f64>> = if dim == 1 {
        (0..n).map(|i| vec![i as f64 * h]).collect()
    } else {
        (0..n * n).map(|k| vec![(k / n) as f64 * h, (k % n) as f64 * h]).collect()
    };
    let m = coords.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            // Integer offsets keep symmetric pairs bit-identical.
            let v = if dim == 1 {
                (j - i) as f64 * h
            } else {
                let dx = (i / n).abs_diff(j / n) as f64;
                let dy = (i % n).abs_diff(j % n) as f64;
                sqrt(dx * dx + dy * dy) * h
            };
            dist[i * m + j] = v;
            dist[j * m + i] = v;
        }
    }
    let w = 1.0 / m as f64;
    Ok(MetricMeasureSpace::from_parts(format!("grid:{dim}:{n}"), dist, vec![w; m], Some(coords))?)
}

/// Left endpoints of the `2^level` intervals of the middle-thirds
/// construction, each of weight `2^{-level}`.
pub fn cantor(level: u32) -> Result<MetricMeasureSpace, CorpusError> {
    if level == 0 || level > CANTOR_MAX_LEVEL {
        return Err(bad(format!("cantor level must be in 1..={CANTOR_MAX_LEVEL}, got {level}")));
    }
    let m = 1usize << level;
    let denom = 3u64.pow(level);
    // Numerators over 3^level: ternary digits in {0, 2} read off the bits of k.
    let numer: Vec<u64> = (0..m)
        .map(|k| (0..level).filter(|b| k >> b & 1 == 1).map(|b| 2 * 3u64.pow(level - 1 - b)).sum())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&k| numer[k]);
    let numer: Vec<u64> = order.into_iter().map(|k| numer[k]).collect();
    let scale = denom as f64;
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            dist[i * m + j] = numer[i].abs_diff(numer[j]) as f64 / scale;
        }
    }
    let coords = numer.iter().map(|&a| vec![a as f64 / scale]).collect();
    let w = powf(2.0, -(level as f64));
    Ok(MetricMeasureSpace::from_parts(format!("cantor:{level}"), dist, vec![w; m], Some(coords))?)
}

/// The same points and weights with distances `d^α`.
pub fn snowflake(space: &MetricMeasureSpace, alpha: f64) -> Result<MetricMeasureSpace, CorpusError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(bad(format!("snowflake exponent must lie in (0,1), got {alpha}")));
    }
    let dist = space.distances().iter().map(|&d| if d == 0.0 { 0.0 } else { powf(d, alpha) }).collect();
    let name = format!("snowflake:{alpha}:{}", space.name());
    Ok(MetricMeasureSpace::from_parts(name, dist, space.weights().to_vec(), None)?)
}

/// Points `i/n`, `i = 1..=n`, with weights proportional to `(i/n)^β`.
pub fn vanishing_density(n: usize, beta: f64) -> Result<MetricMeasureSpace, CorpusError> {
    if n < 4 {
        return Err(bad(format!("vanishing_density needs n ≥ 4, got {n}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(bad(format!("vanishing_density needs β > 0, got {beta}")));
    }
    let nf = n as f64;
    let raw: Vec<f64> = (1..=n).map(|i| powf(i as f64 / nf, beta)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = i.abs_diff(j) as f64 / nf;
        }
    }
    let coords = (1..=n).map(|i| vec![i as f64 / nf]).collect();
    Ok(MetricMeasureSpace::from_parts(format!("vanishing:{n}:{beta}"), dist, weights, Some(coords))?)
}

/// `n` uniform points of the unit square with uniform weights, seeded by
/// ChaCha8.
pub fn random_space(n: usize, seed: u64) -> Result<MetricMeasureSpace, CorpusError> {
    if n < 2 {
        return Err(bad(format!("random_space needs n ≥ 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
            let v = sqrt(dx * dx + dy * dy);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    let coords = pts.iter().map(|p| p.to_vec()).collect();
    Ok(MetricMeasureSpace::from_parts(format!("random:{n}:{seed}"), dist, vec![1.0 / n as f64; n], Some(coords))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    /// `μ(B(x,r)) ≥ κ r^s` for the expected `s`; all of these are also doubling.
    LowerRegular,
    Doubling,
    Neither,
}

/// A generator with its parameters. The textual form is colon separated:
/// `grid:DIM:N`, `cantor:LEVEL`, `snowflake:ALPHA:<spec>`,
/// `vanishing:N:BETA`, `random:N:SEED`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum CorpusSpec {
    Grid { dim: usize, n: usize },
    Cantor { level: u32 },
    Snowflake { alpha: f64, base: Box<CorpusSpec> },
    Vanishing { n: usize, beta: f64 },
    Random { n: usize, seed: u64 },
}

impl CorpusSpec {
    pub fn build(&self) -> Result<MetricMeasureSpace, CorpusError> {
        match self {
            CorpusSpec::Grid { dim, n } => grid(*dim, *n),
            CorpusSpec::Cantor { level } => cantor(*level),
            CorpusSpec::Snowflake { alpha, base } => snowflake(&base.build()?, *alpha),
            CorpusSpec::Vanishing { n, beta } => vanishing_density(*n, *beta),
            CorpusSpec::Random { n, seed } => random_space(*n, *seed),
        }
    }

    /// Dimension exponent the generator is designed around.
    pub fn expected_s(&self) -> f64 {
        match self {
            CorpusSpec::Grid { dim, .. } => *dim as f64,
            CorpusSpec::Cantor { .. } => ln(2.0) / ln(3.0),
            CorpusSpec::Snowflake { alpha, base } => base.expected_s() / alpha,
            CorpusSpec::Vanishing { .. } => 1.0,
            CorpusSpec::Random { .. } => 2.0,
        }
    }

    /// Behaviour of the continuum model as the parameters grow.
    pub fn regularity(&self) -> Regularity {
        match self {
            CorpusSpec::Grid { .. } | CorpusSpec::Cantor { .. } => Regularity::LowerRegular,
            CorpusSpec::Snowflake { base, .. } => base.regularity(),
            CorpusSpec::Vanishing { .. } => Regularity::Doubling,
            CorpusSpec::Random { .. } => Regularity::Neither,
        }
    }
}

impl fmt::Display for CorpusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusSpec::Grid { dim, n } => write!(f, "grid:{dim}:{n}"),
            CorpusSpec::Cantor { level } => write!(f, "cantor:{level}"),
            CorpusSpec::Snowflake { alpha, base } => write!(f, "snowflake:{alpha}:{base}"),
            CorpusSpec::Vanishing { n, beta } => write!(f, "vanishing:{n}:{beta}"),
            CorpusSpec::Random { n, seed } => write!(f, "random:{n}:{seed}"),
        }
    }
}

fn field<T: FromStr>(parts: &[&str], i: usize, what: &str) -> Result<T, CorpusError> {
    parts.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| bad(format!("missing or malformed {what}")))
}

impl FromStr for CorpusSpec {
    type Err = CorpusError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let arity = |k: usize| if parts.len() == k { Ok(()) } else { Err(bad(format!("`{text}` has the wrong number of fields"))) };
        match parts[0] {
            "grid" => {
                arity(3)?;
                Ok(CorpusSpec::Grid { dim: field(&parts, 1, "dimension")?, n: field(&parts, 2, "point count")? })
            }
            "cantor" => {
                arity(2)?;
                Ok(CorpusSpec::Cantor { level: field(&parts, 1, "level")? })
            }
            "snowflake" => {
                if parts.len() < 3 {
                    return Err(bad(format!("`{text}` needs an exponent and a base generator")));
                }
                let base = parts[2..].join(":").parse()?;
                Ok(CorpusSpec::Snowflake { alpha: field(&parts, 1, "exponent")?, base: Box::new(base) })
            }
            "vanishing" => {
                arity(3)?;
                Ok(CorpusSpec::Vanishing { n: field(&parts, 1, "point count")?, beta: field(&parts, 2, "β")? })
            }
            "random" => {
                arity(3)?;
                Ok(CorpusSpec::Random { n: field(&parts, 1, "point count")?, seed: field(&parts, 2, "seed")? })
            }
            other => Err(bad(format!("unknown generator `{other}`"))),
        }
    }
}

impl CorpusSpec {
    pub fn id(&self) -> String {
        self.to_string()
    }
}
