//! The reverse direction: from a measured inequality constant back to a lower
//! bound on the measure of balls.
//!
//! [`iteration_check`] evaluates the iteration lemma on a finite sequence,
//! [`extract_kappa`] and [`extract_relative_kappa`] evaluate the explicit
//! constants, and [`pipeline_verify`] runs the whole argument ball by ball.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constructions::ConstructionError;
use crate::embeddings::EmbeddingError;
use crate::num::{floor, ln, powf, sqrt};

mod pipeline;

pub use pipeline::{pipeline_verify, BallCheck, BallPath, ExtractionReport, IterationLog, PipelineParams, SkippedBall};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExtractionError {
    #[error("the iteration lemma needs 0 < p < q, got p = {p}, q = {q}")]
    BadExponents { p: f64, q: f64 },
    #[error("missing or non-positive constant `{0}`")]
    MissingConstant(&'static str),
    #[error("lambda = {0} is outside (0, 1/5)")]
    LambdaOutOfRange(f64),
    #[error("beta = {0} must exceed 1")]
    BadBeta(f64),
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error("the space is not uniformly perfect at resolution {0}")]
    NotUniformlyPerfect(f64),
    #[error("a case of the wrong shape was passed: {0}")]
    WrongCase(CaseTag),
    #[error("the lower mass bound fails at row {witness}")]
    ConsequenceViolated { report: Box<ExtractionReport>, witness: usize },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// One reverse implication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "thm4.1-b")]
    Thm41b,
    #[serde(rename = "thm4.1-c")]
    Thm41c,
    #[serde(rename = "thm4.4-b")]
    Thm44b,
    #[serde(rename = "thm4.4-c")]
    Thm44c,
    #[serde(rename = "thm5.1")]
    Thm51,
    #[serde(rename = "thm5.4")]
    Thm54,
    #[serde(rename = "thm6.1")]
    Thm61,
    #[serde(rename = "thm6.2")]
    Thm62,
}

impl CaseTag {
    pub const ALL: [CaseTag; 8] =
        [CaseTag::Thm41b, CaseTag::Thm41c, CaseTag::Thm44b, CaseTag::Thm44c, CaseTag::Thm51, CaseTag::Thm54, CaseTag::Thm61, CaseTag::Thm62];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Thm41b => "thm4.1-b",
            CaseTag::Thm41c => "thm4.1-c",
            CaseTag::Thm44b => "thm4.4-b",
            CaseTag::Thm44c => "thm4.4-c",
            CaseTag::Thm51 => "thm5.1",
            CaseTag::Thm54 => "thm5.4",
            CaseTag::Thm61 => "thm6.1",
            CaseTag::Thm62 => "thm6.2",
        }
    }

    /// Bounds of the form `μ(B(x,r)) / μ(B(y,R)) ≥ κ (r/R)^e` for nested balls.
    pub fn is_relative(self) -> bool {
        matches!(self, CaseTag::Thm44b | CaseTag::Thm44c | CaseTag::Thm54 | CaseTag::Thm62)
    }

    /// Cases whose argument needs the uniform perfectness constant.
    pub fn uses_lambda(self) -> bool {
        !matches!(self, CaseTag::Thm41b | CaseTag::Thm44b)
    }

    /// Cases whose argument only covers balls with `r ≤ 3φ_x(r)/λ²` directly.
    pub fn needs_fat_balls(self) -> bool {
        matches!(self, CaseTag::Thm41c | CaseTag::Thm44c | CaseTag::Thm51 | CaseTag::Thm54)
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseTag {
    type Err = ExtractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseTag::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ExtractionError::BadParameters(alloc::format!("unknown case `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationInstance {
    pub a_seq: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationVerdict {
    /// `a_{j+1}^{1/q} ≤ ρ τ^j a_j^{1/p}` for every listed `j`, also for the
    /// sequence continued by the constant `a_N`, and `a ≤ a_j ≤ b`.
    pub hypothesis: bool,
    /// First `j` (1-based) where the recursive inequality fails.
    pub first_failure: Option<usize>,
    /// `a_1^{1−p/q} ρ^p τ^{pq/(q−p)} ≥ 1`.
    pub conclusion: bool,
    /// `[ρ^p τ^{pq/(q−p)}]^{−q/(q−p)}`, the smallest `a_1` the conclusion allows.
    pub implied_lower_bound: f64,
}

/// Evaluates the iteration lemma on a finite sequence `a_1, …, a_N`.
pub fn iteration_check(inst: &IterationInstance) -> Result<IterationVerdict, ExtractionError> {
    iteration_check_rtol(inst, 0.0)
}

/// [`iteration_check`] with a relative slack on the recursive inequality.
pub fn iteration_check_rtol(inst: &IterationInstance, rtol: f64) -> Result<IterationVerdict, ExtractionError> {
    let IterationInstance { a_seq, a, b, p, q, rho, tau } = inst;
    let (p, q, rho, tau) = (*p, *q, *rho, *tau);
    if !(p > 0.0 && q > p && q.is_finite()) {
        return Err(ExtractionError::BadExponents { p, q });
    }
    let n = a_seq.len();
    // Logarithms keep tiny terms from underflowing to 0 ≤ 0.
    let slack = ln(1.0 + rtol);
    let step = |j: usize, prev: f64, next: f64| ln(next) / q <= ln(rho) + j as f64 * ln(tau) + ln(prev) / p + slack;
    let mut first_failure = (1..n).find(|&j| !step(j, a_seq[j - 1], a_seq[j]));
    if first_failure.is_none() && n > 0 {
        // The sequence continues with the constant a_N. For τ ≥ 1 the step
        // j = N is the hardest one; for τ < 1 the tail fails eventually.
        let last = a_seq[n - 1];
        if !step(n, last, last) {
            first_failure = Some(n);
        } else if tau < 1.0 {
            let need = (1.0 / q - 1.0 / p) * ln(last) - ln(rho) - slack;
            first_failure = Some((floor(need / ln(tau)) as usize + 1).max(n + 1));
        }
    }
    let bounded = *a > 0.0 && a_seq.iter().all(|&v| v >= *a && v <= *b);
    let factor = powf(rho, p) * powf(tau, p * q / (q - p));
    let a1 = a_seq.first().copied().unwrap_or(f64::NAN);
    Ok(IterationVerdict {
        hypothesis: first_failure.is_none() && bounded,
        first_failure,
        conclusion: (1.0 - p / q) * ln(a1) + p * ln(rho) + p * q / (q - p) * ln(tau) >= ln(1.0 - rtol),
        implied_lower_bound: powf(factor, -q / (q - p)),
    })
}

/// Measured constants and exponents feeding the explicit κ formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KappaInputs {
    pub s: f64,
    pub p: Option<f64>,
    pub c_s: Option<f64>,
    pub c_p: Option<f64>,
    pub c_h: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
}

impl KappaInputs {
    fn get(v: Option<f64>, name: &'static str) -> Result<f64, ExtractionError> {
        match v {
            Some(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(ExtractionError::MissingConstant(name)),
        }
    }

    fn s(&self) -> Result<f64, ExtractionError> {
        Self::get(Some(self.s), "s")
    }

    fn lambda(&self) -> Result<f64, ExtractionError> {
        let l = Self::get(self.lambda, "lambda")?;
        if l < 0.2 {
            Ok(l)
        } else {
            Err(ExtractionError::LambdaOutOfRange(l))
        }
    }

    fn beta(&self) -> Result<f64, ExtractionError> {
        let b = Self::get(self.beta, "beta").map_err(|_| ExtractionError::BadBeta(self.beta.unwrap_or(f64::NAN)))?;
        if b > 1.0 {
            Ok(b)
        } else {
            Err(ExtractionError::BadBeta(b))
        }
    }
}

/// κ for `μ(B(x,r)) ≥ κ r^s`, evaluated literally:
///
/// * `thm4.1-b`: `2^{−s} (8 C_S)^{−p}`
/// * `thm4.1-c`: `2^{−s} (24 C_P λ^{−2})^{−p} λ^s`
/// * `thm5.1`: `C₁^s λ^{2s} / (96^s (2s/γ)^{s/γ} √C₂)`
/// * `thm6.1`: `(λ / C_H)^p`
pub fn extract_kappa(case: CaseTag, k: &KappaInputs) -> Result<f64, ExtractionError> {
    let s = k.s()?;
    match case {
        CaseTag::Thm41b => {
            let (p, c) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_s, "C_S")?);
            Ok(powf(2.0, -s) * powf(8.0 * c, -p))
        }
        CaseTag::Thm41c => {
            let (p, c, l) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_p, "C_P")?, k.lambda()?);
            Ok(powf(2.0, -s) * powf(24.0 * c / (l * l), -p) * powf(l, s))
        }
        CaseTag::Thm51 => {
            let (c1, c2, gamma, l) = (KappaInputs::get(k.c1, "C1")?, KappaInputs::get(k.c2, "C2")?, KappaInputs::get(k.gamma, "gamma")?, k.lambda()?);
            Ok(powf(c1, s) * powf(l, 2.0 * s) / (powf(96.0, s) * powf(2.0 * s / gamma, s / gamma) * sqrt(c2)))
        }
        CaseTag::Thm61 => {
            let (p, c, l) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_h, "C_H")?, k.lambda()?);
            Ok(powf(l / c, p))
        }
        other => Err(ExtractionError::WrongCase(other)),
    }
}

/// κ and exponent `e` for `μ(B(x,r)) / μ(B(y,R)) ≥ κ (r/R)^e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeKappa {
    pub kappa: f64,
    pub exponent: f64,
}

/// Relative κ, evaluated literally:
///
/// * `thm4.4-b`: `(8 C_S)^{−s} 2^{−s²/p}`, exponent `s`
/// * `thm4.4-c`: `(λ² / (24 C_P))^s 2^{−s²/p}`, exponent `s`
/// * `thm5.4`: `(C₁λ² / (24 (βs/γ)^{1/γ} C₂^{1/(βs)}))^s 2^{−β²s/(β−1)²}`,
///   exponent `βs/(β−1)`
/// * `thm6.2`: `(λ / C_H)^p`, exponent `s`
///
/// For `thm5.4` the base carries the power `s` as written; the iteration
/// argument only supports the power `βs/(β−1)`, see [`proven_kappa_beta`].
pub fn extract_relative_kappa(case: CaseTag, k: &KappaInputs) -> Result<RelativeKappa, ExtractionError> {
    let s = k.s()?;
    let same = |kappa| Ok(RelativeKappa { kappa, exponent: s });
    match case {
        CaseTag::Thm44b => {
            let (p, c) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_s, "C_S")?);
            same(powf(8.0 * c, -s) * powf(2.0, -s * s / p))
        }
        CaseTag::Thm44c => {
            let (p, c, l) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_p, "C_P")?, k.lambda()?);
            same(powf(l * l / (24.0 * c), s) * powf(2.0, -s * s / p))
        }
        CaseTag::Thm54 => {
            let beta = k.beta()?;
            let base = beta_base(k, s, beta)?;
            Ok(RelativeKappa { kappa: powf(base, s) * powf(2.0, -beta * beta * s / ((beta - 1.0) * (beta - 1.0))), exponent: beta * s / (beta - 1.0) })
        }
        CaseTag::Thm62 => {
            let (p, c, l) = (KappaInputs::get(k.p, "p")?, KappaInputs::get(k.c_h, "C_H")?, k.lambda()?);
            same(powf(l / c, p))
        }
        other => Err(ExtractionError::WrongCase(other)),
    }
}

/// `C₁λ² / (24 (βs/γ)^{1/γ} C₂^{1/(βs)})`.
fn beta_base(k: &KappaInputs, s: f64, beta: f64) -> Result<f64, ExtractionError> {
    let (c1, c2, gamma, l) = (KappaInputs::get(k.c1, "C1")?, KappaInputs::get(k.c2, "C2")?, KappaInputs::get(k.gamma, "gamma")?, k.lambda()?);
    Ok(c1 * l * l / (24.0 * powf(beta * s / gamma, 1.0 / gamma) * powf(c2, 1.0 / (beta * s))))
}

/// The relative constant the iteration argument delivers for exponential
/// integrability in the doubling setting: the base of
/// [`extract_relative_kappa`] raised to `βs/(β−1)` instead of `s`.
pub fn proven_kappa_beta(k: &KappaInputs) -> Result<RelativeKappa, ExtractionError> {
    let s = k.s()?;
    let beta = k.beta()?;
    let e = beta * s / (beta - 1.0);
    let base = beta_base(k, s, beta)?;
    Ok(RelativeKappa { kappa: powf(base, e) * powf(2.0, -beta * beta * s / ((beta - 1.0) * (beta - 1.0))), exponent: e })
}
