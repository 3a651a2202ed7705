//! File formats, reports and the command-line driver for `hajlasz-core`.
//!
//! Exit status: 0 on success, 2 when the input is rejected, 3 when a
//! certified consequence fails on a valid input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod io;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use hajlasz_core::embeddings::{EmbeddingError, InequalityKind};
use hajlasz_core::extraction::{CaseTag, ExtractionError};
use hajlasz_core::hajlasz::GradientError;
use hajlasz_core::SpaceError;
use serde::{Serialize, Serializer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Input(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("invalid space: {0}")]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
}

/// What a successful run found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// The report was written and records a failed consequence.
    Violated,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => EXIT_OK,
            Verdict::Violated => EXIT_VIOLATED,
        }
    }
}

/// `auto` (three times the smallest distance) or an explicit radius.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Resolution {
    #[default]
    Auto,
    Fixed(f64),
}

impl Resolution {
    pub fn value(self, space: &hajlasz_core::MetricMeasureSpace) -> f64 {
        match self {
            Resolution::Auto => space.auto_resolution(),
            Resolution::Fixed(r) => r,
        }
    }

    pub fn as_option(self) -> Option<f64> {
        match self {
            Resolution::Auto => None,
            Resolution::Fixed(r) => Some(r),
        }
    }
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Resolution::Auto);
        }
        match s.parse::<f64>() {
            Ok(r) if r > 0.0 && r.is_finite() => Ok(Resolution::Fixed(r)),
            _ => Err(format!("resolution must be `auto` or a positive number, got `{s}`")),
        }
    }
}

impl Serialize for Resolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Resolution::Auto => serializer.serialize_str("auto"),
            Resolution::Fixed(r) => serializer.serialize_f64(*r),
        }
    }
}

fn parse_kind(s: &str) -> Result<InequalityKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        let names: Vec<String> = InequalityKind::ALL.iter().map(|k| serde_json::to_value(k).unwrap().as_str().unwrap().to_string()).collect();
        format!("unknown kind `{s}`, expected one of {}", names.join(", "))
    })
}

fn parse_case(s: &str) -> Result<CaseTag, String> {
    s.parse::<CaseTag>().map_err(|e| e.to_string())
}

/// Comma-separated numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Numbers(pub Vec<f64>);

impl FromStr for Numbers {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"))).collect::<Result<_, _>>().map(Numbers)
    }
}

#[derive(Debug, Parser)]
#[command(name = "hajlasz", version, about = "Lower mass bounds of finite metric measure spaces from Sobolev-type inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a space and write it as JSON.
    Gen(GenArgs),
    /// Measure lower mass, doubling and uniform perfectness constants.
    Analyze(AnalyzeArgs),
    /// Minimal Hajłasz gradient of a function.
    Gradient(GradientArgs),
    /// Empirical constant of an inequality over the test-function corpus.
    Constants(ConstantsArgs),
    /// Run one reverse implication ball by ball.
    Extract(ExtractArgs),
    /// Run every reverse implication that applies to the space.
    Verify(VerifyArgs),
    /// Trace the chaining argument for a bump function.
    Trace(TraceArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Output {
    /// JSON report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GenArgs {
    /// Generator spec, e.g. `grid:1:65`, `cantor:5`, `snowflake:0.7:cantor:5`,
    /// `vanishing:32:1`, `random:12:3`.
    pub spec: Option<String>,
    #[arg(long, value_name = "LEVEL")]
    pub cantor: Option<u32>,
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, value_name = "N")]
    pub vanishing: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace `d` by `d^ALPHA` after generating.
    #[arg(long, value_name = "ALPHA")]
    pub snowflake: Option<f64>,
    /// Space file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// JSON space file or generator spec.
    pub space: String,
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value = "auto")]
    pub resolution: Resolution,
    /// Include the table of φ_x(r) over all critical radii.
    #[arg(long)]
    pub phi: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GradientArgs {
    pub space: String,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Function values, one per point.
    #[arg(long, conflicts_with_all = ["u_file", "bump"])]
    pub u: Option<Numbers>,
    /// JSON array of function values.
    #[arg(long)]
    pub u_file: Option<PathBuf>,
    /// `x,r,R`: the Lipschitz bump around point x.
    #[arg(long)]
    pub bump: Option<Numbers>,
    /// `x,r`: restrict to the open ball B(x,r).
    #[arg(long)]
    pub domain: Option<Numbers>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Exponents {
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value = "auto")]
    pub resolution: Resolution,
    #[arg(long, default_value_t = hajlasz_core::constructions::DEFAULT_J_MAX)]
    pub j_max: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ConstantsArgs {
    pub space: String,
    #[arg(long, value_parser = parse_kind, default_value = "sobolev")]
    pub kind: InequalityKind,
    #[command(flatten)]
    pub exponents: Exponents,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ExtractArgs {
    pub space: String,
    #[arg(long, value_parser = parse_case)]
    pub case: CaseTag,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[command(flatten)]
    pub exponents: Exponents,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    pub space: String,
    /// Cases to run; all of them when absent.
    #[arg(long, value_parser = parse_case, value_delimiter = ',')]
    pub cases: Vec<CaseTag>,
    /// `p` for the Hölder cases; `2s` when absent. `--p` applies to the
    /// subcritical cases and defaults to `s/2`.
    #[arg(long)]
    pub p_holder: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[command(flatten)]
    pub exponents: Exponents,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TraceArgs {
    pub space: String,
    #[arg(long)]
    pub center: usize,
    /// Radius of B₀.
    #[arg(long)]
    pub radius: f64,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Constant of the localized lower mass condition; the measured lower
    /// mass constant times σ^{-s} when absent.
    #[arg(long)]
    pub b: Option<f64>,
    /// `r,R` of the bump around the center; `radius/4, radius/2` when absent.
    #[arg(long)]
    pub bump: Option<Numbers>,
    /// Value subtracted from u; picked by the trace when absent.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

/// Runs one command and reports how it ended.
pub fn run(cli: &Cli) -> Result<Verdict, LabError> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Gradient(a) => commands::gradient(a),
        Command::Constants(a) => commands::constants(a),
        Command::Extract(a) => commands::extract(a),
        Command::Verify(a) => commands::verify(a),
        Command::Trace(a) => commands::trace(a),
    }
}
