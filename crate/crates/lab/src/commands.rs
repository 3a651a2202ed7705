use hajlasz_core::constructions::{bump, construction1};
use hajlasz_core::corpus::{cantor, grid, random_space, snowflake, vanishing_density, CorpusSpec};
use hajlasz_core::embeddings::{chaining_trace, estimate_constant, BallRow, InequalityCase, InequalityKind, TestPair};
use hajlasz_core::extraction::{pipeline_verify, BallPath, CaseTag, ExtractionError, ExtractionReport, PipelineParams};
use hajlasz_core::geometry::{lower_mass_constant, summarize};
use hajlasz_core::hajlasz::{is_generalized_gradient, minimal_gradient, GradientCheck, SolverReport};
use hajlasz_core::{Ball, MetricMeasureSpace};
use serde::Serialize;

use crate::io::{emit, emit_json, space_json, write_csv, Envelope, SpaceSource};
use crate::{AnalyzeArgs, ConstantsArgs, Exponents, ExtractArgs, GenArgs, GradientArgs, LabError, TraceArgs, Verdict, VerifyArgs};

fn input(msg: impl Into<String>) -> LabError {
    LabError::Input(msg.into())
}

fn load(text: &str) -> Result<(SpaceSource, MetricMeasureSpace), LabError> {
    let source = SpaceSource::parse(text)?;
    let space = source.load()?;
    Ok((source, space))
}

/// `s` from the flag, else from the generator.
fn exponent(flag: Option<f64>, source: &SpaceSource) -> Result<f64, LabError> {
    flag.or_else(|| source.expected_s()).ok_or_else(|| input("--s is required for spaces read from files"))
}

pub fn gen(a: &GenArgs) -> Result<Verdict, LabError> {
    let err = |e: hajlasz_core::corpus::CorpusError| input(e.to_string());
    let chosen = [a.spec.is_some(), a.cantor.is_some(), a.grid.is_some(), a.vanishing.is_some(), a.random.is_some()];
    if chosen.iter().filter(|&&c| c).count() != 1 {
        return Err(input("give exactly one of SPEC, --cantor, --grid, --vanishing, --random"));
    }
    let space = if let Some(spec) = &a.spec {
        spec.parse::<CorpusSpec>().map_err(err)?.build().map_err(err)?
    } else if let Some(level) = a.cantor {
        cantor(level).map_err(err)?
    } else if let Some(n) = a.grid {
        grid(a.dim, n).map_err(err)?
    } else if let Some(n) = a.vanishing {
        vanishing_density(n, a.beta).map_err(err)?
    } else {
        random_space(a.random.unwrap_or(0), a.seed).map_err(err)?
    };
    let space = match a.snowflake {
        Some(alpha) => snowflake(&space, alpha).map_err(err)?,
        None => space,
    };
    emit(a.out.as_deref(), &space_json(&space))?;
    Ok(Verdict::Pass)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Verdict, LabError> {
    let (_, space) = load(&a.space)?;
    if !(a.s > 0.0) {
        return Err(input("--s must be positive"));
    }
    let summary = summarize(&space, a.s, a.resolution.value(&space), a.phi);
    if let (Some(path), Some(table)) = (&a.output.csv, &summary.phi_table) {
        write_csv(path, table)?;
    }
    emit_json(a.output.out.as_deref(), &Envelope::new("analyze", a, &space, &summary))?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct GradientResult {
    u: Vec<f64>,
    solver: SolverReport,
    check: GradientCheck,
}

#[derive(Serialize)]
struct PointRow {
    point: usize,
    u: f64,
    g: f64,
}

fn ball_arg(v: &[f64], what: &str, space: &MetricMeasureSpace) -> Result<Ball, LabError> {
    match v {
        [x, r] if *x >= 0.0 && x.fract() == 0.0 && (*x as usize) < space.len() && *r > 0.0 => Ok(Ball::open(*x as usize, *r)),
        _ => Err(input(format!("{what} must be `x,r` with a point index x and r > 0"))),
    }
}

pub fn gradient(a: &GradientArgs) -> Result<Verdict, LabError> {
    let (_, space) = load(&a.space)?;
    let u = if let Some(u) = &a.u {
        u.0.clone()
    } else if let Some(path) = &a.u_file {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(path.clone(), e))?;
        serde_json::from_str::<Vec<f64>>(&text).map_err(|e| input(format!("{}: {e}", path.display())))?
    } else if let Some(b) = &a.bump {
        let [x, r, big_r] = b.0[..] else { return Err(input("--bump must be `x,r,R`")) };
        let ball = ball_arg(&[x, big_r], "--bump", &space)?;
        bump(&space, ball.center, r, big_r).map_err(|e| input(e.to_string()))?.0
    } else {
        return Err(input("give one of --u, --u-file, --bump"));
    };
    let domain = match &a.domain {
        Some(d) => space.ball_members(ball_arg(&d.0, "--domain", &space)?),
        None => space.all_points(),
    };
    let solver = minimal_gradient(&space, &u, a.p, &domain)?;
    let check = is_generalized_gradient(&space, &u, &solver.g, &domain);
    if let Some(path) = &a.output.csv {
        write_csv(path, space.point_ids().map(|i| PointRow { point: i, u: u[i], g: solver.g[i] }))?;
    }
    let result = GradientResult { u, solver, check };
    emit_json(a.output.out.as_deref(), &Envelope::new("gradient", a, &space, &result))?;
    Ok(Verdict::Pass)
}

/// Balls `B(x, r)` for every critical radius `r` in `[resolution, diam]`.
fn candidate_balls(space: &MetricMeasureSpace, resolution: f64) -> Vec<Ball> {
    let diam = space.diameter();
    let mut out = Vec::new();
    for x in space.point_ids() {
        for &r in space.critical_radii(x).iter().filter(|&&r| r >= resolution && r <= diam) {
            out.push(Ball::open(x, r));
        }
    }
    out
}

fn inequality_case(kind: InequalityKind, e: &Exponents, s: f64) -> Result<InequalityCase, LabError> {
    let case = match kind {
        InequalityKind::Exponential | InequalityKind::ExponentialDoubling => InequalityCase::exponential(kind, s, e.sigma, e.c1, e.gamma),
        InequalityKind::HolderGlobal | InequalityKind::HolderLocal => InequalityCase::new(kind, s, e.p.unwrap_or(2.0 * s), e.sigma),
        _ => InequalityCase::new(kind, s, e.p.unwrap_or(s / 2.0), e.sigma),
    };
    case.validate()?;
    Ok(case)
}

#[derive(Serialize)]
struct ConstantsResult {
    case: InequalityCase,
    resolution: f64,
    corpus: &'static str,
    /// Lower bound for the constant of the inequality.
    constant: f64,
    witness: Option<BallRow>,
    rows: Vec<BallRow>,
}

#[derive(Serialize)]
struct RatioRow<'a> {
    center: usize,
    radius: f64,
    best: &'a str,
    lhs: f64,
    rhs_core: f64,
    ratio: f64,
}

fn family_pairs(space: &MetricMeasureSpace, ball: Ball, j_max: usize) -> Result<Vec<TestPair>, LabError> {
    let fam = construction1(space, ball, j_max).map_err(|e| input(e.to_string()))?;
    Ok(fam
        .members
        .into_iter()
        .map(|m| TestPair { id: format!("c1({},{}):{}", ball.center, ball.radius, m.j), u: m.u, g: m.g })
        .collect())
}

pub fn constants(a: &ConstantsArgs) -> Result<Verdict, LabError> {
    let (source, space) = load(&a.space)?;
    let e = &a.exponents;
    let s = exponent(e.s, &source)?;
    let case = inequality_case(a.kind, e, s)?;
    let resolution = e.resolution.value(&space);
    let balls = candidate_balls(&space, resolution);
    if balls.is_empty() {
        return Err(input(format!("no critical radius of the space lies in [{resolution}, diam]")));
    }
    let mut rows = Vec::new();
    if a.kind.is_global() {
        let mut pairs = Vec::new();
        for &ball in &balls {
            pairs.extend(family_pairs(&space, ball, e.j_max)?);
        }
        rows = estimate_constant(&space, &case, &pairs, &balls)?.rows;
    } else {
        for &ball in &balls {
            let pairs = family_pairs(&space, ball, e.j_max)?;
            rows.extend(estimate_constant(&space, &case, &pairs, &[ball])?.rows);
        }
    }
    let witness = rows.iter().filter(|r| !r.ratio.is_nan()).max_by(|x, y| x.ratio.total_cmp(&y.ratio)).cloned();
    let constant = witness.as_ref().map_or(0.0, |w| w.ratio);
    if let Some(path) = &a.output.csv {
        write_csv(
            path,
            rows.iter().map(|r| RatioRow { center: r.ball.center, radius: r.ball.radius, best: &r.best_id, lhs: r.lhs, rhs_core: r.rhs_core, ratio: r.ratio }),
        )?;
    }
    let result = ConstantsResult { case, resolution, corpus: "construction1 on every candidate ball", constant, witness, rows };
    emit_json(a.output.out.as_deref(), &Envelope::new("constants", a, &space, &result))?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct ExtractRow {
    center: usize,
    radius: f64,
    outer_center: Option<usize>,
    outer_radius: Option<f64>,
    path: &'static str,
    constant: f64,
    family_size: usize,
    kappa: f64,
    exponent: f64,
    mass: f64,
    bound: f64,
    pass: bool,
}

fn extract_rows(rep: &ExtractionReport) -> impl Iterator<Item = ExtractRow> + '_ {
    rep.rows.iter().map(|r| ExtractRow {
        center: r.ball.center,
        radius: r.ball.radius,
        outer_center: r.outer.map(|o| o.center),
        outer_radius: r.outer.map(|o| o.radius),
        path: match r.path {
            BallPath::Direct => "direct",
            BallPath::FatBall { .. } => "fat-ball",
            BallPath::WholeSpace => "whole-space",
        },
        constant: r.constant,
        family_size: r.family_size,
        kappa: r.kappa,
        exponent: r.exponent,
        mass: r.mass,
        bound: r.bound,
        pass: r.pass,
    })
}

fn pipeline_params(e: &Exponents, s: f64, p: f64, beta: f64) -> PipelineParams {
    PipelineParams { s, p, sigma: e.sigma, c1: e.c1, gamma: e.gamma, beta, resolution: e.resolution.as_option(), j_max: e.j_max }
}

fn default_p(case: CaseTag, s: f64) -> f64 {
    match case {
        CaseTag::Thm61 | CaseTag::Thm62 => 2.0 * s,
        CaseTag::Thm51 | CaseTag::Thm54 => s,
        _ => s / 2.0,
    }
}

/// Report of a pipeline run, also when a ball fails.
fn run_case(space: &MetricMeasureSpace, case: CaseTag, params: &PipelineParams) -> Result<ExtractionReport, LabError> {
    match pipeline_verify(space, case, params) {
        Ok(rep) => Ok(rep),
        Err(ExtractionError::ConsequenceViolated { report, witness }) => {
            eprintln!("{case}: consequence fails at row {witness}: {:?}", report.rows[witness]);
            Ok(*report)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn extract(a: &ExtractArgs) -> Result<Verdict, LabError> {
    let (source, space) = load(&a.space)?;
    let e = &a.exponents;
    let s = exponent(e.s, &source)?;
    let params = pipeline_params(e, s, e.p.unwrap_or(default_p(a.case, s)), a.beta);
    let rep = run_case(&space, a.case, &params)?;
    if let Some(path) = &a.output.csv {
        write_csv(path, extract_rows(&rep))?;
    }
    emit_json(a.output.out.as_deref(), &Envelope::new("extract", a, &space, &rep))?;
    Ok(if rep.pass { Verdict::Pass } else { Verdict::Violated })
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
enum CaseStatus {
    Pass,
    Fail,
    /// The case needs uniform perfectness, which the space lacks at this
    /// resolution.
    NotApplicable,
}

#[derive(Serialize)]
struct CaseSummary {
    case: CaseTag,
    status: CaseStatus,
    p: f64,
    constant_name: Option<String>,
    constant_sup: Option<f64>,
    kappa: Option<f64>,
    exponent: Option<f64>,
    rows: usize,
    failed_rows: usize,
    skipped: usize,
    note: Option<String>,
}

#[derive(Serialize)]
struct CaseCsvRow {
    case: CaseTag,
    status: &'static str,
    kappa: Option<f64>,
    exponent: Option<f64>,
    rows: usize,
    failed_rows: usize,
    skipped: usize,
}

pub fn verify(a: &VerifyArgs) -> Result<Verdict, LabError> {
    let (source, space) = load(&a.space)?;
    let e = &a.exponents;
    let s = exponent(e.s, &source)?;
    let cases = if a.cases.is_empty() { CaseTag::ALL.to_vec() } else { a.cases.clone() };
    let mut summaries = Vec::new();
    for case in cases {
        let p = match case {
            CaseTag::Thm61 | CaseTag::Thm62 => a.p_holder.unwrap_or(2.0 * s),
            CaseTag::Thm51 | CaseTag::Thm54 => s,
            _ => e.p.unwrap_or(s / 2.0),
        };
        let params = pipeline_params(e, s, p, a.beta);
        let summary = match run_case(&space, case, &params) {
            Ok(rep) => CaseSummary {
                case,
                status: if rep.pass { CaseStatus::Pass } else { CaseStatus::Fail },
                p,
                constant_name: Some(rep.constant_name.clone()),
                constant_sup: Some(rep.constant_sup),
                kappa: Some(rep.kappa),
                exponent: Some(rep.exponent),
                rows: rep.rows.len(),
                failed_rows: rep.rows.iter().filter(|r| !r.pass).count(),
                skipped: rep.skipped.len(),
                note: None,
            },
            Err(LabError::Extraction(err @ ExtractionError::NotUniformlyPerfect(_))) => CaseSummary {
                case,
                status: CaseStatus::NotApplicable,
                p,
                constant_name: None,
                constant_sup: None,
                kappa: None,
                exponent: None,
                rows: 0,
                failed_rows: 0,
                skipped: 0,
                note: Some(err.to_string()),
            },
            Err(other) => return Err(other),
        };
        summaries.push(summary);
    }
    let failed = summaries.iter().any(|c| matches!(c.status, CaseStatus::Fail));
    if let Some(path) = &a.output.csv {
        write_csv(
            path,
            summaries.iter().map(|c| CaseCsvRow {
                case: c.case,
                status: match c.status {
                    CaseStatus::Pass => "pass",
                    CaseStatus::Fail => "fail",
                    CaseStatus::NotApplicable => "not-applicable",
                },
                kappa: c.kappa,
                exponent: c.exponent,
                rows: c.rows,
                failed_rows: c.failed_rows,
                skipped: c.skipped,
            }),
        )?;
    }
    emit_json(a.output.out.as_deref(), &Envelope::new("verify", a, &space, &summaries))?;
    Ok(if failed { Verdict::Violated } else { Verdict::Pass })
}

#[derive(Serialize)]
struct ChainCsvRow {
    k: i64,
    step: usize,
    from: usize,
    to: usize,
    level: i64,
    distance: f64,
    radius: f64,
    joasia_hypothesis: bool,
    joasia_conclusion: bool,
}

pub fn trace(a: &TraceArgs) -> Result<Verdict, LabError> {
    let (source, space) = load(&a.space)?;
    let s = exponent(a.s, &source)?;
    space.check_index(a.center)?;
    let b = match a.b {
        Some(b) => b,
        None => lower_mass_constant(&space, s, space.min_positive_distance()).0 * a.sigma.powf(-s),
    };
    let (r, big_r) = match &a.bump {
        Some(v) => match v.0[..] {
            [r, big_r] => (r, big_r),
            _ => return Err(input("--bump must be `r,R`")),
        },
        None => (a.radius / 4.0, a.radius / 2.0),
    };
    let (u, g) = bump(&space, a.center, r, big_r).map_err(|e| input(e.to_string()))?;
    let cert = match chaining_trace(&space, Ball::open(a.center, a.radius), a.sigma, s, a.p, b, &u, &g, a.gamma) {
        Ok(c) => c,
        Err(err @ hajlasz_core::embeddings::EmbeddingError::ChainStuck { .. }) => {
            eprintln!("{err}");
            return Ok(Verdict::Violated);
        }
        Err(err) => return Err(err.into()),
    };
    if let Some(path) = &a.output.csv {
        let rows = cert.chains.iter().flat_map(|c| {
            c.steps.iter().enumerate().map(move |(i, st)| ChainCsvRow {
                k: c.k,
                step: i,
                from: st.from,
                to: st.to,
                level: st.level,
                distance: st.distance,
                radius: st.radius,
                joasia_hypothesis: st.joasia.hypothesis,
                joasia_conclusion: st.joasia.conclusion,
            })
        });
        write_csv(path, rows)?;
    }
    emit_json(a.output.out.as_deref(), &Envelope::new("trace", a, &space, &cert))?;
    Ok(if cert.verified { Verdict::Pass } else { Verdict::Violated })
}
