//! Command dispatch and report assembly.

use crate::config::{
    parse_config, FamilyParams, FiberConfig, FieldConfig, Format, RunConfig, SchemaError, WarpConfig,
};
use harmwarp::families::{build_h3_family, build_r3_family, build_rxh2_family, check_family, ChartField, FamilyError};
use harmwarp::families::{R3Params, RxH2Request};
use harmwarp::harmonicity::{
    check, classify, two_dim_fiber_check_with, FiberSource, HarmonicityError, HarmonicityProblem, SampleSpec,
};
use harmwarp::lie3::{group_type, table1, Algebra, LeftInvariantField, Lie3Error};
use harmwarp::oracle::{
    connection_check, family_chart, left_invariant_check, warped_family_check, warped_left_invariant_check, FlatR3,
    Heisenberg, HeisenbergFrame, MetricChart, OracleError, OracleReport, RxH2, Steps, Su2,
};
use harmwarp::tension::{
    classify_harmonic_maps_nonunimodular, classify_harmonic_maps_unimodular, family_map_check, harmonic_map_check,
    TensionError,
};
use harmwarp::warp::{
    phi_grid, solve_phi, solve_warp, warp_grid, DomainRequest, Interval, PhiSolution, PhiSpec, SolveOptions,
    WarpError, WarpFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config has {} schema violation(s)", .0.len())]
    Schema(Vec<SchemaError>),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lie3(#[from] Lie3Error),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Harmonicity(#[from] HarmonicityError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Tension(#[from] TensionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Lie3(_) => "lie3",
            CliError::Warp(_) => "warp",
            CliError::Harmonicity(_) => "harmonicity",
            CliError::Family(_) => "families",
            CliError::Tension(_) => "tension",
            CliError::Oracle(_) => "oracle",
            CliError::Csv(_) => "csv",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({"kind": self.kind(), "message": self.to_string()});
        if let CliError::Schema(v) = self {
            e["violations"] = serde_json::to_value(v).unwrap_or(Value::Null);
        }
        json!({ "error": e })
    }
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    /// Oracle Christoffel step; the outer step is ten times this.
    pub h: Option<f64>,
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub command: String,
    /// Full JSON envelope.
    pub report: Value,
    /// `None` for commands that have no verdict.
    pub verdict: Option<bool>,
    /// CSV rendering, when the command has one.
    pub csv: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(false) => 1,
            _ => 0,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match (format, &self.csv) {
            (Format::Csv, Some(c)) => c.clone(),
            _ => {
                let mut s = serde_json::to_string_pretty(&self.report).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Tolerances {
    check_tol: Option<f64>,
    classify_tol: f64,
    oracle_tol: f64,
    oracle_steps: Steps<f64>,
    samples: usize,
    reach: f64,
    margin: f64,
}

const ORACLE_TOL: f64 = 1e-3;

fn tolerances(cfg: &RunConfig, ov: &Overrides) -> Tolerances {
    let spec = sample_spec(cfg);
    let tol = ov.tol.or(cfg.check.tol);
    Tolerances {
        check_tol: tol,
        classify_tol: cfg.check.classify_tol,
        oracle_tol: tol.unwrap_or(ORACLE_TOL),
        oracle_steps: ov.h.map_or_else(Steps::default, |h| Steps {
            christoffel: h,
            outer: 10.0 * h,
        }),
        samples: spec.samples,
        reach: spec.reach,
        margin: spec.margin,
    }
}

fn sample_spec(cfg: &RunConfig) -> SampleSpec<f64> {
    let d = SampleSpec::default();
    SampleSpec {
        samples: cfg.check.samples,
        reach: cfg.check.reach.unwrap_or(d.reach),
        margin: cfg.check.margin.unwrap_or(d.margin),
    }
}

fn envelope(command: &str, cfg: Option<&RunConfig>, tol: Option<Tolerances>, report: Value) -> Value {
    json!({
        "command": command,
        "config_hash": cfg.map(RunConfig::hash),
        "seed": cfg.map(|c| c.seed),
        "tolerances": tol,
        "report": report,
    })
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).unwrap_or(Value::Null)
}

fn csv_of(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Building blocks from the config

fn need<'a, T>(x: &'a Option<T>, what: &str, command: &str) -> Result<&'a T, CliError> {
    x.as_ref()
        .ok_or_else(|| CliError::Usage(format!("`{command}` needs a {what} section")))
}

fn algebra(cfg: &RunConfig) -> Result<Option<Algebra<f64>>, CliError> {
    match cfg.fiber {
        FiberConfig::NonUnimodular { alpha, beta, delta } => Ok(Some(Algebra::NonUnimodular(
            harmwarp::lie3::NonUnimodular::new(alpha, beta, delta)?,
        ))),
        _ => Ok(cfg.fiber.algebra()),
    }
}

/// The left-invariant field, scaled to unit length.
fn unit_field(cfg: &RunConfig, command: &str) -> Result<LeftInvariantField<f64>, CliError> {
    let f = need(&cfg.field, "field", command)?;
    let c = f
        .left_invariant()
        .ok_or_else(|| CliError::Usage("expected a left_invariant field".into()))?
        .coeffs;
    let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    Ok(LeftInvariantField::new([c[0] / n, c[1] / n, c[2] / n]))
}

fn build_warp(w: &WarpConfig, opts: &SolveOptions<f64>) -> Result<WarpFunction<f64>, CliError> {
    Ok(match *w {
        WarpConfig::Constant { c } => WarpFunction::constant(c)?,
        WarpConfig::Linear { slope, offset } => WarpFunction::linear(slope, offset)?,
        WarpConfig::CubeRoot { c1, c2 } => WarpFunction::cube_root(c1, c2)?,
        WarpConfig::SqrtQuadratic {
            kappa0,
            c1,
            c2,
            component,
        } => match component {
            Some(k) => WarpFunction::sqrt_quadratic_on(kappa0, c1, c2, k)?,
            None => WarpFunction::sqrt_quadratic(kappa0, c1, c2)?,
        },
        WarpConfig::EpsilonNumeric {
            eps,
            t0,
            f0,
            df0,
            domain,
        } => {
            let req = domain.map_or(DomainRequest::Auto, |[lo, hi]| DomainRequest::Bounded { lo, hi });
            solve_warp(eps, t0, f0, df0, req, opts)?
        }
    })
}

fn build_family(cfg: &RunConfig) -> Result<ChartField<f64>, CliError> {
    let FiberConfig::ChartFamily { family, alpha } = cfg.fiber else {
        return Err(CliError::Usage("not a chart family".into()));
    };
    let p: &FamilyParams = match &cfg.field {
        Some(FieldConfig::FamilyParams(p)) => p,
        _ => return Err(CliError::Usage("chart families need a family_params field".into())),
    };
    use crate::config::Family;
    Ok(match family {
        Family::R3 => build_r3_family(
            p.eps.unwrap_or(0.0),
            R3Params {
                v: p.v.unwrap_or([0.0; 2]),
                kappa1: p.kappa1.unwrap_or(0.0),
                b: None,
            },
        )?,
        Family::H3 => build_h3_family(p.kappa.unwrap_or(0.0), p.kappa_prime.unwrap_or(0.0))?,
        Family::RxH2 => build_rxh2_family(
            alpha.unwrap_or(0.0),
            p.eps.unwrap_or(0.0),
            p.b.unwrap_or([0.0; 2]),
            p.c.unwrap_or([0.0; 2]),
            RxH2Request {
                b: p.b_branch,
                c: p.c_branch,
            },
        )?,
    })
}

/// Everything a base-side command needs.
struct Base {
    warp: WarpFunction<f64>,
    phi: PhiSolution<f64>,
}

fn phi_data(cfg: &RunConfig) -> Result<(usize, f64), CliError> {
    match &cfg.fiber {
        FiberConfig::Unimodular { .. } | FiberConfig::NonUnimodular { .. } => {
            let alg = algebra(cfg)?.expect("left-invariant fiber");
            let v = unit_field(cfg, "phi")?;
            Ok((3, 2.0 * alg.fiber().divergence(&v.coeffs)))
        }
        FiberConfig::ChartFamily { .. } => Ok((3, build_family(cfg)?.phi_rhs())),
        FiberConfig::TwoDim { kappa1, .. } => Ok((2, 2.0 * kappa1)),
    }
}

fn base(cfg: &RunConfig, command: &str, opts: &SolveOptions<f64>) -> Result<Base, CliError> {
    let warp = build_warp(need(&cfg.warp, "warp", command)?, opts)?;
    let spec: PhiSpec<f64> = *need(&cfg.phi, "phi", command)?;
    let (n, rhs) = phi_data(cfg)?;
    let phi = solve_phi(&warp, n, rhs, spec, opts)?;
    Ok(Base { warp, phi })
}

fn problem(cfg: &RunConfig, b: Base, command: &str) -> Result<HarmonicityProblem<f64>, CliError> {
    let alg = algebra(cfg)?.ok_or_else(|| CliError::Usage("expected a left-invariant fiber".into()))?;
    Ok(HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: alg,
            field: unit_field(cfg, command)?,
        },
        b.warp,
        b.phi,
    )?)
}

fn common_domain(b: &Base) -> Result<Interval<f64>, CliError> {
    b.warp
        .domain
        .intersect(&b.phi.domain)
        .ok_or(CliError::Harmonicity(HarmonicityError::EmptyDomain))
}

fn residual_csv(rows: impl IntoIterator<Item = (f64, f64, [f64; 3])>) -> Result<String, CliError> {
    csv_of(
        &["t", "horizontal", "vertical_1", "vertical_2", "vertical_3"],
        rows.into_iter()
            .map(|(t, h, v)| vec![num(t), num(h), num(v[0]), num(v[1]), num(v[2])]),
    )
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_table1() -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let rows = table1();
    let csv = csv_of(
        &["signs", "group_id", "group"],
        rows.iter()
            .map(|(s, g)| vec![s.to_string(), g.id().to_string(), g.group_name().to_string()]),
    )?;
    let report = Value::Array(
        rows.iter()
            .map(|(s, g)| json!({"signs": s, "group_id": g.id(), "group": g.group_name()}))
            .collect(),
    );
    Ok((report, None, Some(csv)))
}

fn cmd_classify(cfg: &RunConfig) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let alg = algebra(cfg)?.ok_or_else(|| CliError::Usage("`classify` needs a left-invariant fiber".into()))?;
    let v = unit_field(cfg, "classify")?;
    let cases = classify(&alg, &v, cfg.check.classify_tol)?;
    let group = match alg {
        Algebra::Unimodular(u) => Some(group_type(&u, cfg.check.classify_tol)?.id()),
        Algebra::NonUnimodular(_) => None,
    };
    let csv = csv_of(
        &["family", "case_id", "epsilon", "printed_epsilon", "v2_set"],
        cases.iter().map(|c| {
            vec![
                to_value(&c.family).as_str().unwrap_or_default().to_string(),
                c.case_id.clone().unwrap_or_default(),
                num(c.epsilon),
                opt_num(c.printed_epsilon),
                c.v2_set.clone(),
            ]
        }),
    )?;
    let report = json!({
        "algebra": alg,
        "group": group,
        "v2": v.coeffs,
        "cases": cases,
    });
    Ok((report, None, Some(csv)))
}

fn cmd_solve(cfg: &RunConfig, opts: &SolveOptions<f64>) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let b = base(cfg, "solve", opts)?;
    let window = sample_spec(cfg).window(&common_domain(&b)?);
    let wg = warp_grid(&b.warp, &window, cfg.check.samples)?;
    let pg = phi_grid(&b.phi, &window, cfg.check.samples)?;
    let rows: Vec<[f64; 6]> = wg
        .iter()
        .zip(&pg)
        .map(|(w, p)| [w[0], w[1], w[2], w[3], p[1], p[2]])
        .collect();
    let csv = csv_of(
        &["t", "f", "df", "d2f", "phi", "dphi"],
        rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()),
    )?;
    let report = json!({
        "warp_domain": b.warp.domain,
        "phi_domain": b.phi.domain,
        "window": window,
        "epsilon_target": b.warp.epsilon_target(),
        "phi_closed_form": b.phi.is_closed_form(),
        "columns": ["t", "f", "df", "d2f", "phi", "dphi"],
        "rows": rows,
    });
    Ok((report, None, Some(csv)))
}

fn cmd_check(cfg: &RunConfig, tol: Option<f64>, opts: &SolveOptions<f64>) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let spec = sample_spec(cfg);
    match &cfg.fiber {
        FiberConfig::TwoDim { kappa0, kappa1 } => {
            let warp = build_warp(need(&cfg.warp, "warp", "check")?, opts)?;
            let phi = *need(&cfg.phi, "phi", "check")?;
            let mut r = two_dim_fiber_check_with(*kappa0, *kappa1, warp, phi, &spec, opts)?;
            if let Some(tol) = tol {
                r.harmonicity = harmwarp::harmonicity::HarmonicityReport::from_rows(r.harmonicity.rows, tol, None);
            }
            let csv = residual_csv(r.harmonicity.rows.iter().map(|x| (x.t, x.horizontal, x.vertical)))?;
            Ok((to_value(&r), Some(r.harmonicity.verdict), Some(csv)))
        }
        FiberConfig::ChartFamily { .. } => {
            let field = build_family(cfg)?;
            let b = base(cfg, "check", opts)?;
            let pts = field.chart.default_grid();
            let r = check_family(&field, &b.warp, &b.phi, &spec, &pts, tol)?;
            let csv = residual_csv(r.rows.iter().map(|x| (x.t, x.horizontal, x.vertical)))?;
            let report = json!({"field": field, "harmonicity": r});
            Ok((report, Some(r.verdict), Some(csv)))
        }
        _ => {
            let b = base(cfg, "check", opts)?;
            let p = problem(cfg, b, "check")?;
            let r = check(&p, &spec, tol)?;
            let csv = residual_csv(r.rows.iter().map(|x| (x.t, x.horizontal, x.vertical)))?;
            let report = json!({
                "epsilon_target": p.warp.epsilon_target(),
                "harmonicity": r,
            });
            Ok((report, Some(r.verdict), Some(csv)))
        }
    }
}

fn cmd_map_check(
    cfg: &RunConfig,
    tol: Option<f64>,
    opts: &SolveOptions<f64>,
) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let spec = sample_spec(cfg);
    let (report, r) = match &cfg.fiber {
        FiberConfig::TwoDim { .. } => {
            return Err(TensionError::Unsupported("the tension field needs the full fiber geometry".into()).into())
        }
        FiberConfig::ChartFamily { .. } => {
            let field = build_family(cfg)?;
            let b = base(cfg, "map-check", opts)?;
            let pts = field.chart.default_grid();
            let r = family_map_check(&field, &b.warp, &b.phi, &spec, &pts, tol)?;
            (json!({"field": field, "map": r}), r)
        }
        _ => {
            let alg = algebra(cfg)?.expect("left-invariant fiber");
            let v = unit_field(cfg, "map-check")?;
            let b = base(cfg, "map-check", opts)?;
            let classification = match alg {
                Algebra::Unimodular(u) => to_value(&classify_harmonic_maps_unimodular(&u, &v, cfg.check.classify_tol)?),
                Algebra::NonUnimodular(n) => {
                    match classify_harmonic_maps_nonunimodular(&n, &v, &b.warp, &b.phi, &spec) {
                        Ok(r) => to_value(&r),
                        Err(TensionError::Precondition(m)) => json!({"precondition_failed": m}),
                        Err(e) => return Err(e.into()),
                    }
                }
            };
            let p = problem(cfg, b, "map-check")?;
            let r = harmonic_map_check(&p, &spec, tol)?;
            (json!({"classification": classification, "map": r}), r)
        }
    };
    let csv = csv_of(
        &["t", "tension_horizontal", "tension_1", "tension_2", "tension_3", "max_abs"],
        r.tension.iter().map(|x| {
            vec![
                num(x.t),
                num(x.horizontal),
                num(x.vertical[0]),
                num(x.vertical[1]),
                num(x.vertical[2]),
                num(x.max_abs()),
            ]
        }),
    )?;
    Ok((report, Some(r.verdict), Some(csv)))
}

/// Coordinate chart whose frame realises a left-invariant algebra.
#[derive(Clone, Copy, Debug)]
enum LiChart {
    Flat(FlatR3),
    Heisenberg(Heisenberg),
    Su2(Su2<f64>),
    RxH2(RxH2<f64>),
}

fn li_chart(alg: &Algebra<f64>) -> Option<LiChart> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    match alg {
        Algebra::Unimodular(u) => {
            let [l1, l2, l3] = u.lambda;
            if [l1, l2, l3].iter().all(|l| *l == 0.0) {
                Some(LiChart::Flat(FlatR3))
            } else if close(l1, 1.0) && l2 == 0.0 && l3 == 0.0 {
                Some(LiChart::Heisenberg(Heisenberg {
                    frame: HeisenbergFrame::Milnor,
                }))
            } else if l1 > 0.0 && close(l1, l2) && close(l1, l3) {
                Some(LiChart::Su2(Su2 { radius: 2.0 / l1 }))
            } else {
                None
            }
        }
        Algebra::NonUnimodular(n) => (n.alpha() > 0.0 && n.beta() == 0.0 && n.delta() == 0.0).then(|| {
            LiChart::RxH2(RxH2 {
                alpha: n.alpha() * n.alpha(),
            })
        }),
    }
}

/// Sampling box for fiber points.
fn fiber_box(c: &LiChart) -> ([f64; 3], [f64; 3]) {
    match c {
        LiChart::Su2(s) => ([-0.3 * s.radius; 3], [0.3 * s.radius; 3]),
        LiChart::RxH2(_) => ([-0.5, 0.7, -0.5], [0.5, 1.5, 0.5]),
        _ => ([-0.5; 3], [0.5; 3]),
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, lo: [f64; 3], hi: [f64; 3]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..3).map(|k| rng.gen_range(lo[k]..hi[k])).collect())
        .collect()
}

fn with_t(rng: &mut ChaCha8Rng, pts: &[Vec<f64>], w: &Interval<f64>) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|p| {
            let mut q = vec![rng.gen_range(w.lo..w.hi)];
            q.extend_from_slice(p);
            q
        })
        .collect()
}

fn oracle_window(cfg: &RunConfig, b: &Base) -> Result<Interval<f64>, CliError> {
    if let Some([lo, hi]) = cfg.oracle.t_window {
        return Ok(Interval::new(lo, hi));
    }
    let w = sample_spec(cfg).window(&common_domain(b)?);
    let m = 0.1 * (w.hi - w.lo);
    Ok(Interval::new(w.lo + m, w.hi - m))
}

fn oracle_left_invariant<C: MetricChart<f64> + Clone>(
    chart: &C,
    bx: ([f64; 3], [f64; 3]),
    cfg: &RunConfig,
    tol: &Tolerances,
    opts: &SolveOptions<f64>,
) -> Result<Vec<OracleReport<f64>>, CliError> {
    let alg = algebra(cfg)?.expect("left-invariant fiber");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts = random_points(&mut rng, cfg.oracle.points, bx.0, bx.1);
    let mut out = vec![connection_check(chart, &alg, &pts, tol.oracle_steps, tol.oracle_tol)?];
    if cfg.field.is_some() {
        let v = unit_field(cfg, "oracle")?;
        out.push(left_invariant_check(chart, &alg, &v.coeffs, &pts, tol.oracle_steps, tol.oracle_tol)?);
        if cfg.warp.is_some() {
            let b = base(cfg, "oracle", opts)?;
            let window = oracle_window(cfg, &b)?;
            let pts4 = with_t(&mut rng, &pts, &window);
            let p = problem(cfg, b, "oracle")?;
            out.push(warped_left_invariant_check(&p, chart, &pts4, tol.oracle_steps, tol.oracle_tol)?);
        }
    }
    Ok(out)
}

fn cmd_oracle(cfg: &RunConfig, tol: &Tolerances, opts: &SolveOptions<f64>) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let reports = match &cfg.fiber {
        FiberConfig::TwoDim { .. } => {
            return Err(CliError::Usage("the oracle needs a coordinate chart; two_dim fibers have none".into()))
        }
        FiberConfig::ChartFamily { .. } => {
            let field = build_family(cfg)?;
            let b = base(cfg, "oracle", opts)?;
            let window = oracle_window(cfg, &b)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let (lo, hi) = match field.chart {
                harmwarp::families::Chart::RxH2 { .. } => ([-0.5, 0.7, -0.5], [0.5, 1.5, 0.5]),
                _ => ([-0.5; 3], [0.5; 3]),
            };
            let pts = random_points(&mut rng, cfg.oracle.points, lo, hi);
            let fiber = family_chart(&field.chart);
            let mut out = vec![connection_check(
                fiber.as_ref(),
                &field.chart.algebra(),
                &pts,
                tol.oracle_steps,
                tol.oracle_tol,
            )?];
            let pts4 = with_t(&mut rng, &pts, &window);
            out.push(warped_family_check(&field, &b.warp, &b.phi, &pts4, tol.oracle_steps, tol.oracle_tol)?);
            out
        }
        _ => {
            let alg = algebra(cfg)?.expect("left-invariant fiber");
            let chart = li_chart(&alg).ok_or_else(|| {
                CliError::Usage(
                    "no coordinate chart realises this algebra; supported: lambda = (0,0,0), (1,0,0), (l,l,l) with l > 0, \
                     and non_unimodular (a,0,0)"
                        .into(),
                )
            })?;
            let bx = fiber_box(&chart);
            match chart {
                LiChart::Flat(c) => oracle_left_invariant(&c, bx, cfg, tol, opts)?,
                LiChart::Heisenberg(c) => oracle_left_invariant(&c, bx, cfg, tol, opts)?,
                LiChart::Su2(c) => oracle_left_invariant(&c, bx, cfg, tol, opts)?,
                LiChart::RxH2(c) => oracle_left_invariant(&c, bx, cfg, tol, opts)?,
            }
        }
    };
    let verdict = reports.iter().all(|r| r.verdict);
    let max_err = reports.iter().map(|r| r.max_err).fold(0.0, f64::max);
    let csv = csv_of(
        &["chart", "quantity", "point", "abs_err"],
        reports.iter().flat_map(|r| {
            r.comparisons.iter().map(move |c| {
                vec![
                    r.chart.clone(),
                    c.quantity.clone(),
                    c.point.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "),
                    num(c.abs_err),
                ]
            })
        }),
    )?;
    Ok((json!({"reports": reports, "max_err": max_err, "verdict": verdict}), Some(verdict), Some(csv)))
}

fn cmd_sweep(cfg: &RunConfig, ov: &Overrides) -> Result<(Value, Option<bool>, Option<String>), CliError> {
    let sweep = need(&cfg.sweep, "sweep", "sweep")?;
    let configs: Vec<Result<RunConfig, Vec<SchemaError>>> = sweep
        .values
        .iter()
        .map(|x| {
            let mut raw = cfg.raw.clone();
            if let Value::Object(m) = &mut raw {
                m.remove("sweep");
            }
            if let Some(slot) = raw.pointer_mut(&sweep.path) {
                *slot = json!(x);
            }
            parse_config(&raw.to_string())
        })
        .collect();
    // Grid points run concurrently; results are gathered in input order.
    let results: Vec<Result<Outcome, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                s.spawn(move || match c {
                    Ok(c) => run(&sweep.command, Some(c), ov),
                    Err(v) => Err(CliError::Schema(v.clone())),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Usage("sweep worker panicked".into()))))
            .collect()
    });
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for (x, r) in sweep.values.iter().zip(results) {
        let point = match r {
            Ok(o) => {
                rows.push(vec![num(*x), o.verdict.map(|v| v.to_string()).unwrap_or_default(), o.exit_code().to_string(), String::new()]);
                json!({"value": x, "exit_code": o.exit_code(), "verdict": o.verdict, "report": o.report})
            }
            Err(e) => {
                rows.push(vec![num(*x), String::new(), "2".into(), e.to_string()]);
                json!({"value": x, "exit_code": 2, "error": e.to_json()["error"]})
            }
        };
        points.push(point);
    }
    let csv = csv_of(&["value", "verdict", "exit_code", "error"], rows)?;
    let report = json!({"path": sweep.path, "command": sweep.command, "points": points});
    Ok((report, None, Some(csv)))
}

/// Runs one command. `table1` takes no config; every other command needs one.
pub fn run(command: &str, cfg: Option<&RunConfig>, ov: &Overrides) -> Result<Outcome, CliError> {
    let opts = SolveOptions::default();
    if command == "table1" {
        let (report, verdict, csv) = cmd_table1()?;
        return Ok(Outcome {
            command: command.into(),
            report: envelope(command, cfg, cfg.map(|c| tolerances(c, ov)), report),
            verdict,
            csv,
        });
    }
    let cfg = cfg.ok_or_else(|| CliError::Usage(format!("`{command}` needs --config")))?;
    let tol = tolerances(cfg, ov);
    let (report, verdict, csv) = match command {
        "classify" => cmd_classify(cfg)?,
        "solve" => cmd_solve(cfg, &opts)?,
        "check" => cmd_check(cfg, tol.check_tol, &opts)?,
        "map-check" => cmd_map_check(cfg, tol.check_tol, &opts)?,
        "oracle" => cmd_oracle(cfg, &tol, &opts)?,
        "sweep" => cmd_sweep(cfg, ov)?,
        other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
    };
    Ok(Outcome {
        command: command.into(),
        report: envelope(command, Some(cfg), Some(tol), report),
        verdict,
        csv,
    })
}
