//! Run configuration: strict JSON, validated before anything is computed.

use harmwarp::families::EulerBranch;
use harmwarp::lie3::{Algebra, LeftInvariantField, NonUnimodular, Unimodular};
use harmwarp::warp::PhiSpec;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemaError {
    /// JSON pointer into the config.
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "/" } else { &self.path }, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    R3,
    H3,
    RxH2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberConfig {
    Unimodular { lambda: [f64; 3] },
    NonUnimodular { alpha: f64, beta: f64, delta: f64 },
    ChartFamily { family: Family, alpha: Option<f64> },
    /// Abstract two-dimensional fiber with `nabla* nabla V2 = kappa0 V2`,
    /// `div V2 = kappa1`.
    TwoDim { kappa0: f64, kappa1: f64 },
}

impl FiberConfig {
    pub fn algebra(&self) -> Option<Algebra<f64>> {
        match *self {
            FiberConfig::Unimodular { lambda } => Some(Algebra::Unimodular(Unimodular::new(lambda[0], lambda[1], lambda[2]))),
            FiberConfig::NonUnimodular { alpha, beta, delta } => {
                NonUnimodular::new(alpha, beta, delta).ok().map(Algebra::NonUnimodular)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpConfig {
    Constant { c: f64 },
    Linear { slope: f64, offset: f64 },
    CubeRoot { c1: f64, c2: f64 },
    SqrtQuadratic { kappa0: f64, c1: f64, c2: f64, component: Option<usize> },
    EpsilonNumeric { eps: f64, t0: f64, f0: f64, df0: f64, domain: Option<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyParams {
    pub eps: Option<f64>,
    pub v: Option<[f64; 2]>,
    pub kappa1: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_prime: Option<f64>,
    pub b: Option<[f64; 2]>,
    pub c: Option<[f64; 2]>,
    pub b_branch: Option<EulerBranch>,
    pub c_branch: Option<EulerBranch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldConfig {
    LeftInvariant { coeffs: [f64; 3] },
    FamilyParams(FamilyParams),
}

impl FieldConfig {
    pub fn left_invariant(&self) -> Option<LeftInvariantField<f64>> {
        match self {
            FieldConfig::LeftInvariant { coeffs } => Some(LeftInvariantField::new(*coeffs)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckConfig {
    pub tol: Option<f64>,
    pub samples: usize,
    pub reach: Option<f64>,
    pub margin: Option<f64>,
    /// Zero tolerance used by `classify`.
    pub classify_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            tol: None,
            samples: 256,
            reach: None,
            margin: None,
            classify_tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    pub points: usize,
    /// Base window `[lo, hi]` for `t`; the warp domain when absent.
    pub t_window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    /// JSON pointer of the swept number.
    pub path: String,
    pub values: Vec<f64>,
    pub command: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub fiber: FiberConfig,
    pub warp: Option<WarpConfig>,
    pub field: Option<FieldConfig>,
    pub phi: Option<PhiSpec<f64>>,
    pub check: CheckConfig,
    pub output: OutputConfig,
    pub oracle: OracleConfig,
    pub sweep: Option<SweepConfig>,
    pub seed: u64,
    /// The config as parsed, used for hashing and sweeps.
    #[serde(skip)]
    pub raw: Value,
}

impl RunConfig {
    /// SHA-256 of the compact JSON with sorted keys.
    pub fn hash(&self) -> String {
        config_hash(&self.raw)
    }
}

pub fn config_hash(v: &Value) -> String {
    let text = serde_json::to_string(v).unwrap_or_default();
    hex::encode(Sha256::digest(text.as_bytes()))
}

struct Ctx {
    errors: Vec<SchemaError>,
}

impl Ctx {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(SchemaError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&format!("{path}/{k}"), "unknown field");
                    }
                }
                Some(m)
            }
            None => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn num(&mut self, m: &Map<String, Value>, path: &str, key: &str, required: bool) -> Option<f64> {
        let p = format!("{path}/{key}");
        match m.get(key) {
            None if required => {
                self.err(&p, "missing required number");
                None
            }
            None => None,
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.err(&p, "expected a finite number");
                    None
                }
            },
        }
    }

    fn uint(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        let p = format!("{path}/{key}");
        m.get(key).and_then(|v| match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.err(&p, "expected a non-negative integer");
                None
            }
        })
    }

    fn array<const N: usize>(&mut self, m: &Map<String, Value>, path: &str, key: &str, required: bool) -> Option<[f64; N]> {
        let p = format!("{path}/{key}");
        let v = match m.get(key) {
            None => {
                if required {
                    self.err(&p, format!("missing required array of {N} numbers"));
                }
                return None;
            }
            Some(v) => v,
        };
        let Some(a) = v.as_array() else {
            self.err(&p, format!("expected an array of {N} numbers"));
            return None;
        };
        if a.len() != N {
            self.err(&p, format!("expected {N} entries, got {}", a.len()));
            return None;
        }
        let mut out = [0.0; N];
        let mut ok = true;
        for (i, x) in a.iter().enumerate() {
            match x.as_f64() {
                Some(x) if x.is_finite() => out[i] = x,
                _ => {
                    self.err(&format!("{p}/{i}"), "expected a finite number");
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn string<'a>(&mut self, m: &'a Map<String, Value>, path: &str, key: &str, required: bool) -> Option<&'a str> {
        let p = format!("{path}/{key}");
        match m.get(key) {
            None => {
                if required {
                    self.err(&p, "missing required string");
                }
                None
            }
            Some(v) => match v.as_str() {
                Some(s) => Some(s),
                None => {
                    self.err(&p, "expected a string");
                    None
                }
            },
        }
    }

    fn kind<'a>(&mut self, v: &'a Value, path: &str, kinds: &[&str]) -> Option<&'a str> {
        let k = v.get("kind").and_then(Value::as_str);
        match k {
            Some(k) if kinds.contains(&k) => Some(k),
            Some(k) => {
                self.err(&format!("{path}/kind"), format!("unknown kind '{k}'; expected one of {}", kinds.join(", ")));
                None
            }
            None => {
                self.err(&format!("{path}/kind"), format!("missing kind; expected one of {}", kinds.join(", ")));
                None
            }
        }
    }
}

fn parse_fiber(ctx: &mut Ctx, v: &Value) -> Option<FiberConfig> {
    let path = "/fiber";
    match ctx.kind(v, path, &["unimodular", "non_unimodular", "chart_family", "two_dim"])? {
        "unimodular" => {
            let m = ctx.object(v, path, &["kind", "lambda"])?;
            Some(FiberConfig::Unimodular {
                lambda: ctx.array::<3>(m, path, "lambda", true)?,
            })
        }
        "non_unimodular" => {
            let m = ctx.object(v, path, &["kind", "alpha", "beta", "delta"])?;
            let alpha = ctx.num(m, path, "alpha", true);
            let beta = ctx.num(m, path, "beta", true);
            let delta = ctx.num(m, path, "delta", true);
            let (alpha, beta, delta) = (alpha?, beta?, delta?);
            if alpha + delta <= 0.0 || alpha < delta {
                ctx.err(path, format!("need alpha + delta > 0 and alpha >= delta (got alpha = {alpha}, delta = {delta})"));
                return None;
            }
            Some(FiberConfig::NonUnimodular { alpha, beta, delta })
        }
        "chart_family" => {
            let m = ctx.object(v, path, &["kind", "family", "alpha"])?;
            let family = match ctx.string(m, path, "family", true)? {
                "R3" => Family::R3,
                "H3" => Family::H3,
                "RxH2" => Family::RxH2,
                other => {
                    ctx.err(&format!("{path}/family"), format!("unknown family '{other}'; expected R3, H3 or RxH2"));
                    return None;
                }
            };
            let alpha = ctx.num(m, path, "alpha", family == Family::RxH2);
            if family == Family::RxH2 && alpha.is_none_or(|a| a <= 0.0) {
                if alpha.is_some() {
                    ctx.err(&format!("{path}/alpha"), "alpha must be positive");
                }
                return None;
            }
            if family != Family::RxH2 && alpha.is_some() {
                ctx.err(&format!("{path}/alpha"), "alpha applies to RxH2 only");
                return None;
            }
            Some(FiberConfig::ChartFamily { family, alpha })
        }
        _ => {
            let m = ctx.object(v, path, &["kind", "kappa0", "kappa1"])?;
            let k0 = ctx.num(m, path, "kappa0", true);
            let k1 = ctx.num(m, path, "kappa1", true);
            Some(FiberConfig::TwoDim { kappa0: k0?, kappa1: k1? })
        }
    }
}

fn parse_warp(ctx: &mut Ctx, v: &Value) -> Option<WarpConfig> {
    let path = "/warp";
    match ctx.kind(v, path, &["constant", "linear", "cube_root", "sqrt_quadratic", "epsilon_numeric"])? {
        "constant" => {
            let m = ctx.object(v, path, &["kind", "c"])?;
            Some(WarpConfig::Constant {
                c: ctx.num(m, path, "c", true)?,
            })
        }
        "linear" => {
            let m = ctx.object(v, path, &["kind", "slope", "offset"])?;
            let s = ctx.num(m, path, "slope", true);
            let o = ctx.num(m, path, "offset", true);
            Some(WarpConfig::Linear { slope: s?, offset: o? })
        }
        "cube_root" => {
            let m = ctx.object(v, path, &["kind", "c1", "c2"])?;
            let c1 = ctx.num(m, path, "c1", true);
            let c2 = ctx.num(m, path, "c2", true);
            Some(WarpConfig::CubeRoot { c1: c1?, c2: c2? })
        }
        "sqrt_quadratic" => {
            let m = ctx.object(v, path, &["kind", "kappa0", "c1", "c2", "component"])?;
            let k0 = ctx.num(m, path, "kappa0", true);
            let c1 = ctx.num(m, path, "c1", true);
            let c2 = ctx.num(m, path, "c2", true);
            let component = ctx.uint(m, path, "component").map(|c| c as usize);
            Some(WarpConfig::SqrtQuadratic {
                kappa0: k0?,
                c1: c1?,
                c2: c2?,
                component,
            })
        }
        _ => {
            let m = ctx.object(v, path, &["kind", "eps", "t0", "f0", "df0", "domain"])?;
            let eps = ctx.num(m, path, "eps", true);
            let t0 = ctx.num(m, path, "t0", true);
            let f0 = ctx.num(m, path, "f0", true);
            let df0 = ctx.num(m, path, "df0", true);
            let domain = ctx.array::<2>(m, path, "domain", false);
            if let Some(d) = domain {
                if d[0] >= d[1] {
                    ctx.err(&format!("{path}/domain"), "need lo < hi");
                }
            }
            if let Some(f) = f0 {
                if f <= 0.0 {
                    ctx.err(&format!("{path}/f0"), "f0 must be positive");
                }
            }
            Some(WarpConfig::EpsilonNumeric {
                eps: eps?,
                t0: t0?,
                f0: f0?,
                df0: df0?,
                domain,
            })
        }
    }
}

fn parse_branch(ctx: &mut Ctx, m: &Map<String, Value>, path: &str, key: &str) -> Option<EulerBranch> {
    match ctx.string(m, path, key, false)? {
        "power" => Some(EulerBranch::Power),
        "log" => Some(EulerBranch::Log),
        "oscillatory" => Some(EulerBranch::Oscillatory),
        other => {
            ctx.err(&format!("{path}/{key}"), format!("unknown branch '{other}'; expected power, log or oscillatory"));
            None
        }
    }
}

fn parse_field(ctx: &mut Ctx, v: &Value) -> Option<FieldConfig> {
    let path = "/field";
    match ctx.kind(v, path, &["left_invariant", "family_params"])? {
        "left_invariant" => {
            let m = ctx.object(v, path, &["kind", "coeffs"])?;
            let c = ctx.array::<3>(m, path, "coeffs", true)?;
            if c.iter().all(|x| *x == 0.0) {
                ctx.err(&format!("{path}/coeffs"), "field must be nonzero");
                return None;
            }
            Some(FieldConfig::LeftInvariant { coeffs: c })
        }
        _ => {
            let m = ctx.object(
                v,
                path,
                &["kind", "eps", "v", "kappa1", "kappa", "kappa_prime", "b", "c", "b_branch", "c_branch"],
            )?;
            Some(FieldConfig::FamilyParams(FamilyParams {
                eps: ctx.num(m, path, "eps", false),
                v: ctx.array::<2>(m, path, "v", false),
                kappa1: ctx.num(m, path, "kappa1", false),
                kappa: ctx.num(m, path, "kappa", false),
                kappa_prime: ctx.num(m, path, "kappa_prime", false),
                b: ctx.array::<2>(m, path, "b", false),
                c: ctx.array::<2>(m, path, "c", false),
                b_branch: parse_branch(ctx, m, path, "b_branch"),
                c_branch: parse_branch(ctx, m, path, "c_branch"),
            }))
        }
    }
}

fn parse_phi(ctx: &mut Ctx, v: &Value) -> Option<PhiSpec<f64>> {
    let path = "/phi";
    match ctx.kind(v, path, &["euler", "ivp", "affine"])? {
        "euler" => {
            let m = ctx.object(v, path, &["kind", "c1", "c2"])?;
            let c1 = ctx.num(m, path, "c1", true);
            let c2 = ctx.num(m, path, "c2", true);
            Some(PhiSpec::Euler { c1: c1?, c2: c2? })
        }
        "ivp" => {
            let m = ctx.object(v, path, &["kind", "t0", "phi0", "dphi0"])?;
            let t0 = ctx.num(m, path, "t0", true);
            let p0 = ctx.num(m, path, "phi0", true);
            let d0 = ctx.num(m, path, "dphi0", true);
            Some(PhiSpec::Ivp {
                t0: t0?,
                phi0: p0?,
                dphi0: d0?,
            })
        }
        _ => {
            let m = ctx.object(v, path, &["kind", "g1", "g2"])?;
            let g1 = ctx.num(m, path, "g1", true);
            let g2 = ctx.num(m, path, "g2", true);
            Some(PhiSpec::Affine { g1: g1?, g2: g2? })
        }
    }
}

fn parse_check(ctx: &mut Ctx, v: Option<&Value>) -> CheckConfig {
    let mut c = CheckConfig::default();
    let Some(v) = v else { return c };
    let path = "/check";
    let Some(m) = ctx.object(v, path, &["tol", "samples", "reach", "margin", "classify_tol"]) else {
        return c;
    };
    c.tol = ctx.num(m, path, "tol", false);
    if let Some(s) = ctx.uint(m, path, "samples") {
        if s < 2 {
            ctx.err(&format!("{path}/samples"), "need at least 2 samples");
        }
        c.samples = s as usize;
    }
    c.reach = ctx.num(m, path, "reach", false);
    c.margin = ctx.num(m, path, "margin", false);
    if let Some(t) = ctx.num(m, path, "classify_tol", false) {
        c.classify_tol = t;
    }
    for (k, x) in [("tol", c.tol), ("reach", c.reach), ("classify_tol", Some(c.classify_tol))] {
        if x.is_some_and(|x| x <= 0.0) {
            ctx.err(&format!("{path}/{k}"), "must be positive");
        }
    }
    if c.margin.is_some_and(|x| !(0.0..0.5).contains(&x)) {
        ctx.err(&format!("{path}/margin"), "must lie in [0, 0.5)");
    }
    c
}

fn parse_output(ctx: &mut Ctx, v: Option<&Value>) -> OutputConfig {
    let mut o = OutputConfig {
        format: Format::Json,
        path: None,
    };
    let Some(v) = v else { return o };
    let path = "/output";
    let Some(m) = ctx.object(v, path, &["format", "path"]) else {
        return o;
    };
    match ctx.string(m, path, "format", false) {
        Some("json") | None => {}
        Some("csv") => o.format = Format::Csv,
        Some(other) => ctx.err(&format!("{path}/format"), format!("unknown format '{other}'; expected json or csv")),
    }
    o.path = ctx.string(m, path, "path", false).map(str::to_string);
    o
}

fn parse_oracle(ctx: &mut Ctx, v: Option<&Value>) -> OracleConfig {
    let mut o = OracleConfig {
        points: 20,
        t_window: None,
    };
    let Some(v) = v else { return o };
    let path = "/oracle";
    let Some(m) = ctx.object(v, path, &["points", "t_window"]) else {
        return o;
    };
    if let Some(n) = ctx.uint(m, path, "points") {
        if n == 0 {
            ctx.err(&format!("{path}/points"), "need at least one point");
        }
        o.points = n as usize;
    }
    o.t_window = ctx.array::<2>(m, path, "t_window", false);
    if o.t_window.is_some_and(|w| w[0] >= w[1]) {
        ctx.err(&format!("{path}/t_window"), "need lo < hi");
    }
    o
}

pub const COMMANDS: [&str; 7] = ["classify", "solve", "check", "map-check", "oracle", "table1", "sweep"];

fn parse_sweep(ctx: &mut Ctx, v: Option<&Value>, root: &Value) -> Option<SweepConfig> {
    let v = v?;
    let path = "/sweep";
    let m = ctx.object(v, path, &["path", "values", "command"])?;
    let p = ctx.string(m, path, "path", true)?.to_string();
    if root.pointer(&p).and_then(Value::as_f64).is_none() {
        ctx.err(&format!("{path}/path"), format!("'{p}' does not point at a number in this config"));
    }
    let values: Vec<f64> = match m.get("values").and_then(Value::as_array) {
        Some(a) if !a.is_empty() => a
            .iter()
            .enumerate()
            .filter_map(|(i, x)| match x.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    ctx.err(&format!("{path}/values/{i}"), "expected a finite number");
                    None
                }
            })
            .collect(),
        _ => {
            ctx.err(&format!("{path}/values"), "expected a non-empty array of numbers");
            Vec::new()
        }
    };
    let command = ctx.string(m, path, "command", true)?.to_string();
    if !["classify", "check", "map-check", "oracle"].contains(&command.as_str()) {
        ctx.err(&format!("{path}/command"), "sweepable commands are classify, check, map-check and oracle");
    }
    Some(SweepConfig {
        path: p,
        values,
        command,
    })
}

fn cross_checks(ctx: &mut Ctx, c: &RunConfig) {
    match (&c.fiber, &c.field) {
        (FiberConfig::Unimodular { .. } | FiberConfig::NonUnimodular { .. }, Some(FieldConfig::FamilyParams(_))) => {
            ctx.err("/field/kind", "left-invariant fibers take a left_invariant field")
        }
        (FiberConfig::ChartFamily { .. }, Some(FieldConfig::LeftInvariant { .. })) => {
            ctx.err("/field/kind", "chart families take family_params")
        }
        (FiberConfig::TwoDim { .. }, Some(_)) => ctx.err("/field", "the two-dimensional fiber has no field section"),
        _ => {}
    }
    if let (FiberConfig::ChartFamily { family, .. }, Some(FieldConfig::FamilyParams(p))) = (&c.fiber, &c.field) {
        let need: &[(&str, bool)] = match family {
            Family::R3 => &[("eps", p.eps.is_some())],
            Family::H3 => &[("kappa", p.kappa.is_some()), ("kappa_prime", p.kappa_prime.is_some())],
            Family::RxH2 => &[("eps", p.eps.is_some()), ("b", p.b.is_some()), ("c", p.c.is_some())],
        };
        for (k, present) in need {
            if !present {
                ctx.err(&format!("/field/{k}"), format!("required for family {family:?}"));
            }
        }
    }
}

/// Parses and validates; returns every violation found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<SchemaError>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![SchemaError {
            path: String::new(),
            message: format!("invalid JSON: {e}"),
        }]
    })?;
    let mut ctx = Ctx { errors: Vec::new() };
    let top = ctx.object(
        &root,
        "",
        &["fiber", "warp", "field", "phi", "check", "output", "oracle", "sweep", "seed"],
    );
    let Some(top) = top else {
        return Err(ctx.errors);
    };
    let fiber = match top.get("fiber") {
        Some(v) => parse_fiber(&mut ctx, v),
        None => {
            ctx.err("/fiber", "missing required section");
            None
        }
    };
    let warp = top.get("warp").and_then(|v| parse_warp(&mut ctx, v));
    let field = top.get("field").and_then(|v| parse_field(&mut ctx, v));
    let phi = top.get("phi").and_then(|v| parse_phi(&mut ctx, v));
    let check = parse_check(&mut ctx, top.get("check"));
    let output = parse_output(&mut ctx, top.get("output"));
    let oracle = parse_oracle(&mut ctx, top.get("oracle"));
    let sweep = parse_sweep(&mut ctx, top.get("sweep"), &root);
    let seed = ctx.uint(top, "", "seed").unwrap_or(0);
    let Some(fiber) = fiber else {
        return Err(ctx.errors);
    };
    let cfg = RunConfig {
        fiber,
        warp,
        field,
        phi,
        check,
        output,
        oracle,
        sweep,
        seed,
        raw: root,
    };
    cross_checks(&mut ctx, &cfg);
    if ctx.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ctx.errors)
    }
}
