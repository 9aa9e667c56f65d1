//! The `S(V)` part of the tension of `V = phi d/dt + V2` viewed as a map into
//! the tangent bundle with the Sasaki metric, harmonic-map checks, and the
//! closed-condition classification of harmonic maps among harmonic fields.

use crate::families::{build_h3_family, build_rxh2_family, Chart, ChartField, EulerBranch, FamilyError, RxH2Request};
use crate::harmonicity::{
    assemble_from, check, classify_unimodular, default_check_tol, unimodular_case_number, BasePoint, FiberData,
    FiberSource, HarmonicityError, HarmonicityProblem, HarmonicityReport, ResidualRow, SampleSpec,
};
use crate::lie3::{
    add3, dot3, max_abs3, scale3, sub3, zero3, Algebra, LeftInvariantField, NonUnimodular, Unimodular, Vec3,
};
use crate::scalar::{lit, Real};
use crate::warp::{
    solve_phi, solve_phi_numeric, solve_warp, DomainRequest, PhiSolution, PhiSpec, SolveOptions, WarpError,
    WarpFunction,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensionError {
    #[error(transparent)]
    Harmonicity(#[from] HarmonicityError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub const HORIZONTAL_TERMS: [&str; 3] = ["n phi^2 f' f'' / f^2", "|V2|^2 f' f''", "div(V2) phi f'' / f"];

pub const VERTICAL_TERMS: [&str; 7] = [
    "S(V2) / f^2",
    "-f' phi f'' V2 / f^2",
    "phi' f'' V2 / f",
    "f'^2 div(V2) V2 / f^2",
    "-f'^2 nabla_V2 V2 / f^2",
    "(n-1) phi f'^3 V2 / f^3",
    "phi f' sum_i R(e_i, V2) e_i / f^3",
];

/// `S(V)` at one base point, split into its summands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensionValue<T> {
    pub t: T,
    /// Coefficient of `d/dt`.
    pub horizontal: T,
    /// Fiber-frame coefficients.
    pub vertical: Vec3<T>,
    pub horizontal_terms: [T; 3],
    pub vertical_terms: [Vec3<T>; 7],
}

impl<T: Real> TensionValue<T> {
    pub fn max_abs(&self) -> T {
        self.horizontal.abs().max(max_abs3(&self.vertical))
    }
}

/// `S(V)` for a one-dimensional base from the fiber data of `V2`.
pub fn tension_from<T: Real>(fd: &FiberData<T>, n: usize, b: &BasePoint<T>) -> TensionValue<T> {
    let nn = T::from_usize(n).unwrap();
    let (f, f1, f2) = (b.f, b.df, b.d2f);
    let (phi, dphi) = (b.phi, b.dphi);
    let f_2 = f * f;
    let f_3 = f_2 * f;
    let h = [nn * phi * phi * f1 * f2 / f_2, fd.norm2 * f1 * f2, fd.div * phi * f2 / f];
    let v = fd.v;
    let terms = [
        scale3(T::one() / f_2, &fd.s),
        scale3(-f1 * phi * f2 / f_2, &v),
        scale3(dphi * f2 / f, &v),
        scale3(f1 * f1 * fd.div / f_2, &v),
        scale3(-f1 * f1 / f_2, &fd.nabla_vv),
        scale3((nn - T::one()) * phi * f1 * f1 * f1 / f_3, &v),
        scale3(phi * f1 / f_3, &fd.curvature_trace),
    ];
    let vertical = terms.iter().fold(zero3(), |acc, t| add3(&acc, t));
    TensionValue {
        t: b.t,
        horizontal: h[0] + h[1] + h[2],
        vertical,
        horizontal_terms: h,
        vertical_terms: terms,
    }
}

fn left_invariant_data<T: Real>(p: &HarmonicityProblem<T>) -> Result<&FiberData<T>, TensionError> {
    match p.fiber {
        FiberSource::LeftInvariant { .. } => Ok(p.fiber_data()),
        FiberSource::Abstract2 { .. } => Err(TensionError::Unsupported(
            "S(V) needs the fiber curvature; the abstract two-dimensional fiber does not carry it".into(),
        )),
    }
}

pub fn s_of_v<T: Real>(p: &HarmonicityProblem<T>, t: T) -> Result<TensionValue<T>, TensionError> {
    let fd = left_invariant_data(p)?;
    let b = p.base_point(t)?;
    Ok(tension_from(fd, p.n, &b))
}

/// Both channels of the harmonic-map condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapReport<T> {
    pub case_id: Option<String>,
    /// `nabla* nabla V = 0`.
    pub harmonicity: HarmonicityReport<T>,
    /// `S(V) = 0`, one row per sample.
    pub tension: Vec<TensionValue<T>>,
    pub max_tension: T,
    pub tol: T,
    pub verdict: bool,
}

impl<T: Real> MapReport<T> {
    /// Worse of the two channels.
    pub fn max_abs(&self) -> T {
        self.max_tension.max(self.harmonicity.max_abs)
    }
}

fn max_tension<T: Real>(rows: &[TensionValue<T>]) -> T {
    rows.iter().fold(T::zero(), |m, r| {
        let a = r.max_abs();
        if a.is_nan() || a > m {
            a
        } else {
            m
        }
    })
}

pub fn harmonic_map_check<T: Real>(
    p: &HarmonicityProblem<T>,
    spec: &SampleSpec<T>,
    tol: Option<T>,
) -> Result<MapReport<T>, TensionError> {
    let tol = tol.unwrap_or_else(|| default_check_tol(p.is_closed_form()));
    let harmonicity = check(p, spec, Some(tol))?;
    let tension = harmonicity
        .rows
        .iter()
        .map(|r| s_of_v(p, r.t))
        .collect::<Result<Vec<_>, _>>()?;
    let mt = max_tension(&tension);
    let verdict = harmonicity.verdict && mt <= tol;
    Ok(MapReport {
        case_id: None,
        harmonicity,
        tension,
        max_tension: mt,
        tol,
        verdict,
    })
}

/// Harmonic-map check for a chart family: every row keeps the fiber point
/// with the largest residual for that `t`.
pub fn family_map_check<T: Real>(
    field: &ChartField<T>,
    warp: &WarpFunction<T>,
    phi: &PhiSolution<T>,
    spec: &SampleSpec<T>,
    fiber_points: &[[T; 3]],
    tol: Option<T>,
) -> Result<MapReport<T>, TensionError> {
    let domain = warp
        .domain
        .intersect(&phi.domain)
        .ok_or(HarmonicityError::EmptyDomain)?;
    let data = fiber_points
        .iter()
        .map(|p| field.fiber_data(p))
        .collect::<Result<Vec<_>, _>>()?;
    let closed = !warp.is_numeric() && phi.is_closed_form();
    let tol = tol.unwrap_or_else(|| default_check_tol(closed));
    let mut rows = Vec::new();
    let mut tension = Vec::new();
    for t in spec.points(&domain) {
        let b = BasePoint::at(warp, phi, t)?;
        let mut worst_h: Option<(T, ResidualRow<T>)> = None;
        let mut worst_s: Option<TensionValue<T>> = None;
        for fd in &data {
            let (h, v) = assemble_from(fd, 3, &b);
            let m = h.abs().max(max_abs3(&v));
            if worst_h.as_ref().map_or(true, |(w, _)| m > *w || m.is_nan()) {
                worst_h = Some((
                    m,
                    ResidualRow {
                        t,
                        horizontal: h,
                        vertical: v,
                    },
                ));
            }
            let s = tension_from(fd, 3, &b);
            if worst_s.as_ref().map_or(true, |w| s.max_abs() > w.max_abs() || s.max_abs().is_nan()) {
                worst_s = Some(s);
            }
        }
        if let (Some((_, r)), Some(s)) = (worst_h, worst_s) {
            rows.push(r);
            tension.push(s);
        }
    }
    let harmonicity = HarmonicityReport::from_rows(rows, tol, Some(format!("family {}", field.chart.id())));
    let mt = max_tension(&tension);
    let verdict = harmonicity.verdict && mt <= tol;
    Ok(MapReport {
        case_id: Some(format!("family {}", field.chart.id())),
        harmonicity,
        tension,
        max_tension: mt,
        tol,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Unimodular classification

/// A harmonic map `phi d/dt + V2` with left-invariant `V2` on a unimodular
/// group. Harmonic maps need `f'' = 0`, so `f` is linear with
/// `2 f'^2 = sigma` (the harmonicity constant), `S(V2) = f'^2 nabla_V2 V2`,
/// and phi either free or identically zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicMapCase<T> {
    /// Case of the printed list this falls under, if any.
    pub printed_case: Option<String>,
    pub group: String,
    pub sigma: T,
    /// `|f'|` forced by the conditions.
    pub slope: T,
    /// `|f'|` printed for the case, when there is one.
    pub printed_slope: Option<T>,
    /// False when only `phi = 0` works.
    pub phi_free: bool,
    pub phi_form: String,
    pub notes: Vec<String>,
}

fn near<T: Real>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * T::one().max(a.abs()).max(b.abs())
}

/// Returns the harmonic-map case for a unit left-invariant `V2`, or `None`
/// when no warp and phi make `phi d/dt + V2` a harmonic map.
pub fn classify_harmonic_maps_unimodular<T: Real>(
    alg: &Unimodular<T>,
    v2: &LeftInvariantField<T>,
    tol: T,
) -> Result<Option<HarmonicMapCase<T>>, TensionError> {
    let cases = match classify_unimodular(alg, v2, tol) {
        Ok(c) => c,
        Err(HarmonicityError::NoCase(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let sigma = cases[0].epsilon;
    let v = v2.coeffs;
    let fiber = Algebra::Unimodular(*alg).fiber();
    let slope2 = sigma * lit(0.5);
    let slope = slope2.max(T::zero()).sqrt();
    let s = fiber.fiber_s(&v);
    let nvv = fiber.nabla(&v, &v);
    let scale = T::one() + max_abs3(&s) + max_abs3(&nvv);
    if max_abs3(&sub3(&s, &scale3(slope2, &nvv))) > tol.max(lit(1e-12)) * scale {
        return Ok(None);
    }
    // phi enters through phi f'/f^3 ((n-1) f'^2 V2 + sum_i R(e_i,V2) e_i).
    let ct = fiber.curvature_trace(&v);
    let phi_coeff = add3(&scale3(lit::<T>(2.0) * slope2, &v), &ct);
    let phi_free = slope == T::zero() || max_abs3(&phi_coeff) <= tol.max(lit(1e-12)) * (T::one() + max_abs3(&ct));
    let number = unimodular_case_number(&alg.lambda, lit(1e-12));
    let [m1, _, _] = alg.mu();
    let on_axis = |i: usize| (0..3).all(|k| if k == i { v[k].abs() > tol } else { v[k].abs() <= tol });
    let (printed_case, group, printed_slope, phi_form) = match number {
        Some(1) => (
            Some("1".to_string()),
            "R^3",
            Some(T::zero()),
            "phi = g1 t + g2 (f constant, I = R)",
        ),
        Some(2) if on_axis(0) || v[0].abs() <= tol => (
            Some("2".to_string()),
            "Heisenberg",
            Some(m1.abs()),
            "phi = c1 s + c2 s^-3, s = f",
        ),
        Some(7) => (
            Some("3".to_string()),
            "SU(2) or SO(3)",
            Some(alg.lambda[0] / lit::<T>(2.0).sqrt()),
            "phi = c1 s + c2 s^-3, s = f",
        ),
        _ => (None, "unimodular", None, "phi = 0"),
    };
    let mut notes = Vec::new();
    if !phi_free {
        notes.push("only phi = 0 satisfies the phi-dependent terms".to_string());
    }
    if let Some(ps) = printed_slope {
        if !near(ps, slope, lit(1e-9)) {
            notes.push(format!(
                "printed slope {} gives 2 f'^2 = {}, but harmonicity needs {}",
                ps.to_f64().unwrap_or(f64::NAN),
                (lit::<T>(2.0) * ps * ps).to_f64().unwrap_or(f64::NAN),
                sigma.to_f64().unwrap_or(f64::NAN)
            ));
        }
    }
    if printed_case.is_none() {
        notes.push("not in the printed list".to_string());
    }
    Ok(Some(HarmonicMapCase {
        printed_case,
        group: group.to_string(),
        sigma,
        slope,
        printed_slope,
        phi_free,
        phi_form: if phi_free { phi_form.to_string() } else { "phi = 0".to_string() },
        notes,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeChoice {
    Printed,
    Derived,
}

/// Builds the warped problem of a harmonic-map case: `f = sign * slope * t +
/// beta` (constant `beta` when the slope is zero), phi from `c` (affine
/// coefficients for a constant warp, Euler coefficients otherwise; forced to
/// zero when phi is not free).
pub fn instantiate_map_case<T: Real>(
    alg: &Unimodular<T>,
    v2: &LeftInvariantField<T>,
    case: &HarmonicMapCase<T>,
    choice: SlopeChoice,
    sign: T,
    beta: T,
    c: [T; 2],
    opts: &SolveOptions<T>,
) -> Result<HarmonicityProblem<T>, TensionError> {
    let slope = match choice {
        SlopeChoice::Derived => case.slope,
        SlopeChoice::Printed => case
            .printed_slope
            .ok_or_else(|| TensionError::Precondition("case has no printed slope".into()))?,
    };
    let c = if case.phi_free { c } else { [T::zero(); 2] };
    let (warp, spec) = if slope == T::zero() {
        (WarpFunction::constant(beta)?, PhiSpec::Affine { g1: c[0], g2: c[1] })
    } else {
        (
            WarpFunction::linear(sign * slope, beta)?,
            PhiSpec::Euler { c1: c[0], c2: c[1] },
        )
    };
    let phi = solve_phi(&warp, 3, T::zero(), spec, opts)?;
    Ok(HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: Algebra::Unimodular(*alg),
            field: *v2,
        },
        warp,
        phi,
    )?)
}

// ---------------------------------------------------------------------------
// Non-unimodular harmonic-map systems

/// One printed equation and its largest residual over the samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationResidual<T> {
    pub equation: String,
    pub max_abs: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonUnimodularMapReport<T> {
    /// Printed case whose hypotheses the input meets.
    pub case_id: Option<String>,
    pub printed: Vec<EquationResidual<T>>,
    /// Largest `|nabla* nabla V|` and `|S(V)|` over the samples.
    pub max_harmonicity: T,
    pub max_tension: T,
    pub samples: usize,
    pub notes: Vec<String>,
}

fn printed_case_equations<T: Real>(
    case: &str,
    alg: &NonUnimodular<T>,
    v: &Vec3<T>,
    b: &BasePoint<T>,
) -> Vec<(&'static str, T)> {
    let (al, be, de) = (alg.alpha(), alg.beta(), alg.delta());
    let [a, bb, c] = *v;
    let (f, f1, f2, p, p1, p2) = (b.f, b.df, b.d2f, b.phi, b.dphi, b.d2phi);
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    let q = f1 / f;
    let e0 = p2 + three * q * p1 - three * q * q * p;
    match case {
        "1" => vec![
            ("f f'' + 2 f'^2 = 2 alpha^2", f * f2 + two * f1 * f1 - two * al * al),
            (
                "f''(3 f' phi^2 + f^2 f' - 2 a alpha f phi) = 0",
                f2 * (three * f1 * p * p + f * f * f1 - two * a * al * f * p),
            ),
            (
                "4 f'^3 a phi + phi' f (a alpha^2 - 2 f'^2) = 2 alpha^3 f + 2 alpha f f'^2",
                four * f1 * f1 * f1 * a * p + p1 * f * (a * al * al - two * f1 * f1)
                    - two * al * al * al * f
                    - two * al * f * f1 * f1,
            ),
            ("phi equation with forcing -4 a alpha", e0 + four * a * al * q),
        ],
        "2" => vec![
            ("f f'' + 2 f'^2 = 2 alpha^2", f * f2 + two * f1 * f1 - two * al * al),
            (
                "f''(3 f' phi^2 + f^2 f' - 2 a alpha f phi) = 0",
                f2 * (three * f1 * p * p + f * f * f1 - two * a * al * f * p),
            ),
            (
                "-alpha^3 - alpha f'^2 + 4 f'' f phi' - a phi f' f'' + (phi f'/f)(alpha^2 + 2 f'^2) = 0",
                -al * al * al - al * f1 * f1 + four * f2 * f * p1 - a * p * f1 * f2
                    + p * q * (al * al + two * f1 * f1),
            ),
            ("phi equation with forcing -2 a alpha", e0 + two * a * al * q),
        ],
        _ => {
            let s = al + de;
            vec![
                ("b(beta^2 - delta^2) = beta(alpha+delta) c", bb * (be * be - de * de) - be * s * c),
                ("c(beta^2 - alpha^2) = -beta(alpha+delta) b", c * (be * be - al * al) + be * s * bb),
                ("f f'' + 2 f'^2 = alpha^2 + delta^2", f * f2 + two * f1 * f1 - (al * al + de * de)),
                (
                    "f''(3 f' phi^2 + f^2 f' - a(alpha+delta) f phi) = 0",
                    f2 * (three * f1 * p * p + f * f * f1 - a * s * f * p),
                ),
                (
                    "e1 line",
                    -al * al * al * (a * a + bb * bb) - de * de * de * (a * a + c * c) + be * bb * c * (al * al - de * de)
                        - a * f1 * f2 * p
                        + a * f * f2 * p1
                        - a * a * f1 * f1 * s
                        - f1 * f1 * (bb * bb * al + c * c * de)
                        + p * q * a * (two * f1 * f1 + al * al + de * de),
                ),
                (
                    "e2 line",
                    a * (al * al * c * be - al * de * de + al * be * be - de * be * be * bb) - bb * f1 * p * f2
                        + f * p1 * f2 * bb
                        - a * bb * f1 * f1 * s
                        + a * f1 * f1 * (c * be + bb * al)
                        + p * q * (two * bb * f1 * f1 + bb * al * al + bb * al * de - c * al * be + c * be * de),
                ),
                (
                    "e3 line",
                    a * (-de * de * bb * be - al * al * de * c - al * be * be * c + de * be * be * c) - c * f1 * p * f2
                        + f * p1 * f2 * c
                        - a * c * f1 * f1 * s
                        - a * f1 * f1 * (bb * be - c * de)
                        + p * q * (two * c * f1 * f1 + c * de * de + c * al * de - bb * al * be + bb * be * de),
                ),
                ("phi equation with forcing -2 a(alpha+delta)", e0 + two * a * s * q),
            ]
        }
    }
}

/// Evaluates the printed per-case systems and the full harmonic-map
/// residuals at sampled `t`. No verdict is drawn: the printed systems are
/// coupled and are only checked pointwise.
pub fn classify_harmonic_maps_nonunimodular<T: Real>(
    alg: &NonUnimodular<T>,
    v2: &LeftInvariantField<T>,
    warp: &WarpFunction<T>,
    phi: &PhiSolution<T>,
    spec: &SampleSpec<T>,
) -> Result<NonUnimodularMapReport<T>, TensionError> {
    let tol = lit::<T>(1e-12);
    let v = v2.coeffs;
    let (al, de) = (alg.alpha(), alg.delta());
    let axis = v[1].abs() <= tol && v[2].abs() <= tol;
    let case = if near(al, de, tol) && al > T::zero() && axis {
        Some("1")
    } else if al > de && de.abs() <= tol && axis {
        Some("2")
    } else if al > de {
        if v[0].abs() <= tol {
            return Err(TensionError::Precondition("case 3 requires a != 0".into()));
        }
        Some("3")
    } else {
        None
    };
    let problem = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: Algebra::NonUnimodular(*alg),
            field: *v2,
        },
        warp.clone(),
        phi.clone(),
    )?;
    let domain = problem.domain().ok_or(HarmonicityError::EmptyDomain)?;
    let ts = spec.points(&domain);
    let mut printed: Vec<EquationResidual<T>> = Vec::new();
    let mut mh = T::zero();
    let mut ms = T::zero();
    for &t in &ts {
        let b = problem.base_point(t)?;
        let (h, vv) = assemble_from(problem.fiber_data(), 3, &b);
        mh = mh.max(h.abs()).max(max_abs3(&vv));
        ms = ms.max(tension_from(problem.fiber_data(), 3, &b).max_abs());
        if let Some(c) = case {
            for (k, (name, r)) in printed_case_equations(c, alg, &v, &b).into_iter().enumerate() {
                if printed.len() <= k {
                    printed.push(EquationResidual {
                        equation: name.to_string(),
                        max_abs: T::zero(),
                    });
                }
                printed[k].max_abs = printed[k].max_abs.max(r.abs());
            }
        }
    }
    let mut notes = vec!["residuals only; no verdict is claimed".to_string()];
    if case.is_some() {
        notes.push("printed '2 f'' read as 2 f'^2".to_string());
    }
    Ok(NonUnimodularMapReport {
        case_id: case.map(str::to_string),
        printed,
        max_harmonicity: mh,
        max_tension: ms,
        samples: ts.len(),
        notes,
    })
}

// ---------------------------------------------------------------------------
// Impossibility scans

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScanFamily {
    H3,
    RxH2,
}

/// Best attempt at one family parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint<T> {
    pub params: Vec<(String, T)>,
    /// Smallest, over the conforming `(f, phi)` candidates tried, of the
    /// largest harmonic-map residual over base and fiber samples.
    pub best_residual: T,
    pub best_candidate: String,
    pub margin: T,
    pub clears_margin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport<T> {
    pub family: ScanFamily,
    pub points: Vec<ScanPoint<T>>,
    pub min_residual: T,
    pub candidates_per_point: usize,
    pub all_clear: bool,
    pub statement: String,
}

/// Parameter grid: `(kappa, kappa')` for H3, `(alpha, kappa1, kappa2)` for the
/// log branch `c = y^(1/2)(kappa1 + kappa2 ln y)` of RxH2 with `b = 0`.
pub fn default_scan_grid(family: ScanFamily) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    match family {
        ScanFamily::H3 => {
            for k in [-2.0, -1.0, 1.0, 2.0] {
                for kp in [-1.0, 0.0, 1.0] {
                    out.push(vec![k, kp]);
                }
            }
        }
        ScanFamily::RxH2 => {
            for alpha in [1.0, 2.0] {
                for k1 in [-1.0, 1.0] {
                    for k2 in [-1.0, 1.0] {
                        out.push(vec![alpha, k1, k2]);
                    }
                }
            }
        }
    }
    out
}

/// Conforming `(f, phi)` pairs for `f f'' + 2 f'^2 = eps` and the phi
/// equation with right-hand side `rhs`: linear warps (both slopes, two
/// offsets) with a 3x3 grid of Euler coefficients, and one nonlinear numeric
/// warp with a 3x3 grid of phi initial data.
fn conforming_candidates<T: Real>(
    eps: T,
    rhs: T,
    opts: &SolveOptions<T>,
) -> Result<Vec<(String, WarpFunction<T>, PhiSolution<T>)>, TensionError> {
    let grid = [-1.0, 0.0, 1.0];
    let mut out = Vec::new();
    if eps > T::zero() {
        let m = (eps * lit(0.5)).sqrt();
        for sign in [1.0, -1.0] {
            for beta in [1.0, 2.0] {
                let w = WarpFunction::linear(lit::<T>(sign) * m, lit(beta))?;
                for c1 in grid {
                    for c2 in grid {
                        let phi = solve_phi(&w, 3, rhs, PhiSpec::Euler { c1: lit(c1), c2: lit(c2) }, opts)?;
                        out.push((format!("f = {sign}*{:.6} t + {beta}, phi Euler ({c1}, {c2})", m.to_f64().unwrap_or(f64::NAN)), w.clone(), phi));
                    }
                }
            }
        }
    }
    let w = solve_warp(
        eps,
        T::zero(),
        T::one(),
        lit(0.3),
        DomainRequest::Bounded {
            lo: lit(-0.5),
            hi: lit(0.5),
        },
        opts,
    )?;
    for p0 in grid {
        for dp0 in grid {
            let phi = solve_phi_numeric(&w, 3, rhs, T::zero(), lit(p0), lit(dp0), opts)?;
            out.push((format!("numeric f (f'(0) = 0.3), phi({p0}, {dp0})"), w.clone(), phi));
        }
    }
    Ok(out)
}

/// Scans a family grid for harmonic maps. A point clears the margin when
/// even the best conforming `(f, phi)` leaves a residual above ten times the
/// check tolerance. This is grid evidence, not proof.
pub fn impossibility_scan<T: Real + std::fmt::Display>(
    family: ScanFamily,
    grid: &[Vec<T>],
    spec: &SampleSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<ScanReport<T>, TensionError> {
    let mut points = Vec::new();
    let mut per_point = 0;
    for params in grid {
        let (field, named) = match family {
            ScanFamily::H3 => {
                if params.len() != 2 {
                    return Err(TensionError::Precondition("H3 grid points are (kappa, kappa')".into()));
                }
                if params[0] == T::zero() {
                    return Err(TensionError::Precondition(
                        "kappa = 0 is left-invariant and excluded from the scan".into(),
                    ));
                }
                (
                    build_h3_family(params[0], params[1])?,
                    vec![("kappa".to_string(), params[0]), ("kappa_prime".to_string(), params[1])],
                )
            }
            ScanFamily::RxH2 => {
                if params.len() != 3 {
                    return Err(TensionError::Precondition("RxH2 grid points are (alpha, kappa1, kappa2)".into()));
                }
                let alpha = params[0];
                let eps = alpha * lit(0.25);
                (
                    build_rxh2_family(
                        alpha,
                        eps,
                        [T::zero(); 2],
                        [params[1], params[2]],
                        RxH2Request {
                            b: None,
                            c: Some(EulerBranch::Log),
                        },
                    )?,
                    vec![
                        ("alpha".to_string(), alpha),
                        ("kappa1".to_string(), params[1]),
                        ("kappa2".to_string(), params[2]),
                    ],
                )
            }
        };
        let fiber_points = field.chart.default_grid();
        let candidates = conforming_candidates(field.epsilon(), field.phi_rhs(), opts)?;
        per_point = candidates.len();
        let mut best: Option<(T, String, T)> = None;
        for (label, w, phi) in candidates {
            let rep = family_map_check(&field, &w, &phi, spec, &fiber_points, None)?;
            let r = rep.max_abs();
            if best.as_ref().map_or(true, |(b, _, _)| r < *b) {
                best = Some((r, label, rep.tol * lit(10.0)));
            }
        }
        let (r, label, margin) = best.ok_or_else(|| TensionError::Precondition("no candidates".into()))?;
        points.push(ScanPoint {
            params: named,
            best_residual: r,
            best_candidate: label,
            margin,
            clears_margin: r >= margin,
        });
    }
    let min_residual = points
        .iter()
        .map(|p| p.best_residual)
        .fold(T::infinity(), |m, r| if r < m { r } else { m });
    let all_clear = !points.is_empty() && points.iter().all(|p| p.clears_margin);
    Ok(ScanReport {
        family,
        points,
        min_residual,
        candidates_per_point: per_point,
        all_clear,
        statement: "grid evidence, not proof".into(),
    })
}

/// Fiber chart of a scan family.
pub fn scan_chart<T: Real>(family: ScanFamily, alpha: T) -> Chart<T> {
    match family {
        ScanFamily::H3 => Chart::H3,
        ScanFamily::RxH2 => Chart::RxH2 { alpha },
    }
}

/// `|V2|^2`, exposed for reports.
pub fn norm2<T: Real>(v: &Vec3<T>) -> T {
    dot3(v, v)
}
