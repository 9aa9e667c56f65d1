//! Non-left-invariant fiber fields given in coordinate charts: `a(x,y,z) d/dx`
//! on flat `R^3`, `(kappa x + kappa') e1` on the Heisenberg group and
//! `b(y) e2 + c(y) e3` on `R x H^2`.
//!
//! Components are expression trees in the chart's orthonormal frame, so every
//! derivative used below is exact. Where the printed catalog and the algebra
//! disagree, both candidates are built and the one whose plug-back residual
//! vanishes is returned; the loser is kept in the [`BranchReport`].

use crate::expr::Expr;
use crate::harmonicity::{
    assemble_from, default_check_tol, BasePoint, FiberData, HarmonicityReport, ResidualRow, SampleSpec,
};
use crate::lie3::{add3, basis, dot3, max_abs3, scale3, sub3, zero3, Algebra, Fiber, NonUnimodular, Unimodular, Vec3};
use crate::scalar::{half, lit, Real};
use crate::warp::{PhiSolution, WarpFunction};
use serde::Serialize;
use std::fmt::Display;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("requested {requested} branch for {component}, but the regime is {actual} (discriminant {discriminant})")]
    BadRegime {
        component: String,
        requested: EulerBranch,
        actual: EulerBranch,
        discriminant: f64,
    },
    #[error("point {0:?} is outside the chart domain")]
    OutOfDomain([f64; 3]),
    #[error("no candidate branch solves the equations: {0}")]
    NoBranch(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// The three coordinate charts. `RxH2` carries the curvature parameter
/// (the half-plane has Gaussian curvature `-alpha`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "chart")]
pub enum Chart<T> {
    R3,
    H3,
    RxH2 { alpha: T },
}

impl<T: Real> Chart<T> {
    pub fn id(&self) -> &'static str {
        match self {
            Chart::R3 => "R3",
            Chart::H3 => "H3",
            Chart::RxH2 { .. } => "RxH2",
        }
    }

    /// Milnor-form algebra whose frame the chart realises. The Heisenberg
    /// chart frame `e1 = dx, e2 = dy, e3 = dz + x dy` has `[e1,e3] = e2`, which
    /// is `lambda = (0,-1,0)` in the cyclic convention.
    pub fn algebra(&self) -> Algebra<T> {
        match *self {
            Chart::R3 => Algebra::Unimodular(Unimodular::new(T::zero(), T::zero(), T::zero())),
            Chart::H3 => Algebra::Unimodular(Unimodular::new(T::zero(), -T::one(), T::zero())),
            Chart::RxH2 { alpha } => Algebra::NonUnimodular(
                NonUnimodular::new(alpha.sqrt(), T::zero(), T::zero()).expect("alpha > 0 checked at construction"),
            ),
        }
    }

    /// `frame()[i][k]` is the `d/dx_k` coefficient of `e_i`.
    pub fn frame(&self) -> [[Expr<T>; 3]; 3] {
        let z = Expr::zero;
        let one = || Expr::c(T::one());
        match *self {
            Chart::R3 => [[one(), z(), z()], [z(), one(), z()], [z(), z(), one()]],
            Chart::H3 => [[one(), z(), z()], [z(), one(), z()], [z(), Expr::x(), one()]],
            Chart::RxH2 { alpha } => {
                let s = alpha.sqrt();
                [
                    [z(), Expr::c(s) * Expr::y(), z()],
                    [Expr::c(s) * Expr::y(), z(), z()],
                    [z(), z(), one()],
                ]
            }
        }
    }

    pub fn contains(&self, p: &[T; 3]) -> bool {
        p.iter().all(|v| v.is_finite())
            && match self {
                Chart::RxH2 { .. } => p[1] > T::zero(),
                _ => true,
            }
    }

    /// Five points per axis, inside the chart domain.
    pub fn default_grid(&self) -> Vec<[T; 3]> {
        let ax: Vec<T> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|v| lit(*v)).collect();
        let ys: Vec<T> = match self {
            Chart::RxH2 { .. } => [0.5, 0.875, 1.25, 1.625, 2.0].iter().map(|v| lit(*v)).collect(),
            _ => ax.clone(),
        };
        let mut out = Vec::with_capacity(125);
        for &x in &ax {
            for &y in &ys {
                for &z in &ax {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

/// `e_i(u)` as an expression.
pub fn frame_apply<T: Real>(frame: &[[Expr<T>; 3]; 3], i: usize, u: &Expr<T>) -> Expr<T> {
    (0..3).fold(Expr::zero(), |acc, k| {
        if frame[i][k].is_zero() {
            acc
        } else {
            acc + frame[i][k].clone() * u.diff(k)
        }
    })
}

/// Solution shape of an Euler equation `y^2 u'' = rho u`, decided by the sign
/// of `1 + 4 rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EulerBranch {
    Power,
    Log,
    Oscillatory,
}

impl std::fmt::Display for EulerBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EulerBranch::Power => "power",
            EulerBranch::Log => "log",
            EulerBranch::Oscillatory => "oscillatory",
        })
    }
}

/// Branch of the flat family `a(x,y,z) d/dx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum R3Branch {
    Trig,
    Exp,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate<T> {
    pub label: String,
    pub expression: Option<String>,
    /// Max plug-back residual; `None` when the candidate cannot be formed
    /// (e.g. a complex exponent).
    pub residual: Option<T>,
}

/// How a branch was chosen.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchReport<T> {
    pub chosen: String,
    pub candidates: Vec<Candidate<T>>,
    /// The catalog's own wording for this parameter regime.
    pub printed: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams<T> {
    R3 {
        eps: T,
        v: [T; 2],
        kappa1: T,
        branch: R3Branch,
    },
    H3 {
        kappa: T,
        kappa_prime: T,
    },
    RxH2 {
        alpha: T,
        eps: T,
        b: [T; 2],
        c: [T; 2],
        b_branch: EulerBranch,
        c_branch: EulerBranch,
    },
}

/// A fiber vector field in one of the charts.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Display + Serialize"))]
pub struct ChartField<T> {
    pub chart: Chart<T>,
    /// Coefficients in the chart's orthonormal frame `e1, e2, e3`.
    pub components: [Expr<T>; 3],
    pub params: FamilyParams<T>,
    pub branches: Vec<BranchReport<T>>,
}

impl<T: Real> ChartField<T> {
    /// The value `f f'' + 2 f'^2` must take.
    pub fn epsilon(&self) -> T {
        match &self.params {
            FamilyParams::R3 { eps, .. } | FamilyParams::RxH2 { eps, .. } => *eps,
            FamilyParams::H3 { .. } => half(),
        }
    }

    /// Right-hand side `2 div V2` of the phi equation (the divergence is
    /// constant for every family).
    pub fn phi_rhs(&self) -> T {
        let two = lit::<T>(2.0);
        match &self.params {
            FamilyParams::R3 { kappa1, .. } => two * *kappa1,
            FamilyParams::H3 { kappa, .. } => two * *kappa,
            FamilyParams::RxH2 { .. } => T::zero(),
        }
    }

    pub fn fiber(&self) -> Fiber<T> {
        self.chart.algebra().fiber()
    }

    pub fn value(&self, p: &[T; 3]) -> Vec3<T> {
        [self.components[0].eval(p), self.components[1].eval(p), self.components[2].eval(p)]
    }

    fn check_point(&self, p: &[T; 3]) -> Result<(), FamilyError> {
        if self.chart.contains(p) {
            Ok(())
        } else {
            Err(FamilyError::OutOfDomain(p.map(|v| v.to_f64().unwrap_or(f64::NAN))))
        }
    }

    /// `nabla_{e_i} V2` for each frame vector, at `p`.
    pub fn covariant_jacobian(&self, p: &[T; 3]) -> Result<[Vec3<T>; 3], FamilyError> {
        self.check_point(p)?;
        let frame = self.chart.frame();
        let gamma = self.fiber().connection.gamma;
        let v = self.value(p);
        let mut out = [zero3(); 3];
        for (i, row) in out.iter_mut().enumerate() {
            for k in 0..3 {
                let mut s = frame_apply(&frame, i, &self.components[k]).eval(p);
                for j in 0..3 {
                    s = s + v[j] * gamma[i][j][k];
                }
                row[k] = s;
            }
        }
        Ok(out)
    }

    /// Pointwise fiber quantities, from exact frame derivatives of the
    /// components and the constant connection table of the frame.
    pub fn fiber_data(&self, p: &[T; 3]) -> Result<FiberData<T>, FamilyError> {
        let jac = self.covariant_jacobian(p)?;
        let frame = self.chart.frame();
        let fiber = self.fiber();
        let gamma = fiber.connection.gamma;
        let v = self.value(p);
        let mut lap = zero3();
        for i in 0..3 {
            // e_i applied to the components of nabla_{e_i} V2, then covariantly.
            let first: Vec<Expr<T>> = (0..3).map(|k| frame_apply(&frame, i, &self.components[k])).collect();
            let mut ei_w = [T::zero(); 3];
            for k in 0..3 {
                let mut s = frame_apply(&frame, i, &first[k]).eval(p);
                for j in 0..3 {
                    s = s + first[j].eval(p) * gamma[i][j][k];
                }
                ei_w[k] = s;
            }
            let w = jac[i];
            let mut second = ei_w;
            for (k, sk) in second.iter_mut().enumerate() {
                for j in 0..3 {
                    *sk = *sk + w[j] * gamma[i][j][k];
                }
            }
            let mut along = zero3();
            for (m, jm) in jac.iter().enumerate() {
                along = add3(&along, &scale3(gamma[i][i][m], jm));
            }
            lap = add3(&lap, &sub3(&along, &second));
        }
        let div = (0..3).fold(T::zero(), |s, i| s + jac[i][i]);
        let mut s = zero3();
        let mut nvv = zero3();
        for i in 0..3 {
            s = add3(&s, &fiber.curvature(&jac[i], &v, &basis(i)));
            nvv = add3(&nvv, &scale3(v[i], &jac[i]));
        }
        Ok(FiberData {
            v,
            lap,
            div,
            s,
            nabla_vv: nvv,
            curvature_trace: fiber.curvature_trace(&v),
            norm2: dot3(&v, &v),
        })
    }
}

fn sample_points<T: Real>(chart: &Chart<T>) -> Vec<[T; 3]> {
    let raw = [
        [0.3, 0.7, -0.2],
        [-1.1, 0.4, 0.9],
        [0.5, 1.6, 0.3],
        [1.7, 2.3, -1.4],
        [-0.6, 0.9, 2.1],
    ];
    raw.iter()
        .map(|p| p.map(lit::<T>))
        .filter(|p| chart.contains(p))
        .collect()
}

fn scaled(res: Vec3<f64>, scale: f64) -> f64 {
    res.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + scale)
}

/// Relative plug-back residual of `nabla* nabla V2 = eps V2` at fixed sample points.
fn vertical_plugback<T: Real>(field: &ChartField<T>, eps: T) -> Result<T, FamilyError> {
    let mut worst = 0.0f64;
    for p in sample_points(&field.chart) {
        let fd = field.fiber_data(&p)?;
        let r = sub3(&fd.lap, &scale3(eps, &fd.v)).map(|x| x.to_f64().unwrap_or(f64::NAN));
        let mag = max_abs3(&fd.lap).to_f64().unwrap_or(0.0) + max_abs3(&fd.v).to_f64().unwrap_or(0.0);
        let s = scaled(r, mag);
        if !s.is_finite() {
            return Err(FamilyError::Eval(format!("non-finite residual at {:?}", p.map(|v| v.to_f64()))));
        }
        worst = worst.max(s);
    }
    Ok(lit(worst))
}

const PLUGBACK_TOL: f64 = 1e-9;

/// Parameters of the flat family.
#[derive(Clone, Debug, PartialEq)]
pub struct R3Params<T> {
    /// Wave vector in the `(y,z)` plane; used when `eps != 0`.
    pub v: [T; 2],
    /// Slope in `x`; used when `eps = 0`.
    pub kappa1: T,
    /// Harmonic function of `(y,z)`; used when `eps = 0`, zero if absent.
    pub b: Option<Expr<T>>,
}

impl<T: Real> Default for R3Params<T> {
    fn default() -> Self {
        Self {
            v: [T::zero(); 2],
            kappa1: T::zero(),
            b: None,
        }
    }
}

/// `V2 = a(x,y,z) d/dx` on flat `R^3` with `nabla* nabla V2 = eps V2` and
/// constant divergence.
pub fn build_r3_family<T: Real + Display>(eps: T, params: R3Params<T>) -> Result<ChartField<T>, FamilyError> {
    if !eps.is_finite() {
        return Err(FamilyError::BadParams("eps must be finite".into()));
    }
    let chart = Chart::R3;
    let make = |a: Expr<T>, branch: R3Branch, kappa1: T, branches: Vec<BranchReport<T>>| ChartField {
        chart,
        components: [a, Expr::zero(), Expr::zero()],
        params: FamilyParams::R3 {
            eps,
            v: params.v,
            kappa1,
            branch,
        },
        branches,
    };
    if eps == T::zero() {
        let b = params.b.clone().unwrap_or_else(Expr::zero);
        for p in sample_points(&chart) {
            let bx = b.diff(0).eval(&p);
            let lb = b.flat_laplacian().eval(&p);
            let scale = T::one() + b.eval(&p).abs();
            if bx.abs() > lit::<T>(1e-12) * scale || lb.abs() > lit::<T>(1e-9) * scale {
                return Err(FamilyError::BadParams(format!(
                    "b must be a harmonic function of (y, z); b_x = {}, laplacian = {}",
                    bx.to_f64().unwrap_or(f64::NAN),
                    lb.to_f64().unwrap_or(f64::NAN)
                )));
            }
        }
        let a = Expr::c(params.kappa1) * Expr::x() + b;
        let report = BranchReport {
            chosen: "linear".into(),
            candidates: vec![],
            printed: "a = kappa1 x + b(y,z), b harmonic".into(),
        };
        return Ok(make(a, R3Branch::Linear, params.kappa1, vec![report]));
    }
    let [v1, v2] = params.v;
    let norm = v1 * v1 + v2 * v2;
    if (norm - eps.abs()).abs() > lit(1e-12) {
        return Err(FamilyError::BadParams(format!(
            "need v1^2 + v2^2 = |eps|; got {} vs {}",
            norm.to_f64().unwrap_or(f64::NAN),
            eps.abs().to_f64().unwrap_or(f64::NAN)
        )));
    }
    if params.kappa1 != T::zero() {
        return Err(FamilyError::BadParams(
            "a_x = kappa1 is incompatible with eps != 0 (the x-linear part is not an eigenfunction)".into(),
        ));
    }
    let arg = Expr::c(v1) * Expr::y() + Expr::c(v2) * Expr::z();
    let trig = arg.clone().cos() + arg.clone().sin();
    let expo = arg.exp();
    let mut candidates = Vec::new();
    let mut best: Option<(T, R3Branch, Expr<T>)> = None;
    for (label, branch, a) in [("trig", R3Branch::Trig, trig), ("exp", R3Branch::Exp, expo)] {
        let f = make(a.clone(), branch, T::zero(), vec![]);
        let r = vertical_plugback(&f, eps)?;
        candidates.push(Candidate {
            label: label.into(),
            expression: Some(a.to_string()),
            residual: Some(r),
        });
        if best.as_ref().map_or(true, |(br, _, _)| r < *br) {
            best = Some((r, branch, a));
        }
    }
    let (r, branch, a) = best.expect("two candidates");
    if r > lit(PLUGBACK_TOL) {
        return Err(FamilyError::NoBranch(format!("smallest residual {}", r.to_f64().unwrap_or(f64::NAN))));
    }
    let printed = if eps < T::zero() {
        "catalog text: trig form with v1^2+v2^2 = -eps for eps < 0; worked example: exp form for eps < 0"
    } else {
        "catalog text: exp form with v1^2+v2^2 = eps for eps > 0; worked example: trig form for eps > 0"
    };
    let report = BranchReport {
        chosen: match branch {
            R3Branch::Trig => "trig".into(),
            _ => "exp".into(),
        },
        candidates,
        printed: printed.into(),
    };
    Ok(make(a, branch, T::zero(), vec![report]))
}

/// `V2 = (kappa x + kappa') e1` in the Heisenberg chart.
pub fn build_h3_family<T: Real>(kappa: T, kappa_prime: T) -> Result<ChartField<T>, FamilyError> {
    if !kappa.is_finite() || !kappa_prime.is_finite() {
        return Err(FamilyError::BadParams("kappa, kappa' must be finite".into()));
    }
    let a = Expr::c(kappa) * Expr::x() + Expr::c(kappa_prime);
    Ok(ChartField {
        chart: Chart::H3,
        components: [a, Expr::zero(), Expr::zero()],
        params: FamilyParams::H3 { kappa, kappa_prime },
        branches: vec![],
    })
}

/// Regime of `y^2 u'' = rho u`.
pub fn euler_regime<T: Real>(rho: T) -> EulerBranch {
    let disc = T::one() + lit::<T>(4.0) * rho;
    let tol = lit::<T>(1e-12) * (T::one() + rho.abs());
    if disc.abs() <= tol {
        EulerBranch::Log
    } else if disc > T::zero() {
        EulerBranch::Power
    } else {
        EulerBranch::Oscillatory
    }
}

/// General solution of `y^2 u'' = rho u` on `y > 0` with coefficients `k`.
pub fn euler_solution<T: Real>(rho: T, k: [T; 2]) -> (EulerBranch, Expr<T>) {
    let y = Expr::<T>::y;
    let disc = T::one() + lit::<T>(4.0) * rho;
    let h = half::<T>();
    let branch = euler_regime(rho);
    let u = match branch {
        EulerBranch::Log => y().powf(h) * (Expr::c(k[0]) + Expr::c(k[1]) * y().ln()),
        EulerBranch::Power => {
            let s = h * disc.sqrt();
            Expr::c(k[0]) * y().powf(h + s) + Expr::c(k[1]) * y().powf(h - s)
        }
        EulerBranch::Oscillatory => {
            let w = h * (-disc).sqrt();
            let arg = Expr::c(w) * y().ln();
            y().powf(h) * (Expr::c(k[0]) * arg.clone().cos() + Expr::c(k[1]) * arg.sin())
        }
    };
    (branch, u)
}

/// The catalog's printed form for one component of the half-plane family,
/// or `None` when it has a complex exponent or frequency.
fn printed_rxh2<T: Real>(alpha: T, eps: T, which: char, k: [T; 2]) -> (String, Option<Expr<T>>) {
    let y = Expr::<T>::y;
    let h = half::<T>();
    let four = lit::<T>(4.0);
    let (lhs, rhs, cond_text) = match which {
        'c' => (four * eps, alpha, ["alpha = 4 eps", "4 eps < alpha", "alpha < 4 eps"]),
        _ => (four * eps, lit::<T>(5.0) * alpha, ["4 eps = 5 alpha", "5 alpha < 4 eps", "4 eps < 5 alpha"]),
    };
    let tol = lit::<T>(1e-12) * (T::one() + rhs.abs());
    let log = y().powf(h) * (Expr::c(k[0]) + Expr::c(k[1]) * y().ln());
    let power = || {
        let d = T::one() - four * alpha;
        (d >= T::zero()).then(|| {
            let s = h * d.sqrt();
            Expr::c(k[0]) * y().powf(h + s) + Expr::c(k[1]) * y().powf(h - s)
        })
    };
    let trig = || {
        let d = four * alpha - T::one();
        (d >= T::zero()).then(|| {
            let arg = Expr::c(d.sqrt()) * y();
            y().powf(h) * (Expr::c(k[0]) * arg.clone().cos() + Expr::c(k[1]) * arg.sin())
        })
    };
    if (lhs - rhs).abs() <= tol {
        (format!("{which}: log form if {}", cond_text[0]), Some(log))
    } else if which == 'c' {
        if lhs < rhs {
            (format!("c: power form, exponents 1/2 +- sqrt(1-4 alpha)/2, if {}", cond_text[1]), power())
        } else {
            (format!("c: y^(1/2) cos(y sqrt(4 alpha - 1)) form if {}", cond_text[2]), trig())
        }
    } else if lhs > rhs {
        (format!("b: power form, exponents 1/2 +- sqrt(1-4 alpha)/2, if {}", cond_text[1]), power())
    } else {
        (format!("b: y^(1/2) cos(y sqrt(4 alpha - 1)) form if {}", cond_text[2]), trig())
    }
}

/// Max over `y` samples in `(0.1, 10)` of `|y^2 u'' - rho u| / (1 + |u| + |y^2 u''|)`.
pub fn euler_residual<T: Real>(u: &Expr<T>, rho: T, samples: usize) -> T {
    let d2 = u.diff(1).diff(1);
    let n = samples.max(2);
    let mut worst = T::zero();
    for i in 0..n {
        let y = lit::<T>(0.1) + lit::<T>(9.9) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap();
        let p = [T::zero(), y, T::zero()];
        let lhs = y * y * d2.eval(&p);
        let uv = u.eval(&p);
        let r = (lhs - rho * uv).abs() / (T::one() + uv.abs() + lhs.abs());
        worst = if r.is_nan() { T::infinity() } else { worst.max(r) };
    }
    worst
}

/// Branch requests for the half-plane family; `None` accepts whatever the
/// regime is.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RxH2Request {
    pub b: Option<EulerBranch>,
    pub c: Option<EulerBranch>,
}

/// `V2 = b(y) e2 + c(y) e3` on `R x H^2` (curvature `-alpha`).
///
/// The vertical equations reduce to `y^2 c'' = -(eps/alpha) c` and
/// `y^2 b'' = (1 - eps/alpha) b`.
pub fn build_rxh2_family<T: Real + Display>(
    alpha: T,
    eps: T,
    b: [T; 2],
    c: [T; 2],
    request: RxH2Request,
) -> Result<ChartField<T>, FamilyError> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(FamilyError::BadParams("alpha must be positive".into()));
    }
    if !eps.is_finite() || b.iter().chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(FamilyError::BadParams("eps and coefficients must be finite".into()));
    }
    let rho_c = -eps / alpha;
    let rho_b = T::one() - eps / alpha;
    let mut branches = Vec::new();
    let mut pick = |which: char, rho: T, k: [T; 2], req: Option<EulerBranch>| -> Result<(EulerBranch, Expr<T>), FamilyError> {
        let (branch, derived) = euler_solution(rho, k);
        if let Some(r) = req {
            if r != branch {
                return Err(FamilyError::BadRegime {
                    component: which.to_string(),
                    requested: r,
                    actual: branch,
                    discriminant: (T::one() + lit::<T>(4.0) * rho).to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let (printed_text, printed) = printed_rxh2(alpha, eps, which, k);
        let rd = euler_residual(&derived, rho, 100);
        let rp = printed.as_ref().map(|u| euler_residual(u, rho, 100));
        let mut candidates = vec![Candidate {
            label: format!("{which}: {branch} root of r(r-1) = {}", rho.to_f64().unwrap_or(f64::NAN)),
            expression: Some(derived.to_string()),
            residual: Some(rd),
        }];
        candidates.push(Candidate {
            label: format!("{which}: printed"),
            expression: printed.as_ref().map(|u| u.to_string()),
            residual: rp,
        });
        let tol = lit::<T>(PLUGBACK_TOL);
        let (chosen, u) = if rd <= tol {
            ("derived", derived)
        } else if let (Some(r), Some(u)) = (rp, printed) {
            if r <= tol {
                ("printed", u)
            } else {
                return Err(FamilyError::NoBranch(format!("{which}: neither candidate solves its equation")));
            }
        } else {
            return Err(FamilyError::NoBranch(format!("{which}: neither candidate solves its equation")));
        };
        branches.push(BranchReport {
            chosen: chosen.into(),
            candidates,
            printed: printed_text,
        });
        Ok((branch, u))
    };
    let (bb, bu) = pick('b', rho_b, b, request.b)?;
    let (cb, cu) = pick('c', rho_c, c, request.c)?;
    Ok(ChartField {
        chart: Chart::RxH2 { alpha },
        components: [Expr::zero(), bu, cu],
        params: FamilyParams::RxH2 {
            alpha,
            eps,
            b,
            c,
            b_branch: bb,
            c_branch: cb,
        },
        branches,
    })
}

/// Fiber-side residuals of one family at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PdeResidual<T> {
    /// `nabla* nabla V2 - eps V2`.
    pub vertical: Vec3<T>,
    /// Family-specific scalar conditions, by name.
    pub conditions: Vec<(String, T)>,
    pub max_abs: T,
}

/// Evaluates the defining conditions of the field's family at `p`.
pub fn family_pde_residual<T: Real>(field: &ChartField<T>, eps: T, p: &[T; 3]) -> Result<PdeResidual<T>, FamilyError> {
    let fd = field.fiber_data(p)?;
    let vertical = sub3(&fd.lap, &scale3(eps, &fd.v));
    let a = &field.components;
    let kappa_div = field.phi_rhs() * half();
    let mut conditions = vec![("div - kappa".to_string(), fd.div - kappa_div)];
    match &field.params {
        FamilyParams::R3 { .. } => {
            conditions.push(("a_x - kappa".into(), a[0].diff(0).eval(p) - kappa_div));
            conditions.push((
                "-lap_flat(a) - eps a".into(),
                -a[0].flat_laplacian().eval(p) - eps * a[0].eval(p),
            ));
        }
        FamilyParams::H3 { .. } => {
            let ay = a[0].diff(1).eval(p);
            conditions.push(("a_x - kappa".into(), a[0].diff(0).eval(p) - kappa_div));
            conditions.push(("a_y".into(), ay));
            conditions.push(("a_z + x a_y".into(), a[0].diff(2).eval(p) + p[0] * ay));
        }
        FamilyParams::RxH2 { alpha, .. } => {
            let y = p[1];
            let rho_b = T::one() - eps / *alpha;
            let rho_c = -eps / *alpha;
            conditions.push(("y^2 b'' - rho_b b".into(), y * y * a[1].diff(1).diff(1).eval(p) - rho_b * a[1].eval(p)));
            conditions.push(("y^2 c'' - rho_c c".into(), y * y * a[2].diff(1).diff(1).eval(p) - rho_c * a[2].eval(p)));
        }
    }
    let max_abs = conditions
        .iter()
        .map(|(_, v)| v.abs())
        .fold(max_abs3(&vertical), |m, v| if v > m { v } else { m });
    Ok(PdeResidual {
        vertical,
        conditions,
        max_abs,
    })
}

/// Full harmonic-section residual of `phi d/dt + V2` on `I x_f G` over a
/// base sample window and a set of fiber points. Each row keeps the worst
/// fiber point for that `t`.
pub fn check_family<T: Real>(
    field: &ChartField<T>,
    warp: &WarpFunction<T>,
    phi: &PhiSolution<T>,
    spec: &SampleSpec<T>,
    fiber_points: &[[T; 3]],
    tol: Option<T>,
) -> Result<HarmonicityReport<T>, FamilyError> {
    let domain = warp
        .domain
        .intersect(&phi.domain)
        .ok_or_else(|| FamilyError::BadParams("warp and phi domains do not overlap".into()))?;
    let data = fiber_points
        .iter()
        .map(|p| field.fiber_data(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for t in spec.points(&domain) {
        let b = BasePoint::at(warp, phi, t).map_err(|e| FamilyError::Eval(e.to_string()))?;
        let mut worst: Option<(T, ResidualRow<T>)> = None;
        for fd in &data {
            let (h, v) = assemble_from(fd, 3, &b);
            let m = h.abs().max(max_abs3(&v));
            if worst.as_ref().map_or(true, |(w, _)| m > *w || m.is_nan()) {
                worst = Some((
                    m,
                    ResidualRow {
                        t,
                        horizontal: h,
                        vertical: v,
                    },
                ));
            }
        }
        if let Some((_, row)) = worst {
            rows.push(row);
        }
    }
    let closed = !warp.is_numeric() && phi.is_closed_form();
    let tol = tol.unwrap_or_else(|| default_check_tol(closed));
    Ok(HarmonicityReport::from_rows(rows, tol, Some(format!("family {}", field.chart.id()))))
}
