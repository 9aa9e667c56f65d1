//! The harmonicity system of a vector field `V = phi(t) d/dt + V2` on
//! `I x_f G`, residual sweeps, and the classification of left-invariant
//! `V2` by the constant `eps = f f'' + 2 f'^2` it forces.

use crate::lie3::{
    dot3, max_abs3, scale3, sub3, zero3, Algebra, Fiber, Lie3Error, LeftInvariantField, NonUnimodular,
    Unimodular, Vec3,
};
use crate::scalar::{lit, Real};
use crate::warp::{
    solve_phi, solve_warp, DomainRequest, Interval, PhiSolution, PhiSpec, SolveOptions, WarpError, WarpFunction,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicityError {
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Lie3(#[from] Lie3Error),
    #[error("no value of eps makes this field harmonic: {0}")]
    NoCase(String),
    #[error("warp and phi domains do not overlap")]
    EmptyDomain,
    #[error("invalid problem: {0}")]
    Invalid(String),
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Pointwise fiber quantities of `V2`. For left-invariant fields they are
/// constant; chart families produce one per point of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberData<T> {
    pub v: Vec3<T>,
    /// `nabla* nabla V2`.
    pub lap: Vec3<T>,
    pub div: T,
    /// `sum_i R(nabla_{e_i} V2, V2) e_i`.
    pub s: Vec3<T>,
    pub nabla_vv: Vec3<T>,
    /// `sum_i R(e_i, V2) e_i`.
    pub curvature_trace: Vec3<T>,
    pub norm2: T,
}

impl<T: Real> FiberData<T> {
    pub fn left_invariant(fiber: &Fiber<T>, v: &Vec3<T>) -> Self {
        Self {
            v: *v,
            lap: fiber.rough_laplacian(v),
            div: fiber.divergence(v),
            s: fiber.fiber_s(v),
            nabla_vv: fiber.nabla(v, v),
            curvature_trace: fiber.curvature_trace(v),
            norm2: dot3(v, v),
        }
    }
}

/// `f, phi` and their first two derivatives at one base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasePoint<T> {
    pub t: T,
    pub f: T,
    pub df: T,
    pub d2f: T,
    pub phi: T,
    pub dphi: T,
    pub d2phi: T,
}

impl<T: Real> BasePoint<T> {
    pub fn at(warp: &WarpFunction<T>, phi: &PhiSolution<T>, t: T) -> Result<Self, WarpError> {
        let (f, df, d2f) = warp.eval(t)?;
        let (p, dp, d2p) = phi.eval(t)?;
        Ok(Self {
            t,
            f,
            df,
            d2f,
            phi: p,
            dphi: dp,
            d2phi: d2p,
        })
    }
}

/// Horizontal scalar and vertical fiber vector of the harmonicity system.
pub fn assemble_from<T: Real>(fd: &FiberData<T>, n: usize, b: &BasePoint<T>) -> (T, Vec3<T>) {
    let nn = T::from_usize(n).unwrap();
    let q = b.df / b.f;
    let two = lit::<T>(2.0);
    let horizontal = b.d2phi + nn * q * b.dphi - nn * q * q * b.phi - two * fd.div * q;
    let warp_term = b.f * b.d2f + (nn - T::one()) * b.df * b.df;
    let vertical = scale3(T::one() / (b.f * b.f), &sub3(&fd.lap, &scale3(warp_term, &fd.v)));
    (horizontal, vertical)
}

/// Where the fiber side of a problem comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberSource<T> {
    LeftInvariant {
        algebra: Algebra<T>,
        field: LeftInvariantField<T>,
    },
    /// Two-dimensional fiber known only through `kappa0 = <nabla* nabla V2, V2>`
    /// and `kappa1 = div V2`, with the caller asserting that `V2` is unit and
    /// `nabla* nabla V2 = kappa0 V2`. The vertical residual is then reported
    /// along `V2` in the first slot.
    Abstract2 { kappa0: T, kappa1: T },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicityProblem<T> {
    pub fiber: FiberSource<T>,
    pub warp: WarpFunction<T>,
    pub phi: PhiSolution<T>,
    pub n: usize,
    #[serde(skip)]
    data: FiberData<T>,
}

impl<T: Real> HarmonicityProblem<T> {
    pub fn new(fiber: FiberSource<T>, warp: WarpFunction<T>, phi: PhiSolution<T>) -> Result<Self, HarmonicityError> {
        let (n, data) = match &fiber {
            FiberSource::LeftInvariant { algebra, field } => {
                (3, FiberData::left_invariant(&algebra.fiber(), &field.coeffs))
            }
            FiberSource::Abstract2 { kappa0, kappa1 } => (
                2,
                FiberData {
                    v: [T::one(), T::zero(), T::zero()],
                    lap: [*kappa0, T::zero(), T::zero()],
                    div: *kappa1,
                    s: zero3(),
                    nabla_vv: zero3(),
                    curvature_trace: zero3(),
                    norm2: T::one(),
                },
            ),
        };
        if phi.n != n {
            return Err(HarmonicityError::Invalid(format!(
                "phi solved with n = {} but the fiber has dimension {n}",
                phi.n
            )));
        }
        let p = Self {
            fiber,
            warp,
            phi,
            n,
            data,
        };
        p.domain().ok_or(HarmonicityError::EmptyDomain)?;
        Ok(p)
    }

    pub fn fiber_data(&self) -> &FiberData<T> {
        &self.data
    }

    pub fn domain(&self) -> Option<Interval<T>> {
        self.warp.domain.intersect(&self.phi.domain)
    }

    /// The constant `R` of the phi equation `... = R f'/f`, namely `2 div V2`.
    pub fn phi_rhs(&self) -> T {
        lit::<T>(2.0) * self.data.div
    }

    pub fn is_closed_form(&self) -> bool {
        !self.warp.is_numeric() && self.phi.is_closed_form()
    }

    pub fn base_point(&self, t: T) -> Result<BasePoint<T>, WarpError> {
        BasePoint::at(&self.warp, &self.phi, t)
    }
}

pub fn assemble_system<T: Real>(p: &HarmonicityProblem<T>, t: T) -> Result<(T, Vec3<T>), HarmonicityError> {
    let b = p.base_point(t)?;
    Ok(assemble_from(&p.data, p.n, &b))
}

/// Where residuals are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleSpec<T> {
    pub samples: usize,
    /// Infinite domain ends are replaced by points this far away.
    pub reach: T,
    /// Fraction of the window trimmed at each end, keeping samples off
    /// singular endpoints.
    pub margin: T,
}

impl<T: Real> Default for SampleSpec<T> {
    fn default() -> Self {
        Self {
            samples: 256,
            reach: lit(10.0),
            margin: lit(0.01),
        }
    }
}

impl<T: Real> SampleSpec<T> {
    pub fn window(&self, domain: &Interval<T>) -> Interval<T> {
        let anchor = if domain.contains(T::zero()) || !domain.lo.is_finite() && !domain.hi.is_finite() {
            T::zero()
        } else if domain.lo.is_finite() {
            domain.lo
        } else {
            domain.hi
        };
        let w = domain.clipped(anchor, self.reach);
        let m = (w.hi - w.lo) * self.margin;
        Interval::new(w.lo + m, w.hi - m)
    }

    pub fn points(&self, domain: &Interval<T>) -> Vec<T> {
        self.window(domain).chebyshev(self.samples)
    }
}

/// Default residual tolerance: `1e-9` for closed forms, `1e-6` otherwise.
pub fn default_check_tol<T: Real>(closed_form: bool) -> T {
    if closed_form {
        lit(1e-9)
    } else {
        lit(1e-6)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualRow<T> {
    pub t: T,
    pub horizontal: T,
    pub vertical: Vec3<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicityReport<T> {
    pub case_id: Option<String>,
    pub rows: Vec<ResidualRow<T>>,
    pub max_horizontal: T,
    pub max_vertical: T,
    pub max_abs: T,
    pub tol: T,
    pub verdict: bool,
}

impl<T: Real> HarmonicityReport<T> {
    pub fn from_rows(rows: Vec<ResidualRow<T>>, tol: T, case_id: Option<String>) -> Self {
        let max_horizontal = rows.iter().map(|r| r.horizontal.abs()).fold(T::zero(), T::max);
        let max_vertical = rows.iter().map(|r| max_abs3(&r.vertical)).fold(T::zero(), T::max);
        let max_abs = max_horizontal.max(max_vertical);
        let verdict = rows.iter().all(|r| r.horizontal.is_finite() && r.vertical.iter().all(|v| v.is_finite()))
            && max_abs < tol;
        Self {
            case_id,
            rows,
            max_horizontal,
            max_vertical,
            max_abs,
            tol,
            verdict,
        }
    }
}

/// Samples the harmonicity residual over the problem's domain.
pub fn check<T: Real>(
    p: &HarmonicityProblem<T>,
    spec: &SampleSpec<T>,
    tol: Option<T>,
) -> Result<HarmonicityReport<T>, HarmonicityError> {
    if spec.samples < 2 {
        return Err(HarmonicityError::Invalid("need at least two sample points".into()));
    }
    let domain = p.domain().ok_or(HarmonicityError::EmptyDomain)?;
    let rows = spec
        .points(&domain)
        .into_iter()
        .map(|t| {
            assemble_system(p, t).map(|(h, v)| ResidualRow {
                t,
                horizontal: h,
                vertical: v,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tol = tol.unwrap_or_else(|| default_check_tol(p.is_closed_form()));
    Ok(HarmonicityReport::from_rows(rows, tol, None))
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraFamily {
    Unimodular,
    NonUnimodular,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationCase<T> {
    pub family: AlgebraFamily,
    /// Numbering of the summary proposition, when the algebra is in the
    /// normalized form that proposition assumes.
    pub case_id: Option<String>,
    /// The constant `f f'' + 2 f'^2` must equal.
    pub epsilon: T,
    /// The value printed for this case, when it differs from `epsilon`.
    pub printed_epsilon: Option<T>,
    pub v2_set: String,
    pub constraints: Vec<String>,
    pub note: Option<String>,
}

fn near<T: Real>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * T::one().max(a.abs()).max(b.abs())
}

fn support<T: Real>(v: &Vec3<T>, tol: T) -> [bool; 3] {
    [v[0].abs() > tol, v[1].abs() > tol, v[2].abs() > tol]
}

/// Summary-proposition case number for a normalized `lambda`.
pub fn unimodular_case_number<T: Real>(lambda: &Vec3<T>, tol: T) -> Option<u8> {
    let [l1, l2, l3] = *lambda;
    let z = |x: T| x.abs() <= tol;
    let pos = |x: T| x > tol;
    let neg = |x: T| x < -tol;
    let eq = |a: T, b: T| near(a, b, tol);
    if z(l1) && z(l2) && z(l3) {
        Some(1)
    } else if pos(l1) && z(l2) && z(l3) {
        Some(2)
    } else if pos(l1) && z(l2) && neg(l3) {
        Some(3)
    } else if pos(l1) && pos(l2) && z(l3) {
        Some(4)
    } else if eq(l1, l2) && pos(l1) && neg(l3) {
        Some(5)
    } else if eq(l1, l2) && eq(l2, l3) && pos(l1) {
        Some(7)
    } else if l1 > l2 + tol && eq(l2, l3) {
        Some(8)
    } else if eq(l1, l2) && l2 > l3 + tol && pos(l3) {
        Some(9)
    } else if l1 > l2 + tol && l2 > l3 + tol {
        Some(6)
    } else {
        None
    }
}

/// `(mu2^2+mu3^2, mu1^2+mu3^2, mu1^2+mu2^2)`, the diagonal of the rough
/// Laplacian on left-invariant fields.
pub fn unimodular_sigmas<T: Real>(alg: &Unimodular<T>) -> Vec3<T> {
    let [m1, m2, m3] = alg.mu();
    [m2 * m2 + m3 * m3, m1 * m1 + m3 * m3, m1 * m1 + m2 * m2]
}

fn describe_support(s: [bool; 3]) -> String {
    let names = ["e1", "e2", "e3"];
    let coeff = ["a", "b", "c"];
    let idx: Vec<usize> = (0..3).filter(|i| s[*i]).collect();
    if idx.len() == 1 {
        format!("+-{}", names[idx[0]])
    } else {
        idx.iter()
            .map(|i| format!("{}{}", coeff[*i], names[*i]))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Classifies a unit left-invariant `V2` on a unimodular group: returns the
/// value `eps` that `f f'' + 2 f'^2` must take, from
/// `a(s1 - eps) = b(s2 - eps) = c(s3 - eps) = 0`.
pub fn classify_unimodular<T: Real>(
    alg: &Unimodular<T>,
    v2: &LeftInvariantField<T>,
    tol: T,
) -> Result<Vec<ClassificationCase<T>>, HarmonicityError> {
    let v = v2.coeffs;
    let n2 = v2.norm2();
    if (n2 - T::one()).abs() > lit(1e-9) {
        return Err(Lie3Error::NotUnit(f64_of(n2)).into());
    }
    let s = unimodular_sigmas(alg);
    let sup = support(&v, tol);
    let vals: Vec<T> = (0..3).filter(|i| sup[*i]).map(|i| s[i]).collect();
    let sigma = vals[0];
    if vals.iter().any(|x| !near(*x, sigma, lit(1e-9))) {
        return Err(HarmonicityError::NoCase(format!(
            "components {} need different values of eps",
            describe_support(sup)
        )));
    }
    let number = unimodular_case_number(&alg.lambda, lit(1e-12));
    let [m1, m2, m3] = alg.mu();
    let sq = |x: T| x * x;
    let (case_id, printed): (Option<String>, Option<T>) = match number {
        None => (None, None),
        Some(1) => (Some("1".into()), Some(T::zero())),
        Some(2) => (Some("2".into()), Some(lit::<T>(2.0) * sq(m1))),
        Some(7) => (Some("7".into()), Some(lit::<T>(2.0) * sq(m1))),
        Some(3) => {
            if !sup[1] {
                (Some("3a".into()), Some(sq(m1) + sq(m2)))
            } else if !sup[0] && !sup[2] {
                (Some("3b".into()), Some(lit::<T>(2.0) * sq(m1)))
            } else {
                (None, None)
            }
        }
        Some(k @ (4 | 5 | 9)) => {
            if !sup[2] {
                (Some(format!("{k}a")), Some(sq(m1) + sq(m3)))
            } else if !sup[0] && !sup[1] {
                (Some(format!("{k}b")), Some(lit::<T>(2.0) * sq(m1)))
            } else {
                (None, None)
            }
        }
        Some(8) => {
            if !sup[0] {
                (Some("8a".into()), Some(sq(m1) + sq(m2)))
            } else if !sup[1] && !sup[2] {
                (Some("8b".into()), Some(lit::<T>(2.0) * sq(m2)))
            } else {
                (None, None)
            }
        }
        Some(6) => {
            let k = (0..3).find(|i| sup[*i]).unwrap();
            let id = format!("6(k={})", k + 1);
            let mu = [m1, m2, m3];
            let (i, j) = match k {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            (Some(id), Some(sq(mu[i]) + sq(mu[j])))
        }
        Some(_) => (None, None),
    };
    let printed_epsilon = printed.filter(|p| !near(*p, sigma, lit(1e-9)));
    let mut constraints = vec![format!("f f'' + 2 f'^2 = {}", f64_of(sigma))];
    constraints.push("phi'' + 3 (f'/f) phi' - 3 (f'/f)^2 phi = 0".into());
    let note = if sigma == T::zero() {
        Some("eps = 0: f = (3 e^{c1} t + c2)^(1/3) or constant".into())
    } else {
        None
    };
    Ok(vec![ClassificationCase {
        family: AlgebraFamily::Unimodular,
        case_id,
        epsilon: sigma,
        printed_epsilon,
        v2_set: describe_support(sup),
        constraints,
        note,
    }])
}

/// Residuals of the `(b, c)` lines of the non-unimodular system at `eps`.
pub fn nonunimodular_residuals<T: Real>(alg: &NonUnimodular<T>, v: &Vec3<T>, eps: T) -> Vec3<T> {
    let (al, be, de) = (alg.alpha(), alg.beta(), alg.delta());
    let [a, b, c] = *v;
    [
        a * (al * al + de * de - eps),
        b * (al * al + be * be - eps) - be * (al + de) * c,
        c * (de * de + be * be - eps) + be * (al + de) * b,
    ]
}

fn nonunimodular_case_id<T: Real>(alg: &NonUnimodular<T>, sup: [bool; 3], tol: T) -> Option<(String, Option<T>)> {
    let (al, be, de) = (alg.alpha(), alg.beta(), alg.delta());
    let [a, b, c] = sup;
    let sq = |x: T| x * x;
    if near(al, de, tol) && al > tol {
        let id = if a {
            "1a"
        } else if !b || !c {
            "1b"
        } else {
            "1c"
        };
        let printed = match id {
            "1a" | "1b" => lit::<T>(2.0) * sq(al),
            _ => sq(al) + sq(be),
        };
        Some((id.into(), Some(printed)))
    } else if al > de + tol && de.abs() > tol {
        let (id, printed) = if a {
            ("2a", sq(al) + sq(de))
        } else if !b {
            ("2b", sq(de))
        } else if !c {
            ("2c", sq(al))
        } else {
            ("2d", T::nan())
        };
        Some((id.into(), printed.is_finite().then_some(printed)))
    } else if al > tol && de.abs() <= tol {
        let (id, printed) = if !a && !b {
            ("3a", T::zero())
        } else if !a && !c {
            ("3b", sq(al))
        } else if !a {
            ("3c", T::nan())
        } else if !b && !c {
            ("3d", sq(al))
        } else {
            ("3e", sq(al))
        };
        Some((id.into(), printed.is_finite().then_some(printed)))
    } else {
        None
    }
}

/// Classifies a unit left-invariant `V2` on a non-unimodular group from the
/// system `a(alpha^2+delta^2-eps) = 0`,
/// `b(alpha^2+beta^2-eps) = beta(alpha+delta) c`,
/// `c(delta^2+beta^2-eps) = -beta(alpha+delta) b`.
pub fn classify_nonunimodular<T: Real>(
    alg: &NonUnimodular<T>,
    v2: &LeftInvariantField<T>,
    tol: T,
) -> Result<Vec<ClassificationCase<T>>, HarmonicityError> {
    let v = v2.coeffs;
    let n2 = v2.norm2();
    if (n2 - T::one()).abs() > lit(1e-9) {
        return Err(Lie3Error::NotUnit(f64_of(n2)).into());
    }
    let (al, be, de) = (alg.alpha(), alg.beta(), alg.delta());
    let [a, b, c] = v;
    let sup = support(&v, tol);
    let sigma = if sup[0] {
        al * al + de * de
    } else if sup[1] {
        al * al + be * be - be * (al + de) * c / b
    } else {
        de * de + be * be + be * (al + de) * b / c
    };
    let res = nonunimodular_residuals(alg, &v, sigma);
    if max_abs3(&res) > lit::<T>(1e-9) * T::one().max(sigma.abs()) {
        return Err(HarmonicityError::NoCase(format!(
            "residuals {:?} at eps = {}",
            res.iter().map(|x| f64_of(*x)).collect::<Vec<_>>(),
            f64_of(sigma)
        )));
    }
    let (case_id, printed) = match nonunimodular_case_id(alg, sup, lit(1e-12)) {
        Some((id, p)) => (Some(id), p),
        None => (None, None),
    };
    let printed_epsilon = printed.filter(|p| !near(*p, sigma, lit(1e-9)));
    let rhs = -lit::<T>(2.0) * a * (al + de);
    let mut constraints = vec![
        format!("f f'' + 2 f'^2 = {}", f64_of(sigma)),
        format!("phi'' + 3 (f'/f) phi' - 3 (f'/f)^2 phi = {} (f'/f)", f64_of(rhs)),
    ];
    if sup[0] && (sup[1] || sup[2]) {
        constraints.push("b(beta^2-delta^2) = beta(alpha+delta) c, c(beta^2-alpha^2) = -beta(alpha+delta) b".into());
    }
    if !sup[0] && sup[1] && sup[2] {
        constraints.push(format!("beta = bc(alpha-delta) = {}", f64_of(b * c * (al - de))));
    }
    let note = printed_epsilon.map(|p| {
        format!(
            "printed eps {} disagrees with the system value {}",
            f64_of(p),
            f64_of(sigma)
        )
    });
    Ok(vec![ClassificationCase {
        family: AlgebraFamily::NonUnimodular,
        case_id,
        epsilon: sigma,
        printed_epsilon,
        v2_set: describe_support(sup),
        constraints,
        note,
    }])
}

pub fn classify<T: Real>(
    alg: &Algebra<T>,
    v2: &LeftInvariantField<T>,
    tol: T,
) -> Result<Vec<ClassificationCase<T>>, HarmonicityError> {
    match alg {
        Algebra::Unimodular(u) => classify_unimodular(u, v2, tol),
        Algebra::NonUnimodular(n) => classify_nonunimodular(n, v2, tol),
    }
}

/// True when `V2` is harmonic for a constant warp: exactly when the
/// classification gives `eps = 0`.
pub fn harmonic_with_constant_warp<T: Real>(alg: &Algebra<T>, v2: &LeftInvariantField<T>, tol: T) -> bool {
    classify(alg, v2, tol)
        .map(|cs| cs.iter().any(|c| c.epsilon.abs() <= tol))
        .unwrap_or(false)
}

/// Builds a numeric warp solving `f f'' + 2 f'^2 = eps` on `window` (with
/// `f(t0) = 1` at the window midpoint) and the default phi, and returns the
/// resulting problem.
pub fn instantiate<T: Real>(
    algebra: &Algebra<T>,
    field: &LeftInvariantField<T>,
    eps: T,
    window: Interval<T>,
    opts: &SolveOptions<T>,
) -> Result<HarmonicityProblem<T>, HarmonicityError> {
    let t0 = (window.lo + window.hi) * lit(0.5);
    let df0 = if eps > T::zero() { T::zero() } else { lit(0.1) };
    let warp = solve_warp(
        eps,
        t0,
        T::one(),
        df0,
        DomainRequest::Bounded {
            lo: window.lo,
            hi: window.hi,
        },
        opts,
    )?;
    let div = algebra.fiber().divergence(&field.coeffs);
    let phi = solve_phi(&warp, 3, lit::<T>(2.0) * div, PhiSpec::default_ivp(t0), opts)?;
    HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: *algebra,
            field: *field,
        },
        warp,
        phi,
    )
}

/// Report for the two-dimensional fiber construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoDimReport<T> {
    pub harmonicity: HarmonicityReport<T>,
    /// max `|f f'' + f'^2 - 2 k0|`, zero for the square-root warp.
    pub identity_residual: T,
    /// max `|f f'' + 2 f'^2 - 2 k0|`.
    pub printed_identity_residual: T,
    pub domain: Interval<T>,
    pub printed_domain_rule: String,
}

/// Checks `f = sqrt(2 k0 t^2 + c1 t + c2)` with `phi` from `spec` against the
/// `n = 2` harmonicity system for a fiber field with the given `k0`, `k1`.
pub fn two_dim_fiber_check<T: Real>(
    kappa0: T,
    kappa1: T,
    c1: T,
    c2: T,
    spec: PhiSpec<T>,
    samples: &SampleSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<TwoDimReport<T>, HarmonicityError> {
    let warp = WarpFunction::sqrt_quadratic(kappa0, c1, c2)?;
    let report = two_dim_fiber_check_with(kappa0, kappa1, warp, spec, samples, opts)?;
    Ok(TwoDimReport {
        printed_domain_rule: crate::warp::printed_sqrt_domain_rule(kappa0, c1, c2),
        ..report
    })
}

/// Same as [`two_dim_fiber_check`] for an arbitrary warp.
pub fn two_dim_fiber_check_with<T: Real>(
    kappa0: T,
    kappa1: T,
    warp: WarpFunction<T>,
    spec: PhiSpec<T>,
    samples: &SampleSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<TwoDimReport<T>, HarmonicityError> {
    let phi = solve_phi(&warp, 2, lit::<T>(2.0) * kappa1, spec, opts)?;
    let domain = warp.domain;
    let p = HarmonicityProblem::new(FiberSource::Abstract2 { kappa0, kappa1 }, warp, phi)?;
    let harmonicity = check(&p, samples, None)?;
    let mut id = T::zero();
    let mut printed = T::zero();
    for r in &harmonicity.rows {
        let (f, df, d2f) = p.warp.eval(r.t)?;
        let two_k0 = lit::<T>(2.0) * kappa0;
        id = id.max((f * d2f + df * df - two_k0).abs());
        printed = printed.max((f * d2f + lit::<T>(2.0) * df * df - two_k0).abs());
    }
    Ok(TwoDimReport {
        harmonicity,
        identity_residual: id,
        printed_identity_residual: printed,
        domain,
        printed_domain_rule: String::new(),
    })
}

/// Component form of the unimodular system, expanded by hand; used to
/// cross-check [`assemble_from`].
pub fn unimodular_component_form<T: Real>(alg: &Unimodular<T>, v: &Vec3<T>, b: &BasePoint<T>) -> (T, Vec3<T>) {
    let s = unimodular_sigmas(alg);
    let w = b.f * b.d2f + lit::<T>(2.0) * b.df * b.df;
    let q = b.df / b.f;
    let h = b.d2phi + lit::<T>(3.0) * q * b.dphi - lit::<T>(3.0) * q * q * b.phi;
    let inv = T::one() / (b.f * b.f);
    (h, [inv * v[0] * (s[0] - w), inv * v[1] * (s[1] - w), inv * v[2] * (s[2] - w)])
}

/// Component form of the non-unimodular system, expanded by hand.
pub fn nonunimodular_component_form<T: Real>(alg: &NonUnimodular<T>, v: &Vec3<T>, b: &BasePoint<T>) -> (T, Vec3<T>) {
    let w = b.f * b.d2f + lit::<T>(2.0) * b.df * b.df;
    let q = b.df / b.f;
    let (al, de) = (alg.alpha(), alg.delta());
    let h = b.d2phi + lit::<T>(3.0) * q * b.dphi - lit::<T>(3.0) * q * q * b.phi
        + lit::<T>(2.0) * v[0] * (al + de) * q;
    let r = nonunimodular_residuals(alg, v, w);
    (h, scale3(T::one() / (b.f * b.f), &r))
}
