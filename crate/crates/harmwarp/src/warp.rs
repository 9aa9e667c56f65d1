//! Warping functions `f` and the component `phi` of `V1 = phi(t) d/dt`.
//!
//! `f` solves `y y'' + 2 y'^2 = eps` (or is one of its closed forms), and
//! `phi` solves the Cauchy-Euler type equation
//! `phi'' + n (f'/f) phi' - n (f'/f)^2 phi = R (f'/f)`.

use crate::ode::{bracket, integrate, quintic_hermite, OdeOptions, Stop};
use crate::scalar::{lit, Real};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error("initial value f0 = {0} must be positive")]
    NonPositiveInitial(f64),
    #[error("warp collapses at t = {t} before reaching the requested bound")]
    DomainCollapse { t: f64 },
    #[error("t = {t} outside the domain ({lo}, {hi})")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("the quadratic is nonpositive everywhere")]
    EmptyDomain,
    #[error("warp vanishes or is undefined near t = {t}")]
    SingularWarp { t: f64 },
    #[error("invalid warp: {0}")]
    Invalid(String),
    #[error("invalid phi data: {0}")]
    InvalidPhi(String),
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Open interval, either end possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn whole() -> Self {
        Self {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    pub fn contains(&self, t: T) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Self { lo, hi })
    }

    /// Replaces infinite ends by points `reach` away from `anchor` (or from
    /// the finite end when only one end is infinite).
    pub fn clipped(&self, anchor: T, reach: T) -> Self {
        let (lo, hi) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo.max(anchor) + reach),
            (false, true) => (self.hi.min(anchor) - reach, self.hi),
            (false, false) => (anchor - reach, anchor + reach),
        };
        Self { lo, hi }
    }

    /// `n` Chebyshev points of the first kind, ascending. They avoid the
    /// endpoints, which suits open domains.
    pub fn chebyshev(&self, n: usize) -> Vec<T> {
        let mid = (self.lo + self.hi) * lit(0.5);
        let rad = (self.hi - self.lo) * lit(0.5);
        let pi = T::from_f64(std::f64::consts::PI).unwrap();
        let nn = T::from_usize(n).unwrap();
        (0..n)
            .rev()
            .map(|k| {
                let x = ((lit::<T>(2.0) * T::from_usize(k).unwrap() + T::one()) * pi / (lit::<T>(2.0) * nn)).cos();
                mid + rad * x
            })
            .collect()
    }

    pub fn to_f64(&self) -> Interval<f64> {
        Interval {
            lo: f64_of(self.lo),
            hi: f64_of(self.hi),
        }
    }
}

/// Accuracy and marching settings shared by the numeric solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions<T> {
    pub ode: OdeOptions<T>,
    /// Marching stops this far from `t0` when nothing else stops it first.
    pub reach: T,
    /// Values of `f` at or below this count as collapse.
    pub f_min_tol: T,
    /// Derivatives above this count as blow-up.
    pub blowup: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            reach: lit(1e3),
            f_min_tol: lit(1e-6),
            blowup: lit(1e6),
        }
    }
}

/// Requested domain for a numeric warp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainRequest<T> {
    /// March up to `reach` from `t0` in both directions, truncating at collapse.
    Auto,
    /// Integrate exactly over `(lo, hi)`; collapse inside is an error.
    Bounded { lo: T, hi: T },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericWarp<T> {
    pub epsilon: T,
    pub t0: T,
    pub f0: T,
    pub df0: T,
    /// Node times, ascending.
    ts: Vec<T>,
    /// `(y, y')` at the nodes.
    ys: Vec<[T; 2]>,
    /// `y^4 (y'^2 - eps/2)` at `t0`.
    pub first_integral: T,
    /// max over nodes of `|y'^2 - eps/2 - C / y^4|`.
    pub drift: T,
    pub collapsed_below: bool,
    pub collapsed_above: bool,
}

impl<T: Real> NumericWarp<T> {
    fn second(&self, y: T, dy: T) -> T {
        (self.epsilon - lit::<T>(2.0) * dy * dy) / y
    }

    fn third(&self, y: T, dy: T, d2y: T) -> T {
        -lit::<T>(5.0) * dy * d2y / y
    }

    fn eval(&self, t: T) -> Option<(T, T, T)> {
        let k = bracket(&self.ts, t)?;
        let (ta, tb) = (self.ts[k], self.ts[k + 1]);
        let [ya, dya] = self.ys[k];
        let [yb, dyb] = self.ys[k + 1];
        let d2a = self.second(ya, dya);
        let d2b = self.second(yb, dyb);
        let (f, _) = quintic_hermite(ta, tb, [ya, dya, d2a], [yb, dyb, d2b], t);
        let (df, _) = quintic_hermite(
            ta,
            tb,
            [dya, d2a, self.third(ya, dya, d2a)],
            [dyb, d2b, self.third(yb, dyb, d2b)],
            t,
        );
        Some((f, df, self.second(f, df)))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.ts.iter().zip(self.ys.iter()).map(|(t, y)| (*t, y[0], y[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpKind<T> {
    Constant { c: T },
    Linear { slope: T, offset: T },
    /// `(3 e^{c1} t + c2)^(1/3)`.
    CubeRoot { c1: T, c2: T },
    /// `sqrt(2 k0 t^2 + c1 t + c2)`.
    SqrtQuadratic { kappa0: T, c1: T, c2: T },
    EpsilonNumeric(NumericWarp<T>),
}

/// `f = (scale t + shift)^p` on the domain, where `scale t + shift > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerForm<T> {
    pub scale: T,
    pub shift: T,
    pub p: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WarpFunction<T> {
    pub kind: WarpKind<T>,
    pub domain: Interval<T>,
}

fn ray_where_positive<T: Real>(slope: T, offset: T) -> Option<Interval<T>> {
    if slope > T::zero() {
        Some(Interval::new(-offset / slope, T::infinity()))
    } else if slope < T::zero() {
        Some(Interval::new(T::neg_infinity(), -offset / slope))
    } else if offset > T::zero() {
        Some(Interval::whole())
    } else {
        None
    }
}

impl<T: Real> WarpFunction<T> {
    pub fn constant(c: T) -> Result<Self, WarpError> {
        if !(c > T::zero()) {
            return Err(WarpError::Invalid(format!("constant warp must be positive, got {}", f64_of(c))));
        }
        Ok(Self {
            kind: WarpKind::Constant { c },
            domain: Interval::whole(),
        })
    }

    pub fn linear(slope: T, offset: T) -> Result<Self, WarpError> {
        let domain = ray_where_positive(slope, offset)
            .ok_or_else(|| WarpError::Invalid("linear warp is nowhere positive".into()))?;
        Ok(Self {
            kind: WarpKind::Linear { slope, offset },
            domain,
        })
    }

    pub fn cube_root(c1: T, c2: T) -> Result<Self, WarpError> {
        let a = lit::<T>(3.0) * c1.exp();
        Ok(Self {
            kind: WarpKind::CubeRoot { c1, c2 },
            domain: Interval::new(-c2 / a, T::infinity()),
        })
    }

    /// Uses the component of the positivity set that contains `t = 0`, or
    /// the first component when none does.
    pub fn sqrt_quadratic(kappa0: T, c1: T, c2: T) -> Result<Self, WarpError> {
        let parts = sqrt_quadratic_domain(kappa0, c1, c2)?;
        let domain = parts
            .iter()
            .copied()
            .find(|i| i.contains(T::zero()))
            .unwrap_or(parts[0]);
        Ok(Self {
            kind: WarpKind::SqrtQuadratic { kappa0, c1, c2 },
            domain,
        })
    }

    pub fn sqrt_quadratic_on(kappa0: T, c1: T, c2: T, component: usize) -> Result<Self, WarpError> {
        let parts = sqrt_quadratic_domain(kappa0, c1, c2)?;
        let domain = *parts
            .get(component)
            .ok_or_else(|| WarpError::Invalid(format!("no domain component {component}")))?;
        Ok(Self {
            kind: WarpKind::SqrtQuadratic { kappa0, c1, c2 },
            domain,
        })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, WarpKind::EpsilonNumeric(_))
    }

    pub fn numeric(&self) -> Option<&NumericWarp<T>> {
        match &self.kind {
            WarpKind::EpsilonNumeric(n) => Some(n),
            _ => None,
        }
    }

    /// True when `f' = 0` identically.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            WarpKind::Constant { .. } => true,
            WarpKind::Linear { slope, .. } => *slope == T::zero(),
            WarpKind::SqrtQuadratic { kappa0, c1, .. } => *kappa0 == T::zero() && *c1 == T::zero(),
            _ => false,
        }
    }

    /// `(f, f', f'')` at `t`.
    pub fn eval(&self, t: T) -> Result<(T, T, T), WarpError> {
        if !self.domain.contains(t) && !self.on_numeric_edge(t) {
            return Err(self.out_of_domain(t));
        }
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let val = match &self.kind {
            WarpKind::Constant { c } => (*c, T::zero(), T::zero()),
            WarpKind::Linear { slope, offset } => (*slope * t + *offset, *slope, T::zero()),
            WarpKind::CubeRoot { c1, c2 } => {
                let a = three * c1.exp();
                let s = a * t + *c2;
                let f = s.cbrt();
                let f2 = f * f;
                let df = a / (three * f2);
                let d2f = -two * a * a / (lit::<T>(9.0) * f2 * f2 * f);
                (f, df, d2f)
            }
            WarpKind::SqrtQuadratic { kappa0, c1, c2 } => {
                let q = two * *kappa0 * t * t + *c1 * t + *c2;
                let dq = lit::<T>(4.0) * *kappa0 * t + *c1;
                let d2q = lit::<T>(4.0) * *kappa0;
                let f = q.sqrt();
                let df = dq / (two * f);
                let d2f = (two * d2q * q - dq * dq) / (lit::<T>(4.0) * q * f);
                (f, df, d2f)
            }
            WarpKind::EpsilonNumeric(n) => n.eval(t).ok_or_else(|| self.out_of_domain(t))?,
        };
        if !(val.0 > T::zero()) || !val.0.is_finite() {
            return Err(WarpError::SingularWarp { t: f64_of(t) });
        }
        Ok(val)
    }

    fn on_numeric_edge(&self, t: T) -> bool {
        self.is_numeric() && (t == self.domain.lo || t == self.domain.hi)
    }

    fn out_of_domain(&self, t: T) -> WarpError {
        WarpError::OutOfDomain {
            t: f64_of(t),
            lo: f64_of(self.domain.lo),
            hi: f64_of(self.domain.hi),
        }
    }

    /// The constant `eps` of `f f'' + 2 f'^2 = eps` this warp is built for.
    /// For `sqrt_quadratic` this is `2 k0`, the value `f f'' + f'^2` takes.
    pub fn epsilon_target(&self) -> T {
        match &self.kind {
            WarpKind::Constant { .. } | WarpKind::CubeRoot { .. } => T::zero(),
            WarpKind::Linear { slope, .. } => lit::<T>(2.0) * *slope * *slope,
            WarpKind::SqrtQuadratic { kappa0, .. } => lit::<T>(2.0) * *kappa0,
            WarpKind::EpsilonNumeric(n) => n.epsilon,
        }
    }

    /// `f = (scale t + shift)^p` representation when the warp has one.
    pub fn power_form(&self) -> Option<PowerForm<T>> {
        match &self.kind {
            WarpKind::Linear { slope, offset } if *slope != T::zero() => Some(PowerForm {
                scale: *slope,
                shift: *offset,
                p: T::one(),
            }),
            WarpKind::CubeRoot { c1, c2 } => Some(PowerForm {
                scale: lit::<T>(3.0) * c1.exp(),
                shift: *c2,
                p: T::one() / lit::<T>(3.0),
            }),
            WarpKind::SqrtQuadratic { kappa0, c1, c2 } if *kappa0 == T::zero() && *c1 != T::zero() => {
                Some(PowerForm {
                    scale: *c1,
                    shift: *c2,
                    p: lit(0.5),
                })
            }
            _ => None,
        }
    }
}

/// `f f'' + 2 f'^2 - eps_target` at `t`.
pub fn warp_residual<T: Real>(w: &WarpFunction<T>, t: T, eps_target: T) -> Result<T, WarpError> {
    let (f, df, d2f) = w.eval(t)?;
    Ok(f * d2f + lit::<T>(2.0) * df * df - eps_target)
}

/// Integrates `y y'' + 2 y'^2 = eps` from `(t0, f0, df0)`.
pub fn solve_warp<T: Real>(
    eps: T,
    t0: T,
    f0: T,
    df0: T,
    request: DomainRequest<T>,
    opts: &SolveOptions<T>,
) -> Result<WarpFunction<T>, WarpError> {
    if !(f0 > T::zero()) {
        return Err(WarpError::NonPositiveInitial(f64_of(f0)));
    }
    let two = lit::<T>(2.0);
    let (lo_target, hi_target) = match request {
        DomainRequest::Auto => (t0 - opts.reach, t0 + opts.reach),
        DomainRequest::Bounded { lo, hi } => {
            if !(lo < t0 && t0 < hi) {
                return Err(WarpError::Invalid("bounded domain must contain t0".into()));
            }
            (lo, hi)
        }
    };
    let rhs = |_t: T, y: &[T; 2]| -> Option<[T; 2]> {
        if y[0] <= T::zero() {
            return None;
        }
        Some([y[1], (eps - two * y[1] * y[1]) / y[0]])
    };
    let fmin = opts.f_min_tol;
    let blow = opts.blowup;
    let ok = |y: &[T; 2]| y[0] > fmin && y[1].abs() < blow;
    let fwd = integrate(rhs, t0, [f0, df0], hi_target, &opts.ode, ok);
    let bwd = integrate(rhs, t0, [f0, df0], lo_target, &opts.ode, ok);
    if let DomainRequest::Bounded { .. } = request {
        for tr in [&fwd, &bwd] {
            if tr.stop != Stop::Reached {
                return Err(WarpError::DomainCollapse {
                    t: f64_of(*tr.t.last().unwrap()),
                });
            }
        }
    }
    let mut ts: Vec<T> = bwd.t.iter().rev().copied().collect();
    let mut ys: Vec<[T; 2]> = bwd.y.iter().rev().copied().collect();
    ts.extend(fwd.t.iter().skip(1).copied());
    ys.extend(fwd.y.iter().skip(1).copied());
    if ts.len() < 2 {
        return Err(WarpError::DomainCollapse { t: f64_of(t0) });
    }
    let c = f0.powi(4) * (df0 * df0 - eps / two);
    let drift = ys
        .iter()
        .map(|&[y, dy]| (dy * dy - eps / two - c / y.powi(4)).abs())
        .fold(T::zero(), T::max);
    let domain = Interval::new(ts[0], ts[ts.len() - 1]);
    Ok(WarpFunction {
        kind: WarpKind::EpsilonNumeric(NumericWarp {
            epsilon: eps,
            t0,
            f0,
            df0,
            ts,
            ys,
            first_integral: c,
            drift,
            collapsed_below: bwd.stop != Stop::Reached,
            collapsed_above: fwd.stop != Stop::Reached,
        }),
        domain,
    })
}

/// Maximal open intervals on which `2 k0 t^2 + c1 t + c2 > 0`, ascending.
pub fn sqrt_quadratic_domain<T: Real>(kappa0: T, c1: T, c2: T) -> Result<Vec<Interval<T>>, WarpError> {
    let inf = T::infinity();
    if kappa0 == T::zero() {
        return ray_where_positive(c1, c2).map(|i| vec![i]).ok_or(WarpError::EmptyDomain);
    }
    let a = lit::<T>(2.0) * kappa0;
    let disc = c1 * c1 - lit::<T>(4.0) * a * c2;
    if disc < T::zero() {
        return if kappa0 > T::zero() {
            Ok(vec![Interval::whole()])
        } else {
            Err(WarpError::EmptyDomain)
        };
    }
    let sq = disc.sqrt();
    let r1 = (-c1 - sq) / (lit::<T>(2.0) * a);
    let r2 = (-c1 + sq) / (lit::<T>(2.0) * a);
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if kappa0 > T::zero() {
        Ok(vec![Interval::new(-inf, lo), Interval::new(hi, inf)])
    } else if lo < hi {
        Ok(vec![Interval::new(lo, hi)])
    } else {
        Err(WarpError::EmptyDomain)
    }
}

/// The interval rule as printed next to the 2-D fiber construction, for
/// side-by-side reporting. It does not always agree with positivity.
pub fn printed_sqrt_domain_rule<T: Real>(kappa0: T, c1: T, c2: T) -> String {
    let disc = c1 * c1 - lit::<T>(8.0) * c2 * kappa0;
    if kappa0 == T::zero() && c1 > T::zero() {
        "]-inf, -c2/c1]".into()
    } else if kappa0 == T::zero() && c1 < T::zero() {
        "[-c2/c1, +inf[".into()
    } else if disc < T::zero() && kappa0 > T::zero() {
        "R".into()
    } else if disc >= T::zero() && kappa0 > T::zero() {
        "[t1, t2[".into()
    } else if disc >= T::zero() && kappa0 < T::zero() {
        "]-inf, t1[ u ]t2, +inf[".into()
    } else {
        "no printed rule".into()
    }
}

/// How `phi` is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec<T> {
    /// Coefficients of the two power solutions `s^r1`, `s^r2` (`r1 > r2`).
    Euler { c1: T, c2: T },
    Ivp { t0: T, phi0: T, dphi0: T },
    Affine { g1: T, g2: T },
}

impl<T: Real> PhiSpec<T> {
    /// Default data `phi(t0) = 0`, `phi'(t0) = 1`.
    pub fn default_ivp(t0: T) -> Self {
        PhiSpec::Ivp {
            t0,
            phi0: T::zero(),
            dphi0: T::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiRepr<T> {
    Affine {
        g1: T,
        g2: T,
    },
    /// `c1 s^r1 + c2 s^r2 + A s` (or `A s ln s` when `log`), `s = scale t + shift`.
    ClosedEuler {
        c1: T,
        c2: T,
        scale: T,
        shift: T,
        r1: T,
        r2: T,
        particular: T,
        log: bool,
    },
    Numeric {
        ts: Vec<T>,
        /// `(phi, phi', phi'', phi''')` at the nodes.
        vals: Vec<[T; 4]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiSolution<T> {
    pub repr: PhiRepr<T>,
    pub n: usize,
    /// The constant `R` in `... = R (f'/f)`.
    pub rhs: T,
    pub domain: Interval<T>,
}

impl<T: Real> PhiSolution<T> {
    pub fn is_closed_form(&self) -> bool {
        !matches!(self.repr, PhiRepr::Numeric { .. })
    }

    /// `(phi, phi', phi'')` at `t`.
    pub fn eval(&self, t: T) -> Result<(T, T, T), WarpError> {
        let edge = matches!(self.repr, PhiRepr::Numeric { .. }) && (t == self.domain.lo || t == self.domain.hi);
        if !self.domain.contains(t) && !edge {
            return Err(WarpError::OutOfDomain {
                t: f64_of(t),
                lo: f64_of(self.domain.lo),
                hi: f64_of(self.domain.hi),
            });
        }
        match &self.repr {
            PhiRepr::Affine { g1, g2 } => Ok((*g1 * t + *g2, *g1, T::zero())),
            PhiRepr::ClosedEuler {
                c1,
                c2,
                scale,
                shift,
                r1,
                r2,
                particular,
                log,
            } => {
                let s = *scale * t + *shift;
                let (p, ps, pss) = if *log {
                    let l = s.ln();
                    (*particular * s * l, *particular * (l + T::one()), *particular / s)
                } else {
                    (*particular * s, *particular, T::zero())
                };
                let h1 = s.powf(*r1);
                let h2 = s.powf(*r2);
                let v = *c1 * h1 + *c2 * h2 + p;
                let vs = *c1 * *r1 * h1 / s + *c2 * *r2 * h2 / s + ps;
                let vss = *c1 * *r1 * (*r1 - T::one()) * h1 / (s * s) + *c2 * *r2 * (*r2 - T::one()) * h2 / (s * s) + pss;
                Ok((v, *scale * vs, *scale * *scale * vss))
            }
            PhiRepr::Numeric { ts, vals } => {
                let k = bracket(ts, t).ok_or(WarpError::OutOfDomain {
                    t: f64_of(t),
                    lo: f64_of(self.domain.lo),
                    hi: f64_of(self.domain.hi),
                })?;
                let (a, b) = (vals[k], vals[k + 1]);
                let (v, _) = quintic_hermite(ts[k], ts[k + 1], [a[0], a[1], a[2]], [b[0], b[1], b[2]], t);
                let (dv, d2v) = quintic_hermite(ts[k], ts[k + 1], [a[1], a[2], a[3]], [b[1], b[2], b[3]], t);
                Ok((v, dv, d2v))
            }
        }
    }
}

/// `phi'' + n q phi' - n q^2 phi - R q` with `q = f'/f`.
pub fn phi_residual<T: Real>(
    w: &WarpFunction<T>,
    sol: &PhiSolution<T>,
    rhs: T,
    t: T,
) -> Result<T, WarpError> {
    let (f, df, _) = w.eval(t)?;
    let (p, dp, d2p) = sol.eval(t)?;
    let n = T::from_usize(sol.n).unwrap();
    let q = df / f;
    Ok(d2p + n * q * dp - n * q * q * p - rhs * q)
}

/// Indicial roots `r1 > r2` of `r(r-1) + n p r - n p^2 = 0`.
pub fn indicial_roots<T: Real>(n: T, p: T) -> (T, T) {
    let b = n * p - T::one();
    let disc = (b * b + lit::<T>(4.0) * n * p * p).sqrt();
    ((-b + disc) * lit(0.5), (-b - disc) * lit(0.5))
}

fn closed_euler<T: Real>(pf: PowerForm<T>, n: T, rhs: T, c1: T, c2: T) -> PhiRepr<T> {
    let (r1, r2) = indicial_roots(n, pf.p);
    let forcing = rhs * pf.p / pf.scale;
    let p1 = n * pf.p * (T::one() - pf.p);
    let (particular, log) = if pf.p == T::one() || p1 == T::zero() {
        (forcing / (T::one() + n * pf.p), true)
    } else {
        (forcing / p1, false)
    };
    PhiRepr::ClosedEuler {
        c1,
        c2,
        scale: pf.scale,
        shift: pf.shift,
        r1,
        r2,
        particular,
        log,
    }
}

/// Solves the `phi` equation on the warp's domain.
///
/// Constant warps give affine `phi`; power-form warps give the closed
/// Cauchy-Euler family; anything else is integrated numerically.
pub fn solve_phi<T: Real>(
    w: &WarpFunction<T>,
    n: usize,
    rhs: T,
    spec: PhiSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<PhiSolution<T>, WarpError> {
    let nn = T::from_usize(n).unwrap();
    if w.is_constant() {
        let (g1, g2) = match spec {
            PhiSpec::Affine { g1, g2 } => (g1, g2),
            PhiSpec::Ivp { t0, phi0, dphi0 } => (dphi0, phi0 - dphi0 * t0),
            PhiSpec::Euler { .. } => {
                return Err(WarpError::InvalidPhi(
                    "Euler coefficients need a non-constant power-form warp; use affine".into(),
                ))
            }
        };
        return Ok(PhiSolution {
            repr: PhiRepr::Affine { g1, g2 },
            n,
            rhs,
            domain: w.domain,
        });
    }
    if let PhiSpec::Affine { .. } = spec {
        return Err(WarpError::InvalidPhi("affine phi requires a constant warp".into()));
    }
    if let Some(pf) = w.power_form() {
        let repr = match spec {
            PhiSpec::Euler { c1, c2 } => closed_euler(pf, nn, rhs, c1, c2),
            PhiSpec::Ivp { t0, phi0, dphi0 } => {
                if !w.domain.contains(t0) {
                    return Err(WarpError::InvalidPhi("initial time outside the warp domain".into()));
                }
                let base = closed_euler(pf, nn, rhs, T::zero(), T::zero());
                let tmp = PhiSolution {
                    repr: base.clone(),
                    n,
                    rhs,
                    domain: w.domain,
                };
                let (p0, dp0, _) = tmp.eval(t0)?;
                let (r1, r2) = indicial_roots(nn, pf.p);
                let s = pf.scale * t0 + pf.shift;
                let (a11, a12) = (s.powf(r1), s.powf(r2));
                let (a21, a22) = (pf.scale * r1 * s.powf(r1 - T::one()), pf.scale * r2 * s.powf(r2 - T::one()));
                let (b1, b2) = (phi0 - p0, dphi0 - dp0);
                let det = a11 * a22 - a12 * a21;
                let c1 = (b1 * a22 - a12 * b2) / det;
                let c2 = (a11 * b2 - a21 * b1) / det;
                closed_euler(pf, nn, rhs, c1, c2)
            }
            PhiSpec::Affine { .. } => unreachable!(),
        };
        return Ok(PhiSolution {
            repr,
            n,
            rhs,
            domain: w.domain,
        });
    }
    match spec {
        PhiSpec::Ivp { t0, phi0, dphi0 } => solve_phi_numeric(w, n, rhs, t0, phi0, dphi0, opts),
        PhiSpec::Euler { .. } => Err(WarpError::InvalidPhi(
            "Euler coefficients need a power-form warp; give initial data instead".into(),
        )),
        PhiSpec::Affine { .. } => unreachable!(),
    }
}

/// Numeric IVP regardless of warp kind; used directly to cross-check the
/// closed forms.
pub fn solve_phi_numeric<T: Real>(
    w: &WarpFunction<T>,
    n: usize,
    rhs: T,
    t0: T,
    phi0: T,
    dphi0: T,
    opts: &SolveOptions<T>,
) -> Result<PhiSolution<T>, WarpError> {
    if !w.domain.contains(t0) {
        return Err(WarpError::InvalidPhi("initial time outside the warp domain".into()));
    }
    let nn = T::from_usize(n).unwrap();
    let window = w.domain.clipped(t0, opts.reach);
    let second = |t: T, y: &[T; 2]| -> Option<(T, T)> {
        let (f, df, d2f) = w.eval(t).ok()?;
        let q = df / f;
        let dq = d2f / f - q * q;
        let d2 = rhs * q - nn * q * y[1] + nn * q * q * y[0];
        let d3 = rhs * dq - nn * dq * y[1] - nn * q * d2 + lit::<T>(2.0) * nn * q * dq * y[0] + nn * q * q * y[1];
        Some((d2, d3))
    };
    let ode_rhs = |t: T, y: &[T; 2]| second(t, y).map(|(d2, _)| [y[1], d2]);
    let big = lit::<T>(1e12);
    let ok = |y: &[T; 2]| y[0].abs() < big && y[1].abs() < big;
    // Stop a hair inside finite ends so the warp stays evaluable.
    let pad = |x: T| x.abs().max(T::one()) * lit(1e-12);
    let hi = if w.domain.hi.is_finite() { window.hi - pad(window.hi) } else { window.hi };
    let lo = if w.domain.lo.is_finite() { window.lo + pad(window.lo) } else { window.lo };
    let fwd = integrate(ode_rhs, t0, [phi0, dphi0], hi, &opts.ode, ok);
    let bwd = integrate(ode_rhs, t0, [phi0, dphi0], lo, &opts.ode, ok);
    let mut ts: Vec<T> = bwd.t.iter().rev().copied().collect();
    let mut ys: Vec<[T; 2]> = bwd.y.iter().rev().copied().collect();
    ts.extend(fwd.t.iter().skip(1).copied());
    ys.extend(fwd.y.iter().skip(1).copied());
    let mut vals = Vec::with_capacity(ts.len());
    for (t, y) in ts.iter().zip(ys.iter()) {
        let (d2, d3) = second(*t, y).ok_or(WarpError::SingularWarp { t: f64_of(*t) })?;
        vals.push([y[0], y[1], d2, d3]);
    }
    if ts.len() < 2 {
        return Err(WarpError::SingularWarp { t: f64_of(t0) });
    }
    let domain = Interval::new(ts[0], ts[ts.len() - 1]);
    Ok(PhiSolution {
        repr: PhiRepr::Numeric { ts, vals },
        n,
        rhs,
        domain,
    })
}

/// Rows `(t, f, f', f'')` on `samples` Chebyshev points of `window`.
pub fn warp_grid<T: Real>(w: &WarpFunction<T>, window: &Interval<T>, samples: usize) -> Result<Vec<[T; 4]>, WarpError> {
    window
        .chebyshev(samples)
        .into_iter()
        .map(|t| w.eval(t).map(|(f, df, d2f)| [t, f, df, d2f]))
        .collect()
}

/// Rows `(t, phi, phi')` on `samples` Chebyshev points of `window`.
pub fn phi_grid<T: Real>(p: &PhiSolution<T>, window: &Interval<T>, samples: usize) -> Result<Vec<[T; 3]>, WarpError> {
    window
        .chebyshev(samples)
        .into_iter()
        .map(|t| p.eval(t).map(|(v, dv, _)| [t, v, dv]))
        .collect()
}
