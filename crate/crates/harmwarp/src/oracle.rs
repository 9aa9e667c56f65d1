//! Finite-difference geometry on coordinate charts.
//!
//! Everything here is computed from the metric components alone: Christoffel
//! symbols by central differences, curvature by differencing those, and
//! covariant derivatives, rough Laplacians and the `S(V)` trace by nesting.
//! The closed-form modules are checked against these numbers.

use crate::families::{Chart, ChartField, FamilyError};
use crate::harmonicity::{assemble_system, HarmonicityError, HarmonicityProblem};
use crate::lie3::{Algebra, Vec3};
use crate::scalar::{half, lit, Real};
use crate::tension::{s_of_v, TensionError};
use crate::warp::{Interval, PhiSolution, WarpError, WarpFunction};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type Matrix<T> = Vec<Vec<T>>;
/// `gamma[k][i][j]` is `Gamma^k_ij`.
pub type Christoffel<T> = Vec<Matrix<T>>;
/// `r[l][i][j][k]` is `R^l_ijk`, the `d_l` component of `R(d_i, d_j) d_k`.
pub type Riemann<T> = Vec<Vec<Matrix<T>>>;
/// A vector field in coordinate components.
pub type Field<'a, T> = dyn Fn(&[T]) -> Result<Vec<T>, OracleError> + 'a;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("metric is singular at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("point {0:?} is outside the chart or closer than the stencil to its edge")]
    OutOfDomain(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("chart {0} has no frame")]
    NoFrame(String),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Harmonicity(#[from] HarmonicityError),
    #[error(transparent)]
    Tension(#[from] TensionError),
}

fn to_f64<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

pub trait MetricChart<T: Real> {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// `g_ij(x)`.
    fn metric(&self, x: &[T]) -> Matrix<T>;
    fn contains(&self, x: &[T]) -> bool;
    /// A hand-coded frame, one row of coordinate components per vector.
    fn frame(&self, _x: &[T]) -> Option<Matrix<T>> {
        None
    }
}

impl<T: Real, C: MetricChart<T> + ?Sized> MetricChart<T> for Box<C> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn metric(&self, x: &[T]) -> Matrix<T> {
        (**self).metric(x)
    }
    fn contains(&self, x: &[T]) -> bool {
        (**self).contains(x)
    }
    fn frame(&self, x: &[T]) -> Option<Matrix<T>> {
        (**self).frame(x)
    }
}

fn identity<T: Real>(n: usize) -> Matrix<T> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

fn finite<T: Real>(x: &[T]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Euclidean `R^3`; the frame is the coordinate frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlatR3;

impl<T: Real> MetricChart<T> for FlatR3 {
    fn name(&self) -> String {
        "R3".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn metric(&self, _x: &[T]) -> Matrix<T> {
        identity(3)
    }
    fn contains(&self, x: &[T]) -> bool {
        finite(x)
    }
    fn frame(&self, _x: &[T]) -> Option<Matrix<T>> {
        Some(identity(3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HeisenbergFrame {
    /// `(d/dy, d/dx, d/dz + x d/dy)`: Milnor brackets with `lambda = (1,0,0)`.
    Milnor,
    /// `(d/dx, d/dy, d/dz + x d/dy)`: the frame the chart families use.
    Family,
}

/// `dx^2 + (dy - x dz)^2 + dz^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Heisenberg {
    pub frame: HeisenbergFrame,
}

impl<T: Real> MetricChart<T> for Heisenberg {
    fn name(&self) -> String {
        "H3".into()
    }
    fn dim(&self) -> usize {
        3
    }
    fn metric(&self, p: &[T]) -> Matrix<T> {
        let (o, z, x) = (T::one(), T::zero(), p[0]);
        vec![vec![o, z, z], vec![z, o, -x], vec![z, -x, o + x * x]]
    }
    fn contains(&self, x: &[T]) -> bool {
        finite(x)
    }
    fn frame(&self, p: &[T]) -> Option<Matrix<T>> {
        let (o, z, x) = (T::one(), T::zero(), p[0]);
        let e3 = vec![z, x, o];
        Some(match self.frame {
            HeisenbergFrame::Milnor => vec![vec![z, o, z], vec![o, z, z], e3],
            HeisenbergFrame::Family => vec![vec![o, z, z], vec![z, o, z], e3],
        })
    }
}

/// `(dx^2 + dy^2) / (alpha y^2) + dz^2` on `y > 0`, framed by
/// `(sqrt(alpha) y d/dy, sqrt(alpha) y d/dx, d/dz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxH2<T> {
    pub alpha: T,
}

impl<T: Real> MetricChart<T> for RxH2<T> {
    fn name(&self) -> String {
        format!("RxH2(alpha={})", self.alpha.to_f64().unwrap_or(f64::NAN))
    }
    fn dim(&self) -> usize {
        3
    }
    fn metric(&self, p: &[T]) -> Matrix<T> {
        let s = T::one() / (self.alpha * p[1] * p[1]);
        let z = T::zero();
        vec![vec![s, z, z], vec![z, s, z], vec![z, z, T::one()]]
    }
    fn contains(&self, x: &[T]) -> bool {
        finite(x) && x[1] > T::zero()
    }
    fn frame(&self, p: &[T]) -> Option<Matrix<T>> {
        let s = self.alpha.sqrt() * p[1];
        let (o, z) = (T::one(), T::zero());
        Some(vec![vec![z, s, z], vec![s, z, z], vec![z, z, o]])
    }
}

/// Upper hemisphere `w = sqrt(r^2 - |x|^2)` of the round 3-sphere of radius
/// `r`, framed by the unit left-invariant quaternion fields. Milnor constants
/// are `lambda_i = 2/r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2<T> {
    pub radius: T,
}

impl<T: Real> Su2<T> {
    fn w(&self, p: &[T]) -> T {
        (self.radius * self.radius - p[0] * p[0] - p[1] * p[1] - p[2] * p[2]).sqrt()
    }
    pub fn lambda(&self) -> T {
        lit::<T>(2.0) / self.radius
    }
}

impl<T: Real> MetricChart<T> for Su2<T> {
    fn name(&self) -> String {
        format!("SU2(r={})", self.radius.to_f64().unwrap_or(f64::NAN))
    }
    fn dim(&self) -> usize {
        3
    }
    fn metric(&self, p: &[T]) -> Matrix<T> {
        let w2 = self.radius * self.radius - p[0] * p[0] - p[1] * p[1] - p[2] * p[2];
        (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { T::one() } else { T::zero() } + p[i] * p[j] / w2)
                    .collect()
            })
            .collect()
    }
    fn contains(&self, x: &[T]) -> bool {
        finite(x) && x.iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b) < self.radius * self.radius
    }
    fn frame(&self, p: &[T]) -> Option<Matrix<T>> {
        let w = self.w(p);
        let r = self.radius;
        let (x, y, z) = (p[0], p[1], p[2]);
        Some(vec![
            vec![w / r, z / r, -y / r],
            vec![-z / r, w / r, x / r],
            vec![y / r, -x / r, w / r],
        ])
    }
}

/// `f(t)` and its first two derivatives.
pub type Profile<T> = Arc<dyn Fn(T) -> Result<(T, T, T), OracleError> + Send + Sync>;

/// `dt^2 + f(t)^2 g_F` with coordinates `(t, fiber coordinates)`. The frame
/// is `d/dt` followed by the fiber frame lifted without rescaling, so it is
/// orthogonal but not orthonormal.
#[derive(Clone)]
pub struct Warped<T, C> {
    pub profile: Profile<T>,
    pub domain: Interval<T>,
    pub fiber: C,
}

impl<T: Real, C: fmt::Debug> fmt::Debug for Warped<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Warped")
            .field("domain", &self.domain)
            .field("fiber", &self.fiber)
            .finish()
    }
}

/// Warped chart over `w` restricted to `base`.
pub fn warped_chart<T: Real, C: MetricChart<T>>(
    base: Interval<T>,
    w: &WarpFunction<T>,
    fiber: C,
) -> Result<Warped<T, C>, OracleError> {
    let domain = base
        .intersect(&w.domain)
        .ok_or(OracleError::Warp(WarpError::EmptyDomain))?;
    let w = w.clone();
    Ok(Warped {
        profile: Arc::new(move |t| Ok(w.eval(t)?)),
        domain,
        fiber,
    })
}

impl<T: Real, C: MetricChart<T>> Warped<T, C> {
    pub fn from_fn(
        domain: Interval<T>,
        f: impl Fn(T) -> (T, T, T) + Send + Sync + 'static,
        fiber: C,
    ) -> Self {
        Warped {
            profile: Arc::new(move |t| Ok(f(t))),
            domain,
            fiber,
        }
    }

    fn f(&self, t: T) -> T {
        (self.profile)(t).map(|v| v.0).unwrap_or_else(|_| T::nan())
    }
}

impl<T: Real, C: MetricChart<T>> MetricChart<T> for Warped<T, C> {
    fn name(&self) -> String {
        format!("warped({})", self.fiber.name())
    }
    fn dim(&self) -> usize {
        self.fiber.dim() + 1
    }
    fn metric(&self, x: &[T]) -> Matrix<T> {
        let n = self.dim();
        let f = self.f(x[0]);
        let gf = self.fiber.metric(&x[1..]);
        let mut g = vec![vec![T::zero(); n]; n];
        g[0][0] = T::one();
        for a in 0..n - 1 {
            for b in 0..n - 1 {
                g[a + 1][b + 1] = f * f * gf[a][b];
            }
        }
        g
    }
    fn contains(&self, x: &[T]) -> bool {
        self.domain.contains(x[0]) && self.f(x[0]) > T::zero() && self.fiber.contains(&x[1..])
    }
    fn frame(&self, x: &[T]) -> Option<Matrix<T>> {
        let ff = self.fiber.frame(&x[1..])?;
        let n = self.dim();
        let mut out = vec![vec![T::zero(); n]];
        out[0][0] = T::one();
        for row in ff {
            let mut v = vec![T::zero()];
            v.extend(row);
            out.push(v);
        }
        Some(out)
    }
}

/// Oracle chart for a family's fiber, carrying the family frame.
pub fn family_chart<T: Real>(chart: &Chart<T>) -> Box<dyn MetricChart<T> + Send + Sync> {
    match *chart {
        Chart::R3 => Box::new(FlatR3),
        Chart::H3 => Box::new(Heisenberg {
            frame: HeisenbergFrame::Family,
        }),
        Chart::RxH2 { alpha } => Box::new(RxH2 { alpha }),
    }
}

// ---------------------------------------------------------------------------
// Linear algebra

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let n = m.len();
    let mut a: Matrix<T> = m.clone();
    let mut inv = identity::<T>(n);
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |s, v| s.max(v.abs()))
        .max(T::min_positive_value());
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(a[piv][col].abs() > T::epsilon() * scale) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for k in 0..n {
            a[col][k] = a[col][k] / d;
            inv[col][k] = inv[col][k] / d;
        }
        for r in 0..n {
            if r != col {
                let fct = a[r][col];
                if fct != T::zero() {
                    for k in 0..n {
                        a[r][k] = a[r][k] - fct * a[col][k];
                        inv[r][k] = inv[r][k] - fct * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// `g(u, v)`.
pub fn inner<T: Real>(g: &Matrix<T>, u: &[T], v: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..u.len() {
        for j in 0..v.len() {
            s = s + g[i][j] * u[i] * v[j];
        }
    }
    s
}

/// Orthonormalises `vectors` in the given order.
pub fn gram_schmidt<T: Real>(g: &Matrix<T>, vectors: &Matrix<T>) -> Matrix<T> {
    let mut out: Matrix<T> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for e in &out {
            let c = inner(g, &w, e);
            for k in 0..w.len() {
                w[k] = w[k] - c * e[k];
            }
        }
        let n = inner(g, &w, &w).sqrt();
        out.push(w.into_iter().map(|c| c / n).collect());
    }
    out
}

/// Gram-Schmidt on the coordinate basis, in coordinate order.
pub fn orthonormal_frame<T: Real, C: MetricChart<T> + ?Sized>(chart: &C, x: &[T]) -> Matrix<T> {
    gram_schmidt(&chart.metric(x), &identity(chart.dim()))
}

/// Coefficients of `w` along an orthogonal frame: `g(w, e_a) / g(e_a, e_a)`.
pub fn project<T: Real>(g: &Matrix<T>, w: &[T], frame: &Matrix<T>) -> Vec<T> {
    frame.iter().map(|e| inner(g, w, e) / inner(g, e, e)).collect()
}

fn combine<T: Real>(frame: &Matrix<T>, coeffs: &[T]) -> Vec<T> {
    let n = frame[0].len();
    let mut v = vec![T::zero(); n];
    for (c, e) in coeffs.iter().zip(frame) {
        for k in 0..n {
            v[k] = v[k] + *c * e[k];
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Differencing

/// Central-difference steps: `christoffel` for metric derivatives, `outer`
/// for every derivative taken on top of those.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Steps<T> {
    pub christoffel: T,
    pub outer: T,
}

impl<T: Real> Default for Steps<T> {
    fn default() -> Self {
        Steps {
            christoffel: lit(1e-4),
            outer: lit(1e-3),
        }
    }
}

impl<T: Real> Steps<T> {
    pub fn uniform(h: T) -> Self {
        Steps { christoffel: h, outer: h }
    }
}

fn shifted<T: Real>(x: &[T], k: usize, d: T) -> Vec<T> {
    let mut y = x.to_vec();
    y[k] = y[k] + d;
    y
}

fn check_stencil<T: Real, C: MetricChart<T> + ?Sized>(chart: &C, x: &[T], h: T) -> Result<(), OracleError> {
    if x.len() != chart.dim() {
        return Err(OracleError::Dimension {
            expected: chart.dim(),
            got: x.len(),
        });
    }
    let two = lit::<T>(2.0);
    let ok = chart.contains(x)
        && (0..x.len()).all(|k| chart.contains(&shifted(x, k, two * h)) && chart.contains(&shifted(x, k, -two * h)));
    if ok {
        Ok(())
    } else {
        Err(OracleError::OutOfDomain(to_f64(x)))
    }
}

/// `dg[l][i][j] = d_l g_ij`.
pub fn metric_derivatives<T: Real, C: MetricChart<T> + ?Sized>(chart: &C, x: &[T], h: T) -> Vec<Matrix<T>> {
    let n = chart.dim();
    let two_h = lit::<T>(2.0) * h;
    (0..n)
        .map(|l| {
            let gp = chart.metric(&shifted(x, l, h));
            let gm = chart.metric(&shifted(x, l, -h));
            (0..n)
                .map(|i| (0..n).map(|j| (gp[i][j] - gm[i][j]) / two_h).collect())
                .collect()
        })
        .collect()
}

pub fn christoffel_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    h: T,
) -> Result<Christoffel<T>, OracleError> {
    check_stencil(chart, x, h)?;
    let n = chart.dim();
    let ginv = invert(&chart.metric(x)).ok_or_else(|| OracleError::SingularMetric(to_f64(x)))?;
    let dg = metric_derivatives(chart, x, h);
    let hf = half::<T>();
    let mut gamma = vec![vec![vec![T::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for l in 0..n {
                    s = s + ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                gamma[k][i][j] = hf * s;
                gamma[k][j][i] = hf * s;
            }
        }
    }
    Ok(gamma)
}

/// `(nabla_X Y)(x)` for a vector `X` at `x` and a field `Y`.
pub fn covariant_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    xv: &[T],
    y: &Field<'_, T>,
    steps: Steps<T>,
) -> Result<Vec<T>, OracleError> {
    let n = chart.dim();
    let h = steps.outer;
    check_stencil(chart, x, h)?;
    let gamma = christoffel_fd(chart, x, steps.christoffel)?;
    let y0 = y(x)?;
    let two_h = lit::<T>(2.0) * h;
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        if xv[i] == T::zero() {
            continue;
        }
        let yp = y(&shifted(x, i, h))?;
        let ym = y(&shifted(x, i, -h))?;
        for k in 0..n {
            out[k] = out[k] + xv[i] * (yp[k] - ym[k]) / two_h;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[k] = out[k] + gamma[k][i][j] * xv[i] * y0[j];
            }
        }
    }
    Ok(out)
}

pub fn curvature_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    steps: Steps<T>,
) -> Result<Riemann<T>, OracleError> {
    let n = chart.dim();
    let h = steps.outer;
    check_stencil(chart, x, h + steps.christoffel)?;
    let g0 = christoffel_fd(chart, x, steps.christoffel)?;
    let two_h = lit::<T>(2.0) * h;
    // dg[i] = d_i Gamma
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let gp = christoffel_fd(chart, &shifted(x, i, h), steps.christoffel)?;
        let gm = christoffel_fd(chart, &shifted(x, i, -h), steps.christoffel)?;
        let di: Christoffel<T> = (0..n)
            .map(|l| {
                (0..n)
                    .map(|j| (0..n).map(|k| (gp[l][j][k] - gm[l][j][k]) / two_h).collect())
                    .collect()
            })
            .collect();
        d.push(di);
    }
    let mut r = vec![vec![vec![vec![T::zero(); n]; n]; n]; n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = d[i][l][j][k] - d[j][l][i][k];
                    for m in 0..n {
                        s = s + g0[l][i][m] * g0[m][j][k] - g0[l][j][m] * g0[m][i][k];
                    }
                    r[l][i][j][k] = s;
                }
            }
        }
    }
    Ok(r)
}

/// `R(X, Y) Z` from a curvature tensor.
pub fn curvature_apply<T: Real>(r: &Riemann<T>, xv: &[T], yv: &[T], zv: &[T]) -> Vec<T> {
    let n = r.len();
    (0..n)
        .map(|l| {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        s = s + r[l][i][j][k] * xv[i] * yv[j] * zv[k];
                    }
                }
            }
            s
        })
        .collect()
}

/// `sum_i (nabla_{nabla_Ei Ei} V - nabla_Ei nabla_Ei V)` over the
/// Gram-Schmidt frame field.
pub fn rough_laplacian_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    v: &Field<'_, T>,
    steps: Steps<T>,
) -> Result<Vec<T>, OracleError> {
    let n = chart.dim();
    check_stencil(chart, x, lit::<T>(2.0) * steps.outer + steps.christoffel)?;
    let e0 = orthonormal_frame(chart, x);
    let mut out = vec![T::zero(); n];
    for i in 0..n {
        let ei = |p: &[T]| -> Result<Vec<T>, OracleError> { Ok(orthonormal_frame(chart, p)[i].clone()) };
        let a = covariant_fd(chart, x, &e0[i], &ei, steps)?;
        let t1 = covariant_fd(chart, x, &a, v, steps)?;
        let w = |p: &[T]| -> Result<Vec<T>, OracleError> {
            let e = orthonormal_frame(chart, p);
            covariant_fd(chart, p, &e[i], v, steps)
        };
        let t2 = covariant_fd(chart, x, &e0[i], &w, steps)?;
        for k in 0..n {
            out[k] = out[k] + t1[k] - t2[k];
        }
    }
    Ok(out)
}

pub fn divergence_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    v: &Field<'_, T>,
    steps: Steps<T>,
) -> Result<T, OracleError> {
    let g = chart.metric(x);
    let e = orthonormal_frame(chart, x);
    let mut s = T::zero();
    for ei in &e {
        s = s + inner(&g, &covariant_fd(chart, x, ei, v, steps)?, ei);
    }
    Ok(s)
}

/// Both parts of the tension of `V` as a map into the tangent bundle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensionFd<T> {
    /// `sum_i R(nabla_Ei V, V) Ei`.
    pub s: Vec<T>,
    /// `nabla* nabla V`.
    pub laplacian: Vec<T>,
}

pub fn s_of_v_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    v: &Field<'_, T>,
    steps: Steps<T>,
) -> Result<Vec<T>, OracleError> {
    let n = chart.dim();
    let r = curvature_fd(chart, x, steps)?;
    let e = orthonormal_frame(chart, x);
    let v0 = v(x)?;
    let mut out = vec![T::zero(); n];
    for ei in &e {
        let dv = covariant_fd(chart, x, ei, v, steps)?;
        let term = curvature_apply(&r, &dv, &v0, ei);
        for k in 0..n {
            out[k] = out[k] + term[k];
        }
    }
    Ok(out)
}

pub fn tension_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    v: &Field<'_, T>,
    steps: Steps<T>,
) -> Result<TensionFd<T>, OracleError> {
    Ok(TensionFd {
        s: s_of_v_fd(chart, x, v, steps)?,
        laplacian: rough_laplacian_fd(chart, x, v, steps)?,
    })
}

/// `grad u = g^ij d_j u`.
pub fn gradient_fd<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    x: &[T],
    u: &dyn Fn(&[T]) -> T,
    h: T,
) -> Result<Vec<T>, OracleError> {
    check_stencil(chart, x, h)?;
    let n = chart.dim();
    let ginv = invert(&chart.metric(x)).ok_or_else(|| OracleError::SingularMetric(to_f64(x)))?;
    let two_h = lit::<T>(2.0) * h;
    let du: Vec<T> = (0..n)
        .map(|j| (u(&shifted(x, j, h)) - u(&shifted(x, j, -h))) / two_h)
        .collect();
    Ok((0..n)
        .map(|i| (0..n).fold(T::zero(), |s, j| s + ginv[i][j] * du[j]))
        .collect())
}

/// `e(h) / e(h/2)`; close to 4 for a second-order scheme.
pub fn richardson_ratio<T: Real>(
    err: impl Fn(T) -> Result<T, OracleError>,
    h: T,
) -> Result<T, OracleError> {
    Ok(err(h)? / err(h * half())?)
}

// ---------------------------------------------------------------------------
// Comparisons with the closed forms

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison<T> {
    pub quantity: String,
    pub point: Vec<T>,
    pub closed: Vec<T>,
    pub oracle: Vec<T>,
    pub abs_err: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport<T> {
    pub chart: String,
    pub steps: Steps<T>,
    pub tol: T,
    pub points: usize,
    pub comparisons: Vec<Comparison<T>>,
    pub max_err: T,
    pub verdict: bool,
}

impl<T: Real> OracleReport<T> {
    fn new(chart: String, steps: Steps<T>, tol: T, points: usize, comparisons: Vec<Comparison<T>>) -> Self {
        let max_err = comparisons.iter().fold(T::zero(), |m, c| {
            if c.abs_err.is_nan() || c.abs_err > m {
                c.abs_err
            } else {
                m
            }
        });
        OracleReport {
            chart,
            steps,
            tol,
            points,
            comparisons,
            verdict: max_err <= tol,
            max_err,
        }
    }
}

fn compare<T: Real>(quantity: String, point: &[T], closed: Vec<T>, oracle: Vec<T>) -> Comparison<T> {
    let abs_err = closed
        .iter()
        .zip(&oracle)
        .fold(T::zero(), |m, (a, b)| {
            let e = (*a - *b).abs();
            if e.is_nan() || e > m {
                e
            } else {
                m
            }
        });
    Comparison {
        quantity,
        point: point.to_vec(),
        closed,
        oracle,
        abs_err,
    }
}

fn frame_of<T: Real, C: MetricChart<T> + ?Sized>(chart: &C, x: &[T]) -> Result<Matrix<T>, OracleError> {
    chart.frame(x).ok_or_else(|| OracleError::NoFrame(chart.name()))
}

/// Checks `nabla_ei ej` of the closed-form table against the chart frame,
/// which must realise the algebra.
pub fn connection_check<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    alg: &Algebra<T>,
    points: &[Vec<T>],
    steps: Steps<T>,
    tol: T,
) -> Result<OracleReport<T>, OracleError> {
    let tbl = alg.connection();
    let mut cmp = Vec::new();
    for x in points {
        let fr = frame_of(chart, x)?;
        let g = chart.metric(x);
        for i in 0..3 {
            for j in 0..3 {
                let ej = |p: &[T]| -> Result<Vec<T>, OracleError> { Ok(frame_of(chart, p)?[j].clone()) };
                let w = covariant_fd(chart, x, &fr[i], &ej, steps)?;
                cmp.push(compare(
                    format!("nabla_e{} e{}", i + 1, j + 1),
                    x,
                    tbl.gamma[i][j].to_vec(),
                    project(&g, &w, &fr),
                ));
            }
        }
    }
    Ok(OracleReport::new(chart.name(), steps, tol, points.len(), cmp))
}

/// Rough Laplacian, divergence and `S` of a left-invariant field.
pub fn left_invariant_check<T: Real, C: MetricChart<T> + ?Sized>(
    chart: &C,
    alg: &Algebra<T>,
    v: &Vec3<T>,
    points: &[Vec<T>],
    steps: Steps<T>,
    tol: T,
) -> Result<OracleReport<T>, OracleError> {
    let fiber = alg.fiber();
    let field = |p: &[T]| -> Result<Vec<T>, OracleError> { Ok(combine(&frame_of(chart, p)?, v)) };
    let mut cmp = Vec::new();
    for x in points {
        let fr = frame_of(chart, x)?;
        let g = chart.metric(x);
        let lap = rough_laplacian_fd(chart, x, &field, steps)?;
        cmp.push(compare(
            "rough laplacian".into(),
            x,
            fiber.rough_laplacian(v).to_vec(),
            project(&g, &lap, &fr),
        ));
        cmp.push(compare(
            "divergence".into(),
            x,
            vec![fiber.divergence(v)],
            vec![divergence_fd(chart, x, &field, steps)?],
        ));
        let s = s_of_v_fd(chart, x, &field, steps)?;
        cmp.push(compare("S(V)".into(), x, fiber.fiber_s(v).to_vec(), project(&g, &s, &fr)));
    }
    Ok(OracleReport::new(chart.name(), steps, tol, points.len(), cmp))
}

fn warped_field<'a, T: Real, C: MetricChart<T>>(
    chart: &'a Warped<T, C>,
    phi: &'a PhiSolution<T>,
    coeffs: impl Fn(&[T]) -> Result<Vec3<T>, OracleError> + 'a,
) -> impl Fn(&[T]) -> Result<Vec<T>, OracleError> + 'a {
    move |p: &[T]| {
        let fr = frame_of(&chart.fiber, &p[1..])?;
        let (ph, _, _) = phi.eval(p[0])?;
        let mut out = vec![ph];
        out.extend(combine(&fr, &coeffs(&p[1..])?));
        Ok(out)
    }
}

/// Oracle residuals of `phi d/dt + V2` on the warped chart, in the
/// `(d/dt, e_a)` frame: `(-nabla* nabla V)` horizontal is the closed-form
/// horizontal equation, vertical coefficients match directly.
fn warped_comparisons<T: Real, C: MetricChart<T>>(
    chart: &Warped<T, C>,
    v: &Field<'_, T>,
    x: &[T],
    closed_h: (T, Vec3<T>),
    closed_s: (T, Vec3<T>),
    steps: Steps<T>,
) -> Result<Vec<Comparison<T>>, OracleError> {
    let fr = frame_of(chart, x)?;
    let g = chart.metric(x);
    let t = tension_fd(chart, x, v, steps)?;
    let lap = project(&g, &t.laplacian, &fr);
    let s = project(&g, &t.s, &fr);
    let mut ch = vec![-closed_h.0];
    ch.extend(closed_h.1);
    let mut cs = vec![closed_s.0];
    cs.extend(closed_s.1);
    Ok(vec![
        compare("rough laplacian".into(), x, ch, lap),
        compare("S(V)".into(), x, cs, s),
    ])
}

/// Cross-checks the harmonicity system and `S(V)` of a left-invariant
/// problem on the warped chart over `fiber`, whose frame must realise the
/// problem's algebra.
pub fn warped_left_invariant_check<T: Real, C: MetricChart<T> + Clone>(
    p: &HarmonicityProblem<T>,
    fiber: &C,
    points: &[Vec<T>],
    steps: Steps<T>,
    tol: T,
) -> Result<OracleReport<T>, OracleError> {
    let domain = p.domain().ok_or(HarmonicityError::EmptyDomain)?;
    let chart = warped_chart(domain, &p.warp, fiber.clone())?;
    let v2 = p.fiber_data().v;
    let field = warped_field(&chart, &p.phi, move |_| Ok(v2));
    let mut cmp = Vec::new();
    for x in points {
        let h = assemble_system(p, x[0])?;
        let s = s_of_v(p, x[0])?;
        cmp.extend(warped_comparisons(&chart, &field, x, h, (s.horizontal, s.vertical), steps)?);
    }
    Ok(OracleReport::new(chart.name(), steps, tol, points.len(), cmp))
}

/// Same as [`warped_left_invariant_check`] for a chart family.
pub fn warped_family_check<T: Real>(
    field: &ChartField<T>,
    warp: &WarpFunction<T>,
    phi: &PhiSolution<T>,
    points: &[Vec<T>],
    steps: Steps<T>,
    tol: T,
) -> Result<OracleReport<T>, OracleError> {
    let domain = warp
        .domain
        .intersect(&phi.domain)
        .ok_or(HarmonicityError::EmptyDomain)?;
    let chart = warped_chart(domain, warp, family_chart(&field.chart))?;
    let vf = warped_field(&chart, phi, |q: &[T]| Ok(field.value(&[q[0], q[1], q[2]])));
    let mut cmp = Vec::new();
    for x in points {
        let q = [x[1], x[2], x[3]];
        let fd = field.fiber_data(&q)?;
        let b = crate::harmonicity::BasePoint::at(warp, phi, x[0])?;
        let h = crate::harmonicity::assemble_from(&fd, 3, &b);
        let s = crate::tension::tension_from(&fd, 3, &b);
        cmp.extend(warped_comparisons(&chart, &vf, x, h, (s.horizontal, s.vertical), steps)?);
    }
    Ok(OracleReport::new(chart.name(), steps, tol, points.len(), cmp))
}

// ---------------------------------------------------------------------------
// Warped-product identities

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaItem<T> {
    pub lemma: u8,
    pub item: u8,
    pub statement: &'static str,
    pub max_err: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport<T> {
    pub chart: String,
    pub steps: Steps<T>,
    pub points: usize,
    pub tol: T,
    pub items: Vec<LemmaItem<T>>,
    pub verdict: bool,
}

fn lift<T: Real>(v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero()];
    out.extend_from_slice(v);
    out
}

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

fn axpy<T: Real>(a: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(p, q)| a * *p + *q).collect()
}

/// Checks the connection and curvature identities of `dt^2 + f^2 g_F` with
/// lifted fiber frame fields, using the fiber chart's own finite-difference
/// connection and curvature for the fiber terms. `fiber_fn` is the function
/// whose gradient is tested.
pub fn lemma_checks<T: Real, C: MetricChart<T> + Clone>(
    chart: &Warped<T, C>,
    fiber_fn: &dyn Fn(&[T]) -> T,
    points: &[Vec<T>],
    steps: Steps<T>,
    tol: T,
) -> Result<LemmaReport<T>, OracleError> {
    const STATEMENTS: [&str; 12] = [
        "grad f = (f', 0)",
        "nabla_dt dt = 0",
        "nabla_X2 Y2 = nabla^F_X2 Y2 - f g_F(X2,Y2) grad f",
        "nabla_X2 dt = (f'/f) X2",
        "nabla_dt Y2 = (f'/f) Y2",
        "grad(h o sigma) = grad^F h / f^2",
        "R(dt,dt)dt = 0",
        "R(dt,dt)Z2 = 0",
        "R(X2,Y2)dt = 0",
        "R(X2,dt)dt = -(f''/f) X2",
        "R(dt,Y2)Z2 = -f f'' g_F(Y2,Z2) dt",
        "R(X2,Y2)Z2 = R^F(X2,Y2)Z2 + f'^2 (g_F(X2,Z2) Y2 - g_F(Y2,Z2) X2)",
    ];
    let fiber = &chart.fiber;
    let m = fiber.dim();
    let mut err = vec![T::zero(); 12];
    let mut bump = |k: usize, e: T| {
        if e.is_nan() || e > err[k] {
            err[k] = e;
        }
    };
    let dt = {
        let mut v = vec![T::zero(); m + 1];
        v[0] = T::one();
        v
    };
    let dt_field = |_: &[T]| -> Result<Vec<T>, OracleError> { Ok(dt.clone()) };
    for x in points {
        let (f, f1, f2) = (chart.profile)(x[0])?;
        let q = &x[1..];
        let ff = frame_of(fiber, q)?;
        let gf = fiber.metric(q);
        let lifted: Vec<Vec<T>> = ff.iter().map(|e| lift(e)).collect();
        let lifted_field = |a: usize| {
            move |p: &[T]| -> Result<Vec<T>, OracleError> { Ok(lift(&frame_of(fiber, &p[1..])?[a])) }
        };

        let prof = |p: &[T]| (chart.profile)(p[0]).map(|v| v.0).unwrap_or_else(|_| T::nan());
        let gfv = gradient_fd(chart, x, &prof, steps.christoffel)?;
        bump(0, dist(&gfv, &axpy(f1, &dt, &vec![T::zero(); m + 1])));
        bump(1, dist(&covariant_fd(chart, x, &dt, &dt_field, steps)?, &vec![T::zero(); m + 1]));
        for a in 0..m {
            let xa = &lifted[a];
            bump(
                3,
                dist(&covariant_fd(chart, x, xa, &dt_field, steps)?, &xa.iter().map(|c| f1 / f * *c).collect::<Vec<_>>()),
            );
            bump(
                4,
                dist(&covariant_fd(chart, x, &dt, &lifted_field(a), steps)?, &xa.iter().map(|c| f1 / f * *c).collect::<Vec<_>>()),
            );
            for b in 0..m {
                let fiber_b = |p: &[T]| -> Result<Vec<T>, OracleError> { Ok(frame_of(fiber, p)?[b].clone()) };
                let nf = covariant_fd(fiber, q, &ff[a], &fiber_b, steps)?;
                let want = axpy(-f * inner(&gf, &ff[a], &ff[b]) * f1, &dt, &lift(&nf));
                bump(2, dist(&covariant_fd(chart, x, xa, &lifted_field(b), steps)?, &want));
            }
        }
        let gh = gradient_fd(chart, x, &|p: &[T]| fiber_fn(&p[1..]), steps.christoffel)?;
        let ghf = gradient_fd(fiber, q, fiber_fn, steps.christoffel)?;
        bump(5, dist(&gh, &lift(&ghf.iter().map(|c| *c / (f * f)).collect::<Vec<_>>())));

        let r = curvature_fd(chart, x, steps)?;
        let rf = curvature_fd(fiber, q, steps)?;
        let zero = vec![T::zero(); m + 1];
        bump(6, dist(&curvature_apply(&r, &dt, &dt, &dt), &zero));
        for a in 0..m {
            let xa = &lifted[a];
            bump(7, dist(&curvature_apply(&r, &dt, &dt, xa), &zero));
            bump(
                9,
                dist(&curvature_apply(&r, xa, &dt, &dt), &xa.iter().map(|c| -f2 / f * *c).collect::<Vec<_>>()),
            );
            for b in 0..m {
                let yb = &lifted[b];
                bump(8, dist(&curvature_apply(&r, xa, yb, &dt), &zero));
                bump(
                    10,
                    dist(&curvature_apply(&r, &dt, xa, yb), &axpy(-f * f2 * inner(&gf, &ff[a], &ff[b]), &dt, &zero)),
                );
                for c in 0..m {
                    let zc = &lifted[c];
                    let rfv = lift(&curvature_apply(&rf, &ff[a], &ff[b], &ff[c]));
                    let want = axpy(
                        f1 * f1 * inner(&gf, &ff[a], &ff[c]),
                        yb,
                        &axpy(-f1 * f1 * inner(&gf, &ff[b], &ff[c]), xa, &rfv),
                    );
                    bump(11, dist(&curvature_apply(&r, xa, yb, zc), &want));
                }
            }
        }
    }
    let items: Vec<LemmaItem<T>> = err
        .into_iter()
        .enumerate()
        .map(|(k, e)| LemmaItem {
            lemma: if k < 6 { 1 } else { 2 },
            item: (k % 6 + 1) as u8,
            statement: STATEMENTS[k],
            max_err: e,
        })
        .collect();
    let verdict = items.iter().all(|i| i.max_err <= tol);
    Ok(LemmaReport {
        chart: chart.name(),
        steps,
        points: points.len(),
        tol,
        items,
        verdict,
    })
}
