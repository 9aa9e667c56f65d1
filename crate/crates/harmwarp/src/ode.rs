//! Dormand-Prince 5(4) integrator and quintic Hermite dense output.
//!
//! The right-hand side returns `None` for states where it is undefined (a
//! warp leaving its domain, say); such steps are rejected and retried with a
//! smaller step, exactly like steps whose result fails the caller's
//! admissibility test. When the step size underflows the run stops and the
//! trajectory so far is returned, which is how finite-time collapse of a
//! solution is detected.

use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: T,
    pub h_max: T,
    /// Relative step floor; below `h_min_rel * max(1, |t|)` the run stops.
    pub h_min_rel: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-12),
            atol: lit(1e-14),
            h_init: lit(1e-3),
            h_max: lit(0.25),
            h_min_rel: lit(1e-13),
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Reached,
    /// Step size underflowed while the admissibility test kept failing.
    Collapsed,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T, const N: usize> {
    pub t: Vec<T>,
    pub y: Vec<[T; N]>,
    pub stop: Stop,
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn stage<T: Real, const N: usize, F>(rhs: &F, t: T, y: &[T; N], h: T) -> Option<([T; N], [T; N])>
where
    F: Fn(T, &[T; N]) -> Option<[T; N]>,
{
    let mut k = [[T::zero(); N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = lit::<T>(A[s][j]);
            if a == T::zero() {
                continue;
            }
            for i in 0..N {
                ys[i] = ys[i] + h * a * kj[i];
            }
        }
        k[s] = rhs(t + lit::<T>(C[s]) * h, &ys)?;
        if k[s].iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    let mut y5 = *y;
    let mut err = [T::zero(); N];
    for s in 0..7 {
        let b5 = lit::<T>(B5[s]);
        let db = lit::<T>(B5[s] - B4[s]);
        for i in 0..N {
            y5[i] = y5[i] + h * b5 * k[s][i];
            err[i] = err[i] + h * db * k[s][i];
        }
    }
    Some((y5, err))
}

/// Integrates from `t0` towards `t_end` (either direction).
pub fn integrate<T: Real, const N: usize, F, G>(
    rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    opts: &OdeOptions<T>,
    admissible: G,
) -> Trajectory<T, N>
where
    F: Fn(T, &[T; N]) -> Option<[T; N]>,
    G: Fn(&[T; N]) -> bool,
{
    let dir = if t_end >= t0 { T::one() } else { -T::one() };
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.min(opts.h_max);
    let mut out = Trajectory {
        t: vec![t0],
        y: vec![y0],
        stop: Stop::Reached,
    };
    let mut steps = 0usize;
    while (t_end - t) * dir > T::zero() {
        steps += 1;
        if steps > opts.max_steps {
            out.stop = Stop::StepLimit;
            return out;
        }
        let remaining = (t_end - t).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let floor = opts.h_min_rel * t.abs().max(T::one());
        let attempt = stage(&rhs, t, &y, dir * h);
        let (accept, factor) = match attempt {
            Some((y5, err)) if admissible(&y5) => {
                let mut e = T::zero();
                for i in 0..N {
                    let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                    e = e.max((err[i] / sc).abs());
                }
                if e <= T::one() {
                    t = if last { t_end } else { t + dir * h };
                    y = y5;
                    out.t.push(t);
                    out.y.push(y);
                }
                let fac = if e == T::zero() {
                    lit(5.0)
                } else {
                    (lit::<T>(0.9) * e.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
                };
                (e <= T::one(), fac)
            }
            _ => (false, lit(0.25)),
        };
        h = (h * factor).min(opts.h_max);
        if !accept && h < floor {
            out.stop = Stop::Collapsed;
            return out;
        }
    }
    out
}

/// Value and derivative of the quintic Hermite interpolant on `[ta, tb]`
/// matching value, first and second derivative at both ends.
pub fn quintic_hermite<T: Real>(ta: T, tb: T, a: [T; 3], b: [T; 3], t: T) -> (T, T) {
    let h = tb - ta;
    let u = (t - ta) / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let c = |x: f64| lit::<T>(x);
    let h0 = T::one() - c(10.0) * u3 + c(15.0) * u4 - c(6.0) * u5;
    let h1 = u - c(6.0) * u3 + c(8.0) * u4 - c(3.0) * u5;
    let h2 = c(0.5) * u2 - c(1.5) * u3 + c(1.5) * u4 - c(0.5) * u5;
    let h3 = c(0.5) * u3 - u4 + c(0.5) * u5;
    let h4 = -c(4.0) * u3 + c(7.0) * u4 - c(3.0) * u5;
    let h5 = c(10.0) * u3 - c(15.0) * u4 + c(6.0) * u5;
    let d0 = -c(30.0) * u2 + c(60.0) * u3 - c(30.0) * u4;
    let d1 = T::one() - c(18.0) * u2 + c(32.0) * u3 - c(15.0) * u4;
    let d2 = u - c(4.5) * u2 + c(6.0) * u3 - c(2.5) * u4;
    let d3 = c(1.5) * u2 - c(4.0) * u3 + c(2.5) * u4;
    let d4 = -c(12.0) * u2 + c(28.0) * u3 - c(15.0) * u4;
    let d5 = c(30.0) * u2 - c(60.0) * u3 + c(30.0) * u4;
    let v = h0 * a[0] + h * h1 * a[1] + h * h * h2 * a[2] + h * h * h3 * b[2] + h * h4 * b[1] + h5 * b[0];
    let dv = (d0 * a[0] + h * d1 * a[1] + h * h * d2 * a[2] + h * h * d3 * b[2] + h * d4 * b[1] + d5 * b[0]) / h;
    (v, dv)
}

/// Index `k` with `ts[k] <= t <= ts[k+1]` for sorted `ts`.
pub fn bracket<T: Real>(ts: &[T], t: T) -> Option<usize> {
    let n = ts.len();
    if n < 2 || t < ts[0] || t > ts[n - 1] {
        return None;
    }
    let k = ts.partition_point(|x| *x <= t);
    Some(k.saturating_sub(1).min(n - 2))
}
