//! Three-dimensional metric Lie algebras in Milnor normal form.
//!
//! Everything here acts on left-invariant fields written in the orthonormal
//! Milnor basis, so covariant derivatives and curvature reduce to finite sums
//! over a constant connection table.

use crate::scalar::{abs, half, lit, Scalar};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

pub type Vec3<T> = [T; 3];
pub type Table3<T> = [[[T; 3]; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Lie3Error {
    #[error("lambda[{index}] = {value:e} lies inside the ambiguous band around zero")]
    AmbiguousSigns { index: usize, value: f64 },
    #[error("need alpha + delta > 0 and alpha >= delta, got alpha = {alpha}, delta = {delta}")]
    InvalidNonUnimodular { alpha: f64, delta: f64 },
    #[error("field is not of unit length: |V|^2 = {0}")]
    NotUnit(f64),
}

pub fn zero3<T: Scalar>() -> Vec3<T> {
    [T::zero(); 3]
}

pub fn basis<T: Scalar>(i: usize) -> Vec3<T> {
    let mut v = zero3();
    v[i] = T::one();
    v
}

pub fn add3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3<T: Scalar>(s: T, a: &Vec3<T>) -> Vec3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn dot3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn max_abs3<T: Scalar>(a: &Vec3<T>) -> T {
    let mut m = T::zero();
    for x in a {
        let y = abs(*x);
        if y > m {
            m = y;
        }
    }
    m
}

fn zero_table<T: Scalar>() -> Table3<T> {
    [[[T::zero(); 3]; 3]; 3]
}

/// Unimodular algebra: `[e2,e3] = l1 e1`, `[e3,e1] = l2 e2`, `[e1,e2] = l3 e3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Unimodular<T> {
    pub lambda: Vec3<T>,
}

impl<T: Scalar> Unimodular<T> {
    pub fn new(l1: T, l2: T, l3: T) -> Self {
        Self { lambda: [l1, l2, l3] }
    }

    pub fn mu(&self) -> Vec3<T> {
        mu_constants(self)
    }

    pub fn brackets(&self) -> Brackets<T> {
        let [l1, l2, l3] = self.lambda;
        let mut c = zero_table();
        c[1][2][0] = l1;
        c[2][1][0] = -l1;
        c[2][0][1] = l2;
        c[0][2][1] = -l2;
        c[0][1][2] = l3;
        c[1][0][2] = -l3;
        Brackets { c }
    }
}

/// Non-unimodular algebra: `[e1,e2] = a e2 + b e3`, `[e1,e3] = -b e2 + d e3`,
/// `[e2,e3] = 0`, with `a + d > 0` and `a >= d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonUnimodular<T> {
    alpha: T,
    beta: T,
    delta: T,
}

impl<T: Scalar> NonUnimodular<T> {
    pub fn new(alpha: T, beta: T, delta: T) -> Result<Self, Lie3Error> {
        if alpha + delta <= T::zero() || alpha < delta {
            return Err(Lie3Error::InvalidNonUnimodular {
                alpha: crate::scalar::to_f64(alpha),
                delta: crate::scalar::to_f64(delta),
            });
        }
        Ok(Self { alpha, beta, delta })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn brackets(&self) -> Brackets<T> {
        let (a, b, d) = (self.alpha, self.beta, self.delta);
        let mut c = zero_table();
        c[0][1][1] = a;
        c[0][1][2] = b;
        c[1][0][1] = -a;
        c[1][0][2] = -b;
        c[0][2][1] = -b;
        c[0][2][2] = d;
        c[2][0][1] = b;
        c[2][0][2] = -d;
        Brackets { c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algebra<T> {
    Unimodular(Unimodular<T>),
    NonUnimodular(NonUnimodular<T>),
}

impl<T: Scalar> Algebra<T> {
    pub fn brackets(&self) -> Brackets<T> {
        match self {
            Algebra::Unimodular(u) => u.brackets(),
            Algebra::NonUnimodular(n) => n.brackets(),
        }
    }

    pub fn connection(&self) -> ConnectionTable<T> {
        match self {
            Algebra::Unimodular(u) => connection_unimodular(u),
            Algebra::NonUnimodular(n) => connection_nonunimodular(n),
        }
    }

    pub fn fiber(&self) -> Fiber<T> {
        Fiber {
            connection: self.connection(),
            brackets: self.brackets(),
        }
    }

    pub fn is_unimodular(&self) -> bool {
        matches!(self, Algebra::Unimodular(_))
    }
}

/// Structure constants: `c[i][j][k] = <[e_i, e_j], e_k>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Brackets<T> {
    pub c: Table3<T>,
}

impl<T: Scalar> Brackets<T> {
    pub fn bracket(&self, x: &Vec3<T>, y: &Vec3<T>) -> Vec3<T> {
        let mut out = zero3();
        for i in 0..3 {
            for j in 0..3 {
                let w = x[i] * y[j];
                if w == T::zero() {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o = *o + w * self.c[i][j][k];
                }
            }
        }
        out
    }
}

/// `gamma[i][j][k] = <nabla_{e_i} e_j, e_k>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConnectionTable<T> {
    pub gamma: Table3<T>,
}

pub fn mu_constants<T: Scalar>(alg: &Unimodular<T>) -> Vec3<T> {
    let [l1, l2, l3] = alg.lambda;
    let s = (l1 + l2 + l3) * half::<T>();
    [s - l1, s - l2, s - l3]
}

/// Unimodular groups by the sign pattern of the structure constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GroupTag {
    #[serde(rename = "SU2_SO3")]
    Su2So3,
    #[serde(rename = "SL2R_O12")]
    Sl2rO12,
    #[serde(rename = "E2")]
    E2,
    #[serde(rename = "E11")]
    E11,
    #[serde(rename = "H3")]
    H3,
    #[serde(rename = "R3")]
    R3,
}

impl GroupTag {
    pub fn id(&self) -> &'static str {
        match self {
            GroupTag::Su2So3 => "SU2_SO3",
            GroupTag::Sl2rO12 => "SL2R_O12",
            GroupTag::E2 => "E2",
            GroupTag::E11 => "E11",
            GroupTag::H3 => "H3",
            GroupTag::R3 => "R3",
        }
    }

    pub fn group_name(&self) -> &'static str {
        match self {
            GroupTag::Su2So3 => "SU(2) or SO(3)",
            GroupTag::Sl2rO12 => "SL(2,R) or O(1,2)",
            GroupTag::E2 => "E(2)",
            GroupTag::E11 => "E(1,1)",
            GroupTag::H3 => "H3",
            GroupTag::R3 => "R+R+R",
        }
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// The six rows of the sign table as (sign pattern, group).
pub fn table1() -> [(&'static str, GroupTag); 6] {
    [
        ("+,+,+", GroupTag::Su2So3),
        ("+,+,-", GroupTag::Sl2rO12),
        ("+,+,0", GroupTag::E2),
        ("+,0,-", GroupTag::E11),
        ("+,0,0", GroupTag::H3),
        ("0,0,0", GroupTag::R3),
    ]
}

/// Classifies by sign pattern up to reordering and a global sign flip (which
/// amounts to reversing the orientation of the Milnor frame).
pub fn group_type<T: Scalar>(alg: &Unimodular<T>, zero_tol: T) -> Result<GroupTag, Lie3Error> {
    let band = lit::<T>(10.0) * zero_tol;
    let (mut pos, mut neg) = (0usize, 0usize);
    for (index, l) in alg.lambda.iter().enumerate() {
        let a = abs(*l);
        if a <= zero_tol {
            continue;
        }
        if a < band {
            return Err(Lie3Error::AmbiguousSigns {
                index,
                value: crate::scalar::to_f64(*l),
            });
        }
        if *l > T::zero() {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    if neg > pos {
        std::mem::swap(&mut pos, &mut neg);
    }
    Ok(match (pos, neg) {
        (3, 0) => GroupTag::Su2So3,
        (2, 1) => GroupTag::Sl2rO12,
        (2, 0) => GroupTag::E2,
        (1, 1) => GroupTag::E11,
        (1, 0) => GroupTag::H3,
        _ => GroupTag::R3,
    })
}

pub fn connection_unimodular<T: Scalar>(alg: &Unimodular<T>) -> ConnectionTable<T> {
    let [m1, m2, m3] = mu_constants(alg);
    let mut g = zero_table();
    g[0][1][2] = m1;
    g[0][2][1] = -m1;
    g[1][0][2] = -m2;
    g[1][2][0] = m2;
    g[2][0][1] = m3;
    g[2][1][0] = -m3;
    ConnectionTable { gamma: g }
}

pub fn connection_nonunimodular<T: Scalar>(alg: &NonUnimodular<T>) -> ConnectionTable<T> {
    let (a, b, d) = (alg.alpha, alg.beta, alg.delta);
    let mut g = zero_table();
    g[0][1][2] = b;
    g[0][2][1] = -b;
    g[1][0][1] = -a;
    g[1][1][0] = a;
    g[2][0][2] = -d;
    g[2][2][0] = d;
    ConnectionTable { gamma: g }
}

pub fn covariant_derivative<T: Scalar>(tbl: &ConnectionTable<T>, x: &Vec3<T>, y: &Vec3<T>) -> Vec3<T> {
    let mut out = zero3();
    for i in 0..3 {
        for j in 0..3 {
            let w = x[i] * y[j];
            if w == T::zero() {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o = *o + w * tbl.gamma[i][j][k];
            }
        }
    }
    out
}

/// `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`.
pub fn curvature<T: Scalar>(
    tbl: &ConnectionTable<T>,
    br: &Brackets<T>,
    x: &Vec3<T>,
    y: &Vec3<T>,
    z: &Vec3<T>,
) -> Vec3<T> {
    let nyz = covariant_derivative(tbl, y, z);
    let nxz = covariant_derivative(tbl, x, z);
    let a = covariant_derivative(tbl, x, &nyz);
    let b = covariant_derivative(tbl, y, &nxz);
    let c = covariant_derivative(tbl, &br.bracket(x, y), z);
    sub3(&sub3(&a, &b), &c)
}

/// Rough Laplacian by the defining double sum over the frame.
pub fn rough_laplacian<T: Scalar>(tbl: &ConnectionTable<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = zero3();
    for i in 0..3 {
        let ei = basis::<T>(i);
        let nii = covariant_derivative(tbl, &ei, &ei);
        let first = covariant_derivative(tbl, &nii, v);
        let inner = covariant_derivative(tbl, &ei, v);
        let second = covariant_derivative(tbl, &ei, &inner);
        out = add3(&out, &sub3(&first, &second));
    }
    out
}

pub fn divergence<T: Scalar>(tbl: &ConnectionTable<T>, v: &Vec3<T>) -> T {
    let mut s = T::zero();
    for i in 0..3 {
        s = s + covariant_derivative(tbl, &basis(i), v)[i];
    }
    s
}

/// `S(V) = sum_i R(nabla_{e_i} V, V) e_i`.
pub fn fiber_s<T: Scalar>(tbl: &ConnectionTable<T>, br: &Brackets<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = zero3();
    for i in 0..3 {
        let ei = basis::<T>(i);
        let d = covariant_derivative(tbl, &ei, v);
        out = add3(&out, &curvature(tbl, br, &d, v, &ei));
    }
    out
}

/// `sum_i R(e_i, V) e_i`, the curvature trace appearing in the vertical tension.
pub fn curvature_trace<T: Scalar>(tbl: &ConnectionTable<T>, br: &Brackets<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = zero3();
    for i in 0..3 {
        let ei = basis::<T>(i);
        out = add3(&out, &curvature(tbl, br, &ei, v, &ei));
    }
    out
}

/// Connection and brackets of one algebra; the object the other modules hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fiber<T> {
    pub connection: ConnectionTable<T>,
    pub brackets: Brackets<T>,
}

impl<T: Scalar> Fiber<T> {
    pub fn nabla(&self, x: &Vec3<T>, y: &Vec3<T>) -> Vec3<T> {
        covariant_derivative(&self.connection, x, y)
    }
    pub fn curvature(&self, x: &Vec3<T>, y: &Vec3<T>, z: &Vec3<T>) -> Vec3<T> {
        curvature(&self.connection, &self.brackets, x, y, z)
    }
    pub fn rough_laplacian(&self, v: &Vec3<T>) -> Vec3<T> {
        rough_laplacian(&self.connection, v)
    }
    pub fn divergence(&self, v: &Vec3<T>) -> T {
        divergence(&self.connection, v)
    }
    pub fn fiber_s(&self, v: &Vec3<T>) -> Vec3<T> {
        fiber_s(&self.connection, &self.brackets, v)
    }
    pub fn curvature_trace(&self, v: &Vec3<T>) -> Vec3<T> {
        curvature_trace(&self.connection, &self.brackets, v)
    }
}

/// Closed-form rough Laplacian, kept as a cross-check of [`rough_laplacian`].
pub fn rough_laplacian_closed<T: Scalar>(alg: &Algebra<T>, v: &Vec3<T>) -> Vec3<T> {
    let [a, b, c] = *v;
    match alg {
        Algebra::Unimodular(u) => {
            let [m1, m2, m3] = u.mu();
            [
                (m2 * m2 + m3 * m3) * a,
                (m1 * m1 + m3 * m3) * b,
                (m1 * m1 + m2 * m2) * c,
            ]
        }
        Algebra::NonUnimodular(n) => {
            let (al, be, de) = (n.alpha, n.beta, n.delta);
            [
                a * (al * al + de * de),
                b * (al * al + be * be) - c * be * (al + de),
                c * (be * be + de * de) + b * be * (al + de),
            ]
        }
    }
}

/// Closed-form `S(V)`, kept as a cross-check of [`fiber_s`].
pub fn fiber_s_closed<T: Scalar>(alg: &Algebra<T>, v: &Vec3<T>) -> Vec3<T> {
    let [a, b, c] = *v;
    match alg {
        Algebra::Unimodular(u) => {
            let [m1, m2, m3] = u.mu();
            let a1 = m2 * m2 * (m3 - m1) + m3 * m3 * (m1 - m2);
            let a2 = m1 * m1 * (m2 - m3) + m3 * m3 * (m1 - m2);
            let a3 = m1 * m1 * (m2 - m3) + m2 * m2 * (m3 - m1);
            [a1 * b * c, a2 * a * c, a3 * a * b]
        }
        Algebra::NonUnimodular(n) => {
            let (al, be, de) = (n.alpha, n.beta, n.delta);
            let al2 = al * al;
            let de2 = de * de;
            let be2 = be * be;
            [
                -al2 * al * (a * a + b * b) - de2 * de * (a * a + c * c) + be * (al2 - de2) * b * c,
                a * (al2 * be * c - al * de2 * b + be2 * (al - de) * b),
                a * (-be * de2 * b - al2 * de * c - be2 * (al - de) * c),
            ]
        }
    }
}

/// Closed-form `nabla_V V` for left-invariant `V`.
pub fn nabla_vv_closed<T: Scalar>(alg: &Algebra<T>, v: &Vec3<T>) -> Vec3<T> {
    let [a, b, c] = *v;
    match alg {
        Algebra::Unimodular(u) => {
            let [m1, m2, m3] = u.mu();
            [b * c * (m2 - m3), a * c * (m3 - m1), a * b * (m1 - m2)]
        }
        Algebra::NonUnimodular(n) => {
            let (al, be, de) = (n.alpha, n.beta, n.delta);
            [
                b * b * al + c * c * de,
                -a * c * be - a * b * al,
                a * b * be - a * c * de,
            ]
        }
    }
}

/// Left-invariant field with coefficients in the Milnor basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeftInvariantField<T> {
    pub coeffs: Vec3<T>,
}

impl<T: Scalar> LeftInvariantField<T> {
    pub fn new(coeffs: Vec3<T>) -> Self {
        Self { coeffs }
    }

    /// Accepts only fields with `|a^2+b^2+c^2 - 1| <= tol`.
    pub fn unit(coeffs: Vec3<T>, tol: T) -> Result<Self, Lie3Error> {
        let n2 = dot3(&coeffs, &coeffs);
        if abs(n2 - T::one()) > tol {
            return Err(Lie3Error::NotUnit(crate::scalar::to_f64(n2)));
        }
        Ok(Self { coeffs })
    }

    pub fn norm2(&self) -> T {
        dot3(&self.coeffs, &self.coeffs)
    }
}
