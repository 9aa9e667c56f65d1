//! Small expression trees over the chart coordinates `x, y, z` with exact
//! symbolic differentiation.

use crate::scalar::Real;
use serde::{Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<T> {
    Const(T),
    /// Coordinate index: 0 = x, 1 = y, 2 = z.
    Var(usize),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    Neg(Box<Expr<T>>),
    Sin(Box<Expr<T>>),
    Cos(Box<Expr<T>>),
    Exp(Box<Expr<T>>),
    Ln(Box<Expr<T>>),
    /// Constant real exponent.
    Pow(Box<Expr<T>>, T),
}

impl<T: Real> Expr<T> {
    pub fn c(v: T) -> Self {
        Expr::Const(v)
    }
    pub fn x() -> Self {
        Expr::Var(0)
    }
    pub fn y() -> Self {
        Expr::Var(1)
    }
    pub fn z() -> Self {
        Expr::Var(2)
    }
    pub fn zero() -> Self {
        Expr::Const(T::zero())
    }

    fn as_const(&self) -> Option<T> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(T::zero())
    }

    pub fn sin(self) -> Self {
        match self.as_const() {
            Some(v) => Expr::Const(v.sin()),
            None => Expr::Sin(Box::new(self)),
        }
    }
    pub fn cos(self) -> Self {
        match self.as_const() {
            Some(v) => Expr::Const(v.cos()),
            None => Expr::Cos(Box::new(self)),
        }
    }
    pub fn exp(self) -> Self {
        match self.as_const() {
            Some(v) => Expr::Const(v.exp()),
            None => Expr::Exp(Box::new(self)),
        }
    }
    pub fn ln(self) -> Self {
        match self.as_const() {
            Some(v) => Expr::Const(v.ln()),
            None => Expr::Ln(Box::new(self)),
        }
    }
    pub fn powf(self, e: T) -> Self {
        if e == T::zero() {
            return Expr::Const(T::one());
        }
        if e == T::one() {
            return self;
        }
        match self.as_const() {
            Some(v) => Expr::Const(v.powf(e)),
            None => Expr::Pow(Box::new(self), e),
        }
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => p[*i],
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Neg(a) => -a.eval(p),
            Expr::Sin(a) => a.eval(p).sin(),
            Expr::Cos(a) => a.eval(p).cos(),
            Expr::Exp(a) => a.eval(p).exp(),
            Expr::Ln(a) => a.eval(p).ln(),
            Expr::Pow(a, e) => a.eval(p).powf(*e),
        }
    }

    /// Partial derivative in coordinate `var`.
    pub fn diff(&self, var: usize) -> Self {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => Expr::Const(if *i == var { T::one() } else { T::zero() }),
            Expr::Add(a, b) => a.diff(var) + b.diff(var),
            Expr::Mul(a, b) => a.diff(var) * (**b).clone() + (**a).clone() * b.diff(var),
            Expr::Div(a, b) => {
                (a.diff(var) * (**b).clone() - (**a).clone() * b.diff(var)) / ((**b).clone() * (**b).clone())
            }
            Expr::Neg(a) => -a.diff(var),
            Expr::Sin(a) => (**a).clone().cos() * a.diff(var),
            Expr::Cos(a) => -((**a).clone().sin() * a.diff(var)),
            Expr::Exp(a) => (**a).clone().exp() * a.diff(var),
            Expr::Ln(a) => a.diff(var) / (**a).clone(),
            Expr::Pow(a, e) => Expr::Const(*e) * (**a).clone().powf(*e - T::one()) * a.diff(var),
        }
    }

    /// Laplacian in flat coordinates, `sum_k d^2/dx_k^2`.
    pub fn flat_laplacian(&self) -> Self {
        (0..3).fold(Expr::zero(), |acc, k| acc + self.diff(k).diff(k))
    }
}

impl<T: Real> Add for Expr<T> {
    type Output = Expr<T>;
    fn add(self, o: Self) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a + b),
            (Some(a), _) if a == T::zero() => o,
            (_, Some(b)) if b == T::zero() => self,
            _ => Expr::Add(Box::new(self), Box::new(o)),
        }
    }
}

impl<T: Real> Sub for Expr<T> {
    type Output = Expr<T>;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Mul for Expr<T> {
    type Output = Expr<T>;
    fn mul(self, o: Self) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a * b),
            (Some(a), _) | (_, Some(a)) if a == T::zero() => Expr::zero(),
            (Some(a), _) if a == T::one() => o,
            (_, Some(b)) if b == T::one() => self,
            _ => Expr::Mul(Box::new(self), Box::new(o)),
        }
    }
}

impl<T: Real> Div for Expr<T> {
    type Output = Expr<T>;
    fn div(self, o: Self) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Expr::Const(a / b),
            (Some(a), _) if a == T::zero() => Expr::zero(),
            (_, Some(b)) if b == T::one() => self,
            _ => Expr::Div(Box::new(self), Box::new(o)),
        }
    }
}

impl<T: Real> Neg for Expr<T> {
    type Output = Expr<T>;
    fn neg(self) -> Self {
        match self {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(a) => *a,
            other => Expr::Neg(Box::new(other)),
        }
    }
}

impl<T: Real + fmt::Display> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "{}", ["x", "y", "z"][*i]),
            Expr::Add(a, b) => match &**b {
                Expr::Neg(inner) => write!(f, "({a} - {inner})"),
                _ => write!(f, "({a} + {b})"),
            },
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Pow(a, e) => write!(f, "({a})^({e})"),
        }
    }
}

impl<T: Real + fmt::Display> Serialize for Expr<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
