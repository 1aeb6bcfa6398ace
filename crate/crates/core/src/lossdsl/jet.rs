use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Second-order truncated Taylor number: value, first and second derivative
/// with respect to one real parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    pub const fn constant(v: f64) -> Self {
        Self::new(v, 0.0, 0.0)
    }

    /// The independent variable at `v` moving with unit speed.
    pub const fn variable(v: f64) -> Self {
        Self::new(v, 1.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(a * self.v, a * self.d1, a * self.d2)
    }

    /// Composes an outer jet (taken at `inner.v`) with `inner`.
    pub fn compose(outer: Jet2, inner: Jet2) -> Self {
        Self::new(
            outer.v,
            outer.d1 * inner.d1,
            outer.d2 * inner.d1 * inner.d1 + outer.d1 * inner.d2,
        )
    }

    pub fn exp(self) -> Result<Self> {
        let e = self.v.exp();
        checked(Self::new(e, e * self.d1, e * (self.d2 + self.d1 * self.d1)), "exp")
    }

    pub fn ln(self) -> Result<Self> {
        if !(self.v > 0.0) {
            return Err(Error::Eval(format!("ln of non-positive value {}", self.v)));
        }
        let r = 1.0 / self.v;
        checked(
            Self::new(self.v.ln(), self.d1 * r, self.d2 * r - self.d1 * self.d1 * r * r),
            "ln",
        )
    }

    pub fn sqrt(self) -> Result<Self> {
        if !(self.v > 0.0) {
            return Err(Error::Eval(format!("sqrt of non-positive value {}", self.v)));
        }
        let s = self.v.sqrt();
        checked(
            Self::new(
                s,
                self.d1 / (2.0 * s),
                self.d2 / (2.0 * s) - self.d1 * self.d1 / (4.0 * s * s * s),
            ),
            "sqrt",
        )
    }

    /// `self^c` for a constant exponent.
    pub fn powf(self, c: f64) -> Result<Self> {
        let x = self.v;
        if c == 0.0 {
            return Ok(Self::constant(1.0));
        }
        if c == 1.0 {
            return Ok(self);
        }
        let integral = c.fract() == 0.0;
        if x < 0.0 && !integral {
            return Err(Error::Eval(format!("non-integer power {c} of negative value {x}")));
        }
        if x == 0.0 && c < 2.0 && !(integral && c > 0.0) {
            return Err(Error::Eval(format!("power {c} is not differentiable at 0")));
        }
        let p0 = x.powf(c);
        let p1 = if c == 2.0 { x } else { x.powf(c - 1.0) };
        let p2 = if c == 2.0 { 1.0 } else { x.powf(c - 2.0) };
        checked(
            Self::new(
                p0,
                c * p1 * self.d1,
                c * p1 * self.d2 + c * (c - 1.0) * p2 * self.d1 * self.d1,
            ),
            "pow",
        )
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.v == 0.0 {
            return Err(Error::Eval("division by zero".into()));
        }
        checked(self / rhs, "division")
    }
}

fn checked(j: Jet2, op: &str) -> Result<Jet2> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::Eval(format!("non-finite result in {op}")))
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, r: Jet2) -> Jet2 {
        Jet2::new(self.v + r.v, self.d1 + r.d1, self.d2 + r.d2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, r: Jet2) -> Jet2 {
        Jet2::new(self.v - r.v, self.d1 - r.d1, self.d2 - r.d2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, r: Jet2) -> Jet2 {
        Jet2::new(
            self.v * r.v,
            self.d1 * r.v + self.v * r.d1,
            self.d2 * r.v + 2.0 * self.d1 * r.d1 + self.v * r.d2,
        )
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, r: Jet2) -> Jet2 {
        let q = self.v / r.v;
        let q1 = (self.d1 - q * r.d1) / r.v;
        let q2 = (self.d2 - 2.0 * q1 * r.d1 - q * r.d2) / r.v;
        Jet2::new(q, q1, q2)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v, -self.d1, -self.d2)
    }
}

/// Value, gradient and Hessian of a scalar function of `m` chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct JetN {
    pub v: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl JetN {
    pub fn zeros(m: usize) -> Self {
        Self {
            v: 0.0,
            grad: DVector::zeros(m),
            hess: DMatrix::zeros(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn from_jet2(j: Jet2) -> Self {
        Self {
            v: j.v,
            grad: DVector::from_element(1, j.d1),
            hess: DMatrix::from_element(1, 1, j.d2),
        }
    }

    /// Binary view; only meaningful when `dim() == 1`.
    pub fn as_jet2(&self) -> Jet2 {
        Jet2::new(self.v, self.grad[0], self.hess[(0, 0)])
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            v: a * self.v,
            grad: &self.grad * a,
            hess: &self.hess * a,
        }
    }
}
