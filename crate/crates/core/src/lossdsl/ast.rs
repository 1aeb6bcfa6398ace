use std::fmt;

use super::jet::Jet2;
use crate::error::{Error, Result};

/// Expression tree over chart coordinates. `Var(i)` is the 0-based index of
/// the coordinate written `t{i+1}` in source text.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, c: f64) -> Self {
        Expr::Pow(Box::new(a), c)
    }

    pub fn ln(a: Expr) -> Self {
        Expr::Ln(Box::new(a))
    }

    pub fn sqrt(a: Expr) -> Self {
        Expr::Sqrt(Box::new(a))
    }

    pub fn exp(a: Expr) -> Self {
        Expr::Exp(Box::new(a))
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Ln(a) | Expr::Sqrt(a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Constant value if the expression has no variables.
    pub fn fold_constant(&self) -> Option<f64> {
        if self.max_var().is_some() {
            return None;
        }
        self.eval_value(&[]).ok()
    }

    /// Jet of `h -> e(s + h * dir)` at `h = 0`.
    pub fn eval_along(&self, s: &[f64], dir: &[f64]) -> Result<Jet2> {
        Ok(match self {
            Expr::Const(c) => Jet2::constant(*c),
            Expr::Var(i) => {
                let x = *s
                    .get(*i)
                    .ok_or_else(|| Error::Eval(format!("t{} is not bound", i + 1)))?;
                Jet2::new(x, dir[*i], 0.0)
            }
            Expr::Neg(a) => -a.eval_along(s, dir)?,
            Expr::Add(a, b) => a.eval_along(s, dir)? + b.eval_along(s, dir)?,
            Expr::Sub(a, b) => a.eval_along(s, dir)? - b.eval_along(s, dir)?,
            Expr::Mul(a, b) => a.eval_along(s, dir)? * b.eval_along(s, dir)?,
            Expr::Div(a, b) => a.eval_along(s, dir)?.checked_div(b.eval_along(s, dir)?)?,
            Expr::Pow(a, c) => a.eval_along(s, dir)?.powf(*c)?,
            Expr::Exp(a) => a.eval_along(s, dir)?.exp()?,
            Expr::Ln(a) => a.eval_along(s, dir)?.ln()?,
            Expr::Sqrt(a) => a.eval_along(s, dir)?.sqrt()?,
        })
    }

    /// Plain floating-point evaluation, no derivatives.
    pub fn eval_value(&self, s: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *s
                .get(*i)
                .ok_or_else(|| Error::Eval(format!("t{} is not bound", i + 1)))?,
            Expr::Neg(a) => -a.eval_value(s)?,
            Expr::Add(a, b) => a.eval_value(s)? + b.eval_value(s)?,
            Expr::Sub(a, b) => a.eval_value(s)? - b.eval_value(s)?,
            Expr::Mul(a, b) => a.eval_value(s)? * b.eval_value(s)?,
            Expr::Div(a, b) => {
                let d = b.eval_value(s)?;
                if d == 0.0 {
                    return Err(Error::Eval("division by zero".into()));
                }
                a.eval_value(s)? / d
            }
            Expr::Pow(a, c) => a.eval_value(s)?.powf(*c),
            Expr::Exp(a) => a.eval_value(s)?.exp(),
            Expr::Ln(a) => {
                let x = a.eval_value(s)?;
                if !(x > 0.0) {
                    return Err(Error::Eval(format!("ln of non-positive value {x}")));
                }
                x.ln()
            }
            Expr::Sqrt(a) => {
                let x = a.eval_value(s)?;
                if x < 0.0 {
                    return Err(Error::Eval(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval("non-finite value".into()))
        }
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

/// Fully parenthesized rendering; `parse(e.to_string())` prints identically.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(i) => write!(f, "t{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, c) => {
                write!(f, "({a}^")?;
                fmt_const(*c, f)?;
                write!(f, ")")
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}
