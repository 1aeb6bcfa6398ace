//! A small expression language for partial losses and an exact
//! second-order derivative evaluator.
//!
//! Grammar (standard precedence, `^` binds tightest and is right
//! associative, unary minus binds looser than `^`):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          exponent must be constant
//! primary := number | var | func '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//! var     := 't1' .. 't9'                   index must be < n
//! func    := 'exp' | 'ln' | 'sqrt'
//! ```
//!
//! Expressions are evaluated on chart coordinates `t1..t{n-1}`; the last
//! probability is written out explicitly, e.g. `-ln(1-t1-t2)`.

mod ast;
mod jet;
mod parser;

pub use ast::Expr;
pub use jet::{Jet2, JetN};
pub use parser::parse;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Exact value, first and second derivative of a one-variable expression.
pub fn eval_jet2(e: &Expr, t: f64) -> Result<Jet2> {
    if e.max_var().is_some_and(|v| v > 0) {
        return Err(Error::Eval("eval_jet2 needs a single-variable expression".into()));
    }
    e.eval_along(&[t], &[1.0])
}

/// Exact value, gradient and Hessian at `s`.
///
/// The gradient and the diagonal come from univariate sweeps along `e_i`;
/// off-diagonal entries use `d^2/dh^2 e(s + h(e_i + e_j)) = H_ii + 2 H_ij + H_jj`.
pub fn eval_jet_n(e: &Expr, s: &[f64]) -> Result<JetN> {
    let m = s.len();
    if let Some(v) = e.max_var() {
        if v >= m {
            return Err(Error::Eval(format!(
                "expression uses t{} but only {m} chart coordinates were given",
                v + 1
            )));
        }
    }
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    let mut value = None;
    let mut dir = vec![0.0; m];
    for i in 0..m {
        dir[i] = 1.0;
        let j = e.eval_along(s, &dir)?;
        dir[i] = 0.0;
        grad[i] = j.d1;
        hess[(i, i)] = j.d2;
        value.get_or_insert(j.v);
    }
    for i in 0..m {
        for k in (i + 1)..m {
            dir[i] = 1.0;
            dir[k] = 1.0;
            let j = e.eval_along(s, &dir)?;
            dir[i] = 0.0;
            dir[k] = 0.0;
            let off = 0.5 * (j.d2 - hess[(i, i)] - hess[(k, k)]);
            hess[(i, k)] = off;
            hess[(k, i)] = off;
        }
    }
    Ok(JetN {
        v: value.unwrap_or(0.0),
        grad,
        hess,
    })
}
