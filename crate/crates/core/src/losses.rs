//! Loss registry, loss algebra and properness/fairness verdicts.
//!
//! A [`Loss`] stores one expression per outcome over the standard chart
//! coordinates together with the chart its local expression is read in.
//! Built-in losses are expression trees too, so every loss gets exact jets
//! from the same evaluator.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom2::chart::Reparametrization;
use crate::lossdsl::{self, Expr, Jet2, JetN};
use crate::numerics::{boundary_limit, boundary_offsets, min_eigenvalue, Limit};
use crate::simplex::{ChartPoint, Grid, DEFAULT_MARGIN};

/// Normalized alignment tolerance of the first-order properness test.
pub const TOL_ALIGN: f64 = 1e-8;
/// Relative tolerance of the second-order test: `tol = TOL_PD_REL * (1 + |D^2 L|_F)`.
pub const TOL_PD_REL: f64 = 1e-10;
/// Boundary values at most this large count as zero for fairness.
pub const TOL_FAIR: f64 = 1e-6;

/// The chart a loss's local expression is written in.
#[derive(Clone)]
pub enum Chart {
    Standard,
    Reparam(Arc<dyn Reparametrization>),
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Standard => write!(f, "Standard"),
            Chart::Reparam(r) => write!(f, "Reparam({})", r.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Builtin(String),
    Dsl,
    Derived { op: String, operands: Vec<String> },
}

/// A loss `l: simplex -> R^n` with exact chart derivatives.
#[derive(Debug, Clone)]
pub struct Loss {
    name: String,
    n: usize,
    partials: Vec<Expr>,
    chart: Chart,
    provenance: Provenance,
}

/// Local expression of a loss at one chart point: jets of the chart map
/// `Phi_k` and of the partial losses `l~_k`.
#[derive(Debug, Clone)]
pub struct Local {
    pub x: Vec<f64>,
    pub phi: Vec<JetN>,
    pub partials: Vec<JetN>,
}

impl Local {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn phi_values(&self) -> Vec<f64> {
        self.phi.iter().map(|j| j.v).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.partials.iter().map(|j| j.v).collect()
    }

    /// Tangent vector `d l~ / d x_i` in `R^n`.
    pub fn tangent(&self, i: usize) -> DVector<f64> {
        DVector::from_iterator(self.partials.len(), self.partials.iter().map(|j| j.grad[i]))
    }

    /// Jacobian `n x m`, row `k` is the gradient of `l~_k`.
    pub fn jacobian(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(self.partials.len(), m, |k, i| self.partials[k].grad[i])
    }

    /// `sum_k d_i l~_k * Phi_k` for each chart direction.
    pub fn alignment(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.partials
                    .iter()
                    .zip(&self.phi)
                    .map(|(l, p)| l.grad[i] * p.v)
                    .sum()
            })
            .collect()
    }

    /// Conditional-risk Hessian `[D^2 L~]_ij = sum_k d_ij l~_k * Phi_k`.
    pub fn risk_hessian(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for (l, p) in self.partials.iter().zip(&self.phi) {
            h += &l.hess * p.v;
        }
        (&h + h.transpose()) * 0.5
    }

    /// Jet of the Bayes risk along the chart, `x -> <l~(x), Phi(x)>`.
    pub fn bayes_jet(&self) -> JetN {
        let m = self.dim();
        let mut out = JetN::zeros(m);
        for (l, p) in self.partials.iter().zip(&self.phi) {
            out.v += l.v * p.v;
            out.grad += &l.grad * p.v + &p.grad * l.v;
            out.hess += &l.hess * p.v
                + &p.hess * l.v
                + &l.grad * p.grad.transpose()
                + &p.grad * l.grad.transpose();
        }
        out
    }
}

fn prob_expr(j: usize, n: usize) -> Expr {
    if j + 1 < n {
        Expr::var(j)
    } else {
        (0..n - 1).fold(Expr::Const(1.0), |acc, i| Expr::sub(acc, Expr::var(i)))
    }
}

fn log_partials(n: usize) -> Vec<Expr> {
    (0..n).map(|i| Expr::neg(Expr::ln(prob_expr(i, n)))).collect()
}

fn brier_partials(n: usize) -> Vec<Expr> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let indicator = if i == j { 1.0 } else { 0.0 };
                    Expr::pow(Expr::sub(Expr::Const(indicator), prob_expr(j, n)), 2.0)
                })
                .reduce(Expr::add)
                .expect("n >= 2")
        })
        .collect()
}

fn spherical_partials(n: usize) -> Vec<Expr> {
    let norm = Expr::sqrt(
        (0..n)
            .map(|j| Expr::pow(prob_expr(j, n), 2.0))
            .reduce(Expr::add)
            .expect("n >= 2"),
    );
    (0..n)
        .map(|i| Expr::sub(Expr::Const(1.0), Expr::div(prob_expr(i, n), norm.clone())))
        .collect()
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 3] = ["log", "brier", "spherical"];

/// Built-in losses: `log` (`-ln p_i`), `brier` (`sum_j ([i=j] - p_j)^2`) and
/// `spherical` (`1 - p_i / |p|_2`). The only parameter is `n` (default 2).
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Loss> {
    let mut n = 2usize;
    for (k, v) in params {
        match k.as_str() {
            "n" => {
                if !(v.fract() == 0.0 && *v >= 2.0 && *v <= 10.0) {
                    return Err(Error::BadParams(format!("n must be an integer in 2..=10, got {v}")));
                }
                n = *v as usize;
            }
            other => return Err(Error::BadParams(format!("unknown parameter '{other}'"))),
        }
    }
    let partials = match name {
        "log" => log_partials(n),
        "brier" => brier_partials(n),
        "spherical" => spherical_partials(n),
        other => return Err(Error::UnknownLoss(other.to_string())),
    };
    Ok(Loss {
        name: name.to_string(),
        n,
        partials,
        chart: Chart::Standard,
        provenance: Provenance::Builtin(name.to_string()),
    })
}

/// Shorthand for [`builtin`] with only `n` set.
pub fn builtin_n(name: &str, n: usize) -> Result<Loss> {
    let mut p = BTreeMap::new();
    p.insert("n".to_string(), n as f64);
    builtin(name, &p)
}

/// Loss whose partial `i` is the expression `exprs[i]` over `t1..t{n-1}`.
pub fn from_dsl<S: AsRef<str>>(exprs: &[S], n: usize) -> Result<Loss> {
    if exprs.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: exprs.len(),
        });
    }
    let partials = exprs
        .iter()
        .enumerate()
        .map(|(i, src)| {
            lossdsl::parse(src.as_ref(), n).map_err(|e| match e {
                Error::Parse { position, message, .. } => Error::Parse {
                    position,
                    message,
                    partial: Some(i),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Loss {
        name: "dsl".into(),
        n,
        partials,
        chart: Chart::Standard,
        provenance: Provenance::Dsl,
    })
}

/// `a * h` for `a > 0`.
pub fn scale(h: &Loss, a: f64) -> Result<Loss> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::BadParams(format!("scale factor must be positive, got {a}")));
    }
    Ok(h.derived(
        format!("scale({}, {a})", h.name),
        "scale",
        vec![h.name.clone(), a.to_string()],
        h.partials
            .iter()
            .map(|e| Expr::mul(Expr::Const(a), e.clone()))
            .collect(),
    ))
}

/// `h + c`.
pub fn translate(h: &Loss, c: &[f64]) -> Result<Loss> {
    if c.len() != h.n {
        return Err(Error::DimMismatch {
            expected: h.n,
            got: c.len(),
        });
    }
    Ok(h.derived(
        format!("translate({}, {c:?})", h.name),
        "translate",
        vec![h.name.clone(), format!("{c:?}")],
        h.partials
            .iter()
            .zip(c)
            .map(|(e, &ci)| Expr::add(e.clone(), Expr::Const(ci)))
            .collect(),
    ))
}

/// `h1 + h2`; both must use the standard chart.
pub fn add(h1: &Loss, h2: &Loss) -> Result<Loss> {
    if h1.n != h2.n {
        return Err(Error::DimMismatch {
            expected: h1.n,
            got: h2.n,
        });
    }
    if !h1.is_standard() || !h2.is_standard() {
        return Err(Error::BadParams("add needs losses in the standard chart".into()));
    }
    Ok(h1.derived(
        format!("add({}, {})", h1.name, h2.name),
        "add",
        vec![h1.name.clone(), h2.name.clone()],
        h1.partials
            .iter()
            .zip(&h2.partials)
            .map(|(a, b)| Expr::add(a.clone(), b.clone()))
            .collect(),
    ))
}

/// `outer - eta * inner`, possibly leaving the nonnegative orthant.
pub fn residual(outer: &Loss, inner: &Loss, eta: f64) -> Result<Loss> {
    if outer.n != inner.n {
        return Err(Error::DimMismatch {
            expected: outer.n,
            got: inner.n,
        });
    }
    if !outer.is_standard() || !inner.is_standard() {
        return Err(Error::BadParams("residual needs losses in the standard chart".into()));
    }
    Ok(outer.derived(
        format!("{} - {eta}*{}", outer.name, inner.name),
        "residual",
        vec![outer.name.clone(), inner.name.clone(), eta.to_string()],
        outer
            .partials
            .iter()
            .zip(&inner.partials)
            .map(|(a, b)| Expr::sub(a.clone(), Expr::mul(Expr::Const(eta), b.clone())))
            .collect(),
    ))
}

impl Loss {
    fn derived(&self, name: String, op: &str, operands: Vec<String>, partials: Vec<Expr>) -> Loss {
        Loss {
            name,
            n: self.n,
            partials,
            chart: self.chart.clone(),
            provenance: Provenance::Derived {
                op: op.to_string(),
                operands,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn partials(&self) -> &[Expr] {
        &self.partials
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.chart, Chart::Standard)
    }

    /// The same loss read in the standard chart.
    pub fn in_standard_chart(&self) -> Loss {
        let mut out = self.clone();
        out.chart = Chart::Standard;
        out
    }

    /// The same loss read in the chart `Phi_std o r`; binary losses only.
    pub fn reparametrized(&self, r: Arc<dyn Reparametrization>) -> Result<Loss> {
        if self.n != 2 {
            return Err(Error::BadParams("reparametrization is only supported for n = 2".into()));
        }
        if !self.is_standard() {
            return Err(Error::BadParams("loss is already reparametrized".into()));
        }
        let mut out = self.clone();
        out.name = format!("{} in {}", self.name, r.name());
        out.chart = Chart::Reparam(r);
        Ok(out)
    }

    /// Chart coordinates of the loss matching a standard-chart point.
    pub fn chart_coords(&self, p: &ChartPoint) -> Result<Vec<f64>> {
        match &self.chart {
            Chart::Standard => Ok(p.coords().to_vec()),
            Chart::Reparam(r) => Ok(vec![r.from_std(p.coords()[0])?]),
        }
    }

    /// Binary version of [`Loss::chart_coords`].
    pub fn chart_coord(&self, t: f64) -> Result<f64> {
        match &self.chart {
            Chart::Standard => Ok(t),
            Chart::Reparam(r) => r.from_std(t),
        }
    }

    /// Standard-chart coordinates of a chart point of this loss.
    pub fn std_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.chart {
            Chart::Standard => Ok(x.to_vec()),
            Chart::Reparam(r) => Ok(vec![r.to_std(x[0])?.v]),
        }
    }

    /// Local expression and chart map with exact derivatives at `x`.
    pub fn local(&self, x: &[f64]) -> Result<Local> {
        let m = self.n - 1;
        if x.len() != m {
            return Err(Error::DimMismatch {
                expected: m,
                got: x.len(),
            });
        }
        match &self.chart {
            Chart::Standard => {
                let phi = (0..self.n)
                    .map(|k| {
                        let mut j = JetN::zeros(m);
                        if k < m {
                            j.v = x[k];
                            j.grad[k] = 1.0;
                        } else {
                            j.v = 1.0 - x.iter().sum::<f64>();
                            j.grad.fill(-1.0);
                        }
                        j
                    })
                    .collect();
                let partials = self
                    .partials
                    .iter()
                    .map(|e| lossdsl::eval_jet_n(e, x))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Local {
                    x: x.to_vec(),
                    phi,
                    partials,
                })
            }
            Chart::Reparam(r) => {
                let tj = r.to_std(x[0])?;
                if !tj.is_finite() {
                    return Err(Error::Eval(format!("chart map is not finite at {}", x[0])));
                }
                let phi1 = tj;
                let phi2 = Jet2::constant(1.0) - tj;
                let partials = self
                    .partials
                    .iter()
                    .map(|e| {
                        let inner = lossdsl::eval_jet2(e, tj.v)?;
                        Ok(JetN::from_jet2(Jet2::compose(inner, tj)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Local {
                    x: x.to_vec(),
                    phi: vec![JetN::from_jet2(phi1), JetN::from_jet2(phi2)],
                    partials,
                })
            }
        }
    }

    /// Binary local expression: jets of `(l~_1, l~_2)` and `(Phi_1, Phi_2)`.
    pub fn local2(&self, v: f64) -> Result<([Jet2; 2], [Jet2; 2])> {
        if self.n != 2 {
            return Err(Error::DimMismatch {
                expected: 2,
                got: self.n,
            });
        }
        let l = self.local(&[v])?;
        Ok((
            [l.partials[0].as_jet2(), l.partials[1].as_jet2()],
            [l.phi[0].as_jet2(), l.phi[1].as_jet2()],
        ))
    }

    /// Partial loss values at chart point `x`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.std_coords(x)?;
        self.partials.iter().map(|e| e.eval_value(&s)).collect()
    }

    /// Partial loss values at a probability vector.
    pub fn values_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.n {
            return Err(Error::DimMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let s = &p[..self.n - 1];
        self.partials.iter().map(|e| e.eval_value(s)).collect()
    }

    /// Smallest partial loss value on a grid (codomain check).
    pub fn min_value_on(&self, grid: &Grid) -> Result<f64> {
        let mut min = f64::INFINITY;
        for p in &grid.points {
            let x = self.chart_coords(p)?;
            for v in self.values(&x)? {
                min = min.min(v);
            }
        }
        Ok(min)
    }
}

/// First- and second-order properness diagnostics at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointProperness {
    /// Max over chart directions of the normalized alignment residual.
    pub alignment: f64,
    /// Smallest eigenvalue of `D^2 L~`.
    pub min_eig: f64,
    /// Threshold `min_eig` must exceed.
    pub tol_pd: f64,
}

impl PointProperness {
    pub fn aligned(&self) -> bool {
        self.alignment <= TOL_ALIGN
    }

    pub fn positive(&self) -> bool {
        self.min_eig > self.tol_pd
    }
}

pub fn point_properness(h: &Loss, x: &[f64]) -> Result<PointProperness> {
    let l = h.local(x)?;
    Ok(local_properness(&l))
}

pub(crate) fn local_properness(l: &Local) -> PointProperness {
    let phi = DVector::from_vec(l.phi_values());
    let raw = l.alignment();
    let alignment = raw
        .iter()
        .enumerate()
        .map(|(i, a)| a.abs() / (1.0 + l.tangent(i).norm() * phi.norm()))
        .fold(0.0, f64::max);
    let d2 = l.risk_hessian();
    PointProperness {
        alignment,
        min_eig: min_eigenvalue(&d2),
        tol_pd: TOL_PD_REL * (1.0 + d2.norm()),
    }
}

/// Raw first-order residuals `<d_i l~(x), Phi(x)>`.
pub fn alignment_residual(h: &Loss, x: &[f64]) -> Result<Vec<f64>> {
    Ok(h.local(x)?.alignment())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProperFailure {
    Alignment,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Standard-chart coordinates of the failing grid point.
    pub point: Vec<f64>,
    pub reason: ProperFailure,
    pub alignment: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropernessVerdict {
    pub proper: bool,
    pub worst_alignment: f64,
    pub min_second_order: f64,
    /// First failing point in grid order.
    pub witness: Option<Witness>,
}

/// Grid test of the two properness conditions: the probability vector is
/// normal to the loss surface, and the conditional-risk Hessian is positive
/// definite.
pub fn check_proper(h: &Loss, grid: &Grid) -> Result<PropernessVerdict> {
    if grid.n != h.n {
        return Err(Error::DimMismatch {
            expected: h.n,
            got: grid.n,
        });
    }
    let samples: Vec<Result<PointProperness>> = grid
        .points
        .par_iter()
        .map(|p| point_properness(h, &h.chart_coords(p)?))
        .collect();
    let mut worst_alignment: f64 = 0.0;
    let mut min_second_order = f64::INFINITY;
    let mut witness = None;
    for (p, s) in grid.points.iter().zip(samples) {
        let s = s?;
        worst_alignment = worst_alignment.max(s.alignment);
        min_second_order = min_second_order.min(s.min_eig);
        if witness.is_none() && !(s.aligned() && s.positive()) {
            witness = Some(Witness {
                point: p.coords().to_vec(),
                reason: if s.aligned() {
                    ProperFailure::SecondOrder
                } else {
                    ProperFailure::Alignment
                },
                alignment: s.alignment,
                min_eig: s.min_eig,
            });
        }
    }
    Ok(PropernessVerdict {
        proper: witness.is_none(),
        worst_alignment,
        min_second_order,
        witness,
    })
}

/// Fails with `NotProper` unless [`check_proper`] passes.
pub fn require_proper(h: &Loss, grid: &Grid) -> Result<PropernessVerdict> {
    let v = check_proper(h, grid)?;
    if let Some(w) = &v.witness {
        return Err(Error::NotProper(format!(
            "{} fails the {} test at t = {:?}",
            h.name(),
            match w.reason {
                ProperFailure::Alignment => "alignment",
                ProperFailure::SecondOrder => "second-order",
            },
            w.point
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessVerdict {
    pub fair: bool,
    /// Limit of `l_1` as `p -> (1, 0)`.
    pub limit_outcome1: Limit,
    /// Limit of `l_2` as `p -> (0, 1)`.
    pub limit_outcome2: Limit,
}

/// Boundary values of a binary loss where each partial should vanish: a loss
/// is fair when predicting an outcome with certainty costs nothing if that
/// outcome occurs. Limits are extrapolated from `t = eps * 2^-k`.
pub fn fairness_check(h: &Loss) -> Result<FairnessVerdict> {
    if h.n != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: h.n,
        });
    }
    let offsets = boundary_offsets(DEFAULT_MARGIN);
    let sample = |t: f64, k: usize| -> f64 {
        h.chart_coord(t)
            .and_then(|x| h.values(&[x]))
            .map(|v| v[k])
            .unwrap_or(f64::INFINITY)
    };
    let s1: Vec<f64> = offsets.iter().map(|&e| sample(1.0 - e, 0)).collect();
    let s2: Vec<f64> = offsets.iter().map(|&e| sample(e, 1)).collect();
    let limit_outcome1 = boundary_limit(&s1);
    let limit_outcome2 = boundary_limit(&s2);
    let small = |l: Limit| matches!(l, Limit::Finite(v) if v.abs() <= TOL_FAIR);
    Ok(FairnessVerdict {
        fair: small(limit_outcome1) && small(limit_outcome2),
        limit_outcome1,
        limit_outcome2,
    })
}

/// Conditional risk `<l(q), p>` of predicting `q` when `p` is true.
pub fn conditional_risk(h: &Loss, p: &[f64], q: &[f64]) -> Result<f64> {
    let lq = h.values_at(q)?;
    Ok(lq.iter().zip(p).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log2() -> Loss {
        builtin_n("log", 2).unwrap()
    }

    #[test]
    fn builtin_values() {
        let ln2 = 2f64.ln();
        let v = log2().values(&[0.5]).unwrap();
        assert!((v[0] - ln2).abs() < 1e-15 && (v[1] - ln2).abs() < 1e-15);
        let v = builtin_n("brier", 2).unwrap().values(&[0.5]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
        let v = builtin_n("spherical", 2).unwrap().values(&[0.5]).unwrap();
        let s = 1.0 - 1.0 / 2f64.sqrt();
        assert!((v[0] - s).abs() < 1e-15 && (v[1] - s).abs() < 1e-15);
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(builtin("hinge", &BTreeMap::new()), Err(Error::UnknownLoss(_))));
        let mut p = BTreeMap::new();
        p.insert("n".to_string(), 1.5);
        assert!(matches!(builtin("log", &p), Err(Error::BadParams(_))));
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), 1.0);
        assert!(matches!(builtin("log", &p), Err(Error::BadParams(_))));
    }

    #[test]
    fn algebra_examples() {
        let l = log2();
        let v = scale(&l, 0.5).unwrap().values(&[0.5]).unwrap();
        assert!((v[0] - 0.346574).abs() < 1e-6);
        let v = translate(&l, &[1.0, 0.0]).unwrap().values(&[0.5]).unwrap();
        assert!((v[0] - 1.0 - std::f64::consts::LN_2).abs() < 1e-6 && (v[1] - std::f64::consts::LN_2).abs() < 1e-6);
        let sum = add(&scale(&l, 0.4).unwrap(), &scale(&l, 0.6).unwrap()).unwrap();
        for t in Grid::new(2, 101, 1e-3).unwrap().scalars() {
            let a = sum.values(&[t]).unwrap();
            let b = l.values(&[t]).unwrap();
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() <= 1e-14 * (1.0 + b[k].abs()));
            }
        }
        assert!(matches!(
            add(&l, &builtin_n("log", 3).unwrap()),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(translate(&l, &[1.0]), Err(Error::DimMismatch { .. })));
        assert!(scale(&l, 0.0).is_err());
    }

    #[test]
    fn algebra_jets_are_pointwise_combinations() {
        let l = builtin_n("spherical", 3).unwrap();
        let b = builtin_n("brier", 3).unwrap();
        let x = [0.2, 0.5];
        let jl = l.local(&x).unwrap().partials;
        let jb = b.local(&x).unwrap().partials;
        let js = add(&scale(&l, 2.5).unwrap(), &translate(&b, &[1.0, -2.0, 3.0]).unwrap())
            .unwrap()
            .local(&x)
            .unwrap()
            .partials;
        for k in 0..3 {
            let want_v = 2.5 * jl[k].v + jb[k].v + [1.0, -2.0, 3.0][k];
            assert!((js[k].v - want_v).abs() < 1e-14 * (1.0 + want_v.abs()));
            let g = &jl[k].grad * 2.5 + &jb[k].grad;
            assert!((&js[k].grad - g).norm() < 1e-13);
            let hh = &jl[k].hess * 2.5 + &jb[k].hess;
            assert!((&js[k].hess - hh).norm() < 1e-13);
        }
    }

    #[test]
    fn dsl_losses() {
        let d = from_dsl(&["-ln(t1)", "-ln(1-t1)"], 2).unwrap();
        let l = log2();
        for t in Grid::default_for(2).unwrap().scalars() {
            assert_eq!(d.values(&[t]).unwrap(), l.values(&[t]).unwrap());
        }
        match from_dsl(&["-ln(t1)", "-ln(1-t1"], 2) {
            Err(Error::Parse { partial, .. }) => assert_eq!(partial, Some(1)),
            other => panic!("{other:?}"),
        }
        assert!(from_dsl(&["t1", "1-t1"], 2).is_ok());
    }

    #[test]
    fn properness_examples() {
        let g = Grid::default_for(2).unwrap();
        assert!(check_proper(&log2(), &g).unwrap().proper);

        let swapped = from_dsl(&["-ln(1-t1)", "-ln(t1)"], 2).unwrap();
        let v = check_proper(&swapped, &g).unwrap();
        assert!(!v.proper);
        let w = v.witness.unwrap();
        assert_eq!(w.reason, ProperFailure::Alignment);
        assert_eq!(w.point, vec![g.points[0].coords()[0]]);
        let r = alignment_residual(&swapped, &[0.25]).unwrap();
        assert!((r[0] - (1.0 / 3.0 - 3.0)).abs() < 1e-14);

        let linear = from_dsl(&["t1", "1-t1"], 2).unwrap();
        assert!(!check_proper(&linear, &g).unwrap().proper);

        let g3 = Grid::default_for(3).unwrap();
        assert!(check_proper(&builtin_n("brier", 3).unwrap(), &g3).unwrap().proper);
    }

    #[test]
    fn properness_stable_across_resolutions() {
        let swapped = from_dsl(&["-ln(1-t1)", "-ln(t1)"], 2).unwrap();
        for res in [101, 1001] {
            let g = Grid::new(2, res, DEFAULT_MARGIN).unwrap();
            assert!(check_proper(&log2(), &g).unwrap().proper);
            assert!(!check_proper(&swapped, &g).unwrap().proper);
        }
    }

    #[test]
    fn fairness_examples() {
        assert!(fairness_check(&log2()).unwrap().fair);
        let shifted = translate(&log2(), &[1.0, 0.0]).unwrap();
        let v = fairness_check(&shifted).unwrap();
        assert!(!v.fair);
        assert!((v.limit_outcome1.value() - 1.0).abs() < 1e-6);
        assert!(fairness_check(&builtin_n("spherical", 2).unwrap()).unwrap().fair);
        assert!(fairness_check(&builtin_n("brier", 2).unwrap()).unwrap().fair);
    }

    #[test]
    fn brier_conditional_risk_minimized_at_truth() {
        // brute-force check of properness for three outcomes
        use crate::simplex::{interior_grid, std_chart_raw};
        let b = builtin_n("brier", 3).unwrap();
        let qs = interior_grid(3, 41, 1e-3).unwrap();
        for k in 0..20 {
            let a = 0.05 + 0.04 * k as f64;
            let bb = 0.9 - a - 0.01 * k as f64;
            let p = [a * 0.7, bb * 0.8 + 0.05, 0.0];
            let p = [p[0], p[1], 1.0 - p[0] - p[1]];
            let risk_p = conditional_risk(&b, &p, &p).unwrap();
            for q in &qs {
                let q = std_chart_raw(q.coords());
                assert!(conditional_risk(&b, &p, &q).unwrap() >= risk_p - 1e-12);
            }
        }
    }
}
