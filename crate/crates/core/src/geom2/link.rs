use crate::error::{Error, Result};
use crate::lossdsl::Jet2;

use super::chart::Reparametrization;

/// Default number of tabulation knots for links.
pub const LINK_KNOTS: usize = 4001;
/// Knots span `t` in `[LINK_T_MIN, 1 - LINK_T_MIN]`.
pub const LINK_T_MIN: f64 = 1e-7;

/// Knot locations: uniform in logit space, odd count so that `t = 1/2` is a
/// knot. Relative spacing stays bounded near both ends of the interval.
pub fn link_knots(count: usize, t_min: f64) -> Vec<f64> {
    let count = count | 1;
    let u_max = ((1.0 - t_min) / t_min).ln();
    let half = (count / 2) as f64;
    (0..count)
        .map(|i| {
            let u = u_max * (i as f64 - half) / half;
            if i == count / 2 {
                0.5
            } else {
                1.0 / (1.0 + (-u).exp())
            }
        })
        .collect()
}

/// A strictly increasing link `psi: (0, 1) -> R` tabulated at knots with
/// exact slopes and interpolated by cubic Hermite pieces.
///
/// Viewed as a [`Reparametrization`], the chart coordinate is `v = psi(t)`.
#[derive(Debug, Clone)]
pub struct LinkFunction {
    label: String,
    ts: Vec<f64>,
    vs: Vec<f64>,
    ds: Vec<f64>,
}

impl LinkFunction {
    /// Knots must be strictly increasing in both `t` and `psi`, slopes
    /// positive, and every piece must satisfy the Fritsch-Carlson condition
    /// `alpha^2 + beta^2 <= 9` so the interpolant stays monotone.
    pub fn from_knots(label: impl Into<String>, ts: Vec<f64>, vs: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if ts.len() < 2 || ts.len() != vs.len() || ts.len() != ds.len() {
            return Err(Error::BadParams(format!(
                "link needs matching knot arrays of length >= 2, got {}/{}/{}",
                ts.len(),
                vs.len(),
                ds.len()
            )));
        }
        if ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::BadParams("link knots must lie in (0, 1)".into()));
        }
        for i in 0..ts.len() - 1 {
            let h = ts[i + 1] - ts[i];
            let dv = vs[i + 1] - vs[i];
            if !(h > 0.0) {
                return Err(Error::NonMonotoneLink(format!("knots not increasing at index {i}")));
            }
            if !(dv > 0.0) || !(ds[i] > 0.0) || !(ds[i + 1] > 0.0) {
                return Err(Error::NonMonotoneLink(format!(
                    "values or slopes not increasing on [{}, {}]",
                    ts[i],
                    ts[i + 1]
                )));
            }
            let delta = dv / h;
            let a = ds[i] / delta;
            let b = ds[i + 1] / delta;
            if a * a + b * b > 9.0 {
                return Err(Error::NonMonotoneLink(format!(
                    "cubic piece on [{}, {}] overshoots (alpha = {a}, beta = {b})",
                    ts[i],
                    ts[i + 1]
                )));
            }
        }
        Ok(Self { label, ts, vs, ds })
    }

    /// Tabulates an analytic link and its derivative on [`link_knots`].
    pub fn tabulate<F, D>(label: impl Into<String>, psi: F, dpsi: D) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let ts = link_knots(LINK_KNOTS, LINK_T_MIN);
        let vs = ts.iter().map(|&t| psi(t)).collect();
        let ds = ts.iter().map(|&t| dpsi(t)).collect();
        Self::from_knots(label, ts, vs, ds)
    }

    pub fn identity() -> Self {
        Self::tabulate("identity", |t| t, |_| 1.0).expect("identity is monotone")
    }

    pub fn logit() -> Self {
        Self::tabulate("logit", |t| (t / (1.0 - t)).ln(), |t| 1.0 / (t * (1.0 - t)))
            .expect("logit is monotone")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.ts, &self.vs)
    }

    /// Tabulated `t` range.
    pub fn t_range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().expect("non-empty"))
    }

    /// Tabulated `v` range.
    pub fn v_range(&self) -> (f64, f64) {
        (self.vs[0], *self.vs.last().expect("non-empty"))
    }

    fn piece(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.t_range();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange(t));
        }
        let i = self.ts.partition_point(|&k| k <= t);
        Ok(i.saturating_sub(1).min(self.ts.len() - 2))
    }

    /// `(psi, psi', psi'')` of the interpolant at `t`.
    pub fn jet(&self, t: f64) -> Result<Jet2> {
        let i = self.piece(t)?;
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        // slope form keeps derivatives accurate on very short pieces
        let secant = (self.vs[i + 1] - self.vs[i]) / h;
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let c2 = 3.0 * secant - 2.0 * d0 - d1;
        let c3 = d0 + d1 - 2.0 * secant;
        let v = self.vs[i] + h * s * (d0 + s * (c2 + s * c3));
        let dv = d0 + s * (2.0 * c2 + 3.0 * s * c3);
        let ddv = (2.0 * c2 + 6.0 * s * c3) / h;
        Ok(Jet2::new(v, dv, ddv))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.v)
    }

    pub fn deriv(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.d1)
    }

    /// `psi^{-1}(v)` by safeguarded Newton iteration inside one piece.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        let (lo, hi) = self.v_range();
        if !(v >= lo && v <= hi) {
            return Err(Error::OutOfRange(v));
        }
        let i = self.vs.partition_point(|&k| k <= v).saturating_sub(1).min(self.vs.len() - 2);
        let (mut a, mut b) = (self.ts[i], self.ts[i + 1]);
        if v == self.vs[i] {
            return Ok(a);
        }
        if v == self.vs[i + 1] {
            return Ok(b);
        }
        let mut t = a + (b - a) * (v - self.vs[i]) / (self.vs[i + 1] - self.vs[i]);
        for _ in 0..100 {
            let j = self.jet(t)?;
            let r = j.v - v;
            if r > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let mut next = t - r / j.d1;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - t).abs() <= 1e-16 * t.max(1e-300) || b - a <= 4.0 * f64::EPSILON * t {
                return Ok(next);
            }
            t = next;
        }
        Ok(t)
    }
}

impl Reparametrization for LinkFunction {
    fn name(&self) -> String {
        format!("link({})", self.label)
    }

    /// `t = psi^{-1}(v)` with `t' = 1/psi'(t)` and `t'' = -psi''(t)/psi'(t)^3`.
    fn to_std(&self, v: f64) -> Result<Jet2> {
        let t = self.inverse(v)?;
        let j = self.jet(t)?;
        Ok(Jet2::new(t, 1.0 / j.d1, -j.d2 / (j.d1 * j.d1 * j.d1)))
    }

    fn from_std(&self, t: f64) -> Result<f64> {
        self.eval(t)
    }
}
