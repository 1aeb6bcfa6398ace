use std::fmt;

use crate::error::{Error, Result};
use crate::lossdsl::Jet2;

/// A chart of the binary simplex written as a reparametrization of the
/// standard chart: `Phi(v) = Phi_std(t(v))`.
pub trait Reparametrization: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// `t(v)` with its first and second derivative.
    fn to_std(&self, v: f64) -> Result<Jet2>;

    /// Inverse map `t -> v`.
    fn from_std(&self, t: f64) -> Result<f64>;
}

/// `t = sigmoid(v)`, i.e. the chart whose coordinate is `logit(t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogitChart;

impl Reparametrization for LogitChart {
    fn name(&self) -> String {
        "logit".into()
    }

    fn to_std(&self, v: f64) -> Result<Jet2> {
        let s = if v >= 0.0 {
            1.0 / (1.0 + (-v).exp())
        } else {
            let e = v.exp();
            e / (1.0 + e)
        };
        let d1 = s * (1.0 - s);
        Ok(Jet2::new(s, d1, d1 * (1.0 - 2.0 * s)))
    }

    fn from_std(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::OutOfDomain(format!("logit needs t in (0, 1), got {t}")));
        }
        Ok((t / (1.0 - t)).ln())
    }
}

/// Affine chart `t = a + b v` with `b != 0`; handy for tests.
#[derive(Debug, Clone, Copy)]
pub struct AffineChart {
    pub offset: f64,
    pub slope: f64,
}

impl Reparametrization for AffineChart {
    fn name(&self) -> String {
        format!("affine({}, {})", self.offset, self.slope)
    }

    fn to_std(&self, v: f64) -> Result<Jet2> {
        Ok(Jet2::new(self.offset + self.slope * v, self.slope, 0.0))
    }

    fn from_std(&self, t: f64) -> Result<f64> {
        Ok((t - self.offset) / self.slope)
    }
}
