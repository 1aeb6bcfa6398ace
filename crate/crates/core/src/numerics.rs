//! Scalar minimization, boundary limits, quadrature and small symmetric
//! eigenproblems shared by the geometry modules.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f(x_min))` once the bracket is narrower than `tol`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        iters += 1;
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Outcome of extrapolating a sampled function to a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl Limit {
    pub fn value(self) -> f64 {
        match self {
            Limit::Finite(v) => v,
            Limit::PosInfinity => f64::INFINITY,
            Limit::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Limit::Finite(_))
    }
}

/// Number of halvings used for boundary sequences (`h = eps * 2^-k`, `k = 0..=6`).
pub const BOUNDARY_STEPS: usize = 7;

/// Sample offsets `eps * 2^-k` for boundary extrapolation.
pub fn boundary_offsets(eps: f64) -> Vec<f64> {
    (0..BOUNDARY_STEPS).map(|k| eps * 0.5f64.powi(k as i32)).collect()
}

/// Limit of a sequence `s_k = f(h_k)` with `h_k = eps * 2^-k` as `h -> 0`.
///
/// The sequence is declared divergent when its magnitude grows monotonically
/// by more than 10% per halving, or when the estimated convergence order is
/// not positive. Otherwise one Richardson step with the order estimated from
/// the last three samples is applied.
pub fn boundary_limit(samples: &[f64]) -> Limit {
    let n = samples.len();
    assert!(n >= 3, "need at least three samples");
    let last = samples[n - 1];
    if samples.iter().any(|s| s.is_nan()) {
        return Limit::Finite(f64::NAN);
    }
    if last == f64::INFINITY {
        return Limit::PosInfinity;
    }
    if last == f64::NEG_INFINITY {
        return Limit::NegInfinity;
    }
    let grows = |sign: f64| {
        samples
            .windows(2)
            .all(|w| sign * w[0] > 0.0 && sign * w[1] > 1.1 * sign * w[0])
    };
    if grows(1.0) {
        return Limit::PosInfinity;
    }
    if grows(-1.0) {
        return Limit::NegInfinity;
    }
    let (a, b, c) = (samples[n - 3], samples[n - 2], last);
    let d1 = a - b;
    let d2 = b - c;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(f64::MIN_POSITIVE);
    if d2.abs() <= 1e-13 * scale {
        return Limit::Finite(c);
    }
    let ratio = d1 / d2;
    if !(ratio.is_finite() && ratio > 0.0) {
        // oscillating: no reliable order, keep the last sample
        return Limit::Finite(c);
    }
    let order = ratio.log2();
    if order <= 0.05 {
        return if d2 < 0.0 {
            Limit::PosInfinity
        } else {
            Limit::NegInfinity
        };
    }
    Limit::Finite(c - d2 / (2f64.powf(order) - 1.0))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::QuadratureFailure { lo: a, hi: b });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure { lo: a, hi: b });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = symmetrize(a);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

/// Ascending eigenvalues of the symmetric pencil `a x = lambda b x` with
/// `b` positive definite, via `b = R^T R` and the congruent matrix
/// `R^{-T} a R^{-1}`. Returns `None` when `b` is not positive definite.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<Vec<f64>> {
    let chol = symmetrize(b).cholesky()?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let x = l.solve_lower_triangular(&symmetrize(a))?;
    let c = l.solve_lower_triangular(&x.transpose())?;
    Some(sym_eigenvalues(&c))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Relative comparison used by internal consistency checks.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| Ok((x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx < 1e-18);
    }

    #[test]
    fn limits_of_model_sequences() {
        let hs = boundary_offsets(1e-4);
        let s: Vec<f64> = hs.iter().map(|h| 2.0 + 3.0 * h).collect();
        assert!((boundary_limit(&s).value() - 2.0).abs() < 1e-12);
        let s: Vec<f64> = hs.iter().map(|h| 1.0 + 100.0 * h / 1e-4).collect();
        assert!((boundary_limit(&s).value() - 1.0).abs() < 1e-9);
        let s: Vec<f64> = hs.iter().map(|h| h.sqrt()).collect();
        assert!(boundary_limit(&s).value().abs() < 1e-12);
        let s: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
        assert_eq!(boundary_limit(&s), Limit::PosInfinity);
        let s: Vec<f64> = hs.iter().map(|h| -h.ln()).collect();
        assert_eq!(boundary_limit(&s), Limit::PosInfinity);
        let s = vec![5.0; 7];
        assert_eq!(boundary_limit(&s), Limit::Finite(5.0));
    }

    #[test]
    fn simpson_integrates() {
        let v = adaptive_simpson(&|u: f64| Ok(1.0 / (u * (1.0 - u))), 0.5, 0.75, 1e-13).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-11);
        let v = adaptive_simpson(&|_u: f64| Ok(4.0), 0.5, 0.9, 1e-13).unwrap();
        assert!((v - 1.6).abs() < 1e-14);
    }

    #[test]
    fn pencil_matches_direct_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        // det(a - l b) = (2-2l)(3-l) - 1 = 2l^2 - 8l + 5
        let ev = pencil_eigenvalues(&a, &b).unwrap();
        let r = 6f64.sqrt() / 2.0;
        assert!((ev[0] - (2.0 - r)).abs() < 1e-12);
        assert!((ev[1] - (2.0 + r)).abs() < 1e-12);
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(pencil_eigenvalues(&a, &not_pd).is_none());
    }
}
