//! Differential geometry of binary loss curves.
//!
//! Signed curvature is taken with respect to the counterclockwise normal of
//! the velocity and then flipped so that the normal points into the
//! nonnegative orthant. Every quantity here is chart independent except the
//! weight, which is reported for a stated chart.

pub mod chart;
pub mod link;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lossdsl::Jet2;
use crate::losses::{self, builtin_n, require_proper, Loss};
use crate::numerics::{adaptive_simpson, boundary_limit, boundary_offsets, golden_section, rel_close, Limit};
use crate::simplex::Grid;

pub use chart::{AffineChart, LogitChart, Reparametrization};
pub use link::LinkFunction;

/// Velocities shorter than this have no well-defined normal.
pub const MIN_SPEED: f64 = 1e-12;
/// Relative agreement required between the two weight expressions.
pub const WEIGHT_TOL: f64 = 1e-8;
/// Relative agreement required between mixability routes.
pub const ROUTE_TOL: f64 = 1e-6;
/// Golden-section bracket width when refining minimizers.
pub const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    /// Chart coordinate of the loss.
    pub t: f64,
    pub point: [f64; 2],
    /// Unit normal pointing into the nonnegative orthant.
    pub normal: [f64; 2],
    pub kappa_plus: f64,
}

/// `(kappa_plus, orthant normal)` of the plane curve `(x1, x2)`.
pub(crate) fn signed_curvature(x1: Jet2, x2: Jet2, t: f64) -> Result<(f64, [f64; 2])> {
    let speed = x1.d1.hypot(x2.d1);
    if !(speed >= MIN_SPEED) {
        return Err(Error::DegenerateVelocity { t, speed });
    }
    let kappa_c = (x1.d1 * x2.d2 - x2.d1 * x1.d2) / (speed * speed * speed);
    // rot90 of the velocity; its dot product with (1, 1) is x1' - x2'
    let nc = [-x2.d1 / speed, x1.d1 / speed];
    let sign = if nc[0] + nc[1] >= 0.0 { 1.0 } else { -1.0 };
    Ok((kappa_c * sign, [nc[0] * sign, nc[1] * sign]))
}

/// Signed curvature `kappa+` at chart coordinate `t` of `h`.
pub fn curvature_plus(h: &Loss, t: f64) -> Result<CurvatureSample> {
    let (x, _) = h.local2(t)?;
    let (kappa_plus, normal) = signed_curvature(x[0], x[1], t)?;
    Ok(CurvatureSample {
        t,
        point: [x[0].v, x[1].v],
        normal,
        kappa_plus,
    })
}

/// `kappa+` at the point with standard coordinate `t`, whatever chart `h` uses.
pub fn curvature_plus_std(h: &Loss, t: f64) -> Result<f64> {
    Ok(curvature_plus(h, h.chart_coord(t)?)?.kappa_plus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    pub t: f64,
    pub w: f64,
    /// The second weight expression, `|l~_2' / Phi_1|`.
    pub w_check: f64,
}

/// Weight `|l~_1'(t) / Phi_2(t)|` in the chart of `h`, optionally after an
/// extra reparametrization. Fails when `|l~_2'/Phi_1|` disagrees.
pub fn weight(h: &Loss, t: f64, chart: Option<Arc<dyn Reparametrization>>) -> Result<WeightSample> {
    let owned;
    let h = match chart {
        Some(r) => {
            owned = h.reparametrized(r)?;
            &owned
        }
        None => h,
    };
    let (x, phi) = h.local2(t)?;
    let w = (x[0].d1 / phi[1].v).abs();
    let w_check = (x[1].d1 / phi[0].v).abs();
    if !rel_close(w, w_check, WEIGHT_TOL) {
        return Err(Error::NotProperHere { t, w1: w, w2: w_check });
    }
    Ok(WeightSample { t, w, w_check })
}

/// Weight in the standard chart at standard coordinate `t`.
pub fn weight_std(h: &Loss, t: f64) -> Result<f64> {
    let std = h.in_standard_chart();
    Ok(weight(&std, t, None)?.w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSample {
    /// Standard coordinate.
    pub t: f64,
    /// `kappa+_h / kappa+_base`.
    pub quotient: f64,
    /// `w_base / w_h` in the standard chart.
    pub weight_ratio: f64,
    /// Whether the two agree within `WEIGHT_TOL`.
    pub consistent: bool,
}

/// Curvature quotient at the point with standard coordinate `t`.
pub fn curvature_quotient(h: &Loss, base: &Loss, t: f64) -> Result<QuotientSample> {
    let quotient = curvature_plus_std(h, t)? / curvature_plus_std(base, t)?;
    let weight_ratio = weight_std(base, t)? / weight_std(h, t)?;
    Ok(QuotientSample {
        t,
        quotient,
        weight_ratio,
        consistent: rel_close(quotient, weight_ratio, WEIGHT_TOL),
    })
}

/// Pointwise mixability `|(l1' l2'' - l2' l1'') / (l1' l2' (l1' - l2'))|`
/// at chart coordinate `t`; chart independent.
pub fn pointwise_eta(h: &Loss, t: f64) -> Result<f64> {
    let (x, _) = h.local2(t)?;
    let (a, b) = (x[0], x[1]);
    let num = a.d1 * b.d2 - b.d1 * a.d2;
    let den = a.d1 * b.d1 * (a.d1 - b.d1);
    if den == 0.0 {
        return Err(Error::DegenerateVelocity { t, speed: a.d1.hypot(b.d1) });
    }
    Ok((num / den).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Formula,
    Quotient,
    Pencil,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Formula => "formula",
            Route::Quotient => "quotient",
            Route::Pencil => "pencil",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeta {
    pub n: usize,
    pub resolution: usize,
    pub margin: f64,
    pub points: usize,
}

impl From<&Grid> for GridMeta {
    fn from(g: &Grid) -> Self {
        GridMeta {
            n: g.n,
            resolution: g.resolution,
            margin: g.margin,
            points: g.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixabilityReport {
    pub eta_star: f64,
    /// Standard-chart coordinates of the minimizer.
    pub argmin: Vec<f64>,
    pub route: Route,
    pub grid: GridMeta,
    /// Whether golden-section refinement was accepted.
    pub refined: bool,
    /// Value obtained by every route that was run.
    pub routes: Vec<(Route, f64)>,
    /// The infimum is attained in the boundary limit rather than inside.
    pub boundary: bool,
}

struct Minimum {
    t: f64,
    value: f64,
    refined: bool,
    boundary: bool,
}

/// Grid infimum of `f` over standard coordinates, golden refinement in the
/// two neighbouring cells and boundary extrapolation.
fn binary_infimum<F>(f: F, grid: &Grid) -> Result<Minimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let ts = grid.scalars();
    let vals = ts.par_iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;
    let mut idx = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[idx] {
            idx = i;
        }
    }
    let mut best = Minimum {
        t: ts[idx],
        value: vals[idx],
        refined: false,
        boundary: false,
    };
    let lo = ts[idx.saturating_sub(1)];
    let hi = ts[(idx + 1).min(ts.len() - 1)];
    if hi > lo {
        let (tr, fr) = golden_section(&f, lo, hi, REFINE_TOL)?;
        if fr <= best.value && (tr - best.t).abs() <= grid.cell() {
            best.t = tr;
            best.value = fr;
            best.refined = true;
        }
    }
    let offsets = boundary_offsets(grid.margin);
    for side in [0.0, 1.0] {
        let samples = offsets
            .iter()
            .map(|&e| f((side - e).abs()))
            .collect::<Result<Vec<f64>>>()?;
        if let Limit::Finite(l) = boundary_limit(&samples) {
            if l < best.value * (1.0 - 1e-9) {
                best.value = if l < 1e-9 { 0.0 } else { l };
                best.t = (side - offsets[offsets.len() - 1]).abs();
                best.refined = false;
                best.boundary = true;
            }
        }
    }
    Ok(best)
}

/// Mixability constant of a binary proper loss.
///
/// The formula route minimizes [`pointwise_eta`]; the quotient route
/// minimizes `kappa+_h / kappa+_log`, and the two must agree.
pub fn mixability_constant_binary(h: &Loss, grid: &Grid) -> Result<MixabilityReport> {
    if h.n() != 2 {
        return Err(Error::DimMismatch { expected: 2, got: h.n() });
    }
    require_proper(h, grid)?;
    let formula = binary_infimum(|t| pointwise_eta(h, h.chart_coord(t)?), grid)?;
    let log = builtin_n("log", 2)?;
    let quotient = binary_infimum(|t| Ok(curvature_quotient(h, &log, t)?.quotient), grid)?;
    let agree = if formula.value == 0.0 || quotient.value == 0.0 {
        formula.value.abs() <= 1e-9 && quotient.value.abs() <= 1e-9
    } else {
        rel_close(formula.value, quotient.value, ROUTE_TOL)
    };
    if !agree {
        return Err(Error::RouteDisagreement {
            a: formula.value,
            b: quotient.value,
        });
    }
    Ok(MixabilityReport {
        eta_star: formula.value,
        argmin: vec![formula.t],
        route: Route::Formula,
        grid: grid.into(),
        refined: formula.refined,
        routes: vec![(Route::Formula, formula.value), (Route::Quotient, quotient.value)],
        boundary: formula.boundary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalityReport {
    /// `B_1 = 1 / lim_{t -> 0} kappa+_h / kappa+_base`; zero when the limit diverges.
    pub b1: f64,
    pub b2: f64,
    /// The limits themselves, `B_1^{-1}` and `B_2^{-1}`.
    pub b1_inv: Limit,
    pub b2_inv: Limit,
    pub sup_quotient: f64,
    pub inf_quotient: f64,
    pub fundamental: bool,
}

/// Boundary behaviour of the curvature quotient against `base`.
pub fn fundamentality(h: &Loss, base: &Loss, grid: &Grid) -> Result<FundamentalityReport> {
    for l in [h, base] {
        require_proper(l, grid)?;
        let f = losses::fairness_check(l)?;
        if !f.fair {
            return Err(Error::NotFair(format!(
                "{}: boundary values {:?}, {:?}",
                l.name(),
                f.limit_outcome1,
                f.limit_outcome2
            )));
        }
    }
    let q = |t: f64| curvature_quotient(h, base, t).map(|s| s.quotient);
    let ts = grid.scalars();
    let vals = ts.par_iter().map(|&t| q(t)).collect::<Result<Vec<f64>>>()?;
    let sup_quotient = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf_quotient = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let offsets = boundary_offsets(grid.margin);
    let left = offsets.iter().map(|&e| q(e)).collect::<Result<Vec<f64>>>()?;
    let right = offsets.iter().map(|&e| q(1.0 - e)).collect::<Result<Vec<f64>>>()?;
    let b1_inv = boundary_limit(&left);
    let b2_inv = boundary_limit(&right);
    let ok = |l: Limit| matches!(l, Limit::Finite(v) if v > 0.0);
    let recip = |l: Limit| match l {
        Limit::Finite(v) => 1.0 / v,
        _ => 0.0,
    };
    Ok(FundamentalityReport {
        b1: recip(b1_inv),
        b2: recip(b2_inv),
        b1_inv,
        b2_inv,
        sup_quotient,
        inf_quotient,
        fundamental: ok(b1_inv) && ok(b2_inv) && inf_quotient > 0.0 && sup_quotient.is_finite(),
    })
}

/// The composite loss: `h` read in the chart `v = psi(t)`.
pub fn composite(h: &Loss, link: &LinkFunction) -> Result<Loss> {
    h.reparametrized(Arc::new(link.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkVerdict {
    pub valid: bool,
    /// Max over the v-grid of `|psi^{-1}(v) - l2'/(l2' - l1')|`.
    pub max_identity_error: f64,
    /// Max of `|psi(psi^{-1}(v)) - v| / (1 + |v|)`.
    pub max_roundtrip_error: f64,
    pub worst_v: f64,
}

/// Tolerance of the link identity.
pub const LINK_TOL: f64 = 1e-6;
/// Tolerance of the link round trip.
pub const ROUNDTRIP_TOL: f64 = 1e-8;

/// Checks that the composite loss built from `h` and `link` is proper, i.e.
/// `psi^{-1}(v)` equals `l2'/(l2' - l1')` evaluated at `psi^{-1}(v)`.
pub fn validate_link(h: &Loss, link: &LinkFunction, samples: usize) -> Result<LinkVerdict> {
    let std = h.in_standard_chart();
    let lo = link.eval(crate::simplex::DEFAULT_MARGIN)?;
    let hi = link.eval(1.0 - crate::simplex::DEFAULT_MARGIN)?;
    let samples = samples.max(2);
    let mut out = LinkVerdict {
        valid: true,
        max_identity_error: 0.0,
        max_roundtrip_error: 0.0,
        worst_v: lo,
    };
    let mut worst = f64::NEG_INFINITY;
    for i in 0..samples {
        let v = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let t = link.inverse(v)?;
        let (x, _) = std.local2(t)?;
        let ratio = x[1].d1 / (x[1].d1 - x[0].d1);
        let id_err = (t - ratio).abs();
        let rt_err = (link.eval(t)? - v).abs() / (1.0 + v.abs());
        out.max_identity_error = out.max_identity_error.max(id_err);
        out.max_roundtrip_error = out.max_roundtrip_error.max(rt_err);
        let score = (id_err / LINK_TOL).max(rt_err / ROUNDTRIP_TOL);
        if score > worst {
            worst = score;
            out.worst_v = v;
        }
    }
    out.valid = out.max_identity_error <= LINK_TOL && out.max_roundtrip_error <= ROUNDTRIP_TOL;
    Ok(out)
}

/// The canonical link `psi(t) = int_{1/2}^t w(u) du` of a proper loss,
/// with the standard-chart weight integrated knot to knot.
pub fn canonical_link(h: &Loss) -> Result<LinkFunction> {
    if h.n() != 2 {
        return Err(Error::DimMismatch { expected: 2, got: h.n() });
    }
    let std = h.in_standard_chart();
    require_proper(&std, &Grid::default_for(2)?)?;
    let ts = link::link_knots(link::LINK_KNOTS, link::LINK_T_MIN);
    let w = |u: f64| weight(&std, u, None).map(|s| s.w);
    let ds = ts.iter().map(|&t| w(t)).collect::<Result<Vec<f64>>>()?;
    let mid = ts.len() / 2;
    let mut vs = vec![0.0; ts.len()];
    let segment = |a: f64, b: f64, wa: f64| -> Result<f64> {
        let tol = 1e-13 * (1.0 + wa * (b - a).abs());
        adaptive_simpson(&w, a, b, tol)
    };
    for i in mid + 1..ts.len() {
        vs[i] = vs[i - 1]
            + segment(ts[i - 1], ts[i], ds[i - 1]).map_err(|_| Error::QuadratureFailure {
                lo: ts[mid],
                hi: ts[i - 1],
            })?;
    }
    for i in (0..mid).rev() {
        vs[i] = vs[i + 1]
            - segment(ts[i], ts[i + 1], ds[i + 1]).map_err(|_| Error::QuadratureFailure {
                lo: ts[i + 1],
                hi: ts[mid],
            })?;
    }
    LinkFunction::from_knots(format!("canonical({})", h.name()), ts, vs, ds)
}

/// `kappa+` of `t -> (exp(-eta l~_1), exp(-eta l~_2))`; nonpositive
/// everywhere exactly when the image of the superprediction set under
/// `y -> exp(-eta y)` is convex.
pub fn exp_curve_curvature(h: &Loss, eta: f64, t: f64) -> Result<f64> {
    let (x, _) = h.local2(t)?;
    let lift = |j: Jet2| -> Result<Jet2> { j.scale(-eta).exp() };
    Ok(signed_curvature(lift(x[0])?, lift(x[1])?, t)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpCurveVerdict {
    pub eta: f64,
    pub max_kappa: f64,
    pub worst_t: f64,
    pub convex: bool,
}

/// Tolerance on the largest exp-curve curvature accepted as convex.
pub const EXP_CURVE_TOL: f64 = 1e-9;

pub fn exp_curve_verdict(h: &Loss, eta: f64, grid: &Grid) -> Result<ExpCurveVerdict> {
    let ts = grid.scalars();
    let ks = ts
        .par_iter()
        .map(|&t| exp_curve_curvature(h, eta, h.chart_coord(t)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut worst = 0;
    for (i, k) in ks.iter().enumerate() {
        if *k > ks[worst] {
            worst = i;
        }
    }
    Ok(ExpCurveVerdict {
        eta,
        max_kappa: ks[worst],
        worst_t: ts[worst],
        convex: ks[worst] <= EXP_CURVE_TOL,
    })
}
