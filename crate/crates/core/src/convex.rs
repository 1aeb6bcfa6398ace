//! Superprediction sets through Bayes risks and support functions.
//!
//! For a proper loss the support function of its superprediction set is
//! finite exactly on the open negative orthant, where
//! `sigma(u) = <l(p_u), u>` with `p_u = -u / |u|_1`. Containment, Minkowski
//! sums and summands are all decided through these functions; no explicit
//! set geometry is built.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom2::{self, MixabilityReport};
use crate::geomn;
use crate::losses::{self, builtin_n, local_properness, require_proper, Loss, TOL_ALIGN};
use crate::numerics::min_eigenvalue;
use crate::simplex::{std_chart_raw, Grid, SimplexPoint, DEFAULT_MARGIN};

/// Normalized semidefiniteness tolerance for Bayes-risk differences.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RiskEval {
    pub p: Vec<f64>,
    /// Minimizing prediction; equal to `p` for the direct evaluation.
    pub q: Vec<f64>,
    /// Conditional risk `<l(q), p>`.
    pub risk: f64,
    /// Conditional Bayes risk.
    pub bayes: f64,
    /// Hessian of `t -> <l~(t), Phi_std(t)>` at `p`.
    pub hess_bayes: DMatrix<f64>,
}

fn bayes_hessian(h: &Loss, p: &[f64]) -> Result<DMatrix<f64>> {
    let std = h.in_standard_chart();
    Ok(std.local(&p[..p.len() - 1])?.bayes_jet().hess)
}

fn check_interior(p: &SimplexPoint, n: usize) -> Result<()> {
    if p.n() != n {
        return Err(Error::DimMismatch { expected: n, got: p.n() });
    }
    if !p.is_interior(0.0) {
        return Err(Error::OutOfDomain(format!("{:?} is on the boundary", p.coords())));
    }
    Ok(())
}

/// Bayes risk `<l(p), p>` of a proper loss.
pub fn bayes_risk(h: &Loss, p: &SimplexPoint) -> Result<RiskEval> {
    check_interior(p, h.n())?;
    let bayes = losses::conditional_risk(h, p.coords(), p.coords())?;
    Ok(RiskEval {
        p: p.coords().to_vec(),
        q: p.coords().to_vec(),
        risk: bayes,
        bayes,
        hess_bayes: bayes_hessian(h, p.coords())?,
    })
}

/// Bayes risk by minimizing `q -> <l(q), p>` over a grid: 501 points for two
/// outcomes, the default lattice otherwise. Makes no properness assumption.
pub fn bayes_risk_brute(h: &Loss, p: &SimplexPoint) -> Result<RiskEval> {
    check_interior(p, h.n())?;
    let grid = if h.n() == 2 {
        Grid::new(2, 501, DEFAULT_MARGIN)?
    } else {
        Grid::default_for(h.n())?
    };
    let risks = grid
        .points
        .par_iter()
        .map(|q| losses::conditional_risk(h, p.coords(), &std_chart_raw(q.coords())))
        .collect::<Result<Vec<f64>>>()?;
    let mut idx = 0;
    for (i, r) in risks.iter().enumerate() {
        if *r < risks[idx] {
            idx = i;
        }
    }
    Ok(RiskEval {
        p: p.coords().to_vec(),
        q: std_chart_raw(grid.points[idx].coords()),
        risk: risks[idx],
        bayes: risks[idx],
        hess_bayes: bayes_hessian(h, p.coords())?,
    })
}

fn direction_prob(u: &[f64]) -> Result<Vec<f64>> {
    if u.iter().any(|x| !(x.is_finite() && *x < 0.0)) {
        return Err(Error::BadDirection(u.to_vec()));
    }
    let l1: f64 = u.iter().map(|x| -x).sum();
    Ok(u.iter().map(|x| -x / l1).collect())
}

/// Support function of the superprediction set of `h` at `u`.
pub fn support(h: &Loss, u: &[f64]) -> Result<f64> {
    if u.len() != h.n() {
        return Err(Error::DimMismatch { expected: h.n(), got: u.len() });
    }
    let p = direction_prob(u)?;
    let l = h.values_at(&p)?;
    Ok(l.iter().zip(u).map(|(a, b)| a * b).sum())
}

/// A linear combination `sum_i c_i sigma_{spr(h_i)}` of support functions.
#[derive(Debug, Clone)]
pub struct SupportField {
    terms: Vec<(f64, Loss)>,
}

impl SupportField {
    pub fn of(h: &Loss) -> Self {
        Self {
            terms: vec![(1.0, h.clone())],
        }
    }

    pub fn from_terms(terms: Vec<(f64, Loss)>) -> Result<Self> {
        let n = terms.first().map(|t| t.1.n()).ok_or_else(|| {
            Error::BadParams("support field needs at least one term".into())
        })?;
        if let Some(t) = terms.iter().find(|t| t.1.n() != n) {
            return Err(Error::DimMismatch { expected: n, got: t.1.n() });
        }
        Ok(Self { terms })
    }

    pub fn n(&self) -> usize {
        self.terms[0].1.n()
    }

    pub fn terms(&self) -> &[(f64, Loss)] {
        &self.terms
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for (c, h) in &self.terms {
            s += c * support(h, u)?;
        }
        Ok(s)
    }

    /// Gradient at `u`: the boundary point of the set with outer normal `u`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = direction_prob(u)?;
        let mut g = vec![0.0; self.n()];
        for (c, h) in &self.terms {
            for (gi, li) in g.iter_mut().zip(h.values_at(&p)?) {
                *gi += c * li;
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlideVerdict {
    pub eta: f64,
    /// Grid minimum of the normalized smallest eigenvalue of the Hessian of
    /// `eta * Lbar_inner - Lbar_outer`.
    pub convexity_margin: f64,
    pub slides_freely: bool,
    pub worst_point: Vec<f64>,
}

/// Whether `spr(eta * inner)` slides freely inside `spr(outer)`, decided by
/// convexity of `eta * Lbar_inner - Lbar_outer` on the grid.
pub fn slides_freely(inner: &Loss, outer: &Loss, eta: f64, grid: &Grid) -> Result<SlideVerdict> {
    if inner.n() != outer.n() {
        return Err(Error::DimMismatch { expected: outer.n(), got: inner.n() });
    }
    require_proper(inner, grid)?;
    require_proper(outer, grid)?;
    let (hi, ho) = (inner.in_standard_chart(), outer.in_standard_chart());
    let margins = grid
        .points
        .par_iter()
        .map(|p| {
            let bi = hi.local(p.coords())?.bayes_jet().hess;
            let bo = ho.local(p.coords())?.bayes_jet().hess;
            let d = &bi * eta - &bo;
            let scale = 1.0 + eta * bi.trace().abs() + bo.trace().abs();
            Ok(min_eigenvalue(&d) / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut idx = 0;
    for (i, v) in margins.iter().enumerate() {
        if *v < margins[idx] {
            idx = i;
        }
    }
    Ok(SlideVerdict {
        eta,
        convexity_margin: margins[idx],
        slides_freely: margins[idx] >= -PSD_TOL,
        worst_point: std_chart_raw(grid.points[idx].coords()),
    })
}

#[derive(Debug, Clone)]
pub struct SummandResidual {
    /// `sigma_{spr(outer)} - eta * sigma_{spr(inner)}`.
    pub field: SupportField,
    pub slide: SlideVerdict,
    pub segments_checked: usize,
    /// Largest midpoint-convexity excess seen along the test segments.
    pub max_convexity_violation: f64,
    /// Boundary points of the residual set, one per sampled direction.
    pub boundary_points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

/// Number of directions sampled for segment tests and boundary points.
const RESIDUAL_SAMPLES: usize = 64;

/// The residual `M` with `spr(outer) = spr(eta * inner) + M`, via its
/// support function.
pub fn summand_residual(outer: &Loss, inner: &Loss, eta: f64, grid: &Grid) -> Result<SummandResidual> {
    let slide = slides_freely(inner, outer, eta, grid)?;
    if !slide.slides_freely {
        return Err(Error::NotASummand(format!(
            "eta * Lbar_inner - Lbar_outer is not convex (margin {:e} at {:?})",
            slide.convexity_margin, slide.worst_point
        )));
    }
    let field = SupportField::from_terms(vec![(1.0, outer.clone()), (-eta, inner.clone())])?;
    let stride = (grid.len() / RESIDUAL_SAMPLES).max(1);
    let directions: Vec<Vec<f64>> = grid
        .points
        .iter()
        .step_by(stride)
        .map(|p| std_chart_raw(p.coords()).iter().map(|x| -x).collect())
        .collect();
    let k = directions.len();
    let mut max_violation = f64::NEG_INFINITY;
    let mut segments = 0;
    for i in 0..k {
        // pair each direction with a far one, scaled to break homogeneity
        let a = &directions[i];
        let b: Vec<f64> = directions[(i * 7 + k / 2) % k].iter().map(|x| 1.7 * x).collect();
        let (fa, fb) = (field.eval(a)?, field.eval(&b)?);
        for theta in [0.25, 0.5, 0.75] {
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect();
            let chord = (1.0 - theta) * fa + theta * fb;
            let excess = (field.eval(&m)? - chord) / (1.0 + fa.abs() + fb.abs());
            max_violation = max_violation.max(excess);
        }
        segments += 1;
    }
    if max_violation > 1e-10 {
        return Err(Error::NotASummand(format!(
            "residual support function is not convex (excess {max_violation:e})"
        )));
    }
    let boundary_points = directions
        .iter()
        .map(|u| field.gradient(u))
        .collect::<Result<Vec<_>>>()?;
    Ok(SummandResidual {
        field,
        slide,
        segments_checked: segments,
        max_convexity_violation: max_violation,
        boundary_points,
        directions,
    })
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub eta_star: f64,
    pub mixability: MixabilityReport,
    /// `l_log - eta* h`.
    pub residual: Loss,
    /// The residual vanishes identically.
    pub degenerate: bool,
    pub min_value: f64,
    pub worst_alignment: f64,
    /// Smallest `kappa+` of the residual away from equality points (binary),
    /// or smallest normalized eigenvalue of its risk Hessian.
    pub min_curvature: f64,
    /// Grid points where the residual is flat to first order: the pencil
    /// attains `eta*` there and the residual curve has no normal.
    pub equality_points: Vec<Vec<f64>>,
}

/// Curvature tolerance for the residual.
pub const RESIDUAL_CURVATURE_TOL: f64 = 1e-8;
/// Residual speed below this fraction of the operands' speed counts as an
/// equality point.
pub const EQUALITY_SPEED_REL: f64 = 1e-8;

/// Splits the log loss as `l_log = eta* h + l*` and checks the residual.
pub fn decompose_log(h: &Loss, grid: &Grid) -> Result<Decomposition> {
    let n = h.n();
    require_proper(h, grid)?;
    if n == 2 {
        let f = losses::fairness_check(h)?;
        if !f.fair {
            return Err(Error::NotFair(format!(
                "{}: boundary values {:?}, {:?}",
                h.name(),
                f.limit_outcome1,
                f.limit_outcome2
            )));
        }
    }
    let mixability = if n == 2 {
        geom2::mixability_constant_binary(h, grid)?
    } else {
        geomn::mixability_constant_multi(h, grid)?
    };
    let eta = mixability.eta_star;
    if !(eta > 0.0) {
        return Err(Error::NotMixable);
    }
    let log = builtin_n("log", n)?;
    let hs = h.in_standard_chart();
    let residual = losses::residual(&log, &hs, eta)?.with_name(format!("log - {eta}*{}", h.name()));

    struct Sample {
        value_min: f64,
        value_scale: f64,
        speed: f64,
        speed_scale: f64,
        alignment: f64,
        curvature: Option<f64>,
    }
    let samples = grid
        .points
        .par_iter()
        .map(|p| {
            let x = p.coords();
            let lr = residual.local(x)?;
            let ll = log.local(x)?;
            let lh = hs.local(x)?;
            let vals = lr.values();
            let value_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let value_scale = ll.values().iter().map(|v| v.abs()).sum::<f64>();
            let speed = lr.jacobian().norm();
            let speed_scale = ll.jacobian().norm() + eta * lh.jacobian().norm();
            let alignment = local_properness(&lr).alignment;
            let curvature = if speed <= EQUALITY_SPEED_REL * speed_scale {
                None
            } else if n == 2 {
                let (x1, x2) = (lr.partials[0].as_jet2(), lr.partials[1].as_jet2());
                Some(geom2::signed_curvature(x1, x2, x[0])?.0)
            } else {
                let d2 = lr.risk_hessian();
                let s = 1.0 + ll.risk_hessian().trace().abs() + eta * lh.risk_hessian().trace().abs();
                Some(min_eigenvalue(&d2) / s)
            };
            Ok(Sample {
                value_min,
                value_scale,
                speed,
                speed_scale,
                alignment,
                curvature,
            })
        })
        .collect::<Result<Vec<Sample>>>()?;

    let degenerate = samples.iter().all(|s| {
        s.value_min.abs() <= 1e-12 * (1.0 + s.value_scale)
            && s.speed <= 1e-12 * (1.0 + s.speed_scale)
    });
    let min_value = samples.iter().map(|s| s.value_min).fold(f64::INFINITY, f64::min);
    let worst_alignment = samples.iter().map(|s| s.alignment).fold(0.0, f64::max);
    if degenerate {
        return Ok(Decomposition {
            eta_star: eta,
            mixability,
            residual,
            degenerate,
            min_value,
            worst_alignment,
            min_curvature: 0.0,
            equality_points: grid.points.iter().map(|p| p.coords().to_vec()).collect(),
        });
    }
    let mut equality_points = Vec::new();
    let mut min_curvature = f64::INFINITY;
    for (s, p) in samples.iter().zip(&grid.points) {
        if s.value_min < -1e-12 * (1.0 + s.value_scale) {
            return Err(Error::ResidualImproper(format!(
                "negative partial loss {:e} at {:?}",
                s.value_min,
                p.coords()
            )));
        }
        if s.alignment > TOL_ALIGN {
            return Err(Error::ResidualImproper(format!(
                "probability vector is not normal at {:?} (alignment {:e})",
                p.coords(),
                s.alignment
            )));
        }
        match s.curvature {
            None => equality_points.push(p.coords().to_vec()),
            Some(k) => {
                min_curvature = min_curvature.min(k);
                if k < -RESIDUAL_CURVATURE_TOL {
                    return Err(Error::ResidualImproper(format!(
                        "negative curvature {k:e} at {:?}",
                        p.coords()
                    )));
                }
            }
        }
    }
    Ok(Decomposition {
        eta_star: eta,
        mixability,
        residual,
        degenerate,
        min_value,
        worst_alignment,
        min_curvature,
        equality_points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Best prediction found, as a probability vector.
    pub witness: Vec<f64>,
    /// `max_i (l_i(witness) - y_i)`.
    pub gap: f64,
}

/// Slack allowed in the componentwise domination test.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Whether `y` dominates some loss vector `l(q)` componentwise.
pub fn spr_membership(h: &Loss, y: &[f64], grid: &Grid) -> Result<Membership> {
    if y.len() != h.n() {
        return Err(Error::DimMismatch { expected: h.n(), got: y.len() });
    }
    let std = h.in_standard_chart();
    let gap = |t: &[f64]| -> f64 {
        match std.values(t) {
            Ok(l) => l.iter().zip(y).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max),
            Err(_) => f64::INFINITY,
        }
    };
    let gaps: Vec<f64> = grid.points.par_iter().map(|p| gap(p.coords())).collect();
    let mut idx = 0;
    for (i, g) in gaps.iter().enumerate() {
        if *g < gaps[idx] {
            idx = i;
        }
    }
    let mut best = grid.points[idx].coords().to_vec();
    let mut best_gap = gaps[idx];
    let inside = |t: &[f64]| t.iter().all(|v| *v > 0.0) && t.iter().sum::<f64>() < 1.0;
    // compass search around the best grid point
    let mut step = grid.cell();
    while best_gap > MEMBERSHIP_TOL && step > 1e-14 {
        let mut improved = false;
        for i in 0..best.len() {
            for dir in [-1.0, 1.0] {
                let mut cand = best.clone();
                cand[i] += dir * step;
                if !inside(&cand) {
                    continue;
                }
                let g = gap(&cand);
                if g < best_gap {
                    best_gap = g;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Membership {
        member: best_gap <= MEMBERSHIP_TOL,
        witness: std_chart_raw(&best),
        gap: best_gap,
    })
}

/// Round-trip tolerance of [`inverse_loss`].
pub const INVERSE_TOL: f64 = 1e-8;

/// The probability vector whose loss vector is `l~(x)`, read off the unit
/// normal of the loss surface there.
pub fn inverse_loss(h: &Loss, x: &[f64]) -> Result<SimplexPoint> {
    let l = h.local(x)?;
    let t = l.jacobian();
    let n = t.nrows();
    let m = t.ncols();
    // cofactor expansion of the tangent frame gives a normal vector
    let mut normal: Vec<f64> = (0..n)
        .map(|k| {
            let minor = t.clone().remove_row(k);
            let det = if m == 0 { 1.0 } else { minor.determinant() };
            if k % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect();
    if normal.iter().sum::<f64>() < 0.0 {
        normal.iter_mut().for_each(|v| *v = -*v);
    }
    let phi = l.phi_values();
    if normal.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NotProper(format!(
            "normal {normal:?} at {phi:?} leaves the positive orthant"
        )));
    }
    let l1: f64 = normal.iter().sum();
    let p: Vec<f64> = normal.iter().map(|v| v / l1).collect();
    let err = p.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if err > INVERSE_TOL {
        return Err(Error::NotProper(format!(
            "normal at {phi:?} corresponds to {p:?}, not to the predicted distribution"
        )));
    }
    SimplexPoint::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{add, from_dsl, scale, translate};

    fn sp(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bayes_risk_examples() {
        let half = sp(&[0.5, 0.5]);
        let r = bayes_risk(&builtin_n("log", 2).unwrap(), &half).unwrap();
        assert!((r.bayes - 2f64.ln()).abs() < 1e-15);
        assert!((r.hess_bayes[(0, 0)] + 4.0).abs() < 1e-12);
        let r = bayes_risk(&builtin_n("brier", 2).unwrap(), &half).unwrap();
        assert!((r.bayes - 0.5).abs() < 1e-15);
        let cell = (1.0 - 2e-4) / 500.0;
        for name in ["log", "brier", "spherical"] {
            let h = builtin_n(name, 2).unwrap();
            for p in [0.13, 0.5, 0.71] {
                let r = bayes_risk_brute(&h, &sp(&[p, 1.0 - p])).unwrap();
                assert!((r.q[0] - p).abs() <= cell, "{name} {p} {:?}", r.q);
            }
        }
    }

    #[test]
    fn support_examples() {
        let log = builtin_n("log", 2).unwrap();
        let s = support(&log, &[-0.5, -0.5]).unwrap();
        assert!((s + 2f64.ln()).abs() < 1e-15);
        let s2 = support(&log, &[-1.0, -1.0]).unwrap();
        assert!((s2 - 2.0 * s).abs() < 1e-15);
        let s = support(&builtin_n("brier", 2).unwrap(), &[-0.5, -0.5]).unwrap();
        assert!((s + 0.5).abs() < 1e-15);
        assert!(matches!(support(&log, &[0.0, -1.0]), Err(Error::BadDirection(_))));
        assert!(matches!(support(&log, &[-1.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn support_field_linear_algebra() {
        let log = builtin_n("log", 3).unwrap();
        let b = builtin_n("brier", 3).unwrap();
        let sum = add(&log, &b).unwrap();
        let u = [-0.2, -0.7, -0.4];
        let lhs = support(&sum, &u).unwrap();
        let rhs = support(&log, &u).unwrap() + support(&b, &u).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let c = [0.3, -1.0, 2.0];
        let tr = translate(&log, &c).unwrap();
        let want = support(&log, &u).unwrap() + c.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        assert!((support(&tr, &u).unwrap() - want).abs() < 1e-12);
        let f = SupportField::from_terms(vec![(1.0, log.clone()), (-0.5, b.clone())]).unwrap();
        let g = f.gradient(&u).unwrap();
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn slide_examples() {
        let g = Grid::default_for(2).unwrap();
        let (b, l) = (builtin_n("brier", 2).unwrap(), builtin_n("log", 2).unwrap());
        assert!(slides_freely(&b, &l, 1.0, &g).unwrap().slides_freely);
        let v = slides_freely(&b, &l, 1.1, &g).unwrap();
        assert!(!v.slides_freely);
        assert!((v.worst_point[0] - 0.5).abs() < 0.01);
        let v = slides_freely(&l, &l, 1.0, &g).unwrap();
        assert!(v.slides_freely && v.convexity_margin.abs() < 1e-12);
    }

    #[test]
    fn summand_examples() {
        let g = Grid::default_for(2).unwrap();
        let l = builtin_n("log", 2).unwrap();
        let r = summand_residual(&l, &l, 0.4, &g).unwrap();
        let six = scale(&l, 0.6).unwrap();
        for u in &r.directions {
            let a = r.field.eval(u).unwrap();
            let b = support(&six, u).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        assert!(summand_residual(&l, &builtin_n("spherical", 2).unwrap(), 1.0, &g).is_ok());
        assert!(matches!(
            summand_residual(&l, &builtin_n("brier", 2).unwrap(), 1.2, &g),
            Err(Error::NotASummand(_))
        ));
    }

    #[test]
    fn decomposition_examples() {
        let g = Grid::default_for(2).unwrap();
        let log = builtin_n("log", 2).unwrap();
        let d = decompose_log(&scale(&log, 0.5).unwrap(), &g).unwrap();
        assert!((d.eta_star - 2.0).abs() < 1e-9);
        assert!(d.degenerate);
        let d = decompose_log(&builtin_n("spherical", 2).unwrap(), &g).unwrap();
        assert!((d.eta_star - 2f64.sqrt()).abs() < 1e-9);
        assert!(!d.degenerate && d.min_value >= 0.0);
        assert!(d.min_curvature >= -RESIDUAL_CURVATURE_TOL);
        let d = decompose_log(&builtin_n("brier", 2).unwrap(), &g).unwrap();
        assert!(d.equality_points.iter().all(|p| (p[0] - 0.5).abs() < 0.01));
        assert!(d.min_curvature >= 0.0);
    }

    #[test]
    fn membership_examples() {
        let g = Grid::default_for(2).unwrap();
        let log = builtin_n("log", 2).unwrap();
        let ln2 = 2f64.ln();
        let m = spr_membership(&log, &[ln2, ln2], &g).unwrap();
        assert!(m.member);
        assert!((m.witness[0] - 0.5).abs() < 1e-9);
        assert!(!spr_membership(&log, &[0.1, 0.1], &g).unwrap().member);
        let l0 = log.values(&[0.3]).unwrap();
        assert!(spr_membership(&log, &[l0[0] + 1.0, l0[1] + 1.0], &g).unwrap().member);
    }

    #[test]
    fn inverse_examples() {
        let p = inverse_loss(&builtin_n("log", 2).unwrap(), &[0.5]).unwrap();
        assert!((p.coords()[0] - 0.5).abs() < 1e-12);
        let p = inverse_loss(&builtin_n("brier", 3).unwrap(), &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(p.coords().iter().all(|c| (c - 1.0 / 3.0).abs() < 1e-12));
        let swapped = from_dsl(&["-ln(1-t1)", "-ln(t1)"], 2).unwrap();
        for t in [0.1, 0.3, 0.8] {
            assert!(matches!(inverse_loss(&swapped, &[t]), Err(Error::NotProper(_))));
        }
    }
}
