//! Geometry of loss surfaces for any number of outcomes.
//!
//! The loss surface is viewed either through the chart of the loss or as a
//! graph `x -> (x, f(x))` over the first `n - 1` loss coordinates. Properness
//! makes the probability vector normal to the surface, so two losses can be
//! compared at the same `p`: their tangent planes coincide there.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom2::{GridMeta, MixabilityReport, Route};
use crate::losses::{local_properness, require_proper, Local, Loss};
use crate::numerics::{min_eigenvalue, pencil_eigenvalues};
use crate::simplex::Grid;

/// Relative tolerance between the two principal-curvature routes.
pub const SPECTRUM_TOL: f64 = 1e-8;
/// Relative tolerance between the solved and the closed-form graph gradient.
pub const GRADIENT_TOL: f64 = 1e-7;
/// Normalized semidefiniteness tolerance.
pub const PSD_TOL: f64 = 1e-9;

/// `[D^2 L~]_ij = sum_k d_ij l~_k * Phi_k` at chart point `x` of `h`.
pub fn conditional_risk_hessian(h: &Loss, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(h.local(x)?.risk_hessian())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SffChart {
    Std,
    Graph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SffSample {
    pub chart: SffChart,
    /// Chart point of the loss the sample was taken at.
    pub base: Vec<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    /// Ascending eigenvalues of `g^{-1} h`.
    pub principal_curvatures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPatch {
    pub x_star: Vec<f64>,
    pub f_value: f64,
    pub grad_f: DVector<f64>,
    pub hess_f: DMatrix<f64>,
}

fn graph_patch_local(l: &Local) -> Result<GraphPatch> {
    let n = l.partials.len();
    let m = n - 1;
    let p = l.phi_values();
    let j = DMatrix::from_fn(m, m, |k, i| l.partials[k].grad[i]);
    let lu = j.transpose().lu();
    let grad_n = l.partials[m].grad.clone();
    let grad_f = lu.solve(&grad_n).ok_or_else(|| Error::SingularJacobian(p.clone()))?;
    if !grad_f.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularJacobian(p));
    }
    let closed = DVector::from_fn(m, |k, _| -p[k] / p[m]);
    if (&grad_f - &closed).norm() > GRADIENT_TOL * (1.0 + closed.norm()) {
        return Err(Error::NotProper(format!(
            "normal is not the probability vector at {p:?}: graph slope {:?} vs {:?}",
            grad_f.as_slice(),
            closed.as_slice()
        )));
    }
    // l~_n = f(x(s))  =>  H_n = J^T D^2f J + sum_k d_k f H_k
    let mut rhs = l.partials[m].hess.clone();
    for k in 0..m {
        rhs -= &l.partials[k].hess * grad_f[k];
    }
    let x = lu.solve(&rhs).ok_or_else(|| Error::SingularJacobian(p.clone()))?;
    let y = lu
        .solve(&x.transpose())
        .ok_or_else(|| Error::SingularJacobian(p.clone()))?
        .transpose();
    let hess_f = (&y + y.transpose()) * 0.5;
    Ok(GraphPatch {
        x_star: l.values()[..m].to_vec(),
        f_value: l.partials[m].v,
        grad_f,
        hess_f,
    })
}

/// Graph representation of the loss surface near `l~(x)`.
pub fn graph_patch(h: &Loss, x: &[f64]) -> Result<GraphPatch> {
    graph_patch_local(&h.local(x)?)
}

fn spectrum(h: &DMatrix<f64>, g: &DMatrix<f64>, point: &[f64]) -> Result<Vec<f64>> {
    pencil_eigenvalues(h, g).ok_or_else(|| Error::SingularJacobian(point.to_vec()))
}

fn graph_sff_from_patch(patch: &GraphPatch, base: &[f64], point: &[f64]) -> Result<SffSample> {
    let m = patch.grad_f.len();
    let norm = (1.0 + patch.grad_f.norm_squared()).sqrt();
    let g = DMatrix::identity(m, m) + &patch.grad_f * patch.grad_f.transpose();
    let h = &patch.hess_f / norm;
    let principal_curvatures = spectrum(&h, &g, point)?;
    Ok(SffSample {
        chart: SffChart::Graph,
        base: base.to_vec(),
        g,
        h,
        principal_curvatures,
    })
}

/// Second fundamental form in the graph chart.
pub fn sff_graph(h: &Loss, x: &[f64]) -> Result<SffSample> {
    let l = h.local(x)?;
    let patch = graph_patch_local(&l)?;
    graph_sff_from_patch(&patch, x, &l.phi_values())
}

/// Second fundamental form in the chart of the loss, cross-checked against
/// the graph chart by comparing principal curvatures.
pub fn sff(h: &Loss, x: &[f64]) -> Result<SffSample> {
    let l = h.local(x)?;
    let pp = local_properness(&l);
    let point = l.phi_values();
    if !(pp.aligned() && pp.positive()) {
        return Err(Error::NotProper(format!(
            "{} at {point:?}: alignment {:e}, min eigenvalue {:e}",
            h.name(),
            pp.alignment,
            pp.min_eig
        )));
    }
    let jac = l.jacobian();
    let g = jac.transpose() * &jac;
    let phi_norm = DVector::from_vec(point.clone()).norm();
    let hh = l.risk_hessian() / phi_norm;
    let principal_curvatures = spectrum(&hh, &g, &point)?;
    let graph = graph_sff_from_patch(&graph_patch_local(&l)?, x, &point)?;
    let scale = principal_curvatures
        .iter()
        .chain(&graph.principal_curvatures)
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let agree = principal_curvatures
        .iter()
        .zip(&graph.principal_curvatures)
        .all(|(a, b)| (a - b).abs() <= SPECTRUM_TOL * scale);
    if !agree {
        return Err(Error::SpectrumMismatch {
            point,
            std: principal_curvatures,
            graph: graph.principal_curvatures,
        });
    }
    Ok(SffSample {
        chart: SffChart::Std,
        base: x.to_vec(),
        g,
        h: hh,
        principal_curvatures,
    })
}

/// Graph-chart second fundamental form of the log loss at standard
/// coordinates `s`, in closed form:
/// `(delta_km s_k + s_k s_m / s_n) / sqrt(sum_i s_i^2 + s_n^2)`.
pub fn log_sff(s: &[f64]) -> DMatrix<f64> {
    let m = s.len();
    let sn = 1.0 - s.iter().sum::<f64>();
    let norm = (s.iter().map(|v| v * v).sum::<f64>() + sn * sn).sqrt();
    DMatrix::from_fn(m, m, |k, j| {
        let diag = if k == j { s[k] } else { 0.0 };
        (diag + s[k] * s[j] / sn) / norm
    })
}

/// Smallest eigenvalue of the pencil `(h^l, h^log)` at chart point `x`.
pub fn pencil_eta(h: &Loss, x: &[f64]) -> Result<f64> {
    let l = h.local(x)?;
    let p = l.phi_values();
    let patch = graph_patch_local(&l)?;
    let norm = (1.0 + patch.grad_f.norm_squared()).sqrt();
    let hl = &patch.hess_f / norm;
    let hlog = log_sff(&p[..p.len() - 1]);
    let ev = pencil_eigenvalues(&hl, &hlog).ok_or_else(|| Error::PencilSingular(p.clone()))?;
    Ok(ev[0])
}

/// Mixability constant as the grid infimum of [`pencil_eta`].
pub fn mixability_constant_multi(h: &Loss, grid: &Grid) -> Result<MixabilityReport> {
    require_proper(h, grid)?;
    let vals = grid
        .points
        .par_iter()
        .map(|p| pencil_eta(h, &h.chart_coords(p)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut idx = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[idx] {
            idx = i;
        }
    }
    let eta_star = vals[idx].max(0.0);
    Ok(MixabilityReport {
        eta_star,
        argmin: grid.points[idx].coords().to_vec(),
        route: Route::Pencil,
        grid: GridMeta::from(grid),
        refined: false,
        routes: vec![(Route::Pencil, eta_star)],
        boundary: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpProjVerdict {
    pub eta: f64,
    /// Normalized smallest eigenvalue of `A` at each grid point.
    pub min_eigs: Vec<f64>,
    pub margin: f64,
    pub convex: bool,
    /// Standard coordinates of the point attaining `margin`.
    pub worst_point: Vec<f64>,
}

/// `A_km = d_km f - eta (-delta_km d_k f + d_k f d_m f)` from a graph patch.
pub fn exp_projection_matrix(patch: &GraphPatch, eta: f64) -> DMatrix<f64> {
    let df = &patch.grad_f;
    let m = df.len();
    let bracket = DMatrix::from_fn(m, m, |k, j| {
        let diag = if k == j { -df[k] } else { 0.0 };
        diag + df[k] * df[j]
    });
    &patch.hess_f - bracket * eta
}

/// Convexity of the image of the superprediction set under
/// `y -> exp(-eta y)`, tested through `A` on the grid.
pub fn exp_projection_convexity(h: &Loss, eta: f64, grid: &Grid) -> Result<ExpProjVerdict> {
    require_proper(h, grid)?;
    let min_eigs = grid
        .points
        .par_iter()
        .map(|p| {
            let patch = graph_patch(h, &h.chart_coords(p)?)?;
            let a = exp_projection_matrix(&patch, eta);
            let scale = 1.0
                + patch.hess_f.trace().abs()
                + eta * (patch.grad_f.norm_squared() - patch.grad_f.sum()).abs();
            Ok(min_eigenvalue(&a) / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut idx = 0;
    for (i, v) in min_eigs.iter().enumerate() {
        if *v < min_eigs[idx] {
            idx = i;
        }
    }
    let margin = min_eigs[idx];
    Ok(ExpProjVerdict {
        eta,
        margin,
        convex: margin >= -PSD_TOL,
        worst_point: grid.points[idx].coords().to_vec(),
        min_eigs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2::curvature_plus;
    use crate::losses::{builtin_n, from_dsl, scale};

    const BARY: [f64; 2] = [1.0 / 3.0, 1.0 / 3.0];

    #[test]
    fn risk_hessian_examples() {
        let h = conditional_risk_hessian(&builtin_n("log", 3).unwrap(), &BARY).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[6.0, 3.0, 3.0, 6.0]);
        assert!((h - want).norm() < 1e-12);
        let lin = from_dsl(&["t1", "t2", "1-t1-t2"], 3).unwrap();
        assert!(conditional_risk_hessian(&lin, &[0.2, 0.3]).unwrap().norm() == 0.0);
        let h = conditional_risk_hessian(&builtin_n("brier", 2).unwrap(), &[0.5]).unwrap();
        assert!((h[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn graph_patch_examples() {
        let g = graph_patch(&builtin_n("log", 3).unwrap(), &BARY).unwrap();
        assert!((g.grad_f[0] + 1.0).abs() < 1e-12 && (g.grad_f[1] + 1.0).abs() < 1e-12);
        assert!((g.f_value - 3f64.ln()).abs() < 1e-14);
        for name in ["log", "brier"] {
            let g = graph_patch(&builtin_n(name, 2).unwrap(), &[0.5]).unwrap();
            assert!((g.grad_f[0] + 1.0).abs() < 1e-12);
        }
        let swapped = from_dsl(&["-ln(1-t1)", "-ln(t1)"], 2).unwrap();
        assert!(matches!(graph_patch(&swapped, &[0.25]), Err(Error::NotProper(_))));
    }

    #[test]
    fn sff_examples() {
        let log3 = builtin_n("log", 3).unwrap();
        let g = sff_graph(&log3, &BARY).unwrap();
        let r3 = 3f64.sqrt();
        let want = DMatrix::from_row_slice(2, 2, &[2.0 / r3, 1.0 / r3, 1.0 / r3, 2.0 / r3]);
        assert!((&g.h - want).norm() < 1e-12);
        assert!((log_sff(&BARY) - &g.h).norm() < 1e-12);
        let s = sff(&log3, &BARY).unwrap();
        assert_eq!(s.chart, SffChart::Std);

        for name in ["log", "brier", "spherical"] {
            let h = builtin_n(name, 2).unwrap();
            for t in [0.2, 0.5, 0.9] {
                let k = sff(&h, &[t]).unwrap().principal_curvatures[0];
                let kp = curvature_plus(&h, t).unwrap().kappa_plus;
                assert!((k - kp).abs() < 1e-8 * kp);
            }
        }

        let b = builtin_n("brier", 3).unwrap();
        let b2 = scale(&b, 2.0).unwrap();
        let k1 = sff(&b, &[0.2, 0.5]).unwrap().principal_curvatures;
        let k2 = sff(&b2, &[0.2, 0.5]).unwrap().principal_curvatures;
        for (a, c) in k1.iter().zip(&k2) {
            assert!((a / 2.0 - c).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn log_sff_scalar() {
        // graph-chart value; the principal curvature divides by 1 + f'^2 = 2
        let h = log_sff(&[0.5]);
        assert!((h[(0, 0)] - 2f64.sqrt()).abs() < 1e-14);
        let h = log_sff(&[0.5, 0.25]);
        let norm = (0.25f64 + 0.0625 + 0.0625).sqrt();
        assert!((h[(0, 0)] - (0.5 + 1.0) / norm).abs() < 1e-14);
        assert!((h[(0, 1)] - 0.5 / norm).abs() < 1e-14);
        assert!((h[(1, 1)] - (0.25 + 0.25) / norm).abs() < 1e-14);
    }

    #[test]
    fn pencil_examples() {
        let g3 = Grid::default_for(3).unwrap();
        let r = mixability_constant_multi(&builtin_n("log", 3).unwrap(), &g3).unwrap();
        assert!((r.eta_star - 1.0).abs() < 1e-9);
        let r = mixability_constant_multi(&builtin_n("brier", 3).unwrap(), &g3).unwrap();
        assert!((r.eta_star - 1.0).abs() < 2e-3, "{}", r.eta_star);
        let s = scale(&builtin_n("log", 3).unwrap(), 2.0).unwrap();
        let r = mixability_constant_multi(&s, &g3).unwrap();
        assert!((r.eta_star - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exp_projection_examples() {
        let g2 = Grid::default_for(2).unwrap();
        let b = builtin_n("brier", 2).unwrap();
        assert!(exp_projection_convexity(&b, 0.9, &g2).unwrap().convex);
        let v = exp_projection_convexity(&b, 1.1, &g2).unwrap();
        assert!(!v.convex);
        assert!((v.worst_point[0] - 0.5).abs() < 0.05);
        let g3 = Grid::default_for(3).unwrap();
        assert!(exp_projection_convexity(&builtin_n("log", 3).unwrap(), 1.0, &g3).unwrap().convex);
    }
}
