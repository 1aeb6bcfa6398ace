//! Points of the probability simplex, the standard chart and interior grids.
//!
//! The standard chart maps `t = (t_1, ..., t_{n-1})` with `t_i > 0` and
//! `sum t_i < 1` to `(t_1, ..., t_{n-1}, 1 - sum t_i)`.

use crate::error::{Error, Result};

/// Default margin kept between grid points and the simplex boundary.
pub const DEFAULT_MARGIN: f64 = 1e-4;

/// A probability vector with `n` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::OutOfDomain(format!(
                "simplex point needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::OutOfDomain(format!("negative coordinate in {coords:?}")));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfDomain(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn is_interior(&self, margin: f64) -> bool {
        self.coords.iter().all(|&c| c >= margin && c > 0.0)
    }

    /// Inverse of the standard chart.
    pub fn to_chart(&self) -> Result<ChartPoint> {
        ChartPoint::new(self.coords[..self.coords.len() - 1].to_vec())
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Interior point of the standard chart domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    t: Vec<f64>,
}

impl ChartPoint {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::OutOfDomain("empty chart point".into()));
        }
        let sum: f64 = t.iter().sum();
        if t.iter().any(|x| !(x.is_finite() && *x > 0.0)) || !(sum < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "chart point {t:?} is not in the open chart domain"
            )));
        }
        Ok(Self { t })
    }

    /// Binary shorthand.
    pub fn scalar(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn coords(&self) -> &[f64] {
        &self.t
    }

    /// Number of outcomes.
    pub fn n(&self) -> usize {
        self.t.len() + 1
    }

    pub fn last(&self) -> f64 {
        1.0 - self.t.iter().sum::<f64>()
    }
}

/// Standard chart `t -> (t, 1 - sum t)`.
pub fn std_chart(t: &ChartPoint) -> SimplexPoint {
    let mut coords = t.t.clone();
    coords.push(t.last());
    SimplexPoint { coords }
}

/// Same as [`std_chart`] for raw coordinates; no domain check.
pub(crate) fn std_chart_raw(t: &[f64]) -> Vec<f64> {
    let mut coords = t.to_vec();
    coords.push(1.0 - t.iter().sum::<f64>());
    coords
}

/// Drops the last coordinate.
pub fn project_pi(y: &[f64]) -> Vec<f64> {
    y[..y.len().saturating_sub(1)].to_vec()
}

/// Default points per axis: 1001 for binary problems, 61 (60 subdivisions)
/// for three outcomes, 21 for four and 11 beyond.
pub fn default_resolution(n: usize) -> usize {
    match n {
        0..=2 => 1001,
        3 => 61,
        4 => 21,
        _ => 11,
    }
}

/// Barycentric lattice of the simplex shrunk by `margin`.
///
/// Coordinates are `margin + k_i * step` with `sum k_i = resolution - 1` and
/// `step = (1 - n * margin) / (resolution - 1)`; for `n = 2` this is the
/// evenly spaced grid on `[margin, 1 - margin]`. Points are emitted in
/// lexicographic order of `(k_1, ..., k_{n-1})`.
pub fn interior_grid(n: usize, resolution: usize, margin: f64) -> Result<Vec<ChartPoint>> {
    if n < 2 {
        return Err(Error::BadConfig(format!("need n >= 2 outcomes, got {n}")));
    }
    if resolution < 3 {
        return Err(Error::BadConfig(format!("resolution must be >= 3, got {resolution}")));
    }
    if !(margin > 0.0 && margin < 1.0 / (2.0 * n as f64)) {
        return Err(Error::BadConfig(format!(
            "margin must lie in (0, 1/(2n)) = (0, {}), got {margin}",
            1.0 / (2.0 * n as f64)
        )));
    }
    let subdivisions = resolution - 1;
    let span = 1.0 - n as f64 * margin;
    let dims = n - 1;
    let mut out = Vec::new();
    let mut ks = vec![0usize; dims];
    loop {
        let used: usize = ks.iter().sum();
        if used <= subdivisions {
            let t: Vec<f64> = ks
                .iter()
                .map(|&k| margin + span * (k as f64 / subdivisions as f64))
                .collect();
            out.push(ChartPoint::new(t)?);
        }
        // odometer increment, last index fastest
        let mut i = dims;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            ks[i] += 1;
            if ks[..=i].iter().sum::<usize>() <= subdivisions {
                break;
            }
            ks[i] = 0;
        }
    }
}

/// A grid of chart points together with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub resolution: usize,
    pub margin: f64,
    pub points: Vec<ChartPoint>,
}

impl Grid {
    pub fn new(n: usize, resolution: usize, margin: f64) -> Result<Self> {
        Ok(Self {
            n,
            resolution,
            margin,
            points: interior_grid(n, resolution, margin)?,
        })
    }

    pub fn default_for(n: usize) -> Result<Self> {
        Self::new(n, default_resolution(n), DEFAULT_MARGIN)
    }

    /// Spacing between neighbouring lattice points along one axis.
    pub fn cell(&self) -> f64 {
        (1.0 - self.n as f64 * self.margin) / (self.resolution - 1) as f64
    }

    /// Binary grids as plain scalars.
    pub fn scalars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coords()[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_chart_examples() {
        let p = std_chart(&ChartPoint::scalar(0.5).unwrap());
        assert_eq!(p.coords(), &[0.5, 0.5]);
        let p = std_chart(&ChartPoint::new(vec![1.0 / 3.0, 1.0 / 3.0]).unwrap());
        for c in p.coords() {
            assert!((c - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = std_chart(&ChartPoint::scalar(0.25).unwrap());
        assert_eq!(p.coords(), &[0.25, 0.75]);
    }

    #[test]
    fn chart_rejects_boundary() {
        assert!(ChartPoint::scalar(0.0).is_err());
        assert!(ChartPoint::scalar(1.0).is_err());
        assert!(ChartPoint::new(vec![0.5, 0.5]).is_err());
        assert!(ChartPoint::new(vec![-0.1, 0.3]).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let p = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let back = std_chart(&p.to_chart().unwrap());
        for (a, b) in back.coords().iter().zip(p.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn binary_grid_examples() {
        let g = interior_grid(2, 3, 0.1).unwrap();
        let t: Vec<f64> = g.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(t.len(), 3);
        assert!((t[0] - 0.1).abs() < 1e-15);
        assert!((t[1] - 0.5).abs() < 1e-15);
        assert!((t[2] - 0.9).abs() < 1e-15);

        let g = interior_grid(2, 1001, 1e-4).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g[0].coords()[0] - 1e-4).abs() < 1e-15);
        assert!((g[1000].coords()[0] - (1.0 - 1e-4)).abs() < 1e-14);
    }

    #[test]
    fn ternary_lattice_matches_enumeration() {
        let eps = 0.05;
        let g = interior_grid(3, 3, eps).unwrap();
        // brute force: all (i, j, k) in {0,1,2}^3 with i+j+k = 2
        let step = (1.0 - 3.0 * eps) / 2.0;
        let mut brute = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    if i + j + k == 2 {
                        brute.push((eps + i as f64 * step, eps + j as f64 * step));
                    }
                }
            }
        }
        assert_eq!(g.len(), 6);
        assert_eq!(brute.len(), 6);
        for (p, b) in g.iter().zip(&brute) {
            assert!((p.coords()[0] - b.0).abs() < 1e-15);
            assert!((p.coords()[1] - b.1).abs() < 1e-15);
        }
        for p in &g {
            let s = std_chart(p);
            assert!(s.is_interior(eps - 1e-15));
        }
    }

    #[test]
    fn grid_points_are_valid_simplex_points() {
        for n in 2..=4 {
            let g = Grid::default_for(n).unwrap();
            for p in &g.points {
                let s = SimplexPoint::new(std_chart(p).into_coords()).unwrap();
                assert!(s.is_interior(DEFAULT_MARGIN * (1.0 - 1e-9)));
            }
        }
    }

    #[test]
    fn grid_rejects_bad_config() {
        assert!(interior_grid(2, 2, 0.1).is_err());
        assert!(interior_grid(3, 10, 0.2).is_err());
        assert!(interior_grid(3, 10, 0.0).is_err());
    }

    #[test]
    fn projection_drops_last() {
        assert_eq!(project_pi(&[1.0, 2.0, 3.0]), vec![1.0, 2.0]);
        assert_eq!(project_pi(&[0.69, 0.69]), vec![0.69]);
        let ln3 = 3f64.ln();
        let x = project_pi(&[-(1.0f64 / 3.0).ln(); 3]);
        assert!((x[0] - ln3).abs() < 1e-15 && (x[1] - ln3).abs() < 1e-15);
    }
}
