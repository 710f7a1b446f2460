//! Densities and potentials: grid functions tied to a shared grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Floor applied inside logarithms only; it never modifies stored data.
pub const LOG_FLOOR: f64 = 1e-300;

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn check_len(grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidValues(format!(
            "expected {} values, got {}",
            grid.len(),
            values.len()
        )));
    }
    Ok(())
}

/// Nonnegative piecewise-constant density with unit mass. Inactive cells
/// always hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Density {
    /// Rescale nonnegative cell values to unit mass. Values whose mass is 1 up
    /// to summation round-off are kept as they are.
    pub fn normalize(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        check_len(&grid, &values)?;
        for (i, v) in values.iter_mut().enumerate() {
            if !grid.is_active(i) {
                *v = 0.0;
                continue;
            }
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidValues(format!(
                    "cell {i} holds {v}; densities must be finite and >= 0"
                )));
            }
        }
        let mass = grid.integrate(&values);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        // data already normalized up to summation round-off is left untouched,
        // which makes normalization idempotent
        let roundoff = 2.0 * grid.active_count() as f64 * f64::EPSILON;
        if (mass - 1.0).abs() > roundoff {
            for v in values.iter_mut() {
                *v /= mass;
            }
        }
        Ok(Self { grid, values })
    }

    /// Normalize `exp(log_values)` without overflow; entries of `-inf` map to 0.
    pub fn from_log(grid: Arc<Grid>, log_values: &[f64]) -> Result<Self> {
        check_len(&grid, log_values)?;
        let top = grid
            .active_indices()
            .map(|i| log_values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        let values = (0..grid.len())
            .map(|i| {
                if grid.is_active(i) {
                    (log_values[i] - top).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Self::normalize(grid, values)
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::normalize(grid, values)
    }

    pub fn uniform(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self::normalize(grid, vec![1.0; n]).expect("grids have at least one active cell")
    }

    /// Gibbs density proportional to `exp(-V)`.
    pub fn gibbs(v: &Potential) -> Self {
        let neg: Vec<f64> = v.values.iter().map(|x| -x).collect();
        Self::from_log(v.grid.clone(), &neg).expect("potential values are finite")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Smallest value over active cells.
    pub fn min_active(&self) -> f64 {
        self.grid
            .active_indices()
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every active cell is at least `floor`.
    pub fn is_positive_above(&self, floor: f64) -> bool {
        self.min_active() >= floor
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.min_active() > 0.0
    }

    /// Fail with the first nonpositive active cell.
    pub fn require_positive(&self) -> Result<()> {
        for i in self.grid.active_indices() {
            if self.values[i] <= 0.0 {
                return Err(Error::NotStrictlyPositive {
                    cell: i,
                    value: self.values[i],
                });
            }
        }
        Ok(())
    }

    /// `log` of the cell values (floored), inactive cells set to 0.
    pub fn log_values(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                if self.grid.is_active(i) {
                    self.values[i].max(LOG_FLOOR).ln()
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self.grid.integrate(&diff))
    }

    /// Expectation of a grid function.
    pub fn expect(&self, f: &[f64]) -> f64 {
        let cm = self.grid.cell_measure();
        self.grid
            .active_indices()
            .map(|i| f[i] * self.values[i])
            .sum::<f64>()
            * cm
    }
}

/// Energy potential with a declared convexity modulus `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Arc<Grid>,
    values: Vec<f64>,
    alpha: f64,
}

/// Outcome of comparing discrete second differences with the declared modulus.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConvexityAudit {
    pub declared_alpha: f64,
    /// Smallest second difference over interior stencils (both axes in 2-D).
    pub min_second_difference: f64,
    pub tolerance: f64,
    pub consistent: bool,
}

impl Potential {
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>, alpha: f64) -> Result<Self> {
        check_len(&grid, &values)?;
        if !alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !grid.is_active(i) {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::InvalidValues(format!(
                    "potential is not finite at cell {i}"
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            alpha,
        })
    }

    pub fn from_fn(grid: Arc<Grid>, alpha: f64, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, values, alpha)
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            alpha: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same potential shifted by a constant (same modulus).
    pub fn shifted(&self, c: f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.grid.is_active(i) { v + c } else { 0.0 })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            alpha: self.alpha,
        }
    }

    /// Audit the declared modulus against discrete second differences
    /// `(V[i-1] - 2 V[i] + V[i+1]) / h^2` on interior stencils, with
    /// tolerance `1e-8 (1 + |alpha|)`.
    pub fn convexity_audit(&self) -> ConvexityAudit {
        let g = &self.grid;
        let v = &self.values;
        let mut min_dd = f64::INFINITY;
        let axes: &[(usize, usize, f64)] = if g.dim() == 1 {
            &[(1, 0, 0.0)]
        } else {
            &[(1, 0, 0.0), (0, 1, 0.0)]
        };
        for &(sx, sy, _) in axes {
            let h = if sx == 1 { g.hx() } else { g.hy() };
            for idx in g.active_indices() {
                let (ix, iy) = g.coords(idx);
                if ix < sx || iy < sy || ix + sx >= g.nx() || iy + sy >= g.ny() {
                    continue;
                }
                let lo = g.index(ix - sx, iy - sy);
                let hi = g.index(ix + sx, iy + sy);
                if !g.is_active(lo) || !g.is_active(hi) {
                    continue;
                }
                min_dd = min_dd.min((v[lo] - 2.0 * v[idx] + v[hi]) / (h * h));
            }
        }
        let tolerance = 1e-8 * (1.0 + self.alpha.abs());
        ConvexityAudit {
            declared_alpha: self.alpha,
            min_second_difference: min_dd,
            tolerance,
            consistent: !(min_dd < self.alpha - tolerance),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn normalize_constants() {
        let d = Density::normalize(unit(10), vec![1.0; 10]).unwrap();
        assert!(d.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let d = Density::normalize(unit(10), vec![2.0; 10]).unwrap();
        assert!(d.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn normalize_two_cells() {
        // sum v h = (1 + 3) * 0.5 = 2
        let d = Density::normalize(unit(2), vec![1.0, 3.0]).unwrap();
        assert_eq!(d.values(), &[0.5, 1.5]);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        assert!(matches!(
            Density::normalize(unit(4), vec![0.0; 4]),
            Err(Error::DegenerateDensity)
        ));
        assert!(Density::normalize(unit(2), vec![1.0, -1.0]).is_err());
        assert!(Density::normalize(unit(2), vec![1.0]).is_err());
    }

    #[test]
    fn gibbs_is_positive_and_normalized() {
        let g = unit(50);
        let v = Potential::from_fn(g, 4.0, |p| 2.0 * p[0] * p[0]).unwrap();
        let d = Density::gibbs(&v);
        assert!(d.is_strictly_positive());
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convexity_audit_flags_wrong_modulus() {
        let g = unit(50);
        let v = Potential::from_fn(g.clone(), 1.0, |p| 0.5 * p[0] * p[0]).unwrap();
        assert!(v.convexity_audit().consistent);
        let w = Potential::from_fn(g, 2.0, |p| 0.5 * p[0] * p[0]).unwrap();
        assert!(!w.convexity_audit().consistent);
    }
}
