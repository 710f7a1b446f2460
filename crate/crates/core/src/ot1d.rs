//! Exact quadratic optimal transport between piecewise-constant densities on
//! an interval.
//!
//! The CDF of a cell-average density is piecewise linear and its quantile is
//! the exact generalized inverse, so the monotone map `T = Q_g o F_rho` and the
//! transport cost can be evaluated without any discretization beyond the
//! densities themselves.

use std::io::Write;

use serde::Serialize;

use crate::energy::W2Backend;
use crate::error::{Error, Result};
use crate::field::{same_grid, Density};
use crate::grid::{Grid, Shape};

/// CDF and quantile of a 1-D cell-average density.
#[derive(Debug, Clone)]
pub struct CdfQuantile {
    a: f64,
    h: f64,
    /// Cumulative mass at cell edges, `cum[0] = 0`, `cum[n] = 1`.
    cum: Vec<f64>,
}

impl CdfQuantile {
    pub fn new(rho: &Density) -> Result<Self> {
        let grid = rho.grid();
        grid.require_1d()?;
        let Shape::Interval { a, .. } = *grid.shape() else {
            unreachable!()
        };
        let h = grid.hx();
        let n = grid.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for &v in rho.values() {
            acc += v * h;
            cum.push(acc);
        }
        for c in cum.iter_mut() {
            *c /= acc;
        }
        cum[n] = 1.0;
        Ok(Self { a, h, cum })
    }

    pub fn cells(&self) -> usize {
        self.cum.len() - 1
    }

    /// Cumulative mass at the cell edges.
    pub fn edges_cdf(&self) -> &[f64] {
        &self.cum
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.cells();
        let s = (x - self.a) / self.h;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return 1.0;
        }
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        self.cum[i] + w * (self.cum[i + 1] - self.cum[i])
    }

    /// `inf { x : cdf(x) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.a;
        }
        let n = self.cells();
        let p = p.min(1.0);
        // first cell whose right-edge cumulative reaches p; cum[i] < p there
        let i = self.cum[1..].partition_point(|&c| c < p).min(n - 1);
        let m = self.cum[i + 1] - self.cum[i];
        let edge = self.a + i as f64 * self.h;
        if m <= 0.0 {
            return edge;
        }
        let w = ((p - self.cum[i]) / m).clamp(0.0, 1.0);
        edge + w * self.h
    }
}

/// CDF and quantile of `rho`.
pub fn cdf_quantile(rho: &Density) -> Result<CdfQuantile> {
    CdfQuantile::new(rho)
}

fn interval_of(grid: &Grid) -> Result<(f64, f64)> {
    grid.require_1d()?;
    match *grid.shape() {
        Shape::Interval { a, b } => Ok((a, b)),
        _ => unreachable!(),
    }
}

/// Exact `W2^2` between cell-average densities, integrated in quantile space:
/// `int_0^1 |Q_rho(p) - Q_g(p)|^2 dp`. Both quantiles are linear between the
/// merged cumulative breakpoints, so two-point Gauss-Legendre is exact on
/// every piece.
pub fn w2_squared(rho: &Density, g: &Density) -> Result<f64> {
    same_grid(rho.grid(), g.grid())?;
    let qr = CdfQuantile::new(rho)?;
    let qg = CdfQuantile::new(g)?;
    Ok(w2_squared_cq(&qr, &qg))
}

pub(crate) fn w2_squared_cq(qr: &CdfQuantile, qg: &CdfQuantile) -> f64 {
    let mut breaks: Vec<f64> = qr.cum.iter().chain(qg.cum.iter()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let off = 0.5 / 3f64.sqrt();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (p0, p1) = (w[0], w[1]);
        let len = p1 - p0;
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (p0 + p1);
        for p in [mid - off * len, mid + off * len] {
            let d = qr.quantile(p) - qg.quantile(p);
            total += 0.5 * len * d * d;
        }
    }
    total
}

/// The quantile of `g` must be continuous on (0, 1): `g` may vanish near the
/// ends of the interval but not between two charged cells.
fn check_target_support(g: &Density) -> Result<()> {
    let v = g.values();
    let first = v.iter().position(|&x| x > 0.0);
    let last = v.iter().rposition(|&x| x > 0.0);
    if let (Some(f), Some(l)) = (first, last) {
        if let Some(k) = (f..=l).find(|&k| v[k] <= 0.0) {
            return Err(Error::QuantileIllDefined(format!(
                "target density vanishes at cell {k} inside its support"
            )));
        }
    }
    Ok(())
}

/// Brenier map at cell centers and the trapezoid-integrated potential with
/// `phi' = x - T`, gauged so `int phi d rho = 0`.
pub(crate) fn map_and_potential(
    grid: &Grid,
    qr: &CdfQuantile,
    qg: &CdfQuantile,
    rho: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let h = grid.hx();
    let x = grid.centers_1d();
    let t: Vec<f64> = x.iter().map(|&xi| qg.quantile(qr.cdf(xi))).collect();
    let mut phi = Vec::with_capacity(x.len());
    phi.push(0.0);
    for i in 1..x.len() {
        let prev = phi[i - 1];
        phi.push(prev + 0.5 * h * ((x[i - 1] - t[i - 1]) + (x[i] - t[i])));
    }
    let mass: f64 = rho.iter().sum::<f64>() * h;
    let mean = phi.iter().zip(rho).map(|(p, r)| p * r).sum::<f64>() * h / mass;
    for p in phi.iter_mut() {
        *p -= mean;
    }
    (t, phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportPlanResult {
    pub w2: f64,
    pub w2_squared: f64,
    pub x: Vec<f64>,
    pub map_t: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_grad: Vec<f64>,
    /// `NaN` on cells where the residual is not reported.
    pub residual_ma: Vec<f64>,
    /// Largest decrease of `T` between neighboring cells (0 for a monotone map).
    pub residual_cyclic: f64,
}

/// Monotone rearrangement of `rho` onto `g`, its potential and residuals.
pub fn solve_1d(rho: &Density, g: &Density) -> Result<TransportPlanResult> {
    same_grid(rho.grid(), g.grid())?;
    let grid = rho.grid();
    let (a, b) = interval_of(grid)?;
    check_target_support(g)?;
    let qr = CdfQuantile::new(rho)?;
    let qg = CdfQuantile::new(g)?;
    let (map_t, phi) = map_and_potential(grid, &qr, &qg, rho.values());
    let tol_mono = 1e-10 * (b - a);
    let mut residual_cyclic: f64 = 0.0;
    for i in 1..map_t.len() {
        let drop = map_t[i - 1] - map_t[i];
        if drop > tol_mono {
            return Err(Error::NonMonotoneMap {
                cell: i,
                violation: drop,
            });
        }
        residual_cyclic = residual_cyclic.max(drop);
    }
    let x = grid.centers_1d();
    let phi_grad: Vec<f64> = x.iter().zip(&map_t).map(|(xi, ti)| xi - ti).collect();
    let w2_squared = w2_squared_cq(&qr, &qg);
    let mut result = TransportPlanResult {
        w2: w2_squared.sqrt(),
        w2_squared,
        x,
        map_t,
        phi,
        phi_grad,
        residual_ma: Vec::new(),
        residual_cyclic,
    };
    result.residual_ma = monge_ampere_residual(&result, rho, g);
    Ok(result)
}

/// Linear interpolation of a cell-centered function, constant beyond the
/// outermost centers. Returns the bracketing cells and weight.
fn bracket(x0: f64, h: f64, n: usize, t: f64) -> (usize, usize, f64) {
    let s = (t - x0) / h;
    if s <= 0.0 {
        return (0, 0, 0.0);
    }
    if s >= (n - 1) as f64 {
        return (n - 1, n - 1, 0.0);
    }
    let j = s.floor() as usize;
    (j, j + 1, s - j as f64)
}

/// `(1 - phi'') - rho / g(T)` at interior cells whose three-point stencil lies
/// in the support of `rho`; `phi''` by central second differences and `g(T)`
/// by linear interpolation between cell centers. Other cells hold `NaN`.
pub fn monge_ampere_residual(result: &TransportPlanResult, rho: &Density, g: &Density) -> Vec<f64> {
    let grid = rho.grid();
    let n = grid.len();
    let h = grid.hx();
    let x0 = grid.center(0)[0];
    let r = rho.values();
    let gv = g.values();
    let phi = &result.phi;
    let mut out = vec![f64::NAN; n];
    for i in 1..n.saturating_sub(1) {
        if r[i - 1] <= 0.0 || r[i] <= 0.0 || r[i + 1] <= 0.0 {
            continue;
        }
        let jac = 1.0 - (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h);
        let (j0, j1, w) = bracket(x0, h, n, result.map_t[i]);
        let gt = (1.0 - w) * gv[j0] + w * gv[j1];
        if gt > 0.0 {
            out[i] = jac - r[i] / gt;
        }
    }
    out
}

/// Defect of the differentiated Jacobian equation
/// `-phi''' / (1 - phi'') = (log rho)' - (log g)'(T) (1 - phi'')`,
/// using third central differences of `phi`, central differences of `log rho`,
/// and central differences of `log g` interpolated at `T`. Reported on cells `2..n-2`
/// whose five-point stencil lies in the support of `rho`; `NaN` elsewhere.
pub fn differentiated_ma_residual(
    result: &TransportPlanResult,
    rho: &Density,
    g: &Density,
) -> Vec<f64> {
    let grid = rho.grid();
    let n = grid.len();
    let h = grid.hx();
    let x0 = grid.center(0)[0];
    let r = rho.values();
    let gv = g.values();
    let phi = &result.phi;
    let mut out = vec![f64::NAN; n];
    if n < 5 {
        return out;
    }
    // (log g)' at the centers by central differences, interpolated at T
    let log_g: Vec<f64> = gv
        .iter()
        .map(|v| if *v > 0.0 { v.ln() } else { f64::NAN })
        .collect();
    let dlog_g_nodes: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = (j.saturating_sub(1), (j + 1).min(n - 1));
            (log_g[hi] - log_g[lo]) / ((hi - lo) as f64 * h)
        })
        .collect();
    for i in 2..n - 2 {
        if (i - 2..=i + 2).any(|k| r[k] <= 0.0) {
            continue;
        }
        let d2 = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h);
        let d3 =
            (phi[i + 2] - 2.0 * phi[i + 1] + 2.0 * phi[i - 1] - phi[i - 2]) / (2.0 * h * h * h);
        let jac = 1.0 - d2;
        let dlog_rho = (r[i + 1].ln() - r[i - 1].ln()) / (2.0 * h);
        let (j0, j1, w) = bracket(x0, h, n, result.map_t[i]);
        let dlog_g = (1.0 - w) * dlog_g_nodes[j0] + w * dlog_g_nodes[j1];
        if !dlog_g.is_finite() {
            continue;
        }
        out[i] = -d3 / jac - (dlog_rho - dlog_g * jac);
    }
    out
}

/// Largest absolute finite entry (0 when none).
pub fn max_abs_finite(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0, |m, v| m.max(v.abs()))
}

impl TransportPlanResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "cell,x,T,phi,phi_grad,residual_ma")?;
        for i in 0..self.x.len() {
            writeln!(
                out,
                "{i},{},{},{},{},{}",
                self.x[i], self.map_t[i], self.phi[i], self.phi_grad[i], self.residual_ma[i]
            )?;
        }
        Ok(())
    }
}

/// Exact piecewise-constant transport cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ot1dBackend;

impl W2Backend for Ot1dBackend {
    fn w2_squared(&self, rho: &Density, g: &Density) -> Result<f64> {
        w2_squared(rho, g)
    }

    fn name(&self) -> &'static str {
        "ot1d"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn uniform_quantiles() {
        let q = CdfQuantile::new(&Density::uniform(unit(10))).unwrap();
        for p in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((q.quantile(p) - p).abs() < 1e-15);
        }
        let g2 = Arc::new(Grid::interval(0.0, 2.0, 8).unwrap());
        let q2 = CdfQuantile::new(&Density::uniform(g2)).unwrap();
        assert!((q2.quantile(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_cell_cdf() {
        let d = Density::normalize(unit(2), vec![1.5, 0.5]).unwrap();
        let q = CdfQuantile::new(&d).unwrap();
        assert!((q.cdf(0.5) - 0.75).abs() < 1e-15);
        assert!((q.quantile(0.75) - 0.5).abs() < 1e-15);
        assert!((q.cdf(0.25) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn identical_densities() {
        let g = unit(40);
        let d = Density::from_fn(g, |p| 1.0 + p[0] * p[0]).unwrap();
        let r = solve_1d(&d, &d).unwrap();
        assert!(r.w2 < 1e-12);
        for i in 0..40 {
            assert!((r.map_t[i] - r.x[i]).abs() < 1e-12);
            assert!(r.phi[i].abs() < 1e-12);
        }
        assert!(max_abs_finite(&r.residual_ma) < 1e-9);
        assert!(max_abs_finite(&differentiated_ma_residual(&r, &d, &d)) < 1e-6);
    }

    #[test]
    fn pure_translation() {
        let g = unit(20);
        let rho = Density::from_fn(g.clone(), |p| if p[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let tgt = Density::from_fn(g, |p| if p[0] > 0.5 { 1.0 } else { 0.0 }).unwrap();
        let r = solve_1d(&rho, &tgt).unwrap();
        assert!((r.w2 - 0.5).abs() < 1e-14);
        for i in 0..10 {
            assert!((r.map_t[i] - r.x[i] - 0.5).abs() < 1e-14);
        }
        let reported: Vec<f64> = r
            .residual_ma
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        assert!(!reported.is_empty());
        assert!(reported.iter().all(|v| v.abs() < 1e-10));
        assert!(max_abs_finite(&differentiated_ma_residual(&r, &rho, &tgt)) < 1e-8);
    }

    #[test]
    fn gap_in_target_support_is_rejected() {
        let g = unit(6);
        let rho = Density::uniform(g.clone());
        let tgt = Density::normalize(g, vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_1d(&rho, &tgt),
            Err(Error::QuantileIllDefined(_))
        ));
    }

    #[test]
    fn rejects_2d_grids() {
        let g = Arc::new(Grid::rect(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap());
        let d = Density::uniform(g);
        assert!(matches!(
            solve_1d(&d, &d),
            Err(Error::WrongDimension { .. })
        ));
    }

    #[test]
    fn potential_gauge() {
        let g = unit(64);
        let rho = Density::from_fn(g.clone(), |p| (3.0 * p[0]).exp()).unwrap();
        let tgt = Density::from_fn(g, |p| 2.0 - p[0]).unwrap();
        let r = solve_1d(&rho, &tgt).unwrap();
        let mean = rho.expect(&r.phi);
        let max = r.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(mean.abs() <= 1e-12 * max);
    }

    #[test]
    fn csv_header() {
        let d = Density::uniform(unit(4));
        let r = solve_1d(&d, &d).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("cell,x,T,phi,phi_grad,residual_ma\n"));
        assert_eq!(s.lines().count(), 5);
    }
}
