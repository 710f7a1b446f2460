//! Reference solver for `d_t rho = d_x (d_x rho + rho d_x V)` on an interval
//! with zero-flux boundaries.
//!
//! Finite volumes with exponentially fitted (Scharfetter-Gummel) fluxes
//! `F_{i+1/2} = (B(-dV) rho_{i+1} - B(dV) rho_i) / h`, `B(z) = z / (e^z - 1)`,
//! which vanish exactly on `rho ∝ exp(-V)`; implicit Euler in time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{same_grid, Density, Potential};
use crate::jko1d::Trajectory;

/// Bernoulli function `z / (e^z - 1)`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-6 {
        1.0 - 0.5 * z + z * z / 12.0
    } else {
        z / z.exp_m1()
    }
}

#[derive(Debug, Clone)]
pub struct FpSolution {
    pub times: Vec<f64>,
    pub densities: Vec<Density>,
    pub dt: f64,
    pub h: f64,
}

/// Tridiagonal operator `I - dt L` stored by diagonals.
struct Implicit {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Implicit {
    fn new(v: &[f64], h: f64, dt: f64) -> Self {
        let n = v.len();
        let k = dt / (h * h);
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n - 1 {
            let dv = v[i + 1] - v[i];
            let (bp, bm) = (bernoulli(dv), bernoulli(-dv));
            diag[i] += k * bp;
            upper[i] = -k * bm;
            diag[i + 1] += k * bm;
            lower[i + 1] = -k * bp;
        }
        Self { lower, diag, upper }
    }

    /// Thomas algorithm.
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if !(pivot > 0.0) {
            return Err(Error::SingularSystem("nonpositive pivot at row 0".into()));
        }
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            if !(pivot > 0.0) {
                return Err(Error::SingularSystem(format!(
                    "nonpositive pivot at row {i}"
                )));
            }
            c[i] = self.upper[i] / pivot;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / pivot;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Integrate from `rho_init` to `t_final` with step `dt`; every step is kept.
/// The number of steps is `round(t_final / dt)`.
pub fn solve_fp(rho_init: &Density, v: &Potential, t_final: f64, dt: f64) -> Result<FpSolution> {
    same_grid(rho_init.grid(), v.grid())?;
    let grid = rho_init.grid().clone();
    grid.require_1d()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::param(
            "t_final",
            format!("must be >= 0, got {t_final}"),
        ));
    }
    let h = grid.hx();
    let op = Implicit::new(v.values(), h, dt);
    let steps = (t_final / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut densities = Vec::with_capacity(steps + 1);
    times.push(0.0);
    densities.push(rho_init.clone());
    let mut current = rho_init.values().to_vec();
    for s in 1..=steps {
        current = op.solve(&current)?;
        times.push(s as f64 * dt);
        // the scheme conserves mass; normalize only absorbs round-off and
        // tiny negative round-off is clipped
        let snapshot: Vec<f64> = current.iter().map(|x| x.max(0.0)).collect();
        densities.push(Density::normalize(grid.clone(), snapshot)?);
    }
    Ok(FpSolution {
        times,
        densities,
        dt,
        h,
    })
}

/// Max-norm residual of one implicit step applied to `rho` as a steady state:
/// `|(I - dt L) rho - rho|_inf`.
pub fn steady_state_residual(rho: &Density, v: &Potential, dt: f64) -> Result<f64> {
    same_grid(rho.grid(), v.grid())?;
    rho.grid().require_1d()?;
    let op = Implicit::new(v.values(), rho.grid().hx(), dt);
    let y = op.apply(rho.values());
    Ok(y.iter()
        .zip(rho.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub times: Vec<f64>,
    /// `|rho_k - rho(k tau)|_{L1}` per step.
    pub l1_errors: Vec<f64>,
    pub max_error: f64,
}

/// L1 distance between `rho_k` and the reference at `t = k tau`.
pub fn compare_jko_to_fp(traj: &Trajectory, fp: &FpSolution) -> Result<Comparison> {
    let mut times = Vec::new();
    let mut l1_errors = Vec::new();
    for (k, rho) in traj.densities.iter().enumerate() {
        let t = k as f64 * traj.tau;
        let m = (t / fp.dt).round() as usize;
        if m >= fp.times.len() || (fp.times[m] - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::TimeGridMismatch { time: t });
        }
        times.push(t);
        l1_errors.push(rho.l1_distance(&fp.densities[m])?);
    }
    let max_error = l1_errors.iter().fold(0.0f64, |a, b| a.max(*b));
    Ok(Comparison {
        times,
        l1_errors,
        max_error,
    })
}
