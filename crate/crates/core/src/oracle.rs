//! Independent solver for the atomic discretization of one JKO step.
//!
//! Each cell's mass sits at its center, the transport term is the exact
//! discrete cost between atoms, and entropy/potential use the same cell
//! quadrature as the rest of the crate:
//!
//! `J(a) = W2^2(a, b) / (2 tau) + sum a_i log(a_i / h) + sum a_i V_i`.
//!
//! In terms of cumulative masses `A_i` the transport term is a sum of convex
//! piecewise-linear functions, and stationarity reads
//!
//! `lambda_{i+1} - lambda_i in (h / tau) (X_b(A_i) - e_i)`,
//!
//! with `lambda_i = log(a_i / h) + V_i`, `e_i` the edge between cells `i` and
//! `i + 1`, and `X_b` the (set-valued at jumps) atomic quantile of the target.
//! The solver shoots forward from `lambda_0` and bisects on the total mass.
//! When the mass jumps, the solution pins some `A_k` to a target cumulative
//! and the free parameter moves to the increment at `k`.

use serde::Serialize;

use crate::energy::{total_energy, EnergyReport};
use crate::error::{Error, Result};
use crate::field::{same_grid, Density, Potential};
use crate::lp::AtomicLpBackend;

/// Largest grid the oracle accepts.
pub const MAX_CELLS: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub rho: Density,
    /// Distance of each increment to its admissible set, maximized.
    pub stationarity: f64,
    /// Cumulative masses pinned at target breakpoints.
    pub pinned: usize,
}

struct Problem<'a> {
    n: usize,
    h: f64,
    step: f64,
    x: Vec<f64>,
    edge: Vec<f64>,
    v: &'a [f64],
    /// Target cumulative masses; `cum_b[n - 1] = 1`.
    cum_b: Vec<f64>,
    b_mass: Vec<f64>,
}

impl Problem<'_> {
    /// Atom carrying the quantile level `p` (left-continuous quantile).
    fn atom(&self, p: f64) -> usize {
        self.cum_b.partition_point(|&c| c < p).min(self.n - 1)
    }

    /// Next atom with positive mass after `j`.
    fn next_atom(&self, j: usize) -> usize {
        (j + 1..self.n)
            .find(|&k| self.b_mass[k] > 0.0)
            .unwrap_or(self.n - 1)
    }

    /// Forward shooting from cell `start` with multiplier `lam` and fixed
    /// prefix mass. Fills `a` and `atoms` from `start` on; returns total mass.
    fn shoot(
        &self,
        start: usize,
        lam: f64,
        prefix: f64,
        a: &mut [f64],
        atoms: &mut [usize],
    ) -> f64 {
        let mut lam = lam;
        let mut cum = prefix;
        for k in start..self.n {
            a[k] = self.h * (lam - self.v[k]).exp();
            cum += a[k];
            if k + 1 < self.n {
                let j = self.atom(cum);
                atoms[k] = j;
                lam += self.step * (self.x[j] - self.edge[k]);
            }
        }
        cum
    }
}

/// Minimize the atomic JKO functional for `(g, V, tau)` on at most
/// [`MAX_CELLS`] cells.
pub fn jko_oracle(g: &Density, v: &Potential, tau: f64) -> Result<OracleResult> {
    same_grid(g.grid(), v.grid())?;
    let grid = g.grid();
    grid.require_1d()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    let n = grid.len();
    if n > MAX_CELLS {
        return Err(Error::SizeGuard {
            what: "oracle cells",
            limit: MAX_CELLS,
            got: n,
        });
    }
    let h = grid.hx();
    let x = grid.centers_1d();
    let edge: Vec<f64> = x.iter().map(|xi| xi + 0.5 * h).collect();
    let b_mass: Vec<f64> = g.values().iter().map(|gv| gv * h).collect();
    let total_b: f64 = b_mass.iter().sum();
    let mut cum_b = Vec::with_capacity(n);
    let mut acc = 0.0;
    for m in &b_mass {
        acc += m;
        cum_b.push(acc / total_b);
    }
    cum_b[n - 1] = 1.0;
    let pb = Problem {
        n,
        h,
        step: h / tau,
        x,
        edge,
        v: v.values(),
        cum_b,
        b_mass,
    };

    let mut a = vec![0.0; n];
    let mut atoms = vec![0usize; n];
    let mut scratch_a = vec![0.0; n];
    let mut scratch_atoms = vec![0usize; n];

    // bracket for lambda_0
    let (a_dom, b_dom) = (grid.origin()[0], grid.origin()[0] + n as f64 * h);
    let centre = pb.v[0] - (b_dom - a_dom).ln();
    let (mut lo, mut hi) = (centre - 1.0, centre + 1.0);
    let mut widen = 1.0;
    for _ in 0..200 {
        if pb.shoot(0, lo, 0.0, &mut a, &mut atoms) <= 1.0 {
            break;
        }
        lo -= widen;
        widen *= 2.0;
    }
    widen = 1.0;
    for _ in 0..200 {
        if pb.shoot(0, hi, 0.0, &mut a, &mut atoms) >= 1.0 {
            break;
        }
        hi += widen;
        widen *= 2.0;
    }

    let mut start = 0usize;
    let mut prefix = 0.0;
    let mut pinned = 0usize;
    loop {
        // bisection on the free multiplier of this segment
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if pb.shoot(start, mid, prefix, &mut a, &mut atoms) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m_lo = pb.shoot(start, lo, prefix, &mut scratch_a, &mut scratch_atoms);
        let m_hi = pb.shoot(start, hi, prefix, &mut a, &mut atoms);
        let split = (start..n - 1).find(|&k| scratch_atoms[k] != atoms[k]);
        match split {
            Some(k) if (m_hi - m_lo) > 1e-13 => {
                // the solution pins A_k at the breakpoint below atom atoms[k]
                let j = scratch_atoms[k];
                let j_next = pb.next_atom(j);
                let mut cum = prefix;
                for i in start..k {
                    a[i] = scratch_a[i];
                    cum += a[i];
                }
                a[k] = (pb.cum_b[j] - cum).max(f64::MIN_POSITIVE);
                let lam_k = (a[k] / h).ln() + pb.v[k];
                lo = lam_k + pb.step * (pb.x[j] - pb.edge[k]);
                hi = lam_k + pb.step * (pb.x[j_next] - pb.edge[k]);
                prefix = pb.cum_b[j];
                start = k + 1;
                pinned += 1;
                if start == n - 1 {
                    a[n - 1] = (1.0 - prefix).max(f64::MIN_POSITIVE);
                    break;
                }
            }
            _ => {
                // continuous: keep the side closer to unit mass
                if (m_lo - 1.0).abs() < (m_hi - 1.0).abs() {
                    a[start..].copy_from_slice(&scratch_a[start..]);
                }
                break;
            }
        }
    }

    let rho = Density::normalize(grid.clone(), a.iter().map(|m| m / h).collect())?;
    let stationarity = stationarity_residual(&rho, g, v, tau)?;
    Ok(OracleResult {
        rho,
        stationarity,
        pinned,
    })
}

/// Largest distance of `lambda_{i+1} - lambda_i` to its admissible set.
pub fn stationarity_residual(rho: &Density, g: &Density, v: &Potential, tau: f64) -> Result<f64> {
    same_grid(rho.grid(), g.grid())?;
    rho.require_positive()?;
    let grid = rho.grid();
    let n = grid.len();
    let h = grid.hx();
    let x = grid.centers_1d();
    let step = h / tau;
    let b: Vec<f64> = g.values().iter().map(|gv| gv * h).collect();
    let total: f64 = b.iter().sum();
    let mut cum_b = Vec::with_capacity(n);
    let mut acc = 0.0;
    for m in &b {
        acc += m;
        cum_b.push(acc / total);
    }
    let lam: Vec<f64> = (0..n)
        .map(|i| rho.values()[i].ln() + v.values()[i])
        .collect();
    let mut worst: f64 = 0.0;
    let mut cum_a = 0.0;
    for i in 0..n - 1 {
        cum_a += rho.values()[i] * h;
        let e = x[i] + 0.5 * h;
        let s = lam[i + 1] - lam[i];
        let j = cum_b.partition_point(|&c| c < cum_a).min(n - 1);
        let (lo_atom, hi_atom) = if (cum_a - cum_b[j]).abs() <= 1e-12 && j + 1 < n {
            let next = (j + 1..n).find(|&k| b[k] > 0.0).unwrap_or(n - 1);
            (j, next)
        } else if j > 0 && (cum_a - cum_b[j - 1]).abs() <= 1e-12 {
            (j - 1, j)
        } else {
            (j, j)
        };
        let lo = step * (x[lo_atom] - e);
        let hi = step * (x[hi_atom] - e);
        let d = if s < lo {
            lo - s
        } else if s > hi {
            s - hi
        } else {
            0.0
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Atomic-discretization energy of `rho` (transport term by the simplex).
pub fn atomic_energy(rho: &Density, g: &Density, v: &Potential, tau: f64) -> Result<EnergyReport> {
    total_energy(rho, g, v, tau, &AtomicLpBackend)
}
