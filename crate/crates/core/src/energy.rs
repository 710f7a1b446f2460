//! Free-energy terms and the JKO objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{same_grid, Density, Potential, LOG_FLOOR};

/// `sum rho log rho * cell_measure`, with `0 log 0 = 0`.
pub fn entropy(rho: &Density) -> f64 {
    let g = rho.grid();
    let v = rho.values();
    g.active_indices()
        .map(|i| {
            let r = v[i];
            if r > 0.0 {
                r * r.max(LOG_FLOOR).ln()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * g.cell_measure()
}

/// `sum V rho * cell_measure`.
pub fn potential_energy(rho: &Density, v: &Potential) -> Result<f64> {
    same_grid(rho.grid(), v.grid())?;
    Ok(rho.expect(v.values()))
}

/// Entropy plus potential energy (the Fokker-Planck free energy).
pub fn free_energy(rho: &Density, v: &Potential) -> Result<f64> {
    Ok(entropy(rho) + potential_energy(rho, v)?)
}

/// Squared quadratic transport cost between two densities on one grid.
pub trait W2Backend: Sync {
    fn w2_squared(&self, rho: &Density, g: &Density) -> Result<f64>;

    fn name(&self) -> &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub w2_squared: f64,
    pub entropy: f64,
    pub potential: f64,
    pub tau: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn new(w2_squared: f64, entropy: f64, potential: f64, tau: f64) -> Self {
        Self {
            w2_squared,
            entropy,
            potential,
            tau,
            total: w2_squared / (2.0 * tau) + entropy + potential,
        }
    }
}

/// `W2^2(rho, g) / (2 tau) + int rho log rho + int V rho`.
pub fn total_energy(
    rho: &Density,
    g: &Density,
    v: &Potential,
    tau: f64,
    backend: &dyn W2Backend,
) -> Result<EnergyReport> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    same_grid(rho.grid(), g.grid())?;
    let pot = potential_energy(rho, v)?;
    let w2 = backend.w2_squared(rho, g)?;
    Ok(EnergyReport::new(w2, entropy(rho), pot, tau))
}
