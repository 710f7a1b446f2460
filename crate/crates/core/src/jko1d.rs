//! One-dimensional JKO steps and trajectories.
//!
//! A step minimizes `W2^2(rho, g) / (2 tau) + int rho log rho + int V rho` by a
//! damped fixed-point iteration on the optimality condition
//! `log rho + V + phi / tau = const`, where `phi` is the Kantorovich potential
//! from `rho` to `g`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::{entropy, potential_energy, EnergyReport};
use crate::error::{Error, Result};
use crate::field::{same_grid, Density, Potential};
use crate::ot1d::{map_and_potential, w2_squared_cq, CdfQuantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JkoConfig {
    /// Stop once the optimality residual is at or below this value.
    pub tol_opt: f64,
    pub max_iter: usize,
    /// Initial geometric damping weight in (0, 1].
    pub theta_init: f64,
    /// Iterations without a halving or growth of the damping after which a
    /// slowly decaying residual triggers a damping cut.
    pub stagnation_window: usize,
}

impl Default for JkoConfig {
    fn default() -> Self {
        Self {
            tol_opt: 1e-7,
            max_iter: 500,
            theta_init: 0.5,
            stagnation_window: 10,
        }
    }
}

impl JkoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_opt > 0.0) {
            return Err(Error::param(
                "tol_opt",
                format!("must be > 0, got {}", self.tol_opt),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be >= 1"));
        }
        if !(self.theta_init > 0.0 && self.theta_init <= 1.0) {
            return Err(Error::param(
                "theta_init",
                format!("must lie in (0, 1], got {}", self.theta_init),
            ));
        }
        if self.stagnation_window == 0 {
            return Err(Error::param("stagnation_window", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JkoStepResult {
    #[serde(skip)]
    pub rho_next: Density,
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub energy: EnergyReport,
    /// Free energy of the previous iterate (`W2` term zero).
    pub energy_initial: f64,
    /// `max |log rho + V + phi / tau - c*|` with `c*` the `rho`-mean.
    pub optimality_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `F(rho_next) <= F(g) + 1e-10`.
    pub energy_descent: bool,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    Ok(())
}

/// Residual of the optimality condition and the new log-target
/// `-V - phi / tau`.
fn optimality(rho: &Density, v: &[f64], phi: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let log_rho = rho.log_values();
    let target: Vec<f64> = v.iter().zip(phi).map(|(vi, pi)| -vi - pi / tau).collect();
    let defect: Vec<f64> = log_rho.iter().zip(&target).map(|(l, t)| l - t).collect();
    let c = rho.expect(&defect);
    let res = defect.iter().fold(0.0f64, |m, d| m.max((d - c).abs()));
    (res, target)
}

/// One JKO step from `g`.
pub fn jko_step(g: &Density, v: &Potential, tau: f64, cfg: &JkoConfig) -> Result<JkoStepResult> {
    check_tau(tau)?;
    cfg.validate()?;
    same_grid(g.grid(), v.grid())?;
    let grid = g.grid().clone();
    grid.require_1d()?;
    g.require_positive()?;
    let qg = CdfQuantile::new(g)?;

    let mut rho = g.clone();
    let mut theta = cfg.theta_init;
    let mut prev = f64::INFINITY;
    let mut mark = f64::INFINITY;
    let mut quiet = 0usize;
    let mut iterations = 0usize;
    let (mut residual, mut phi);
    loop {
        let qr = CdfQuantile::new(&rho)?;
        let (_, p) = map_and_potential(&grid, &qr, &qg, rho.values());
        phi = p;
        let (res, target) = optimality(&rho, v.values(), &phi, tau);
        residual = res;
        if residual <= cfg.tol_opt || iterations == cfg.max_iter || !residual.is_finite() {
            break;
        }
        // Damping: halve on increase, grow on a halving of the residual, and
        // cut by 0.7 when a whole window passes with less than a halving.
        if residual > prev {
            theta *= 0.5;
            quiet = 0;
            mark = residual;
        } else if residual < 0.5 * prev {
            theta = (theta * 1.2).min(1.0);
            quiet = 0;
            mark = residual;
        } else {
            quiet += 1;
            if quiet >= cfg.stagnation_window {
                if residual > 0.5 * mark {
                    theta *= 0.7;
                }
                quiet = 0;
                mark = residual;
            }
        }
        prev = residual;
        let log_rho = rho.log_values();
        let mixed: Vec<f64> = log_rho
            .iter()
            .zip(&target)
            .map(|(l, t)| (1.0 - theta) * l + theta * t)
            .collect();
        rho = Density::from_log(grid.clone(), &mixed)?;
        iterations += 1;
    }

    let qr = CdfQuantile::new(&rho)?;
    let energy = EnergyReport::new(
        w2_squared_cq(&qr, &qg),
        entropy(&rho),
        potential_energy(&rho, v)?,
        tau,
    );
    let energy_initial = entropy(g) + potential_energy(g, v)?;
    Ok(JkoStepResult {
        energy_descent: energy.total <= energy_initial + 1e-10,
        rho_next: rho,
        phi,
        energy,
        energy_initial,
        optimality_residual: residual,
        iterations,
        converged: residual <= cfg.tol_opt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    /// Step `step` (1-based) did not converge; the trajectory stops before it.
    Aborted {
        step: usize,
        residual: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: f64,
    /// `rho_0, ..., rho_K` (shorter when aborted).
    pub densities: Vec<Density>,
    pub steps: Vec<JkoStepResult>,
    pub status: TrajectoryStatus,
}

/// Iterate [`jko_step`] `k_steps` times from `rho_init`.
pub fn run_trajectory(
    rho_init: &Density,
    v: &Potential,
    tau: f64,
    k_steps: usize,
    cfg: &JkoConfig,
) -> Result<Trajectory> {
    if k_steps == 0 {
        return Err(Error::param("K", "need at least one step"));
    }
    check_tau(tau)?;
    rho_init.require_positive()?;
    let mut densities = vec![rho_init.clone()];
    let mut steps = Vec::with_capacity(k_steps);
    let mut status = TrajectoryStatus::Complete;
    for k in 0..k_steps {
        let step = jko_step(&densities[k], v, tau, cfg).map_err(|e| Error::StepFailed {
            step: k + 1,
            source: Box::new(e),
        })?;
        if !step.converged {
            status = TrajectoryStatus::Aborted {
                step: k + 1,
                residual: step.optimality_residual,
            };
            break;
        }
        densities.push(step.rho_next.clone());
        steps.push(step);
    }
    Ok(Trajectory {
        tau,
        densities,
        steps,
        status,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary<'a> {
    pub tau: f64,
    pub steps_completed: usize,
    pub status: &'a TrajectoryStatus,
    pub steps: &'a [JkoStepResult],
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Complete
    }

    pub fn summary(&self) -> TrajectorySummary<'_> {
        TrajectorySummary {
            tau: self.tau,
            steps_completed: self.steps.len(),
            status: &self.status,
            steps: &self.steps,
        }
    }

    /// Long-format CSV: `step,cell,x,rho`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,cell,x,rho")?;
        for (k, d) in self.densities.iter().enumerate() {
            let grid = d.grid();
            for i in grid.active_indices() {
                writeln!(out, "{k},{i},{},{}", grid.center(i)[0], d.values()[i])?;
            }
        }
        Ok(())
    }
}
