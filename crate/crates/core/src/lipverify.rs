//! Discrete Lipschitz seminorms and the per-step contraction checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::gradient_norm;
use crate::field::{same_grid, Density, Potential};
use crate::grid::Grid;

/// Largest active-cell count for the exhaustive pair scan.
pub const PAIRWISE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipMethod {
    Pairwise,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipReport {
    /// `sup |f(x) - f(y)| / |x - y|` over active pairs; `None` above the size guard.
    pub lip_pairwise: Option<f64>,
    /// Pair realizing the pairwise sup (lowest indices on ties).
    pub argmax_pair: Option<(usize, usize)>,
    /// Largest finite-difference gradient norm.
    pub lip_grad: f64,
    pub argmax_grad: usize,
    /// Method behind [`LipReport::value`].
    pub method: LipMethod,
    /// Set when the pair scan was skipped because of the size guard.
    pub degraded: bool,
}

impl LipReport {
    /// The best available estimate: pairwise when computed.
    pub fn value(&self) -> f64 {
        self.lip_pairwise.unwrap_or(self.lip_grad)
    }
}

fn pairwise(grid: &Grid, f: &[f64], cells: &[usize]) -> (f64, (usize, usize)) {
    let best = cells
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut best = (0.0f64, (i, i));
            for &j in &cells[a + 1..] {
                let s = (f[i] - f[j]).abs() / grid.distance(i, j);
                if s > best.0 {
                    best = (s, (i, j));
                }
            }
            best
        })
        .reduce(
            || (0.0, (usize::MAX, usize::MAX)),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            },
        );
    best
}

/// Lipschitz constant of a grid function over active cells.
pub fn lip_const(grid: &Grid, f: &[f64]) -> Result<LipReport> {
    if f.len() != grid.len() {
        return Err(Error::InvalidValues("grid function length".into()));
    }
    let cells: Vec<usize> = grid.active_indices().collect();
    if cells.len() < 2 {
        return Err(Error::InvalidGrid("need at least two active cells".into()));
    }
    let norms = gradient_norm(grid, f);
    let (mut lip_grad, mut argmax_grad) = (0.0f64, cells[0]);
    for &i in &cells {
        if norms[i] > lip_grad {
            lip_grad = norms[i];
            argmax_grad = i;
        }
    }
    if cells.len() > PAIRWISE_LIMIT {
        return Ok(LipReport {
            lip_pairwise: None,
            argmax_pair: None,
            lip_grad,
            argmax_grad,
            method: LipMethod::Gradient,
            degraded: true,
        });
    }
    let (lip, pair) = pairwise(grid, f, &cells);
    let pair = if pair.0 == pair.1 || pair.0 == usize::MAX {
        (cells[0], cells[1])
    } else {
        pair
    };
    Ok(LipReport {
        lip_pairwise: Some(lip),
        argmax_pair: Some(pair),
        lip_grad,
        argmax_grad,
        method: LipMethod::Pairwise,
        degraded: false,
    })
}

/// `log rho + V` on active cells (zero elsewhere).
pub fn log_rho_plus_v(rho: &Density, v: &Potential) -> Result<Vec<f64>> {
    same_grid(rho.grid(), v.grid())?;
    rho.require_positive()?;
    Ok(rho
        .log_values()
        .iter()
        .zip(v.values())
        .map(|(l, vi)| l + vi)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckState {
    Pass,
    Fail,
    /// `1 + alpha tau <= 0`: the inequality carries no information.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    /// `Lip(log rho_next + V) (1 + alpha tau)`.
    pub lhs: f64,
    /// `Lip(log g + V)`.
    pub rhs: f64,
    pub margin: f64,
    pub tol_thm: f64,
    pub state: CheckState,
    pub tau: f64,
    pub alpha: f64,
    pub backend: String,
    pub n: usize,
    pub lip_v: f64,
    pub optimality_residual: f64,
}

impl TheoremCheck {
    pub fn passed(&self) -> bool {
        self.state == CheckState::Pass
    }
}

/// Discretization allowance `factor (h + residual / tau) (1 + Lip V)`.
pub fn tol_thm(h: f64, residual: f64, tau: f64, lip_v: f64, factor: f64) -> f64 {
    factor * (h + residual / tau) * (1.0 + lip_v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremTolerance {
    pub factor: f64,
}

impl Default for TheoremTolerance {
    fn default() -> Self {
        Self { factor: 5.0 }
    }
}

/// Compare `Lip(log rho_next + V)(1 + alpha tau)` with `Lip(log g + V)`,
/// using the modulus declared on `v`.
pub fn check_theorem(
    rho_next: &Density,
    g: &Density,
    v: &Potential,
    tau: f64,
    optimality_residual: f64,
    backend: &str,
    tol: TheoremTolerance,
) -> Result<TheoremCheck> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    same_grid(rho_next.grid(), g.grid())?;
    let grid = g.grid();
    let alpha = v.alpha();
    let lip_next = lip_const(grid, &log_rho_plus_v(rho_next, v)?)?.value();
    let rhs = lip_const(grid, &log_rho_plus_v(g, v)?)?.value();
    let lip_v = lip_const(grid, v.values())?.value();
    let factor = 1.0 + alpha * tau;
    let lhs = lip_next * factor;
    let margin = rhs - lhs;
    let allowance = tol_thm(grid.h(), optimality_residual, tau, lip_v, tol.factor);
    let state = if factor <= 0.0 {
        CheckState::Vacuous
    } else if margin >= -allowance {
        CheckState::Pass
    } else {
        CheckState::Fail
    };
    Ok(TheoremCheck {
        lhs,
        rhs,
        margin,
        tol_thm: allowance,
        state,
        tau,
        alpha,
        backend: backend.to_string(),
        n: grid.active_count(),
        lip_v,
        optimality_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// `Lip(log rho_k + V)`.
    pub lip: Vec<f64>,
    /// `m_k = (1 + alpha tau)^k Lip(log rho_k + V)`.
    pub envelope: Vec<f64>,
    /// Per-step allowance `tol_thm` (indexed by the step producing `rho_{k+1}`).
    pub tol_thm: Vec<f64>,
    /// `m_{k+1} <= m_k + tol_thm_k` for every step.
    pub monotone: bool,
    /// `Lip_k <= (1 + alpha tau)^{-k} Lip_0 + k max(tol_thm)` for every `k`.
    pub bound_holds: bool,
    pub vacuous: bool,
}

/// Envelope of `Lip(log rho_k + V)` along a trajectory. `residuals[k]` is
/// the optimality residual of the step producing `densities[k + 1]`.
pub fn check_decay_envelope(
    densities: &[Density],
    residuals: &[f64],
    v: &Potential,
    tau: f64,
    tol: TheoremTolerance,
) -> Result<EnvelopeReport> {
    if densities.is_empty() || residuals.len() + 1 != densities.len() {
        return Err(Error::InvalidValues(
            "need K + 1 densities and K residuals".into(),
        ));
    }
    let grid = densities[0].grid();
    let factor = 1.0 + v.alpha() * tau;
    let lip_v = lip_const(grid, v.values())?.value();
    let lip = densities
        .iter()
        .map(|d| Ok(lip_const(grid, &log_rho_plus_v(d, v)?)?.value()))
        .collect::<Result<Vec<f64>>>()?;
    let tols: Vec<f64> = residuals
        .iter()
        .map(|r| tol_thm(grid.h(), *r, tau, lip_v, tol.factor))
        .collect();
    if factor <= 0.0 {
        return Ok(EnvelopeReport {
            envelope: vec![f64::NAN; lip.len()],
            lip,
            tol_thm: tols,
            monotone: false,
            bound_holds: false,
            vacuous: true,
        });
    }
    let envelope: Vec<f64> = lip
        .iter()
        .enumerate()
        .map(|(k, l)| factor.powi(k as i32) * l)
        .collect();
    let monotone = (0..tols.len()).all(|k| envelope[k + 1] <= envelope[k] + tols[k]);
    let max_tol = tols.iter().fold(0.0f64, |m, t| m.max(*t));
    let bound_holds =
        (0..lip.len()).all(|k| lip[k] <= factor.powi(-(k as i32)) * lip[0] + k as f64 * max_tol);
    Ok(EnvelopeReport {
        lip,
        envelope,
        tol_thm: tols,
        monotone,
        bound_holds,
        vacuous: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgmaxReport {
    /// Cell with the largest `|grad phi|^2` (lowest index on ties).
    pub argmax: usize,
    pub is_interior: bool,
    pub max_interior: f64,
    pub max_boundary: f64,
    /// `max_interior - max_boundary` of `|grad phi|^2`.
    pub margin: f64,
    /// Field identically (numerically) zero: no argmax to speak of.
    pub vacuous: bool,
    /// `sqrt(2) R` when the domain is a ball.
    pub bound: Option<f64>,
    /// Largest `|grad phi|` over all active cells.
    pub max_norm: f64,
}

impl ArgmaxReport {
    /// `max |grad phi| <= sqrt(2) R + slack`.
    pub fn bound_holds(&self, slack: f64) -> bool {
        self.bound.map_or(true, |b| self.max_norm <= b + slack)
    }
}

/// Interior/boundary comparison of gradient norms (`norms[i] = |grad phi|`).
pub fn argmax_from_norms(grid: &Grid, norms: &[f64]) -> ArgmaxReport {
    let mut argmax = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    let (mut max_in, mut max_bd) = (0.0f64, 0.0f64);
    let mut max_norm = 0.0f64;
    for i in grid.active_indices() {
        let s = norms[i] * norms[i];
        max_norm = max_norm.max(norms[i]);
        if s > best {
            best = s;
            argmax = i;
        }
        if grid.is_boundary(i) {
            max_bd = max_bd.max(s);
        } else {
            max_in = max_in.max(s);
        }
    }
    let scale = grid.ball_radius().unwrap_or(1.0).powi(2);
    let vacuous = best <= 1e-24 * scale;
    ArgmaxReport {
        argmax,
        is_interior: vacuous || !grid.is_boundary(argmax),
        max_interior: max_in,
        max_boundary: max_bd,
        margin: max_in - max_bd,
        vacuous,
        bound: grid.ball_radius().map(|r| 2f64.sqrt() * r),
        max_norm,
    }
}

/// Interior-argmax audit of a potential, gradients by finite differences.
pub fn interior_argmax_check(grid: &Grid, phi: &[f64]) -> ArgmaxReport {
    argmax_from_norms(grid, &gradient_norm(grid, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn sample(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(grid.center(i))).collect()
    }

    #[test]
    fn affine_and_constant() {
        let g = Grid::interval(0.0, 1.0, 30).unwrap();
        let r = lip_const(&g, &sample(&g, |p| -2.5 * p[0] + 1.0)).unwrap();
        assert!((r.value() - 2.5).abs() < 1e-12);
        assert!((r.lip_grad - 2.5).abs() < 1e-12);
        let c = lip_const(&g, &vec![3.0; 30]).unwrap();
        assert_eq!(c.value(), 0.0);
        assert_eq!(c.lip_grad, 0.0);
    }

    #[test]
    fn absolute_value_kink() {
        let g = Grid::interval(0.0, 1.0, 100).unwrap();
        let r = lip_const(&g, &sample(&g, |p| (p[0] - 0.5).abs())).unwrap();
        assert!((r.lip_pairwise.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.lip_grad <= 1.0 + 1e-12);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        let r = lip_const(&g, &sample(&g, |p| p[0])).unwrap();
        assert_eq!(r.argmax_pair, Some((0, 1)));
        assert_eq!(r.argmax_grad, 0);
    }

    #[test]
    fn gibbs_step_has_zero_margin() {
        let grid = Arc::new(Grid::interval(-1.0, 1.0, 50).unwrap());
        let v = Potential::from_fn(grid, 1.0, |p| 0.5 * p[0] * p[0]).unwrap();
        let g = Density::gibbs(&v);
        let c = check_theorem(&g, &g, &v, 0.2, 0.0, "ot1d", TheoremTolerance::default()).unwrap();
        assert!(c.lhs.abs() < 1e-12 && c.rhs.abs() < 1e-12);
        assert!(c.passed());
    }

    #[test]
    fn vacuous_regime() {
        let grid = Arc::new(Grid::interval(-1.0, 1.0, 20).unwrap());
        let v = Potential::from_fn(grid, -3.0, |p| -1.5 * p[0] * p[0]).unwrap();
        let g = Density::gibbs(&v);
        let c = check_theorem(&g, &g, &v, 0.5, 0.0, "ot1d", TheoremTolerance::default()).unwrap();
        assert_eq!(c.state, CheckState::Vacuous);
    }

    #[test]
    fn zero_potential_is_vacuous_argmax() {
        let g = Grid::disc([0.0, 0.0], 1.0, 16).unwrap();
        let r = interior_argmax_check(&g, &vec![0.0; g.len()]);
        assert!(r.vacuous && r.is_interior);
        assert!(r.bound_holds(0.0));
    }

    #[test]
    fn boundary_argmax_detected() {
        let g = Grid::interval(-1.0, 1.0, 40).unwrap();
        let r = interior_argmax_check(&g, &sample(&g, |p| p[0].powi(3)));
        assert!(!r.is_interior && r.margin < 0.0);
    }
}
