//! Entropic optimal transport and entropic JKO steps on box, disc and
//! interval grids.
//!
//! Everything runs in the log domain. The Gibbs kernel `exp(-|x - y|^2 / eps)`
//! factors over the axes of the bounding box, so one kernel application is a
//! log-sum-exp along rows followed by one along columns; masked (inactive)
//! cells carry `-inf` log mass and drop out.
//!
//! Plans are written `pi_ij = exp(A_i + B_j - c_ij / eps)`; the standard duals
//! with respect to `p (x) q` are `f = eps (A - log p)` and `g = eps (B - log q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::W2Backend;
use crate::error::{Error, Result};
use crate::field::{same_grid, Density, Potential};
use crate::grid::Grid;
use crate::lipverify::{interior_argmax_check, ArgmaxReport};

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Shifted exponents below this add less than one ulp to a sum whose largest
/// term is 1, so they are skipped.
const NEGLIGIBLE: f64 = -40.0;

/// `sum exp(t - m)` over terms above the negligible threshold.
fn sum_shifted(terms: &[f64], m: f64) -> f64 {
    terms
        .iter()
        .map(|t| t - m)
        .filter(|z| *z > NEGLIGIBLE)
        .map(f64::exp)
        .sum()
}

/// Separable squared-distance kernel on the bounding box of a grid.
struct Kernel {
    nx: usize,
    ny: usize,
    /// `(h d)^2 / eps` per index offset `d`, per axis.
    cx: Vec<f64>,
    cy: Vec<f64>,
    /// `log((h d)^2)` per offset (`-inf` at `d = 0`).
    log_dx: Vec<f64>,
    log_dy: Vec<f64>,
}

impl Kernel {
    fn new(grid: &Grid, eps: f64) -> Self {
        let axis = |n: usize, h: f64| -> (Vec<f64>, Vec<f64>) {
            let c = (0..n).map(|d| (h * d as f64).powi(2) / eps).collect();
            let l = (0..n)
                .map(|d| {
                    if d == 0 {
                        NEG_INF
                    } else {
                        2.0 * (h * d as f64).ln()
                    }
                })
                .collect();
            (c, l)
        };
        let (cx, log_dx) = axis(grid.nx(), grid.hx());
        let (cy, log_dy) = axis(grid.ny(), if grid.ny() > 1 { grid.hy() } else { 1.0 });
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            cx,
            cy,
            log_dx,
            log_dy,
        }
    }

    /// `out_i = LSE_j (input_j - c_ij / eps [+ log dx_ij^2] [+ log dy_ij^2])`.
    fn apply(&self, input: &[f64], weight_x: bool, weight_y: bool) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut tmp = vec![0.0; nx * ny];
        tmp.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            let src = &input[iy * nx..(iy + 1) * nx];
            let mut terms = vec![0.0; nx];
            for (ix, out) in row.iter_mut().enumerate() {
                let mut m = NEG_INF;
                for (jx, t) in terms.iter_mut().enumerate() {
                    let d = ix.abs_diff(jx);
                    *t = src[jx] - self.cx[d] + if weight_x { self.log_dx[d] } else { 0.0 };
                    m = m.max(*t);
                }
                *out = if m == NEG_INF {
                    NEG_INF
                } else {
                    m + sum_shifted(&terms, m).ln()
                };
            }
        });
        if ny == 1 && !weight_y {
            return tmp;
        }
        let mut out = vec![0.0; nx * ny];
        out.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            let mut m = vec![NEG_INF; nx];
            for jy in 0..ny {
                let d = iy.abs_diff(jy);
                let shift = -self.cy[d] + if weight_y { self.log_dy[d] } else { 0.0 };
                for ix in 0..nx {
                    m[ix] = m[ix].max(tmp[jy * nx + ix] + shift);
                }
            }
            let mut s = vec![0.0; nx];
            for jy in 0..ny {
                let d = iy.abs_diff(jy);
                let shift = -self.cy[d] + if weight_y { self.log_dy[d] } else { 0.0 };
                for ix in 0..nx {
                    let z = tmp[jy * nx + ix] + shift - m[ix];
                    if z > NEGLIGIBLE {
                        s[ix] += z.exp();
                    }
                }
            }
            for ix in 0..nx {
                row[ix] = if m[ix] == NEG_INF {
                    NEG_INF
                } else {
                    m[ix] + s[ix].ln()
                };
            }
        });
        out
    }
}

/// Cell masses in the log domain (`-inf` on inactive or empty cells).
fn log_masses(d: &Density) -> Vec<f64> {
    let grid = d.grid();
    let cm = grid.cell_measure();
    (0..grid.len())
        .map(|i| {
            let m = d.values()[i] * cm;
            if grid.is_active(i) && m > 0.0 {
                m.ln()
            } else {
                NEG_INF
            }
        })
        .collect()
}

/// Log of the smallest positive `f64`; kernels below it underflow.
const UNDERFLOW_EXPONENT: f64 = 708.0;

fn check_eps(grid: &Grid, eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param("eps", format!("must be > 0, got {eps}")));
    }
    let h = grid.h();
    if h * h / eps > UNDERFLOW_EXPONENT {
        return Err(Error::EpsUnderflow {
            eps,
            suggested_min: 0.25 * h * h,
        });
    }
    Ok(())
}

/// Default regularization `2 h^2`.
pub fn default_eps(grid: &Grid) -> f64 {
    2.0 * grid.h() * grid.h()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkhornConfig {
    pub eps: f64,
    /// L1 tolerance on the row-marginal defect (columns are exact after each
    /// update).
    pub tol_marg: f64,
    pub max_iter: usize,
    /// Warm-start from a geometric ladder of larger `eps`.
    pub anneal: bool,
}

impl SinkhornConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            eps: 0.0,
            tol_marg: 1e-8,
            max_iter: 20_000,
            anneal: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SinkhornResult {
    pub eps: f64,
    /// Standard duals (`pi = exp((f + g - c) / eps) p q`); zero on inactive cells.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Transport cost of the entropic plan, `<c, pi>`.
    pub w2_eps: f64,
    /// Entropic objective `<c, pi> + eps KL(pi | p q)`, equal to the dual value.
    pub ot_eps: f64,
    pub row_defect: f64,
    pub col_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    log_a: Vec<f64>,
    #[serde(skip)]
    log_b: Vec<f64>,
    #[serde(skip)]
    log_c_scale: (usize, usize, f64, f64, f64),
}

impl SinkhornResult {
    /// Plan entry between cells `i` (source) and `j` (target).
    pub fn plan(&self, i: usize, j: usize) -> f64 {
        let (nx, _, hx, hy, eps) = self.log_c_scale;
        let (ix, iy) = (i % nx, i / nx);
        let (jx, jy) = (j % nx, j / nx);
        let c = (hx * ix.abs_diff(jx) as f64).powi(2) + (hy * iy.abs_diff(jy) as f64).powi(2);
        (self.log_a[i] + self.log_b[j] - c / eps).exp()
    }
}

struct Marginals {
    p: Vec<f64>,
    q: Vec<f64>,
    log_p: Vec<f64>,
    log_q: Vec<f64>,
}

fn sinkhorn_loop(
    grid: &Grid,
    m: &Marginals,
    eps: f64,
    f: &mut [f64],
    g: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> (usize, f64, bool) {
    let kernel = Kernel::new(grid, eps);
    let n = grid.len();
    let mut log_b: Vec<f64> = (0..n).map(|j| g[j] / eps + m.log_q[j]).collect();
    let mut log_a: Vec<f64> = (0..n).map(|i| f[i] / eps + m.log_p[i]).collect();
    let mut defect = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        let lse = kernel.apply(&log_b, false, false);
        let new_a: Vec<f64> = (0..n).map(|i| m.log_p[i] - lse[i]).collect();
        if it > 0 {
            defect = (0..n)
                .filter(|&i| m.p[i] > 0.0)
                .map(|i| m.p[i] * ((log_a[i] - new_a[i]).exp() - 1.0).abs())
                .sum();
            if defect <= tol {
                break;
            }
        }
        log_a = new_a;
        let lse = kernel.apply(&log_a, false, false);
        log_b = (0..n).map(|j| m.log_q[j] - lse[j]).collect();
        it += 1;
    }
    for i in 0..n {
        f[i] = if m.p[i] > 0.0 {
            eps * (log_a[i] - m.log_p[i])
        } else {
            0.0
        };
        g[i] = if m.q[i] > 0.0 {
            eps * (log_b[i] - m.log_q[i])
        } else {
            0.0
        };
    }
    (it, defect, defect <= tol)
}

/// Log-domain Sinkhorn between `rho` and `g` with cost `|x - y|^2`.
pub fn sinkhorn(rho: &Density, g: &Density, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    same_grid(rho.grid(), g.grid())?;
    let grid = rho.grid();
    check_eps(grid, cfg.eps)?;
    rho.require_positive()?;
    g.require_positive()?;
    let cm = grid.cell_measure();
    let m = Marginals {
        p: rho.values().iter().map(|v| v * cm).collect(),
        q: g.values().iter().map(|v| v * cm).collect(),
        log_p: log_masses(rho),
        log_q: log_masses(g),
    };
    let n = grid.len();
    let mut f = vec![0.0; n];
    let mut gg = vec![0.0; n];
    let mut iterations = 0;
    if cfg.anneal {
        let diam2 = (grid.nx() as f64 * grid.hx()).powi(2)
            + if grid.dim() == 2 {
                (grid.ny() as f64 * grid.hy()).powi(2)
            } else {
                0.0
            };
        let mut e = 0.25 * diam2;
        while e > 2.0 * cfg.eps {
            let (it, _, _) = sinkhorn_loop(grid, &m, e, &mut f, &mut gg, 1e-4, 200);
            iterations += it;
            e *= 0.5;
        }
    }
    let (it, row_defect, converged) = sinkhorn_loop(
        grid,
        &m,
        cfg.eps,
        &mut f,
        &mut gg,
        cfg.tol_marg,
        cfg.max_iter,
    );
    iterations += it;
    finish(grid, &m, cfg.eps, f, gg, iterations, row_defect, converged)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    grid: &Grid,
    m: &Marginals,
    eps: f64,
    f: Vec<f64>,
    g: Vec<f64>,
    iterations: usize,
    row_defect: f64,
    converged: bool,
) -> Result<SinkhornResult> {
    let n = grid.len();
    let kernel = Kernel::new(grid, eps);
    let log_a: Vec<f64> = (0..n)
        .map(|i| {
            if m.p[i] > 0.0 {
                f[i] / eps + m.log_p[i]
            } else {
                NEG_INF
            }
        })
        .collect();
    let log_b: Vec<f64> = (0..n)
        .map(|j| {
            if m.q[j] > 0.0 {
                g[j] / eps + m.log_q[j]
            } else {
                NEG_INF
            }
        })
        .collect();
    let col = kernel.apply(&log_a, false, false);
    let col_defect: f64 = (0..n)
        .filter(|&j| m.q[j] > 0.0)
        .map(|j| ((log_b[j] + col[j]).exp() - m.q[j]).abs())
        .sum();
    let row = kernel.apply(&log_b, false, false);
    let row_defect_now: f64 = (0..n)
        .filter(|&i| m.p[i] > 0.0)
        .map(|i| ((log_a[i] + row[i]).exp() - m.p[i]).abs())
        .sum();
    let mut w2 = 0.0;
    let wx = kernel.apply(&log_b, true, false);
    for i in 0..n {
        if m.p[i] > 0.0 {
            w2 += (log_a[i] + wx[i]).exp();
        }
    }
    if grid.dim() == 2 {
        let wy = kernel.apply(&log_b, false, true);
        for i in 0..n {
            if m.p[i] > 0.0 {
                w2 += (log_a[i] + wy[i]).exp();
            }
        }
    }
    let ot_eps = (0..n).map(|i| f[i] * m.p[i] + g[i] * m.q[i]).sum();
    let row_defect = if row_defect.is_finite() {
        row_defect_now
    } else {
        row_defect_now.max(row_defect)
    };
    Ok(SinkhornResult {
        eps,
        f,
        g,
        w2_eps: w2,
        ot_eps,
        row_defect,
        col_defect,
        iterations,
        converged,
        log_a,
        log_b,
        log_c_scale: (
            grid.nx(),
            grid.ny(),
            grid.hx(),
            if grid.ny() > 1 { grid.hy() } else { 0.0 },
            eps,
        ),
    })
}

/// Kantorovich potential estimate `f / 2` (cost `|x - y|^2 / 2`), gauged to
/// `int phi d rho = 0`.
pub fn phi_from_dual(rho: &Density, f: &[f64]) -> Vec<f64> {
    let half: Vec<f64> = f.iter().map(|x| 0.5 * x).collect();
    let mean = rho.expect(&half);
    let grid = rho.grid();
    (0..grid.len())
        .map(|i| {
            if grid.is_active(i) {
                half[i] - mean
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropicJkoConfig {
    pub eps: f64,
    /// Stop when successive iterates differ by at most this much in L1 ...
    pub tol_rho: f64,
    /// ... and the plan's `g`-marginal defect is at most this much in L1.
    pub tol_marg: f64,
    pub max_iter: usize,
}

impl EntropicJkoConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

impl Default for EntropicJkoConfig {
    fn default() -> Self {
        Self {
            eps: 0.0,
            tol_rho: 1e-9,
            tol_marg: 1e-8,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropicStepResult {
    #[serde(skip)]
    pub rho_next: Density,
    /// Standard duals on the `rho_next` side and the `g` side.
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
    pub eps: f64,
    pub w2_eps: f64,
    #[serde(skip)]
    pub phi_approx: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 defect of the plan's `g`-marginal.
    pub marginal_defect: f64,
}

/// One entropic JKO step
/// `min_rho W_eps(rho, g) / (2 tau) + int rho log rho + int V rho`
/// by alternating KL projections on the plan.
///
/// With `sigma = 2 tau / eps`, the KL proximal map of `sigma F` at the kernel
/// image `z = K b` is
/// `p = z^{1/(1+sigma)} * exp(sigma (log |cell| - 1 - V) / (1 + sigma))`,
/// i.e. the kernel image enters with exponent `(eps/2) / (tau + eps/2)` and
/// the Gibbs factor `exp(-V)` with exponent `tau / (tau + eps/2)`.
/// At the fixed point `(1 + eps / (2 tau)) log rho + V + phi / tau` is constant.
pub fn entropic_jko_step(
    g: &Density,
    v: &Potential,
    tau: f64,
    cfg: &EntropicJkoConfig,
) -> Result<EntropicStepResult> {
    same_grid(g.grid(), v.grid())?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    let grid = g.grid().clone();
    let eps = cfg.eps;
    check_eps(&grid, eps)?;
    g.require_positive()?;
    let n = grid.len();
    let cm = grid.cell_measure();
    let kernel = Kernel::new(&grid, eps);
    let log_q = log_masses(g);
    let sigma = 2.0 * tau / eps;
    let gibbs: Vec<f64> = (0..n)
        .map(|i| sigma * (cm.ln() - 1.0 - v.values()[i]))
        .collect();

    let mut log_a: Vec<f64> = log_q
        .iter()
        .map(|l| if l.is_finite() { 0.0 } else { NEG_INF })
        .collect();
    let mut log_b = vec![NEG_INF; n];
    let mut log_p = log_q.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut change = f64::INFINITY;
    loop {
        let lse = kernel.apply(&log_a, false, false);
        let new_b: Vec<f64> = (0..n).map(|j| log_q[j] - lse[j]).collect();
        if iterations > 0 {
            // target-marginal defect of the current plan
            let defect: f64 = (0..n)
                .filter(|&j| log_q[j].is_finite())
                .map(|j| log_q[j].exp() * ((log_b[j] - new_b[j]).exp() - 1.0).abs())
                .sum();
            if change <= cfg.tol_rho && defect <= cfg.tol_marg {
                converged = true;
                break;
            }
        }
        if iterations == cfg.max_iter {
            break;
        }
        log_b = new_b;
        let log_z = kernel.apply(&log_b, false, false);
        let new_p: Vec<f64> = (0..n)
            .map(|i| {
                if log_q[i].is_finite() {
                    (log_z[i] + gibbs[i]) / (1.0 + sigma)
                } else {
                    NEG_INF
                }
            })
            .collect();
        log_a = (0..n).map(|i| new_p[i] - log_z[i]).collect();
        change = (0..n)
            .filter(|&i| new_p[i].is_finite())
            .map(|i| (new_p[i].exp() - log_p[i].exp()).abs())
            .sum();
        log_p = new_p;
        iterations += 1;
    }
    let rho_next = Density::from_log(
        grid.clone(),
        &log_p.iter().map(|l| l - cm.ln()).collect::<Vec<_>>(),
    )?;
    let m = Marginals {
        p: log_p.iter().map(|l| l.exp()).collect(),
        q: g.values().iter().map(|x| x * cm).collect(),
        log_p: log_p.clone(),
        log_q: log_q.clone(),
    };
    let u: Vec<f64> = (0..n)
        .map(|i| {
            if log_p[i].is_finite() {
                eps * (log_a[i] - log_p[i])
            } else {
                0.0
            }
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|j| {
            if log_q[j].is_finite() {
                eps * (log_b[j] - log_q[j])
            } else {
                0.0
            }
        })
        .collect();
    let fin = finish(&grid, &m, eps, u, w, iterations, 0.0, converged)?;
    let phi_approx = phi_from_dual(&rho_next, &fin.f);
    Ok(EntropicStepResult {
        rho_next,
        u: fin.f,
        v: fin.g,
        eps,
        w2_eps: fin.w2_eps,
        phi_approx,
        iterations,
        converged,
        marginal_defect: fin.col_defect,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub argmax: ArgmaxReport,
    pub eps: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_converged: bool,
    pub row_defect: f64,
}

/// Where does `|grad phi_approx|^2` peak on a disc (or interval)?
pub fn boundary_argmax_probe(
    rho: &Density,
    g: &Density,
    cfg: &SinkhornConfig,
) -> Result<ProbeReport> {
    let grid = rho.grid();
    if grid.ball_radius().is_none() {
        return Err(Error::WrongDimension {
            expected: "disc or interval",
        });
    }
    let s = sinkhorn(rho, g, cfg)?;
    let phi = phi_from_dual(rho, &s.f);
    Ok(ProbeReport {
        argmax: interior_argmax_check(grid, &phi),
        eps: s.eps,
        sinkhorn_iterations: s.iterations,
        sinkhorn_converged: s.converged,
        row_defect: s.row_defect,
    })
}

/// Debiased Sinkhorn divergence
/// `OT_eps(rho, g) - (OT_eps(rho, rho) + OT_eps(g, g)) / 2`, which vanishes
/// for `rho = g`.
#[derive(Debug, Clone, Copy)]
pub struct SinkhornBackend {
    pub cfg: SinkhornConfig,
}

impl W2Backend for SinkhornBackend {
    fn w2_squared(&self, rho: &Density, g: &Density) -> Result<f64> {
        let cross = sinkhorn(rho, g, &self.cfg)?.ot_eps;
        let a = sinkhorn(rho, rho, &self.cfg)?.ot_eps;
        let b = sinkhorn(g, g, &self.cfg)?.ot_eps;
        Ok(cross - 0.5 * a - 0.5 * b)
    }

    fn name(&self) -> &'static str {
        "sinkhorn"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn two_by_two_first_iteration() {
        // 2 x 2 box: four cells, closed-form alternating projection
        let grid = Arc::new(Grid::rect(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap());
        let rho = Density::normalize(grid.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = Density::normalize(grid.clone(), vec![4.0, 1.0, 1.0, 2.0]).unwrap();
        let eps = 0.5;
        let cfg = SinkhornConfig {
            eps,
            tol_marg: 0.0,
            max_iter: 1,
            anneal: false,
        };
        let s = sinkhorn(&rho, &g, &cfg).unwrap();
        let cm = grid.cell_measure();
        let p: Vec<f64> = rho.values().iter().map(|v| v * cm).collect();
        let q: Vec<f64> = g.values().iter().map(|v| v * cm).collect();
        let k = |i: usize, j: usize| (-grid.distance(i, j).powi(2) / eps).exp();
        // zero duals start from b = q: a = p / (K q), then b = q / (K^T a)
        let a: Vec<f64> = (0..4)
            .map(|i| p[i] / (0..4).map(|j| k(i, j) * q[j]).sum::<f64>())
            .collect();
        let b: Vec<f64> = (0..4)
            .map(|j| q[j] / (0..4).map(|i| k(i, j) * a[i]).sum::<f64>())
            .collect();
        for i in 0..4 {
            assert!((s.f[i] - eps * (a[i] / p[i]).ln()).abs() < 1e-12);
            assert!((s.g[i] - eps * (b[i] / q[i]).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_on_disc() {
        let grid = Arc::new(Grid::disc([0.0, 0.0], 1.0, 16).unwrap());
        let rho = Density::from_fn(grid.clone(), |p| (-(p[0] * p[0] + p[1] * p[1])).exp()).unwrap();
        let g = Density::from_fn(grid.clone(), |p| 1.0 + 0.5 * p[0]).unwrap();
        let s = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(default_eps(&grid))).unwrap();
        assert!(s.converged);
        assert!(s.row_defect <= 1e-8 && s.col_defect <= 1e-8);
    }

    #[test]
    fn eps_underflow() {
        let grid = Arc::new(Grid::rect(0.0, 1.0, 0.0, 1.0, 10, 10).unwrap());
        let d = Density::uniform(grid.clone());
        match sinkhorn(&d, &d, &SinkhornConfig::with_eps(1e-8)) {
            Err(Error::EpsUnderflow { suggested_min, .. }) => {
                assert!((suggested_min - 0.0025).abs() < 1e-15)
            }
            other => panic!("expected underflow, got {other:?}"),
        }
    }

    #[test]
    fn debiased_divergence_vanishes_on_diagonal() {
        let grid = Arc::new(Grid::rect(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap());
        let d = Density::from_fn(grid.clone(), |p| 1.0 + p[0] * p[1]).unwrap();
        let b = SinkhornBackend {
            cfg: SinkhornConfig::with_eps(default_eps(&grid)),
        };
        assert_eq!(b.w2_squared(&d, &d).unwrap(), 0.0);
    }
}
