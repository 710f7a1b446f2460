//! Extensions of `V` and `h = log g + V` from a convex domain `Omega` to an
//! enclosing domain, mollification, and the penalized approximants
//!
//! `V_n = (V~ + n d(., Omega)^2) * xi_n`, `h_n = h~ * xi_n`,
//! `g_n = lambda_n exp(h_n - V_n)`.
//!
//! Both extensions are discrete sups over the `Omega` cells. The kernel `xi` is
//! the bump `exp(-1 / (1 - |x|^2))` on the unit ball, sampled at the grid
//! offsets of `xi_n(x) = n^d xi(n x)` and renormalized to unit discrete mass.
//! Convolutions are evaluated on the enclosing grid padded by the kernel
//! radius, where the extensions are still defined.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{gradient, gradient_norm};
use crate::field::{same_grid, ConvexityAudit, Density, Potential};
use crate::grid::{Grid, Shape};
use crate::lipverify::lip_const;

/// Inner domain `Omega`, enclosing domain and mollifier scale `n`.
#[derive(Debug, Clone)]
pub struct ExtensionSetup {
    inner: Arc<Grid>,
    outer: Arc<Grid>,
    n: usize,
    /// Outer cell holding each inner cell (`usize::MAX` for inactive cells).
    embedding: Vec<usize>,
    degenerate: bool,
    mollifier: Mollifier,
}

/// Smallest distance from `inner` to the boundary of `outer`; `None` when
/// `inner` is not contained in `outer`.
fn clearance(inner: &Shape, outer: &Shape) -> Option<f64> {
    let c = match (*inner, *outer) {
        (Shape::Interval { a, b }, Shape::Interval { a: oa, b: ob }) => (a - oa).min(ob - b),
        (inner, Shape::Box { x0, x1, y0, y1 }) => {
            let (ix0, ix1, iy0, iy1) = extent(&inner)?;
            (ix0 - x0).min(x1 - ix1).min(iy0 - y0).min(y1 - iy1)
        }
        (Shape::Box { x0, x1, y0, y1 }, Shape::Disc { cx, cy, radius }) => {
            let far = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
                .iter()
                .map(|&(x, y)| (x - cx).hypot(y - cy))
                .fold(0.0f64, f64::max);
            radius - far
        }
        (
            Shape::Disc { cx, cy, radius },
            Shape::Disc {
                cx: ox,
                cy: oy,
                radius: or,
            },
        ) => or - ((cx - ox).hypot(cy - oy) + radius),
        _ => return None,
    };
    (c >= -1e-12).then_some(c.max(0.0))
}

fn extent(shape: &Shape) -> Option<(f64, f64, f64, f64)> {
    match *shape {
        Shape::Box { x0, x1, y0, y1 } => Some((x0, x1, y0, y1)),
        Shape::Disc { cx, cy, radius } => {
            Some((cx - radius, cx + radius, cy - radius, cy + radius))
        }
        Shape::Interval { .. } => None,
    }
}

/// Half-width (1-D) or radius of the enclosing domain, used to report the
/// required size when the kernel does not fit.
fn outer_radius(shape: &Shape) -> f64 {
    match *shape {
        Shape::Interval { a, b } => 0.5 * (b - a),
        Shape::Box { x0, x1, y0, y1 } => 0.5 * (x1 - x0).min(y1 - y0),
        Shape::Disc { radius, .. } => radius,
    }
}

/// Index offset between two grids with the same spacing whose cell centers
/// coincide along one axis.
fn aligned_offset(
    inner_origin: f64,
    outer_origin: f64,
    h_inner: f64,
    h_outer: f64,
) -> Result<isize> {
    if (h_inner - h_outer).abs() > 1e-9 * h_outer {
        return Err(Error::InvalidGrid(format!(
            "inner and enclosing grids need equal spacing, got {h_inner} and {h_outer}"
        )));
    }
    let k = (inner_origin - outer_origin) / h_outer;
    let r = k.round();
    if (k - r).abs() > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "inner grid is not aligned with the enclosing grid (offset {k} cells)"
        )));
    }
    Ok(r as isize)
}

impl ExtensionSetup {
    /// Check containment, alignment and the kernel-support margin
    /// `dist(Omega, boundary) >= 2 / n` (waived when both domains coincide).
    pub fn new(inner: Arc<Grid>, outer: Arc<Grid>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "mollifier scale must be >= 1"));
        }
        if inner.dim() != outer.dim() {
            return Err(Error::InvalidGrid(
                "inner and enclosing grids differ in dimension".into(),
            ));
        }
        let degenerate = inner.shape() == outer.shape();
        let margin = clearance(inner.shape(), outer.shape()).ok_or_else(|| {
            Error::InvalidGrid("inner domain is not contained in the enclosing domain".into())
        })?;
        let radius = 1.0 / n as f64;
        if !degenerate && margin < 2.0 * radius - 1e-12 {
            return Err(Error::KernelSupport {
                required_radius: outer_radius(outer.shape()) + 2.0 * radius - margin,
            });
        }
        let ox = aligned_offset(inner.origin()[0], outer.origin()[0], inner.hx(), outer.hx())?;
        let oy = if inner.dim() == 2 {
            aligned_offset(inner.origin()[1], outer.origin()[1], inner.hy(), outer.hy())?
        } else {
            0
        };
        let mut embedding = vec![usize::MAX; inner.len()];
        for i in inner.active_indices() {
            let (ix, iy) = inner.coords(i);
            let (jx, jy) = (ix as isize + ox, iy as isize + oy);
            if jx < 0 || jy < 0 || jx as usize >= outer.nx() || jy as usize >= outer.ny() {
                return Err(Error::InvalidGrid(
                    "inner cell outside the enclosing grid".into(),
                ));
            }
            let j = outer.index(jx as usize, jy as usize);
            if !outer.is_active(j) {
                return Err(Error::InvalidGrid(format!(
                    "inner cell {i} maps to an inactive enclosing cell"
                )));
            }
            embedding[i] = j;
        }
        let mollifier = Mollifier::new(&outer, n)?;
        Ok(Self {
            inner,
            outer,
            n,
            embedding,
            degenerate,
            mollifier,
        })
    }

    pub fn inner(&self) -> &Arc<Grid> {
        &self.inner
    }

    pub fn outer(&self) -> &Arc<Grid> {
        &self.outer
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether `Omega` coincides with the enclosing domain.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn embedding(&self) -> &[usize] {
        &self.embedding
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// Restrict an enclosing-grid function to the inner grid.
    pub fn restrict(&self, f: &[f64]) -> Vec<f64> {
        self.embedding
            .iter()
            .map(|&j| if j == usize::MAX { 0.0 } else { f[j] })
            .collect()
    }

    /// `d(x, Omega)` at each enclosing cell center.
    pub fn distance_to_inner(&self) -> Vec<f64> {
        (0..self.outer.len())
            .map(|i| self.inner.shape().distance(self.outer.center(i)))
            .collect()
    }
}

/// Discrete samples of `xi_n` at grid offsets, with unit total weight.
#[derive(Debug, Clone)]
pub struct Mollifier {
    /// Offsets in cells along each axis.
    pub offsets: Vec<(isize, isize)>,
    pub weights: Vec<f64>,
    /// Largest offset in cells along an axis.
    pub reach: usize,
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(grid: &Grid, n: usize) -> Result<Self> {
        let nf = n as f64;
        let (hx, hy) = (
            grid.hx(),
            if grid.dim() == 2 {
                grid.hy()
            } else {
                f64::INFINITY
            },
        );
        if nf * hx >= 1.0 || (grid.dim() == 2 && nf * hy >= 1.0) {
            return Err(Error::param(
                "n",
                format!("kernel radius 1/{n} does not exceed the grid spacing"),
            ));
        }
        let rx = (1.0 / (nf * hx)).ceil() as isize;
        let ry = if grid.dim() == 2 {
            (1.0 / (nf * hy)).ceil() as isize
        } else {
            0
        };
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for ky in -ry..=ry {
            for kx in -rx..=rx {
                let sx = nf * hx * kx as f64;
                let sy = if grid.dim() == 2 {
                    nf * hy * ky as f64
                } else {
                    0.0
                };
                let w = bump(sx * sx + sy * sy);
                if w > 0.0 {
                    offsets.push((kx, ky));
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            offsets,
            weights,
            reach: rx.max(ry) as usize,
        })
    }

    /// Total discrete weight.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `V~(x) = max_y V(y) + grad V(y).(x - y) + alpha/2 |x - y|^2` over `Omega` cells.
#[derive(Debug, Clone)]
pub struct ConvexExtension {
    points: Vec<[f64; 2]>,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
    alpha: f64,
}

impl ConvexExtension {
    /// Tangent data from `V` on its grid; gradients by finite differences.
    pub fn new(v: &Potential) -> Self {
        let grid = v.grid();
        let grad = gradient(grid, v.values());
        let cells: Vec<usize> = grid.active_indices().collect();
        Self {
            points: cells.iter().map(|&i| grid.center(i)).collect(),
            values: cells.iter().map(|&i| v.values()[i]).collect(),
            grads: cells.iter().map(|&i| grad[i]).collect(),
            alpha: v.alpha(),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for ((y, v), g) in self.points.iter().zip(&self.values).zip(&self.grads) {
            let d = [x[0] - y[0], x[1] - y[1]];
            let t = v + g[0] * d[0] + g[1] * d[1] + 0.5 * self.alpha * (d[0] * d[0] + d[1] * d[1]);
            best = best.max(t);
        }
        best
    }
}

/// McShane extension `h~(x) = max_y h(y) - L |x - y|` over `Omega` cells.
///
/// The minus sign makes `h~` agree with `h` on `Omega` and keeps the Lipschitz
/// constant `L`; with a plus sign the sup exceeds `h` on `Omega`.
#[derive(Debug, Clone)]
pub struct LipschitzExtension {
    points: Vec<[f64; 2]>,
    values: Vec<f64>,
    lip: f64,
}

impl LipschitzExtension {
    /// Extension of `h` (a grid function on `grid`) with `L` the discrete
    /// pairwise Lipschitz constant over active cells.
    pub fn new(grid: &Grid, h: &[f64]) -> Result<Self> {
        let lip = lip_const(grid, h)?.value();
        Ok(Self::with_constant(grid, h, lip))
    }

    pub fn with_constant(grid: &Grid, h: &[f64], lip: f64) -> Self {
        let cells: Vec<usize> = grid.active_indices().collect();
        Self {
            points: cells.iter().map(|&i| grid.center(i)).collect(),
            values: cells.iter().map(|&i| h[i]).collect(),
            lip,
        }
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (y, h) in self.points.iter().zip(&self.values) {
            best = best.max(h - self.lip * (x[0] - y[0]).hypot(x[1] - y[1]));
        }
        best
    }
}

/// `V~` at the cell centers of `target` (zero on inactive cells).
pub fn extend_alpha_convex(v: &Potential, target: &Grid) -> Vec<f64> {
    let ext = ConvexExtension::new(v);
    sample_active(target, |p| ext.eval(p))
}

/// `h~` at the cell centers of `target` and the constant `L` used.
pub fn extend_lipschitz(grid: &Grid, h: &[f64], target: &Grid) -> Result<(Vec<f64>, f64)> {
    let ext = LipschitzExtension::new(grid, h)?;
    Ok((sample_active(target, |p| ext.eval(p)), ext.lip()))
}

fn sample_active(grid: &Grid, f: impl Fn([f64; 2]) -> f64 + Sync) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if grid.is_active(i) {
                f(grid.center(i))
            } else {
                0.0
            }
        })
        .collect()
}

/// Enclosing bounding box padded by the kernel reach.
struct Padded {
    nx: usize,
    ny: usize,
    pad_x: usize,
    pad_y: usize,
}

impl Padded {
    fn new(grid: &Grid, reach: usize) -> Self {
        let pad_y = if grid.dim() == 2 { reach } else { 0 };
        Self {
            nx: grid.nx() + 2 * reach,
            ny: grid.ny() + 2 * pad_y,
            pad_x: reach,
            pad_y,
        }
    }

    fn center(&self, grid: &Grid, k: usize) -> [f64; 2] {
        let (px, py) = (k % self.nx, k / self.nx);
        let o = grid.origin();
        let x = o[0] + (px as f64 - self.pad_x as f64 + 0.5) * grid.hx();
        let y = if grid.dim() == 2 {
            o[1] + (py as f64 - self.pad_y as f64 + 0.5) * grid.hy()
        } else {
            0.0
        };
        [x, y]
    }

    fn sample(&self, grid: &Grid, f: impl Fn([f64; 2]) -> f64 + Sync) -> Vec<f64> {
        (0..self.nx * self.ny)
            .into_par_iter()
            .map(|k| f(self.center(grid, k)))
            .collect()
    }

    /// Convolve padded samples with the kernel at each active enclosing cell.
    fn convolve(&self, grid: &Grid, kernel: &Mollifier, f: &[f64]) -> Vec<f64> {
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                if !grid.is_active(i) {
                    return 0.0;
                }
                let (ix, iy) = grid.coords(i);
                let (cx, cy) = ((ix + self.pad_x) as isize, (iy + self.pad_y) as isize);
                kernel
                    .offsets
                    .iter()
                    .zip(&kernel.weights)
                    .map(|(&(kx, ky), w)| {
                        let k = (cy - ky) as usize * self.nx + (cx - kx) as usize;
                        w * f[k]
                    })
                    .sum()
            })
            .collect()
    }
}

/// Approximants on the enclosing grid (inactive cells hold zero).
#[derive(Debug, Clone)]
pub struct Approximants {
    pub n: usize,
    pub v_tilde: Vec<f64>,
    /// `V~ * xi_n`.
    pub v_tilde_mollified: Vec<f64>,
    pub v_n: Vec<f64>,
    pub h_tilde: Vec<f64>,
    pub h_n: Vec<f64>,
    pub g_n: Density,
    /// Lipschitz constant of `h` over `Omega` used by the extension.
    pub lip_h: f64,
    pub alpha: f64,
}

/// Build `V_n`, `h_n` and `g_n` from `V` and `g` on the inner grid.
pub fn build_approximants(
    setup: &ExtensionSetup,
    v: &Potential,
    g: &Density,
) -> Result<Approximants> {
    same_grid(v.grid(), setup.inner())?;
    same_grid(g.grid(), setup.inner())?;
    g.require_positive()?;
    let inner = setup.inner();
    let outer = setup.outer();
    let h: Vec<f64> = g
        .log_values()
        .iter()
        .zip(v.values())
        .enumerate()
        .map(|(i, (l, vi))| if inner.is_active(i) { l + vi } else { 0.0 })
        .collect();
    let convex = ConvexExtension::new(v);
    let lipschitz = LipschitzExtension::new(inner, &h)?;
    let nf = setup.n() as f64;
    let shape = *inner.shape();

    let kernel = setup.mollifier();
    let padded = Padded::new(outer, kernel.reach);
    let vt_pad = padded.sample(outer, |p| convex.eval(p));
    // when Omega is the whole enclosing domain the penalty is dropped
    let degenerate = setup.is_degenerate();
    let pen_pad = padded.sample(outer, |p| {
        let d = if degenerate { 0.0 } else { shape.distance(p) };
        nf * d * d
    });
    let ht_pad = padded.sample(outer, |p| lipschitz.eval(p));
    let penalized: Vec<f64> = vt_pad.iter().zip(&pen_pad).map(|(a, b)| a + b).collect();

    let v_tilde_mollified = padded.convolve(outer, kernel, &vt_pad);
    let v_n = padded.convolve(outer, kernel, &penalized);
    let h_n = padded.convolve(outer, kernel, &ht_pad);
    let v_tilde = sample_active(outer, |p| convex.eval(p));
    let h_tilde = sample_active(outer, |p| lipschitz.eval(p));
    let log_g: Vec<f64> = h_n.iter().zip(&v_n).map(|(a, b)| a - b).collect();
    let g_n = Density::from_log(outer.clone(), &log_g)?;
    Ok(Approximants {
        n: setup.n(),
        v_tilde,
        v_tilde_mollified,
        v_n,
        h_tilde,
        h_n,
        g_n,
        lip_h: lipschitz.lip(),
        alpha: v.alpha(),
    })
}

/// `Lip_Omega(V_n) - Lip_Omega(V)` by pair scans over the `Omega` cells.
pub fn lip_penalty_bound_check(setup: &ExtensionSetup, v: &Potential, v_n: &[f64]) -> Result<f64> {
    same_grid(v.grid(), setup.inner())?;
    let inner = setup.inner();
    let on_omega = setup.restrict(v_n);
    Ok(lip_const(inner, &on_omega)?.value() - lip_const(inner, v.values())?.value())
}

/// Mass of `g_n` on enclosing cells with `d(x, Omega) > delta`.
pub fn mass_outside(setup: &ExtensionSetup, g_n: &Density, delta: f64) -> f64 {
    let d = setup.distance_to_inner();
    let outer = setup.outer();
    let f: Vec<f64> = (0..outer.len())
        .map(|i| if d[i] > delta { g_n.values()[i] } else { 0.0 })
        .collect();
    outer.integrate(&f)
}

/// Largest value of `g_n` on enclosing cells with `d(x, Omega) > delta`.
pub fn max_outside(setup: &ExtensionSetup, g_n: &Density, delta: f64) -> f64 {
    let d = setup.distance_to_inner();
    setup
        .outer()
        .active_indices()
        .filter(|&i| d[i] > delta)
        .map(|i| g_n.values()[i])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionDiagnostics {
    pub n: usize,
    /// `min` and `max` over `Omega` of `V_n - V~ * xi_n`; the sandwich asks
    /// for `[0, 1/n]`.
    pub sandwich_min: f64,
    pub sandwich_max: f64,
    pub sandwich_bound: f64,
    /// `max_Omega |V~ - V|` and `max_Omega |h~ - h|`.
    pub extension_error_v: f64,
    pub extension_error_h: f64,
    /// Smallest value of `V~` on the enclosing grid (recorded, not enforced).
    pub min_v_tilde: f64,
    pub lip_v_omega: f64,
    pub lip_vn_omega: f64,
    pub lip_h: f64,
    /// Largest finite-difference gradient norm of `h_n` on the enclosing grid.
    pub grad_hn_max: f64,
    pub convexity: ConvexityAudit,
    pub kernel_mass: f64,
}

/// Audit the approximants against the properties they are built to satisfy.
pub fn diagnose(
    setup: &ExtensionSetup,
    v: &Potential,
    g: &Density,
    approx: &Approximants,
) -> Result<ExtensionDiagnostics> {
    let inner = setup.inner();
    let outer = setup.outer();
    let emb = setup.embedding();
    let h: Vec<f64> = g
        .log_values()
        .iter()
        .zip(v.values())
        .map(|(l, vi)| l + vi)
        .collect();
    let (mut s_min, mut s_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut err_v, mut err_h) = (0.0f64, 0.0f64);
    for i in inner.active_indices() {
        let j = emb[i];
        let s = approx.v_n[j] - approx.v_tilde_mollified[j];
        s_min = s_min.min(s);
        s_max = s_max.max(s);
        err_v = err_v.max((approx.v_tilde[j] - v.values()[i]).abs());
        err_h = err_h.max((approx.h_tilde[j] - h[i]).abs());
    }
    let min_v_tilde = outer
        .active_indices()
        .map(|i| approx.v_tilde[i])
        .fold(f64::INFINITY, f64::min);
    let lip_v_omega = lip_const(inner, v.values())?.value();
    let lip_vn_omega = lip_const(inner, &setup.restrict(&approx.v_n))?.value();
    let grad_hn_max = gradient_norm(outer, &approx.h_n)
        .iter()
        .enumerate()
        .filter(|(i, _)| outer.is_active(*i))
        .fold(0.0f64, |m, (_, x)| m.max(*x));
    let convexity =
        Potential::new(outer.clone(), approx.v_n.clone(), approx.alpha)?.convexity_audit();
    Ok(ExtensionDiagnostics {
        n: setup.n(),
        sandwich_min: s_min,
        sandwich_max: s_max,
        sandwich_bound: 1.0 / setup.n() as f64,
        extension_error_v: err_v,
        extension_error_h: err_h,
        min_v_tilde,
        lip_v_omega,
        lip_vn_omega,
        lip_h: approx.lip_h,
        grad_hn_max,
        convexity,
        kernel_mass: setup.mollifier().mass(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids(n_inner: usize) -> (Arc<Grid>, Arc<Grid>) {
        let inner = Arc::new(Grid::interval(0.0, 1.0, n_inner).unwrap());
        let outer = Arc::new(Grid::interval(-1.0, 2.0, 3 * n_inner).unwrap());
        (inner, outer)
    }

    #[test]
    fn quadratic_extends_to_itself() {
        let (inner, outer) = grids(50);
        let v = Potential::from_fn(inner, 2.0, |p| p[0] * p[0]).unwrap();
        let ext = extend_alpha_convex(&v, &outer);
        for i in 0..outer.len() {
            let x = outer.center(i)[0];
            assert!((ext[i] - x * x).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn affine_extends_to_itself() {
        let (inner, outer) = grids(40);
        let v = Potential::from_fn(inner.clone(), 0.0, |p| 3.0 - 2.0 * p[0]).unwrap();
        let ext = extend_alpha_convex(&v, &outer);
        let h: Vec<f64> = (0..inner.len()).map(|i| inner.center(i)[0]).collect();
        let (ht, lip) = extend_lipschitz(&inner, &h, &outer).unwrap();
        assert!((lip - 1.0).abs() < 1e-12);
        // the smallest 1-Lipschitz extension of x folds back past the last
        // sample y* = 1 - h/2: 2 y* - x
        let last = inner.center(inner.len() - 1)[0];
        for i in 0..outer.len() {
            let x = outer.center(i)[0];
            assert!((ext[i] - (3.0 - 2.0 * x)).abs() < 1e-12);
            let expected = if x <= last { x } else { 2.0 * last - x };
            assert!((ht[i] - expected).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn constant_lipschitz_extension() {
        let (inner, outer) = grids(20);
        let (ht, lip) = extend_lipschitz(&inner, &[0.7; 20], &outer).unwrap();
        assert_eq!(lip, 0.0);
        assert!(ht.iter().all(|&x| x == 0.7));
    }

    #[test]
    fn kernel_has_unit_mass() {
        let (_, outer) = grids(100);
        for n in [2, 5, 10, 20] {
            let k = Mollifier::new(&outer, n).unwrap();
            assert!((k.mass() - 1.0).abs() < 1e-10);
        }
        let disc = Grid::disc([0.0, 0.0], 1.0, 40).unwrap();
        assert!((Mollifier::new(&disc, 4).unwrap().mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_must_fit() {
        let inner = Arc::new(Grid::interval(0.0, 1.0, 20).unwrap());
        let outer = Arc::new(Grid::interval(-0.25, 1.25, 30).unwrap());
        assert!(matches!(
            ExtensionSetup::new(inner.clone(), outer.clone(), 5),
            Err(Error::KernelSupport { .. })
        ));
        assert!(ExtensionSetup::new(inner, outer, 8).is_ok());
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let inner = Arc::new(Grid::interval(0.0, 1.0, 20).unwrap());
        let outer = Arc::new(Grid::interval(-1.0, 2.0, 50).unwrap());
        assert!(ExtensionSetup::new(inner, outer, 5).is_err());
    }

    #[test]
    fn degenerate_domain_is_allowed() {
        let g = Arc::new(Grid::interval(0.0, 1.0, 100).unwrap());
        let setup = ExtensionSetup::new(g.clone(), g.clone(), 10).unwrap();
        assert!(setup.is_degenerate());
        let v = Potential::from_fn(g.clone(), 1.0, |p| 0.5 * p[0] * p[0]).unwrap();
        let a = build_approximants(&setup, &v, &Density::gibbs(&v)).unwrap();
        for i in 0..g.len() {
            assert!((a.v_n[i] - a.v_tilde_mollified[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn sandwich_and_penalty_on_zero_potential() {
        let (inner, outer) = grids(100);
        let v = Potential::zero(inner.clone());
        let g = Density::uniform(inner);
        for n in [5, 10, 20] {
            let setup = ExtensionSetup::new(v.grid().clone(), outer.clone(), n).unwrap();
            let a = build_approximants(&setup, &v, &g).unwrap();
            let d = diagnose(&setup, &v, &g, &a).unwrap();
            assert!(d.sandwich_min >= 0.0 && d.sandwich_max <= 1.0 / n as f64 + 1e-12);
            assert!(lip_penalty_bound_check(&setup, &v, &a.v_n).unwrap() <= 2.05);
            assert!(d.convexity.consistent);
            assert!((a.g_n.mass() - 1.0).abs() < 1e-12);
        }
    }
}
