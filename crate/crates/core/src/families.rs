//! Named density and potential families used by examples and the CLI.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Density, Potential};
use crate::grid::{Grid, Shape};

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Cell averages of a normal density over `[lo, lo + h]`.
fn gaussian_cell_average(lo: f64, h: f64, mean: f64, sigma: f64) -> f64 {
    (normal_cdf((lo + h - mean) / sigma) - normal_cdf((lo - mean) / sigma)) / h
}

/// Gaussian restricted to the domain, discretized by exact cell averages
/// (products of per-axis averages in 2-D).
pub fn truncated_gaussian(grid: Arc<Grid>, mean: [f64; 2], sigma: f64) -> Result<Density> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
    }
    let o = grid.origin();
    let values = (0..grid.len())
        .map(|idx| {
            let (ix, iy) = grid.coords(idx);
            let mut v =
                gaussian_cell_average(o[0] + ix as f64 * grid.hx(), grid.hx(), mean[0], sigma);
            if grid.dim() == 2 {
                v *= gaussian_cell_average(o[1] + iy as f64 * grid.hy(), grid.hy(), mean[1], sigma);
            }
            v
        })
        .collect();
    Density::normalize(grid, values)
}

/// Position of a point relative to the bounding box, each coordinate in [0, 1].
fn relative(grid: &Grid, p: [f64; 2]) -> [f64; 2] {
    match *grid.shape() {
        Shape::Interval { a, b } => [(p[0] - a) / (b - a), 0.0],
        Shape::Box { x0, x1, y0, y1 } => [(p[0] - x0) / (x1 - x0), (p[1] - y0) / (y1 - y0)],
        Shape::Disc { cx, cy, radius } => [
            (p[0] - cx + radius) / (2.0 * radius),
            (p[1] - cy + radius) / (2.0 * radius),
        ],
    }
}

/// Density proportional to `exp(-V + amplitude * cos(frequency * pi * s))`,
/// `s` the relative coordinate in the bounding box (a product of cosines in
/// 2-D). The perturbation has zero normal derivative on interval and box
/// boundaries.
pub fn perturbed_gibbs(v: &Potential, amplitude: f64, frequency: f64) -> Result<Density> {
    if !amplitude.is_finite() || !frequency.is_finite() {
        return Err(Error::param(
            "amplitude",
            "amplitude and frequency must be finite",
        ));
    }
    let grid = v.grid().clone();
    let pi = std::f64::consts::PI;
    let logs: Vec<f64> = (0..grid.len())
        .map(|i| {
            let s = relative(&grid, grid.center(i));
            let mut bump = (frequency * pi * s[0]).cos();
            if grid.dim() == 2 {
                bump *= (frequency * pi * s[1]).cos();
            }
            -v.values()[i] + amplitude * bump
        })
        .collect();
    Density::from_log(grid, &logs)
}

/// `V(x) = alpha / 2 |x - center|^2`, declared modulus `alpha`.
pub fn quadratic(grid: Arc<Grid>, alpha: f64, center: [f64; 2]) -> Result<Potential> {
    Potential::from_fn(grid, alpha, |p| {
        let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
        0.5 * alpha * d2
    })
}

/// `V(x) = a (|x|^2 - b^2)^2` with the declared modulus set to the infimum of
/// the smallest Hessian eigenvalue over the domain.
pub fn double_well(grid: Arc<Grid>, a: f64, b: f64) -> Result<Potential> {
    if !(a > 0.0) {
        return Err(Error::param(
            "a",
            format!("double-well height must be > 0, got {a}"),
        ));
    }
    let r_min = grid.shape().distance([0.0, 0.0]);
    // 1-D: V'' = 4a(3x^2 - b^2); 2-D eigenvalues 4a(3r^2 - b^2) and 4a(r^2 - b^2).
    let alpha = if grid.dim() == 1 {
        4.0 * a * (3.0 * r_min * r_min - b * b)
    } else {
        4.0 * a * (r_min * r_min - b * b).min(3.0 * r_min * r_min - b * b)
    };
    Potential::from_fn(grid, alpha, |p| {
        let r2 = p[0] * p[0] + p[1] * p[1];
        a * (r2 - b * b).powi(2)
    })
}
