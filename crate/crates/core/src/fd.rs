//! Finite differences on cell-centered grids.

use crate::grid::Grid;

/// Derivative along one axis at `idx` from active neighbors.
///
/// Central difference when both neighbors are active, otherwise a one-sided
/// difference: second order when two cells are available on that side,
/// first order with one, zero with none.
fn axis_derivative(grid: &Grid, f: &[f64], idx: usize, axis: usize) -> f64 {
    let (ix, iy) = grid.coords(idx);
    let (pos, len, h) = if axis == 0 {
        (ix, grid.nx(), grid.hx())
    } else {
        (iy, grid.ny(), grid.hy())
    };
    let at = |p: usize| -> Option<usize> {
        let j = if axis == 0 {
            grid.index(p, iy)
        } else {
            grid.index(ix, p)
        };
        grid.is_active(j).then_some(j)
    };
    let left = if pos >= 1 { at(pos - 1) } else { None };
    let right = if pos + 1 < len { at(pos + 1) } else { None };
    match (left, right) {
        (Some(l), Some(r)) => (f[r] - f[l]) / (2.0 * h),
        (None, Some(r)) => {
            let rr = if pos + 2 < len { at(pos + 2) } else { None };
            match rr {
                Some(rr) => (-3.0 * f[idx] + 4.0 * f[r] - f[rr]) / (2.0 * h),
                None => (f[r] - f[idx]) / h,
            }
        }
        (Some(l), None) => {
            let ll = if pos >= 2 { at(pos - 2) } else { None };
            match ll {
                Some(ll) => (3.0 * f[idx] - 4.0 * f[l] + f[ll]) / (2.0 * h),
                None => (f[idx] - f[l]) / h,
            }
        }
        (None, None) => 0.0,
    }
}

/// Cell gradient of a grid function. The second component is zero on 1-D
/// grids; inactive cells get a zero vector.
pub fn gradient(grid: &Grid, f: &[f64]) -> Vec<[f64; 2]> {
    assert_eq!(f.len(), grid.len(), "grid function length");
    (0..grid.len())
        .map(|idx| {
            if !grid.is_active(idx) {
                return [0.0, 0.0];
            }
            let gx = axis_derivative(grid, f, idx, 0);
            let gy = if grid.dim() == 2 {
                axis_derivative(grid, f, idx, 1)
            } else {
                0.0
            };
            [gx, gy]
        })
        .collect()
}

/// Euclidean norms of [`gradient`].
pub fn gradient_norm(grid: &Grid, f: &[f64]) -> Vec<f64> {
    gradient(grid, f)
        .into_iter()
        .map(|[a, b]| a.hypot(b))
        .collect()
}
