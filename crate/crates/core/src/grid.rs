//! Cell-centered uniform grids on convex domains.
//!
//! A grid is always a rectangular array of `nx * ny` cells stored row-major
//! (`index = iy * nx + ix`). Intervals use `ny = 1`. A disc is rasterized by
//! masking its bounding box: a cell is active when its center lies in the
//! closed disc. Grid functions are plain slices of length [`Grid::len`];
//! inactive entries are ignored by every operation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of the continuous domain the grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Box { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disc { cx: f64, cy: f64, radius: f64 },
}

impl Shape {
    /// Euclidean distance from `p` to the closed domain (zero inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            Shape::Interval { a, b } => (a - p[0]).max(p[0] - b).max(0.0),
            Shape::Box { x0, x1, y0, y1 } => {
                let dx = (x0 - p[0]).max(p[0] - x1).max(0.0);
                let dy = (y0 - p[1]).max(p[1] - y1).max(0.0);
                dx.hypot(dy)
            }
            Shape::Disc { cx, cy, radius } => ((p[0] - cx).hypot(p[1] - cy) - radius).max(0.0),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.distance(p) == 0.0
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }
}

/// Serializable summary of a grid (the JSON descriptor of grid functions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    #[serde(flatten)]
    pub shape: Shape,
    pub nx: usize,
    pub ny: usize,
    pub cell_measure: f64,
    pub active_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Shape,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    hx: f64,
    hy: f64,
    active: Vec<bool>,
    boundary: Vec<bool>,
}

impl Grid {
    /// Interval `[a, b]` split into `n` cells.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGrid(format!("need a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2 cells, got {n}")));
        }
        let hx = (b - a) / n as f64;
        let mut boundary = vec![false; n];
        boundary[0] = true;
        boundary[n - 1] = true;
        Ok(Self {
            shape: Shape::Interval { a, b },
            nx: n,
            ny: 1,
            origin: [a, 0.0],
            hx,
            hy: 1.0,
            active: vec![true; n],
            boundary,
        })
    }

    /// Rectangle `[x0, x1] x [y0, y1]` with `nx * ny` cells.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "degenerate box [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nx} x {ny}"
            )));
        }
        let active = vec![true; nx * ny];
        let mut grid = Self {
            shape: Shape::Box { x0, x1, y0, y1 },
            nx,
            ny,
            origin: [x0, y0],
            hx: (x1 - x0) / nx as f64,
            hy: (y1 - y0) / ny as f64,
            active,
            boundary: vec![false; nx * ny],
        };
        grid.boundary = grid.compute_boundary();
        Ok(grid)
    }

    /// Closed disc of the given center and radius, rasterized on an `n x n`
    /// bounding box.
    pub fn disc(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "disc radius must be > 0, got {radius}"
            )));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("disc needs n >= 4, got {n}")));
        }
        let shape = Shape::Disc {
            cx: center[0],
            cy: center[1],
            radius,
        };
        let h = 2.0 * radius / n as f64;
        let origin = [center[0] - radius, center[1] - radius];
        let mut grid = Self {
            shape,
            nx: n,
            ny: n,
            origin,
            hx: h,
            hy: h,
            active: vec![false; n * n],
            boundary: vec![false; n * n],
        };
        for idx in 0..n * n {
            grid.active[idx] = shape.contains(grid.center(idx));
        }
        grid.boundary = grid.compute_boundary();
        Ok(grid)
    }

    /// Active cells with an inactive (or missing) 4-neighbor.
    fn compute_boundary(&self) -> Vec<bool> {
        let mut out = vec![false; self.len()];
        for idx in 0..self.len() {
            if !self.active[idx] {
                continue;
            }
            let (ix, iy) = self.coords(idx);
            let mut edge = ix == 0 || iy == 0 || ix + 1 == self.nx || iy + 1 == self.ny;
            if !edge {
                edge = !self.active[self.index(ix - 1, iy)]
                    || !self.active[self.index(ix + 1, iy)]
                    || !self.active[self.index(ix, iy - 1)]
                    || !self.active[self.index(ix, iy + 1)];
            }
            out[idx] = edge;
        }
        out
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Total number of cells in the bounding array, active or not.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Characteristic cell size (largest spacing over the grid's axes).
    pub fn h(&self) -> f64 {
        if self.dim() == 1 {
            self.hx
        } else {
            self.hx.max(self.hy)
        }
    }

    /// Volume of one cell (length^d).
    pub fn cell_measure(&self) -> f64 {
        if self.dim() == 1 {
            self.hx
        } else {
            self.hx * self.hy
        }
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(idx);
        let x = self.origin[0] + (ix as f64 + 0.5) * self.hx;
        let y = if self.dim() == 1 {
            0.0
        } else {
            self.origin[1] + (iy as f64 + 0.5) * self.hy
        };
        [x, y]
    }

    /// Cell-center abscissae of a 1-D grid.
    pub fn centers_1d(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.center(i)[0]).collect()
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary[idx]
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.active[i])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Radius of the grid's domain when it is a ball (an interval is the
    /// 1-D ball around its midpoint); `None` for boxes.
    pub fn ball_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Interval { a, b } => Some(0.5 * (b - a)),
            Shape::Disc { radius, .. } => Some(radius),
            Shape::Box { .. } => None,
        }
    }

    pub fn ball_center(&self) -> Option<[f64; 2]> {
        match self.shape {
            Shape::Interval { a, b } => Some([0.5 * (a + b), 0.0]),
            Shape::Disc { cx, cy, .. } => Some([cx, cy]),
            Shape::Box { .. } => None,
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let p = self.center(a);
        let q = self.center(b);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            shape: self.shape,
            nx: self.nx,
            ny: self.ny,
            cell_measure: self.cell_measure(),
            active_cells: self.active_count(),
        }
    }

    /// Rebuild a grid from its descriptor.
    pub fn from_descriptor(d: &GridDescriptor) -> Result<Self> {
        match d.shape {
            Shape::Interval { a, b } => Grid::interval(a, b, d.nx),
            Shape::Box { x0, x1, y0, y1 } => Grid::rect(x0, x1, y0, y1, d.nx, d.ny),
            Shape::Disc { cx, cy, radius } => {
                if d.nx != d.ny {
                    return Err(Error::InvalidGrid("disc grids are square".into()));
                }
                Grid::disc([cx, cy], radius, d.nx)
            }
        }
    }

    pub(crate) fn require_1d(&self) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::WrongDimension {
                expected: "1-D interval",
            })
        }
    }

    /// Sum of `f` times the cell measure over active cells.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let cm = self.cell_measure();
        self.active_indices().map(|i| f[i]).sum::<f64>() * cm
    }
}
