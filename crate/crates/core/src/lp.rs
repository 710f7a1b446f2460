//! Transportation simplex for small discrete optimal transport problems.
//!
//! Used as an oracle: it knows nothing about one-dimensional structure and
//! solves the linear program over an arbitrary cost matrix.

use std::collections::VecDeque;

use crate::energy::W2Backend;
use crate::error::{Error, Result};
use crate::field::{same_grid, Density};

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    /// Basic cells `(row, column, flow)`; nonbasic flows are zero.
    pub plan: Vec<(usize, usize, f64)>,
    /// Row and column duals with `u[i] + v[j] <= c[i][j]`, equality on the basis.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
}

struct Tableau<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    /// Basic cells and their flows; always a spanning tree of `n + m` nodes.
    basis: Vec<(usize, usize, f64)>,
}

impl Tableau<'_> {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.m + j]
    }

    /// Node ids: rows `0..n`, columns `n..n+m`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (k, &(i, j, _)) in self.basis.iter().enumerate() {
            adj[i].push(k);
            adj[self.n + j].push(k);
        }
        adj
    }

    fn duals(&self, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![f64::NAN; self.n];
        let mut v = vec![f64::NAN; self.m];
        u[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let (i, j, _) = self.basis[k];
                if node < self.n {
                    if v[j].is_nan() {
                        v[j] = self.c(i, j) - u[i];
                        queue.push_back(self.n + j);
                    }
                } else if u[i].is_nan() {
                    u[i] = self.c(i, j) - v[j];
                    queue.push_back(i);
                }
            }
        }
        (u, v)
    }

    /// Basis edges on the tree path from column node `j` to row node `i`.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let mut parent_edge = vec![usize::MAX; total];
        let mut seen = vec![false; total];
        let start = self.n + j;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &k in &adj[node] {
                let (bi, bj, _) = self.basis[k];
                let other = if node < self.n { self.n + bj } else { bi };
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = k;
                    queue.push_back(other);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = i;
        while node != start {
            let k = parent_edge[node];
            edges.push(k);
            let (bi, bj, _) = self.basis[k];
            node = if node < self.n { self.n + bj } else { bi };
        }
        edges.reverse();
        edges
    }
}

/// Minimize `sum c[i][j] x[i][j]` subject to row sums `supply` and column sums
/// `demand` (rescaled to the supply total). `cost` is row-major `n x m`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let n = supply.len();
    let m = demand.len();
    if n == 0 || m == 0 || cost.len() != n * m {
        return Err(Error::InvalidValues("transport problem dimensions".into()));
    }
    if supply
        .iter()
        .chain(demand)
        .any(|&x| !(x >= 0.0) || !x.is_finite())
    {
        return Err(Error::InvalidValues(
            "marginals must be finite and >= 0".into(),
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidValues("cost must be finite".into()));
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if !(total_s > 0.0 && total_d > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let demand: Vec<f64> = demand.iter().map(|d| d * total_s / total_d).collect();

    // north-west corner start: each step advances exactly one index
    let mut basis = Vec::with_capacity(n + m - 1);
    let (mut rs, mut rd) = (supply.to_vec(), demand.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = rs[i].min(rd[j]).max(0.0);
        basis.push((i, j, x));
        rs[i] -= x;
        rd[j] -= x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (rs[i] <= rd[j] && i < n - 1) || j == m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut tab = Tableau { n, m, cost, basis };
    let scale = cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let max_pivots = 50 * (n + m) * (n + m) + 1000;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    loop {
        let adj = tab.adjacency();
        let (u, v) = tab.duals(&adj);
        let bland = degenerate_run > 50;
        let mut entering = None;
        let mut best = -tol;
        'scan: for r in 0..n {
            for c in 0..m {
                let rc = tab.c(r, c) - u[r] - v[c];
                if rc < best {
                    entering = Some((r, c));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let cost_value = tab.basis.iter().map(|&(i, j, x)| x * tab.c(i, j)).sum();
            return Ok(TransportSolution {
                cost: cost_value,
                plan: tab.basis,
                u,
                v,
                pivots,
            });
        };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SizeGuard {
                what: "transportation simplex pivots",
                limit: max_pivots,
                got: pivots,
            });
        }
        let path = tab.path(&adj, ei, ej);
        // edges alternate -, +, -, ... starting at column ej
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let x = tab.basis[k].2;
                let better = x < theta
                    || (x == theta
                        && bland
                        && (tab.basis[k].0, tab.basis[k].1)
                            < (tab.basis[leave].0, tab.basis[leave].1));
                if better {
                    theta = x;
                    leave = k;
                }
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        for (pos, &k) in path.iter().enumerate() {
            let x = &mut tab.basis[k].2;
            if pos % 2 == 0 {
                *x = (*x - theta).max(0.0);
            } else {
                *x += theta;
            }
        }
        tab.basis[leave] = (ei, ej, theta);
    }
}

/// Squared distance cost between two point clouds.
pub fn squared_distance_cost(xs: &[[f64; 2]], ys: &[[f64; 2]]) -> Vec<f64> {
    let mut c = Vec::with_capacity(xs.len() * ys.len());
    for p in xs {
        for q in ys {
            c.push((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2));
        }
    }
    c
}

/// Transport cost between the atomic measures that put each cell's mass at
/// its center.
pub fn atomic_w2_squared(rho: &Density, g: &Density) -> Result<f64> {
    same_grid(rho.grid(), g.grid())?;
    let grid = rho.grid();
    let cells: Vec<usize> = grid.active_indices().collect();
    const LIMIT: usize = 256;
    if cells.len() > LIMIT {
        return Err(Error::SizeGuard {
            what: "atomic transport cells",
            limit: LIMIT,
            got: cells.len(),
        });
    }
    let cm = grid.cell_measure();
    let pts: Vec<[f64; 2]> = cells.iter().map(|&i| grid.center(i)).collect();
    let a: Vec<f64> = cells.iter().map(|&i| rho.values()[i] * cm).collect();
    let b: Vec<f64> = cells.iter().map(|&i| g.values()[i] * cm).collect();
    let cost = squared_distance_cost(&pts, &pts);
    Ok(solve_transport(&a, &b, &cost)?.cost)
}

/// Atomic (cell-center) transport cost through the simplex solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct AtomicLpBackend;

impl W2Backend for AtomicLpBackend {
    fn w2_squared(&self, rho: &Density, g: &Density) -> Result<f64> {
        atomic_w2_squared(rho, g)
    }

    fn name(&self) -> &'static str {
        "atomic-lp"
    }
}
