//! Grids, densities and potentials built from config specs, and the seeded
//! random instance families.

use std::path::Path;
use std::sync::Arc;

use jkolip::families::{double_well, perturbed_gibbs, quadratic, truncated_gaussian};
use jkolip::io::read_values;
use jkolip::{Density, Grid, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{DensitySpec, DomainSpec, PotentialSpec};
use crate::error::{CliError, Result};

pub fn build_grid(spec: &DomainSpec) -> Result<Arc<Grid>> {
    let grid = match *spec {
        DomainSpec::Interval { a, b, n } => Grid::interval(a, b, n)?,
        DomainSpec::Box {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
        } => Grid::rect(x0, x1, y0, y1, nx, ny)?,
        DomainSpec::Disc { cx, cy, radius, n } => Grid::disc([cx, cy], radius, n)?,
    };
    Ok(Arc::new(grid))
}

/// Same domain at another resolution (intervals only).
pub fn refined_interval(spec: &DomainSpec, n: usize) -> Result<Arc<Grid>> {
    match *spec {
        DomainSpec::Interval { a, b, .. } => Ok(Arc::new(Grid::interval(a, b, n)?)),
        _ => Err(CliError::config(
            "domain.shape",
            "refinement needs an interval",
        )),
    }
}

fn read_csv(base: &Path, path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    let full = base.join(path);
    let file = std::fs::File::open(&full)
        .map_err(|e| CliError::io(format!("cannot open {}", full.display()), e))?;
    Ok(read_values(file, grid)?)
}

/// Build a potential; custom potentials are audited against their declared
/// modulus and a violation is returned as a warning.
pub fn build_potential(
    spec: &PotentialSpec,
    grid: &Arc<Grid>,
    base: &Path,
) -> Result<(Potential, Option<String>)> {
    let v = match spec {
        PotentialSpec::Zero => Potential::zero(grid.clone()),
        PotentialSpec::Quadratic { alpha, center } => quadratic(grid.clone(), *alpha, *center)?,
        PotentialSpec::DoubleWell { a, b } => double_well(grid.clone(), *a, *b)?,
        PotentialSpec::Csv { path, alpha } => {
            let values = read_csv(base, path, grid)?;
            let v = Potential::new(grid.clone(), values, *alpha)?;
            let audit = v.convexity_audit();
            if !audit.consistent {
                let warning = format!(
                    "potential {}: declared alpha = {} but the smallest second difference is {:e}",
                    path.display(),
                    alpha,
                    audit.min_second_difference
                );
                return Ok((v, Some(warning)));
            }
            v
        }
    };
    Ok((v, None))
}

pub fn build_density(
    spec: &DensitySpec,
    grid: &Arc<Grid>,
    v: &Potential,
    base: &Path,
) -> Result<Density> {
    Ok(match spec {
        DensitySpec::Uniform => Density::uniform(grid.clone()),
        DensitySpec::TruncatedGaussian { mean, sigma } => {
            truncated_gaussian(grid.clone(), *mean, *sigma)?
        }
        DensitySpec::Gibbs => Density::gibbs(v),
        DensitySpec::PerturbedGibbs {
            amplitude,
            frequency,
        } => perturbed_gibbs(v, *amplitude, *frequency)?,
        DensitySpec::Csv { path } => Density::normalize(grid.clone(), read_csv(base, path, grid)?)?,
        DensitySpec::Random => {
            return Err(CliError::config(
                "density.family",
                "`random` needs a seeded instance",
            ))
        }
    })
}

/// Generator for instance `index` of stream `stream`, independent of the
/// order in which instances are evaluated.
pub fn instance_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) << 20);
    rng
}

/// Parameters of one random 1-D instance on an interval:
/// `V = alpha/2 x^2 + c x + gamma x^4` shifted to minimum zero, and
/// `g ∝ exp(-V + amp sin(k x + phase) + 0.3 u x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomInstance {
    pub c: f64,
    pub gamma: f64,
    pub amp: f64,
    pub k: f64,
    pub phase: f64,
    pub u: f64,
}

impl RandomInstance {
    pub fn draw(rng: &mut impl Rng) -> Self {
        Self {
            c: rng.gen_range(-1.0..1.0),
            gamma: rng.gen_range(0.0..0.5),
            amp: rng.gen_range(0.1..0.6),
            k: rng.gen_range(1.0..4.0),
            phase: rng.gen_range(0.0..6.3),
            u: rng.gen_range(-1.0..1.0),
        }
    }

    /// The declared modulus is `alpha`, since `V'' = alpha + 12 gamma x^2`.
    pub fn potential(&self, grid: &Arc<Grid>, alpha: f64) -> Result<Potential> {
        let (c, gamma) = (self.c, self.gamma);
        let v = Potential::from_fn(grid.clone(), alpha, |p| {
            let x = p[0];
            0.5 * alpha * x * x + c * x + gamma * x.powi(4)
        })?;
        let min = grid
            .active_indices()
            .map(|i| v.values()[i])
            .fold(f64::INFINITY, f64::min);
        Ok(v.shifted(-min))
    }

    pub fn density(&self, v: &Potential) -> Result<Density> {
        let grid = v.grid();
        let logs: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.center(i)[0];
                -v.values()[i] + self.amp * (self.k * x + self.phase).sin() + 0.3 * self.u * x
            })
            .collect();
        Ok(Density::from_log(grid.clone(), &logs)?)
    }
}

/// Random smooth positive density on a 1-D grid:
/// `exp(a sin(k x + p) + b x)`.
pub fn random_smooth_1d(grid: &Arc<Grid>, rng: &mut impl Rng) -> Result<Density> {
    let a = rng.gen_range(0.1..0.8);
    let k = rng.gen_range(0.5..3.0);
    let p = rng.gen_range(0.0..6.3);
    let b = rng.gen_range(-1.0..1.0);
    Ok(Density::from_fn(grid.clone(), |q| {
        (a * (k * q[0] + p).sin() + b * q[0]).exp()
    })?)
}

/// Random smooth positive density on a disc: a Gaussian bump over a floor.
pub fn random_bump_2d(grid: &Arc<Grid>, rng: &mut impl Rng) -> Result<Density> {
    let r = grid.ball_radius().unwrap_or(1.0);
    let c = grid.ball_center().unwrap_or([0.0, 0.0]);
    let (cx, cy) = (
        c[0] + r * rng.gen_range(-0.5..0.5),
        c[1] + r * rng.gen_range(-0.5..0.5),
    );
    let w = r * r * rng.gen_range(0.1..0.4);
    let floor = rng.gen_range(0.1..0.5);
    Ok(Density::from_fn(grid.clone(), |p| {
        floor + (-((p[0] - cx).powi(2) + (p[1] - cy).powi(2)) / w).exp()
    })?)
}
