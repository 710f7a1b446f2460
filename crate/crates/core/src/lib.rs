//! Minimizing-movement (JKO) steps for the Fokker-Planck free energy on
//! bounded convex domains, with diagnostics for the per-step Lipschitz
//! contraction of `log rho + V`.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`], [`field`], [`energy`], [`fd`], [`io`], [`families`]: grids,
//!   densities, potentials, quadrature and finite differences.
//! - [`ot1d`]: exact 1-D quadratic transport between piecewise-constant
//!   densities; [`lp`] is a transportation simplex used as an oracle.
//! - [`jko1d`] and [`oracle`]: the 1-D step solver and an independent
//!   solver of the atomic (cell-center) discretization.
//! - [`entropic2d`]: log-domain Sinkhorn and entropic JKO steps in 2-D.
//! - [`extension`]: convex/Lipschitz extensions, mollification and the
//!   penalized approximants on an enclosing domain.
//! - [`lipverify`]: Lipschitz seminorms, per-step contraction checks and
//!   trajectory envelopes.
//! - [`fpref`]: implicit finite-volume reference solver for the PDE.

pub mod energy;
pub mod entropic2d;
pub mod error;
pub mod extension;
pub mod families;
pub mod fd;
pub mod field;
pub mod fpref;
pub mod grid;
pub mod io;
pub mod jko1d;
pub mod lipverify;
pub mod lp;
pub mod oracle;
pub mod ot1d;

pub use energy::{entropy, potential_energy, total_energy, EnergyReport, W2Backend};
pub use error::{Error, Result};
pub use fd::gradient;
pub use field::{Density, Potential};
pub use grid::{Grid, Shape};
