use std::sync::Arc;

use jkolip::jko1d::{jko_step, run_trajectory, JkoConfig};
use jkolip::lp::AtomicLpBackend;
use jkolip::oracle::{atomic_energy, jko_oracle};
use jkolip::ot1d::{w2_squared, Ot1dBackend};
use jkolip::{total_energy, Density, Grid, Potential};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(a: f64, b: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(a, b, n).unwrap())
}

/// `alpha/2 x^2 + c x + gamma x^4`, whose modulus on `[-1, 1]` is `alpha`.
fn random_potential(grid: &Arc<Grid>, alpha: f64, c: f64, gamma: f64) -> Potential {
    Potential::from_fn(grid.clone(), alpha, |p| {
        let x = p[0];
        0.5 * alpha * x * x + c * x + gamma * x.powi(4)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gibbs_densities_are_fixed_points(
        alpha in prop::sample::select(vec![-0.5, 0.0, 1.0, 4.0]),
        c in -1.0f64..1.0,
        gamma in 0.0f64..0.5,
        tau in 0.02f64..0.5,
    ) {
        let grid = grid(-1.0, 1.0, 120);
        let v = random_potential(&grid, alpha, c, gamma);
        let g = Density::gibbs(&v);
        let r = jko_step(&g, &v, tau, &JkoConfig::default()).unwrap();
        prop_assert!(r.rho_next.l1_distance(&g).unwrap() <= 1e-8);
    }

    #[test]
    fn trajectories_descend_and_conserve_mass(
        alpha in prop::sample::select(vec![-0.5, 0.0, 1.0, 4.0]),
        c in -1.0f64..1.0,
        amp in 0.1f64..0.6,
        k in 1.0f64..4.0,
        tau in prop::sample::select(vec![0.05, 0.2]),
    ) {
        let grid = grid(-1.0, 1.0, 100);
        let v = random_potential(&grid, alpha, c, 0.1);
        let g = Density::from_fn(grid, |p| (amp * (k * p[0]).sin() - 0.5 * p[0]).exp()).unwrap();
        let traj = run_trajectory(&g, &v, tau, 4, &JkoConfig::default()).unwrap();
        prop_assert!(traj.is_complete());
        for (k, step) in traj.steps.iter().enumerate() {
            let prev = &traj.densities[k];
            let f_prev = step.energy_initial;
            let lhs = step.energy.entropy + step.energy.potential + step.energy.w2_squared / (2.0 * tau);
            prop_assert!(lhs <= f_prev + 1e-9 * (1.0 + f_prev.abs()));
            prop_assert!(step.energy_descent);
            prop_assert!((traj.densities[k + 1].mass() - 1.0).abs() <= 1e-12);
            prop_assert!(traj.densities[k + 1].is_strictly_positive());
            prop_assert!(step.optimality_residual <= 1e-7);
            prop_assert!(prev.grid() == traj.densities[k + 1].grid());
        }
    }
}

#[test]
fn step_matches_oracle_on_smooth_instance() {
    let grid = grid(0.0, 1.0, 50);
    let v = Potential::from_fn(grid.clone(), 4.0, |p| 2.0 * p[0] * p[0]).unwrap();
    let g = Density::from_fn(grid, |p| (-p[0]).exp()).unwrap();
    let step = jko_step(&g, &v, 0.1, &JkoConfig::default()).unwrap();
    let oracle = jko_oracle(&g, &v, 0.1).unwrap();
    // each solver's functional evaluated on both outputs
    let cont = |r: &Density| total_energy(r, &g, &v, 0.1, &Ot1dBackend).unwrap().total;
    let atomic = |r: &Density| atomic_energy(r, &g, &v, 0.1).unwrap().total;
    let energy_gap = (cont(&step.rho_next) - cont(&oracle.rho))
        .abs()
        .max((atomic(&step.rho_next) - atomic(&oracle.rho)).abs());
    let l1 = step.rho_next.l1_distance(&oracle.rho).unwrap();
    assert!(
        energy_gap <= 1e-6 && l1 <= 1e-4,
        "energy gap {energy_gap:e}, L1 gap {l1:e}"
    );
}

#[test]
fn each_solver_beats_the_other_on_its_own_functional() {
    let grid = grid(-1.0, 1.0, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..6 {
        let alpha = [-0.5, 0.0, 1.0, 4.0][rng.gen_range(0..4)];
        let v = random_potential(
            &grid,
            alpha,
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..0.5),
        );
        let amp = rng.gen_range(0.1..0.6);
        let g = Density::from_fn(grid.clone(), |p| (amp * (2.0 * p[0]).sin()).exp()).unwrap();
        let tau = 0.1;
        let step = jko_step(&g, &v, tau, &JkoConfig::default()).unwrap();
        let oracle = jko_oracle(&g, &v, tau).unwrap();
        assert!(oracle.stationarity < 1e-8);
        let cont = |r: &Density| total_energy(r, &g, &v, tau, &Ot1dBackend).unwrap().total;
        let atomic = |r: &Density| {
            total_energy(r, &g, &v, tau, &AtomicLpBackend)
                .unwrap()
                .total
        };
        assert!(cont(&step.rho_next) <= cont(&oracle.rho) + 1e-12);
        assert!(atomic(&oracle.rho) <= atomic(&step.rho_next) + 1e-12);
    }
}

#[test]
fn oracle_fixed_points() {
    let grid = grid(-1.0, 1.0, 40);
    let v = random_potential(&grid, 1.0, 0.3, 0.2);
    let g = Density::gibbs(&v);
    assert!(
        jko_oracle(&g, &v, 0.1)
            .unwrap()
            .rho
            .l1_distance(&g)
            .unwrap()
            <= 1e-8
    );
    let zero = Potential::zero(grid.clone());
    let bumpy = Density::from_fn(grid.clone(), |p| 1.0 + 0.5 * (3.0 * p[0]).cos()).unwrap();
    // the uniform density is stationary for V = 0 from itself
    let u = Density::uniform(grid);
    assert!(
        jko_oracle(&u, &zero, 0.2)
            .unwrap()
            .rho
            .l1_distance(&u)
            .unwrap()
            <= 1e-8
    );
    assert!(jko_oracle(&bumpy, &zero, 0.2).unwrap().stationarity < 1e-8);
}

#[test]
fn oracle_is_a_local_minimum() {
    let grid = grid(-1.0, 1.0, 32);
    let v = random_potential(&grid, 1.0, -0.4, 0.3);
    let g = Density::from_fn(grid.clone(), |p| {
        (0.4 * (2.5 * p[0] + 1.0).sin() + 0.2 * p[0]).exp()
    })
    .unwrap();
    let tau = 0.1;
    let best = jko_oracle(&g, &v, tau).unwrap();
    let e_best = atomic_energy(&best.rho, &g, &v, tau).unwrap().total;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let scale = [1e-3, 1e-2, 5e-2][rng.gen_range(0..3)];
        let values: Vec<f64> = best
            .rho
            .values()
            .iter()
            .map(|x| x * (1.0 + scale * rng.gen_range(-1.0..1.0)))
            .collect();
        let cloud = Density::normalize(grid.clone(), values).unwrap();
        let e = atomic_energy(&cloud, &g, &v, tau).unwrap().total;
        assert!(
            e >= e_best - 1e-12,
            "perturbation lowers energy: {e} < {e_best}"
        );
    }
}

#[test]
fn gibbs_trajectory_is_constant() {
    let grid = grid(-1.0, 1.0, 80);
    let v = random_potential(&grid, 1.0, 0.2, 0.1);
    let g = Density::gibbs(&v);
    let traj = run_trajectory(&g, &v, 0.1, 5, &JkoConfig::default()).unwrap();
    for d in &traj.densities {
        assert!(d.l1_distance(&g).unwrap() <= 1e-12);
    }
}

#[test]
fn distance_to_equilibrium_decreases_for_convex_potentials() {
    let grid = grid(-1.0, 1.0, 120);
    let v = random_potential(&grid, 1.0, 0.5, 0.2);
    let gibbs = Density::gibbs(&v);
    let init = Density::from_fn(grid, |p| (-4.0 * (p[0] - 0.6).powi(2)).exp() + 0.1).unwrap();
    let traj = run_trajectory(&init, &v, 0.1, 15, &JkoConfig::default()).unwrap();
    assert!(traj.is_complete());
    let d: Vec<f64> = traj
        .densities
        .iter()
        .map(|r| w2_squared(r, &gibbs).unwrap())
        .collect();
    for w in d.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{d:?}");
    }
}
