use std::sync::Arc;

use jkolip::entropic2d::{
    boundary_argmax_probe, default_eps, entropic_jko_step, sinkhorn, EntropicJkoConfig,
    SinkhornConfig,
};
use jkolip::families::truncated_gaussian;
use jkolip::ot1d::w2_squared;
use jkolip::{entropy, Density, Error, Grid, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_square(n: usize) -> Arc<Grid> {
    Arc::new(Grid::rect(0.0, 1.0, 0.0, 1.0, n, n).unwrap())
}

fn unit_interval(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
}

fn f1(x: f64) -> f64 {
    (-(x - 0.4f64).powi(2) / 0.05).exp() + 0.2
}

fn f2(x: f64) -> f64 {
    (-(x - 0.6f64).powi(2) / 0.08).exp() + 0.2
}

fn f3(x: f64) -> f64 {
    1.0 + 0.5 * (3.0 * x).cos()
}

fn tight(eps: f64) -> SinkhornConfig {
    SinkhornConfig {
        tol_marg: 1e-12,
        ..SinkhornConfig::with_eps(eps)
    }
}

#[test]
fn identical_marginals_give_equal_duals() {
    let grid = unit_square(20);
    let rho = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let s = sinkhorn(&rho, &rho, &tight(default_eps(&grid))).unwrap();
    assert!(s.converged);
    assert!(s.row_defect <= 1e-8 && s.col_defect <= 1e-8);
    let active: Vec<usize> = grid.active_indices().collect();
    let shift = s.f[active[0]] - s.g[active[0]];
    for &i in &active {
        assert!(
            (s.f[i] - s.g[i] - shift).abs() <= 1e-8,
            "dual mismatch at {i}"
        );
    }
}

#[test]
fn entropic_cost_is_symmetric_and_marginals_hold() {
    let grid = unit_square(24);
    let rho = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let g = Density::from_fn(grid.clone(), |p| f2(p[0]) * f2(p[1])).unwrap();
    let cfg = tight(default_eps(&grid));
    let a = sinkhorn(&rho, &g, &cfg).unwrap();
    let b = sinkhorn(&g, &rho, &cfg).unwrap();
    assert!(
        (a.w2_eps - b.w2_eps).abs() <= 1e-9,
        "{} vs {}",
        a.w2_eps,
        b.w2_eps
    );
    let loose = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(default_eps(&grid))).unwrap();
    assert!(loose.row_defect <= 1e-8 && loose.col_defect <= 1e-8);
}

#[test]
fn richardson_limit_matches_exact_one_dimensional_cost() {
    let grid = unit_interval(128);
    let rho = truncated_gaussian(grid.clone(), [0.35, 0.0], 0.12).unwrap();
    let g = truncated_gaussian(grid.clone(), [0.6, 0.0], 0.15).unwrap();
    let exact = w2_squared(&rho, &g).unwrap();
    let h2 = grid.hx() * grid.hx();
    let coarse = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(8.0 * h2)).unwrap();
    let fine = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(4.0 * h2)).unwrap();
    let extrapolated = 2.0 * fine.w2_eps - coarse.w2_eps;
    let rel = (extrapolated - exact).abs() / exact;
    assert!(
        rel <= 1e-2,
        "extrapolated {extrapolated:e} vs exact {exact:e}"
    );
}

#[test]
fn tensorized_cost_approaches_sum_of_one_dimensional_costs() {
    let n = 32;
    let grid = unit_square(n);
    let line = unit_interval(n);
    let rho = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let g = Density::from_fn(grid.clone(), |p| f2(p[0]) * f2(p[1])).unwrap();
    let on_line = |f: fn(f64) -> f64| Density::from_fn(line.clone(), move |p| f(p[0])).unwrap();
    let exact = w2_squared(&on_line(f1), &on_line(f2)).unwrap()
        + w2_squared(&on_line(f3), &on_line(f2)).unwrap();
    let h2 = grid.h() * grid.h();
    let gaps: Vec<f64> = [16.0, 8.0, 4.0, 2.0]
        .iter()
        .map(|k| {
            let s = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(k * h2)).unwrap();
            assert!(s.converged);
            (s.w2_eps - exact).abs()
        })
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "gaps not shrinking: {gaps:?}");
    }
}

#[test]
fn gibbs_is_nearly_fixed_with_error_shrinking_in_eps() {
    let grid = unit_square(24);
    let v = Potential::from_fn(grid.clone(), 2.0, |p| {
        (p[0] - 0.4).powi(2) + (p[1] - 0.5).powi(2)
    })
    .unwrap();
    let g = Density::gibbs(&v);
    let mut prev = f64::INFINITY;
    for eps in [0.08, 0.04, 0.02, 0.01] {
        let r = entropic_jko_step(&g, &v, 0.1, &EntropicJkoConfig::with_eps(eps)).unwrap();
        assert!(r.converged);
        let l1 = r.rho_next.l1_distance(&g).unwrap();
        assert!(l1 <= 0.5 * eps, "eps {eps}: L1 {l1:e}");
        assert!(l1 < prev, "eps {eps}: L1 {l1:e} not below {prev:e}");
        prev = l1;
    }
}

#[test]
fn free_step_descends_entropy_and_preserves_mass() {
    let grid = unit_square(24);
    let v = Potential::zero(grid.clone());
    let g = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let r = entropic_jko_step(
        &g,
        &v,
        0.05,
        &EntropicJkoConfig::with_eps(default_eps(&grid)),
    )
    .unwrap();
    assert!(r.converged);
    assert!(entropy(&r.rho_next) <= entropy(&g) + 1e-10);
    assert!((r.rho_next.mass() - 1.0).abs() <= 1e-10);
    assert!(r.rho_next.is_strictly_positive());
    assert!(r.marginal_defect <= 1e-8);
}

#[test]
fn separable_instances_factor_into_one_dimensional_steps() {
    let n = 24;
    let grid = unit_square(n);
    let line = unit_interval(n);
    let v = Potential::from_fn(grid.clone(), 1.0, |p| {
        0.5 * p[0] * p[0] + 0.5 * (p[1] - 0.3).powi(2)
    })
    .unwrap();
    let vx = Potential::from_fn(line.clone(), 1.0, |p| 0.5 * p[0] * p[0]).unwrap();
    let vy = Potential::from_fn(line.clone(), 1.0, |p| 0.5 * (p[0] - 0.3).powi(2)).unwrap();
    let rho = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let cfg = EntropicJkoConfig::with_eps(default_eps(&grid));
    let full = entropic_jko_step(&rho, &v, 0.1, &cfg).unwrap();
    let rx = entropic_jko_step(
        &Density::from_fn(line.clone(), |p| f1(p[0])).unwrap(),
        &vx,
        0.1,
        &cfg,
    )
    .unwrap();
    let ry = entropic_jko_step(
        &Density::from_fn(line, |p| f3(p[0])).unwrap(),
        &vy,
        0.1,
        &cfg,
    )
    .unwrap();
    let product: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            rx.rho_next.values()[i] * ry.rho_next.values()[j]
        })
        .collect();
    let product = Density::normalize(grid, product).unwrap();
    let l1 = full.rho_next.l1_distance(&product).unwrap();
    assert!(l1 <= 1e-6, "L1 {l1:e}");
}

#[test]
fn coinciding_densities_respect_the_bound() {
    let disc = Arc::new(Grid::disc([0.0, 0.0], 1.0, 24).unwrap());
    let rho = Density::from_fn(disc.clone(), |p| 0.3 + (p[0] - 0.2 * p[1]).cos()).unwrap();
    let r =
        boundary_argmax_probe(&rho, &rho, &SinkhornConfig::with_eps(default_eps(&disc))).unwrap();
    assert!(r.argmax.max_norm <= std::f64::consts::SQRT_2 + 1e-6);
}

#[test]
fn radial_pair_has_interior_argmax() {
    let disc = Arc::new(Grid::disc([0.0, 0.0], 1.0, 32).unwrap());
    let rho = Density::from_fn(disc.clone(), |p| {
        0.2 + (-(p[0] * p[0] + p[1] * p[1]) / 0.18).exp()
    })
    .unwrap();
    let g = Density::from_fn(disc.clone(), |p| {
        0.2 + (-((p[0] - 0.3).powi(2) + (p[1] + 0.1).powi(2)) / 0.18).exp()
    })
    .unwrap();
    let r = boundary_argmax_probe(&rho, &g, &SinkhornConfig::with_eps(default_eps(&disc))).unwrap();
    assert!(r.sinkhorn_converged);
    assert!(r.argmax.is_interior, "{r:?}");
    assert!(r.argmax.max_norm <= std::f64::consts::SQRT_2);
}

#[test]
fn random_pairs_respect_the_bound() {
    let disc = Arc::new(Grid::disc([0.0, 0.0], 1.0, 24).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SinkhornConfig::with_eps(default_eps(&disc));
    for _ in 0..6 {
        let mut bump = || {
            let (cx, cy) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let (w, base) = (rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.5));
            Density::from_fn(disc.clone(), move |p| {
                base + (-((p[0] - cx).powi(2) + (p[1] - cy).powi(2)) / w).exp()
            })
            .unwrap()
        };
        let (rho, g) = (bump(), bump());
        let r = boundary_argmax_probe(&rho, &g, &cfg).unwrap();
        // sqrt(2) R plus a 5% tolerance
        assert!(
            r.argmax.max_norm <= std::f64::consts::SQRT_2 + 0.05,
            "{r:?}"
        );
    }
}

#[test]
fn unresolvable_eps_reports_a_usable_minimum() {
    let grid = unit_square(12);
    let rho = Density::from_fn(grid.clone(), |p| f1(p[0]) * f3(p[1])).unwrap();
    let g = Density::from_fn(grid.clone(), |p| f2(p[0]) * f2(p[1])).unwrap();
    let suggested = match sinkhorn(&rho, &g, &SinkhornConfig::with_eps(1e-9)) {
        Err(Error::EpsUnderflow { suggested_min, .. }) => suggested_min,
        other => panic!("expected underflow, got {other:?}"),
    };
    let r = sinkhorn(&rho, &g, &SinkhornConfig::with_eps(suggested)).unwrap();
    assert!(r.f.iter().chain(&r.g).all(|x| x.is_finite()) && r.w2_eps.is_finite());
}
