use std::sync::Arc;

use jkolip::families::truncated_gaussian;
use jkolip::lp::atomic_w2_squared;
use jkolip::ot1d::{
    cdf_quantile, differentiated_ma_residual, max_abs_finite, monge_ampere_residual, solve_1d,
    w2_squared,
};
use jkolip::{Density, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
}

fn density(grid: &Arc<Grid>, values: Vec<f64>) -> Density {
    Density::normalize(grid.clone(), values).unwrap()
}

/// Least-squares slope of `log err` against `log h`.
fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn smooth_pair(n: usize) -> (Density, Density) {
    let grid = unit(n);
    (
        truncated_gaussian(grid.clone(), [0.4, 0.0], 0.2).unwrap(),
        truncated_gaussian(grid, [0.6, 0.0], 0.25).unwrap(),
    )
}

fn positive(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..4.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn map_pushes_rho_forward(a in positive(30), b in positive(30), ps in prop::collection::vec(0.0f64..1.0, 200)) {
        let grid = unit(30);
        let (rho, g) = (density(&grid, a), density(&grid, b));
        let qr = cdf_quantile(&rho).unwrap();
        let qg = cdf_quantile(&g).unwrap();
        for p in ps {
            let x = qr.quantile(p);
            let t = qg.quantile(qr.cdf(x));
            prop_assert!((qg.cdf(t) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn w2_is_symmetric(a in positive(25), b in positive(25)) {
        let grid = unit(25);
        let (rho, g) = (density(&grid, a), density(&grid, b));
        let d1 = w2_squared(&rho, &g).unwrap().sqrt();
        let d2 = w2_squared(&g, &rho).unwrap().sqrt();
        prop_assert!((d1 - d2).abs() <= 1e-10);
    }

    #[test]
    fn w2_triangle_inequality(a in positive(20), b in positive(20), c in positive(20)) {
        let grid = unit(20);
        let (x, y, z) = (density(&grid, a), density(&grid, b), density(&grid, c));
        let w = |p: &Density, q: &Density| w2_squared(p, q).unwrap().sqrt();
        prop_assert!(w(&x, &z) <= w(&x, &y) + w(&y, &z) + 1e-8);
    }

    #[test]
    fn translation_moves_by_its_length(a in positive(20), k in 1usize..=20) {
        let grid = unit(40);
        let mut rho = vec![0.0; 40];
        rho[..20].copy_from_slice(&a);
        let mut shifted = vec![0.0; 40];
        shifted[k..k + 20].copy_from_slice(&a);
        let w2 = w2_squared(&density(&grid, rho), &density(&grid, shifted)).unwrap().sqrt();
        prop_assert!((w2 - k as f64 * grid.hx()).abs() < 1e-12);
    }

    #[test]
    fn potential_and_map_invariants(a in positive(40), b in positive(40)) {
        let grid = unit(40);
        let h = grid.hx();
        let (rho, g) = (density(&grid, a), density(&grid, b));
        let r = solve_1d(&rho, &g).unwrap();
        prop_assert!(r.residual_cyclic <= 1e-10);
        // gauge
        let max_phi = r.phi.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        prop_assert!(rho.expect(&r.phi).abs() <= 1e-12 * max_phi.max(1e-300));
        // Brenier relation up to the trapezoid averaging of neighbors
        let jump = r.phi_grad.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
        for i in 1..39 {
            let fd = (r.phi[i + 1] - r.phi[i - 1]) / (2.0 * h);
            prop_assert!((fd - r.phi_grad[i]).abs() <= 0.5 * jump + 1e-12);
        }
        // x^2/2 - phi is discretely convex
        let u: Vec<f64> = r.x.iter().zip(&r.phi).map(|(x, p)| 0.5 * x * x - p).collect();
        for i in 1..39 {
            prop_assert!((u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) >= -1e-8);
        }
    }
}

#[test]
fn identical_densities_have_trivial_residuals() {
    let (rho, _) = smooth_pair(64);
    let r = solve_1d(&rho, &rho).unwrap();
    assert_eq!(r.w2_squared, 0.0);
    assert!(max_abs_finite(&monge_ampere_residual(&r, &rho, &rho)) < 1e-10);
    assert!(max_abs_finite(&differentiated_ma_residual(&r, &rho, &rho)) < 1e-8);
}

#[test]
fn translation_has_trivial_residuals() {
    let grid = unit(40);
    let left = density(
        &grid,
        (0..40).map(|i| if i < 20 { 1.0 } else { 0.0 }).collect(),
    );
    let right = density(
        &grid,
        (0..40).map(|i| if i >= 20 { 1.0 } else { 0.0 }).collect(),
    );
    let r = solve_1d(&left, &right).unwrap();
    assert!((r.w2 - 0.5).abs() < 1e-12);
    for i in 0..20 {
        assert!((r.map_t[i] - r.x[i] - 0.5).abs() < 1e-12);
    }
    assert!(max_abs_finite(&monge_ampere_residual(&r, &left, &right)) < 1e-9);
    assert!(max_abs_finite(&differentiated_ma_residual(&r, &left, &right)) < 1e-6);
}

#[test]
fn w2_matches_transport_linear_program() {
    let grid = unit(32);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let rho = density(&grid, (0..32).map(|_| rng.gen_range(0.2..2.0)).collect());
        let g = density(&grid, (0..32).map(|_| rng.gen_range(0.2..2.0)).collect());
        let exact = w2_squared(&rho, &g).unwrap();
        let lp = atomic_w2_squared(&rho, &g).unwrap();
        let rel = (exact - lp).abs() / lp;
        assert!(
            rel <= 2e-3,
            "w2^2 {exact:e} vs LP {lp:e}: relative gap {rel:e}"
        );
    }
}

#[test]
fn monge_ampere_residual_converges_at_order_three_halves() {
    let ns = [64, 128, 256];
    let mut errs = Vec::new();
    for n in ns {
        let (rho, g) = smooth_pair(n);
        let r = solve_1d(&rho, &g).unwrap();
        errs.push(max_abs_finite(&r.residual_ma));
    }
    let hs: Vec<f64> = ns.iter().map(|n| 1.0 / *n as f64).collect();
    let order = observed_order(&hs, &errs);
    assert!(
        order >= 1.5,
        "residuals {errs:?}, observed order {order:.3}"
    );
}

#[test]
fn differentiated_monge_ampere_residual_converges() {
    let ns = [64, 128, 256];
    let mut errs = Vec::new();
    for n in ns {
        let (rho, g) = smooth_pair(n);
        let r = solve_1d(&rho, &g).unwrap();
        errs.push(max_abs_finite(&differentiated_ma_residual(&r, &rho, &g)));
    }
    let hs: Vec<f64> = ns.iter().map(|n| 1.0 / *n as f64).collect();
    let order = observed_order(&hs, &errs);
    assert!(
        order >= 1.0,
        "residuals {errs:?}, observed order {order:.3}"
    );
}
