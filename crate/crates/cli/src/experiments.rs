//! The six experiment kinds. Each returns a [`Report`]; nothing here
//! touches the file system except reading custom CSV inputs.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use jkolip::entropic2d::{boundary_argmax_probe, entropic_jko_step, SinkhornConfig};
use jkolip::extension::{
    build_approximants, diagnose, lip_penalty_bound_check, mass_outside, max_outside,
    ExtensionSetup,
};
use jkolip::fpref::{compare_jko_to_fp, solve_fp};
use jkolip::io::write_columns;
use jkolip::jko1d::{jko_step, run_trajectory};
use jkolip::lipverify::{
    argmax_from_norms, check_decay_envelope, check_theorem, CheckState, TheoremCheck,
};
use jkolip::oracle::{atomic_energy, jko_oracle, MAX_CELLS};
use jkolip::ot1d::{max_abs_finite, solve_1d, Ot1dBackend};
use jkolip::{total_energy, Density, Grid, Potential};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::*;
use crate::error::Result;
use crate::instances::*;
use crate::report::{Check, Report, TheoremRow};

/// Least-squares slope of `log err` against `log h`.
pub fn observed_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn csv_bytes(grid: &Grid, columns: &[(&str, &[f64])]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_columns(&mut buf, grid, columns)?;
    Ok(buf)
}

/// Summary of a set of theorem checks, vacuous ones set aside.
struct Tally {
    checked: usize,
    failed: usize,
    vacuous: usize,
    min_margin: f64,
}

fn tally<'a>(checks: impl Iterator<Item = &'a TheoremCheck>) -> Tally {
    let mut t = Tally {
        checked: 0,
        failed: 0,
        vacuous: 0,
        min_margin: f64::INFINITY,
    };
    for c in checks {
        match c.state {
            CheckState::Vacuous => t.vacuous += 1,
            state => {
                t.checked += 1;
                t.failed += usize::from(state == CheckState::Fail);
                t.min_margin = t.min_margin.min(c.margin);
            }
        }
    }
    t
}

fn contraction_check(name: &str, t: &Tally, report: &mut Report) {
    if t.vacuous > 0 {
        report.warnings.push(format!(
            "{name}: {} checks in the vacuous regime 1 + alpha tau <= 0",
            t.vacuous
        ));
    }
    report.checks.push(Check::new(
        name,
        t.failed == 0,
        format!(
            "{} failed of {} checked, {} vacuous, min margin {:e}",
            t.failed, t.checked, t.vacuous, t.min_margin
        ),
    ));
}

pub fn run_experiment(cfg: &RunConfig, base: &Path) -> Result<Report> {
    match &cfg.experiment {
        Experiment::Jko1d(c) => jko1d(c, base),
        Experiment::Jko2d(c) => jko2d(c, base),
        Experiment::TheoremSweep(c) => theorem_sweep(c, cfg.seed),
        Experiment::ExtensionAudit(c) => extension_audit(c, base),
        Experiment::FpCompare(c) => fp_compare(c, base),
        Experiment::LemmaProbe(c) => lemma_probe(c, cfg.seed),
    }
}

fn jko1d(c: &Jko1dConfig, base: &Path) -> Result<Report> {
    let mut report = Report::new("jko1d");
    let grid = build_grid(&c.domain)?;
    let (v, warning) = build_potential(&c.potential, &grid, base)?;
    report.warnings.extend(warning);
    let rho0 = build_density(&c.density, &grid, &v, base)?;
    let traj = run_trajectory(&rho0, &v, c.tau, c.steps, &c.jko)?;

    for (k, step) in traj.steps.iter().enumerate() {
        let check = check_theorem(
            &traj.densities[k + 1],
            &traj.densities[k],
            &v,
            c.tau,
            step.optimality_residual,
            "ot1d",
            c.tolerance,
        )?;
        report.theorem_rows.push(TheoremRow {
            instance: format!("step {}", k + 1),
            check,
        });
    }
    let residuals: Vec<f64> = traj.steps.iter().map(|s| s.optimality_residual).collect();
    let env = check_decay_envelope(&traj.densities, &residuals, &v, c.tau, c.tolerance)?;

    report.checks.push(Check::new(
        "trajectory_complete",
        traj.is_complete(),
        format!("{} of {} steps", traj.steps.len(), c.steps),
    ));
    contraction_check(
        "step_contraction",
        &tally(report.theorem_rows.iter().map(|r| &r.check)),
        &mut report,
    );
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    report.checks.push(Check::new(
        "optimality_residual",
        traj.steps.iter().all(|s| s.converged) && worst <= c.residual_max,
        format!("max residual {worst:e} (bound {:e})", c.residual_max),
    ));
    report.checks.push(Check::new(
        "energy_descent",
        traj.steps.iter().all(|s| s.energy_descent),
        "F(rho_k+1) + W2^2/(2 tau) <= F(rho_k) on every step",
    ));
    if env.vacuous {
        report
            .warnings
            .push("decay envelope: vacuous regime 1 + alpha tau <= 0".into());
    } else {
        report.checks.push(Check::new(
            "decay_bound",
            env.bound_holds,
            format!(
                "Lip_k <= (1 + alpha tau)^-k Lip_0 + k tol; Lip_0 {:e}, Lip_K {:e}",
                env.lip[0],
                env.lip.last().copied().unwrap_or(f64::NAN)
            ),
        ));
        report.checks.push(Check::new(
            "envelope_monotone",
            env.monotone,
            "(1 + alpha tau)^k Lip_k nonincreasing within tolerance",
        ));
    }

    let mut gibbs = serde_json::Value::Null;
    if c.gibbs_check {
        let g = Density::gibbs(&v);
        let step = jko_step(&g, &v, c.tau, &c.jko)?;
        let l1_step = step.rho_next.l1_distance(&g)?;
        // the oracle is limited in size; it runs on a coarser copy if needed
        let coarse = refined_interval(&c.domain, grid.active_count().min(MAX_CELLS))?;
        let (v_c, _) = build_potential(&c.potential, &coarse, base)?;
        let g_c = Density::gibbs(&v_c);
        let l1_oracle = jko_oracle(&g_c, &v_c, c.tau)?.rho.l1_distance(&g_c)?;
        report.checks.push(Check::new(
            "gibbs_fixed_point_ot1d",
            l1_step <= c.gibbs_tol,
            format!("L1 {l1_step:e} (bound {:e})", c.gibbs_tol),
        ));
        report.checks.push(Check::new(
            "gibbs_fixed_point_oracle",
            l1_oracle <= c.gibbs_tol,
            format!(
                "L1 {l1_oracle:e} on {} cells (bound {:e})",
                coarse.active_count(),
                c.gibbs_tol
            ),
        ));
        gibbs = json!({ "l1_ot1d": l1_step, "l1_oracle": l1_oracle });
    }

    let mut ma = serde_json::Value::Null;
    if let Some(ladder) = &c.ma_ladder {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for &n in &ladder.ns {
            let g_n = refined_interval(&c.domain, n)?;
            let (v_n, _) = build_potential(&c.potential, &g_n, base)?;
            let src = build_density(&ladder.source, &g_n, &v_n, base)?;
            let dst = build_density(&ladder.target, &g_n, &v_n, base)?;
            let r = solve_1d(&src, &dst)?;
            hs.push(g_n.hx());
            errs.push(max_abs_finite(&r.residual_ma));
        }
        let order = observed_order(&hs, &errs);
        report.checks.push(Check::new(
            "monge_ampere_order",
            order >= ladder.min_order,
            format!(
                "observed order {order:.3} (needs {}), residuals {errs:?}",
                ladder.min_order
            ),
        ));
        ma = json!({ "ns": ladder.ns, "residuals": errs, "order": order });
    }

    let mut env_csv = String::from("k,lip,envelope,tol_thm\n");
    for k in 0..env.lip.len() {
        let tol = if k == 0 { 0.0 } else { env.tol_thm[k - 1] };
        let _ = writeln!(env_csv, "{k},{},{},{}", env.lip[k], env.envelope[k], tol);
    }
    let mut traj_csv = Vec::new();
    traj.write_csv(&mut traj_csv)?;
    report.files.push(("trajectory.csv".into(), traj_csv));
    report
        .files
        .push(("envelope.csv".into(), env_csv.into_bytes()));
    report.summary = json!({
        "alpha": v.alpha(),
        "tau": c.tau,
        "n": grid.active_count(),
        "trajectory": traj.summary(),
        "envelope": env,
        "gibbs": gibbs,
        "monge_ampere": ma,
    });
    Ok(report)
}

fn jko2d(c: &Jko2dConfig, base: &Path) -> Result<Report> {
    let mut report = Report::new("jko2d");
    let grid = build_grid(&c.domain)?;
    let (v, warning) = build_potential(&c.potential, &grid, base)?;
    report.warnings.extend(warning);
    let rho0 = build_density(&c.density, &grid, &v, base)?;
    let h2 = grid.h() * grid.h();
    let eps_ladder: Vec<f64> = c.eps_factors.iter().map(|f| f * h2).collect();
    let eps = *eps_ladder.last().unwrap_or(&(2.0 * h2));
    let cfg = c.entropic.with_eps(eps);

    let mut densities = vec![rho0];
    let mut steps = Vec::new();
    for k in 0..c.steps {
        let r = entropic_jko_step(&densities[k], &v, c.tau, &cfg)?;
        let check = check_theorem(
            &r.rho_next,
            &densities[k],
            &v,
            c.tau,
            r.marginal_defect,
            "entropic",
            c.tolerance,
        )?;
        report.theorem_rows.push(TheoremRow {
            instance: format!("step {}", k + 1),
            check,
        });
        steps.push(json!({
            "iterations": r.iterations,
            "converged": r.converged,
            "marginal_defect": r.marginal_defect,
            "w2_eps": r.w2_eps,
        }));
        let converged = r.converged;
        densities.push(r.rho_next);
        if !converged {
            break;
        }
    }
    let converged = steps.len() == c.steps && steps.iter().all(|s| s["converged"] == json!(true));
    report.checks.push(Check::new(
        "steps_converged",
        converged,
        format!("{} of {} steps", steps.len(), c.steps),
    ));
    contraction_check(
        "step_contraction",
        &tally(report.theorem_rows.iter().map(|r| &r.check)),
        &mut report,
    );
    let mass_err = densities
        .iter()
        .map(|d| (d.mass() - 1.0).abs())
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "mass_and_positivity",
        mass_err <= 1e-10 && densities.iter().all(|d| d.is_strictly_positive()),
        format!("max mass defect {mass_err:e}"),
    ));

    let mut gibbs = serde_json::Value::Null;
    if c.gibbs_check {
        let g = Density::gibbs(&v);
        let mut errs = Vec::new();
        for &e in &eps_ladder {
            let r = entropic_jko_step(&g, &v, c.tau, &c.entropic.with_eps(e))?;
            errs.push(r.rho_next.l1_distance(&g)?);
        }
        // sort by decreasing eps so the ladder order in the config is irrelevant
        let mut pairs: Vec<(f64, f64)> = eps_ladder
            .iter()
            .copied()
            .zip(errs.iter().copied())
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let shrinking = pairs.windows(2).all(|w| w[1].1 < w[0].1);
        report.checks.push(Check::new(
            "gibbs_error_shrinks",
            shrinking,
            format!("L1 errors {errs:?} along eps {eps_ladder:?}"),
        ));
        gibbs = json!({ "eps": eps_ladder, "l1": errs });
    }

    let names: Vec<String> = (0..densities.len()).map(|k| format!("rho_{k}")).collect();
    let columns: Vec<(&str, &[f64])> = names
        .iter()
        .zip(&densities)
        .map(|(n, d)| (n.as_str(), d.values()))
        .collect();
    report
        .files
        .push(("trajectory.csv".into(), csv_bytes(&grid, &columns)?));
    report.summary = json!({
        "alpha": v.alpha(),
        "tau": c.tau,
        "eps": eps,
        "cells": grid.active_count(),
        "steps": steps,
        "gibbs": gibbs,
    });
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct OracleGap {
    /// `|F(step) - F(oracle)|` with the exact 1-D transport term.
    energy_gap_exact: f64,
    /// The same with the atomic transport term.
    energy_gap_atomic: f64,
    l1: f64,
    stationarity: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    instance: usize,
    alpha: f64,
    tau: f64,
    params: RandomInstance,
    converged: bool,
    check: TheoremCheck,
    refined_converged: Option<bool>,
    refined: Option<TheoremCheck>,
    oracle: Option<OracleGap>,
}

fn sweep_density(spec: &DensitySpec, params: &RandomInstance, v: &Potential) -> Result<Density> {
    match spec {
        DensitySpec::Random => params.density(v),
        other => build_density(other, v.grid(), v, Path::new(".")),
    }
}

fn sweep_instance(c: &SweepConfig, seed: u64, ai: usize, inst: usize) -> Result<Vec<SweepRow>> {
    let alpha = c.alphas[ai];
    let mut rng = instance_rng(seed, 1, (ai * c.instances + inst) as u64);
    let params = RandomInstance::draw(&mut rng);
    let grid = build_grid(&c.domain)?;
    let v = params.potential(&grid, alpha)?;
    let g = sweep_density(&c.density, &params, &v)?;
    let fine = match c.refine_n {
        Some(n) => {
            let grid = refined_interval(&c.domain, n)?;
            let v = params.potential(&grid, alpha)?;
            let g = sweep_density(&c.density, &params, &v)?;
            Some((v, g))
        }
        None => None,
    };
    let mut rows = Vec::new();
    for &tau in &c.taus {
        let step = jko_step(&g, &v, tau, &c.jko)?;
        let check = check_theorem(
            &step.rho_next,
            &g,
            &v,
            tau,
            step.optimality_residual,
            "ot1d",
            c.tolerance,
        )?;
        let (refined_converged, refined) = match &fine {
            Some((vf, gf)) => {
                let s = jko_step(gf, vf, tau, &c.jko)?;
                let chk = check_theorem(
                    &s.rho_next,
                    gf,
                    vf,
                    tau,
                    s.optimality_residual,
                    "ot1d",
                    c.tolerance,
                )?;
                (Some(s.converged), Some(chk))
            }
            None => (None, None),
        };
        let oracle = match c.oracle {
            Some(_) => {
                let o = jko_oracle(&g, &v, tau)?;
                let exact = |r: &Density| -> Result<f64> {
                    Ok(total_energy(r, &g, &v, tau, &Ot1dBackend)?.total)
                };
                let atomic =
                    |r: &Density| -> Result<f64> { Ok(atomic_energy(r, &g, &v, tau)?.total) };
                Some(OracleGap {
                    energy_gap_exact: (exact(&step.rho_next)? - exact(&o.rho)?).abs(),
                    energy_gap_atomic: (atomic(&step.rho_next)? - atomic(&o.rho)?).abs(),
                    l1: step.rho_next.l1_distance(&o.rho)?,
                    stationarity: o.stationarity,
                })
            }
            None => None,
        };
        rows.push(SweepRow {
            instance: inst,
            alpha,
            tau,
            params,
            converged: step.converged,
            check,
            refined_converged,
            refined,
            oracle,
        });
    }
    Ok(rows)
}

fn theorem_sweep(c: &SweepConfig, seed: u64) -> Result<Report> {
    let mut report = Report::new("theorem-sweep");
    let jobs: Vec<(usize, usize)> = (0..c.alphas.len())
        .flat_map(|ai| (0..c.instances).map(move |i| (ai, i)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(ai, i)| sweep_instance(c, seed, ai, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        report.warnings.push(format!(
            "{unconverged} steps did not converge and are not checked"
        ));
    }
    let base = tally(rows.iter().filter(|r| r.converged).map(|r| &r.check));
    contraction_check("contraction", &base, &mut report);
    for r in &rows {
        let label = format!("a{}-i{}", r.alpha, r.instance);
        report.theorem_rows.push(TheoremRow {
            instance: label.clone(),
            check: r.check.clone(),
        });
        if let Some(f) = &r.refined {
            report.theorem_rows.push(TheoremRow {
                instance: label,
                check: f.clone(),
            });
        }
    }
    let mut refinement = serde_json::Value::Null;
    if c.refine_n.is_some() {
        let fine = tally(
            rows.iter()
                .filter(|r| r.refined_converged == Some(true))
                .filter_map(|r| r.refined.as_ref()),
        );
        contraction_check("refined_contraction", &fine, &mut report);
        let mut compared = 0;
        let mut worst = f64::INFINITY;
        for r in &rows {
            if let (true, Some(true), Some(f)) = (r.converged, r.refined_converged, &r.refined) {
                if r.check.state != CheckState::Vacuous {
                    compared += 1;
                    worst = worst.min(f.margin - r.check.margin);
                }
            }
        }
        report.checks.push(Check::new(
            "refinement",
            worst >= -c.refine_slack,
            format!(
                "min(margin_fine - margin_base) {worst:e} over {compared} pairs (allowed -{:e})",
                c.refine_slack
            ),
        ));
        refinement = json!({ "pairs": compared, "min_margin_gain": worst });
    }
    let mut oracle = serde_json::Value::Null;
    if let Some(o) = &c.oracle {
        let gaps: Vec<&OracleGap> = rows.iter().filter_map(|r| r.oracle.as_ref()).collect();
        let e = gaps
            .iter()
            .map(|g| g.energy_gap_exact.max(g.energy_gap_atomic))
            .fold(0.0, f64::max);
        let l1 = gaps.iter().map(|g| g.l1).fold(0.0, f64::max);
        report.checks.push(Check::new(
            "oracle_energy",
            e <= o.energy_tol,
            format!("max energy gap {e:e} (bound {:e})", o.energy_tol),
        ));
        report.checks.push(Check::new(
            "oracle_l1",
            l1 <= o.l1_tol,
            format!("max L1 gap {l1:e} (bound {:e})", o.l1_tol),
        ));
        oracle = json!({ "max_energy_gap": e, "max_l1": l1 });
    }

    let mut csv = String::from(
        "instance,alpha,tau,n,lhs,rhs,margin,tol_thm,state,residual,refined_margin,oracle_energy_gap,oracle_l1\n",
    );
    for r in &rows {
        let c = &r.check;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{:?},{},{},{},{}",
            r.instance,
            r.alpha,
            r.tau,
            c.n,
            c.lhs,
            c.rhs,
            c.margin,
            c.tol_thm,
            c.state,
            c.optimality_residual,
            opt(r.refined.as_ref().map(|f| f.margin)),
            opt(r
                .oracle
                .as_ref()
                .map(|g| g.energy_gap_exact.max(g.energy_gap_atomic))),
            opt(r.oracle.as_ref().map(|g| g.l1)),
        );
    }
    report.files.push(("sweep.csv".into(), csv.into_bytes()));
    report.files.push((
        "sweep_rows.json".into(),
        (serde_json::to_string_pretty(&rows)? + "\n").into_bytes(),
    ));
    report.summary = json!({
        "instances": rows.len(),
        "checked": base.checked,
        "failed": base.failed,
        "vacuous": base.vacuous,
        "unconverged": unconverged,
        "min_margin": base.min_margin,
        "refinement": refinement,
        "oracle": oracle,
    });
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct AuditRow {
    potential: usize,
    n: usize,
    diagnostics: jkolip::extension::ExtensionDiagnostics,
    lip_excess: f64,
    mass_outside: f64,
    max_outside: f64,
}

fn extension_audit(c: &ExtensionAuditConfig, base: &Path) -> Result<Report> {
    let mut report = Report::new("extension-audit");
    let inner = build_grid(&c.inner)?;
    let outer = build_grid(&c.outer)?;
    let jobs: Vec<(usize, usize)> = (0..c.potentials.len())
        .flat_map(|p| c.ns.iter().map(move |&n| (p, n)))
        .collect();
    let results: Vec<(AuditRow, Vec<u8>, Option<String>)> = jobs
        .par_iter()
        .map(|&(p, n)| -> Result<_> {
            let (v, warning) = build_potential(&c.potentials[p], &inner, base)?;
            let g = build_density(&c.density, &inner, &v, base)?;
            let setup = ExtensionSetup::new(inner.clone(), outer.clone(), n)?;
            let a = build_approximants(&setup, &v, &g)?;
            let d = diagnose(&setup, &v, &g, &a)?;
            let row = AuditRow {
                potential: p,
                n,
                lip_excess: lip_penalty_bound_check(&setup, &v, &a.v_n)?,
                mass_outside: mass_outside(&setup, &a.g_n, c.decay_delta),
                max_outside: max_outside(&setup, &a.g_n, c.decay_delta),
                diagnostics: d,
            };
            let csv = csv_bytes(
                &outer,
                &[
                    ("v_tilde", &a.v_tilde),
                    ("v_n", &a.v_n),
                    ("h_tilde", &a.h_tilde),
                    ("h_n", &a.h_n),
                    ("g_n", a.g_n.values()),
                ],
            )?;
            Ok((row, csv, warning))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (row, csv, warning) in results {
        if row.n == c.ns[0] {
            report.warnings.extend(warning);
            if row.diagnostics.min_v_tilde < 0.0 {
                report.warnings.push(format!(
                    "potential {}: extended potential takes negative values (min {:e})",
                    row.potential, row.diagnostics.min_v_tilde
                ));
            }
        }
        report.files.push((
            format!("approximants_p{}_n{}.csv", row.potential, row.n),
            csv,
        ));
        rows.push(row);
    }
    let tol = c.quadrature_tol;
    let sandwich_bad: Vec<String> = rows
        .iter()
        .filter(|r| {
            let d = &r.diagnostics;
            d.sandwich_min < -tol || d.sandwich_max > d.sandwich_bound + tol
        })
        .map(|r| format!("p{} n{}", r.potential, r.n))
        .collect();
    let worst_sandwich = rows
        .iter()
        .map(|r| r.diagnostics.sandwich_max * r.n as f64)
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "sandwich",
        sandwich_bad.is_empty(),
        format!("violations {sandwich_bad:?}; largest n * (V_n - V~ * xi_n) {worst_sandwich:e}"),
    ));
    let ext_err = rows
        .iter()
        .map(|r| {
            r.diagnostics
                .extension_error_v
                .max(r.diagnostics.extension_error_h)
        })
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "extensions_agree_on_domain",
        ext_err <= 1e-10,
        format!("max |V~ - V|, |h~ - h| on the domain {ext_err:e}"),
    ));
    let excess = rows
        .iter()
        .map(|r| r.lip_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    report.checks.push(Check::new(
        "penalty_lipschitz",
        excess <= c.lip_excess_max,
        format!(
            "max Lip(V_n) - Lip(V) {excess:e} (bound {})",
            c.lip_excess_max
        ),
    ));
    let grad = rows
        .iter()
        .map(|r| r.diagnostics.grad_hn_max - r.diagnostics.lip_h)
        .fold(f64::NEG_INFINITY, f64::max);
    report.checks.push(Check::new(
        "mollified_gradient",
        grad <= c.grad_slack,
        format!("max |grad h_n| - Lip(h) {grad:e} (slack {})", c.grad_slack),
    ));
    let convex_bad: Vec<usize> = rows
        .iter()
        .filter(|r| !r.diagnostics.convexity.consistent)
        .map(|r| r.potential)
        .collect();
    report.checks.push(Check::new(
        "penalized_convexity",
        convex_bad.is_empty(),
        format!("V_n second differences below the declared alpha for potentials {convex_bad:?}"),
    ));
    let mut decay = Vec::new();
    let mut decays = true;
    for p in 0..c.potentials.len() {
        let masses: Vec<f64> = rows
            .iter()
            .filter(|r| r.potential == p)
            .map(|r| r.mass_outside)
            .collect();
        decays &= masses.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0);
        decay.push(masses);
    }
    report.checks.push(Check::new(
        "mass_outside_decays",
        decays,
        format!(
            "mass at distance > {} along ns {:?}: {decay:?}",
            c.decay_delta, c.ns
        ),
    ));

    let mut csv = String::from(
        "potential,n,sandwich_min,sandwich_max,lip_excess,grad_hn_max,lip_h,mass_outside,max_outside,min_v_tilde\n",
    );
    for r in &rows {
        let d = &r.diagnostics;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.potential,
            r.n,
            d.sandwich_min,
            d.sandwich_max,
            r.lip_excess,
            d.grad_hn_max,
            d.lip_h,
            r.mass_outside,
            r.max_outside,
            d.min_v_tilde
        );
    }
    report.files.push(("audit.csv".into(), csv.into_bytes()));
    report.summary = json!({ "rows": rows });
    Ok(report)
}

fn fp_compare(c: &FpCompareConfig, base: &Path) -> Result<Report> {
    let mut report = Report::new("fp-compare");
    let grid = build_grid(&c.domain)?;
    let (v, warning) = build_potential(&c.potential, &grid, base)?;
    report.warnings.extend(warning);
    let rho0 = build_density(&c.density, &grid, &v, base)?;
    let results: Vec<(f64, jkolip::fpref::Comparison, bool)> = c
        .taus
        .par_iter()
        .map(|&tau| -> Result<_> {
            let steps = (c.t_final / tau).round() as usize;
            let fp = solve_fp(&rho0, &v, c.t_final, tau / c.dt_ratio as f64)?;
            let traj = run_trajectory(&rho0, &v, tau, steps, &c.jko)?;
            let complete = traj.is_complete();
            Ok((tau, compare_jko_to_fp(&traj, &fp)?, complete))
        })
        .collect::<Result<Vec<_>>>()?;

    let complete = results.iter().all(|r| r.2);
    report.checks.push(Check::new(
        "trajectories_complete",
        complete,
        "every JKO step converged",
    ));
    // error at the final time, ordered by decreasing tau
    let mut finals: Vec<(f64, f64)> = results
        .iter()
        .map(|(tau, cmp, _)| (*tau, cmp.l1_errors.last().copied().unwrap_or(f64::NAN)))
        .collect();
    finals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = finals.windows(2).all(|w| w[1].1 < w[0].1);
    report.checks.push(Check::new(
        "error_decreases",
        complete && monotone,
        format!("L1 error at t = {} along tau: {finals:?}", c.t_final),
    ));
    let taus: Vec<f64> = finals.iter().map(|f| f.0).collect();
    let errs: Vec<f64> = finals.iter().map(|f| f.1).collect();
    let order = observed_order(&taus, &errs);
    report.checks.push(Check::new(
        "order_in_tau",
        complete && order >= c.min_order,
        format!("fitted order {order:.3} (needs {})", c.min_order),
    ));

    let mut csv = String::from("tau,k,t,l1\n");
    for (tau, cmp, _) in &results {
        for (k, (t, e)) in cmp.times.iter().zip(&cmp.l1_errors).enumerate() {
            let _ = writeln!(csv, "{tau},{k},{t},{e}");
        }
    }
    report.files.push(("errors.csv".into(), csv.into_bytes()));
    let comparisons: Vec<_> = results
        .iter()
        .map(|(tau, cmp, complete)| json!({ "tau": tau, "complete": complete, "comparison": cmp }))
        .collect();
    report.summary = json!({
        "t_final": c.t_final,
        "final_errors": errs,
        "taus": taus,
        "order": order,
        "comparisons": comparisons,
    });
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct ProbeRow {
    dim: usize,
    index: usize,
    argmax: usize,
    is_interior: bool,
    margin: f64,
    max_norm: f64,
    bound: f64,
    converged: bool,
}

fn lemma_probe(c: &LemmaProbeConfig, seed: u64) -> Result<Report> {
    let mut report = Report::new("lemma-probe");
    let line = Arc::new(Grid::interval(-c.radius_1d, c.radius_1d, c.n_1d)?);
    let disc = Arc::new(Grid::disc([0.0, 0.0], c.radius_2d, c.n_2d)?);
    let mut jobs: Vec<(usize, usize)> = (0..c.pairs_1d).map(|i| (1, i)).collect();
    jobs.extend((0..c.discs).map(|i| (2, i)));
    let rows: Vec<ProbeRow> = jobs
        .par_iter()
        .map(|&(dim, i)| -> Result<ProbeRow> {
            let mut rng = instance_rng(seed, 1 + dim as u64, i as u64);
            if dim == 1 {
                let rho = random_smooth_1d(&line, &mut rng)?;
                let g = random_smooth_1d(&line, &mut rng)?;
                let r = solve_1d(&rho, &g)?;
                let norms: Vec<f64> = r.phi_grad.iter().map(|x| x.abs()).collect();
                let a = argmax_from_norms(&line, &norms);
                Ok(ProbeRow {
                    dim,
                    index: i,
                    argmax: a.argmax,
                    is_interior: a.is_interior,
                    margin: a.margin,
                    max_norm: a.max_norm,
                    bound: (2f64.sqrt() + c.bound_slack) * c.radius_1d,
                    converged: true,
                })
            } else {
                let rho = random_bump_2d(&disc, &mut rng)?;
                let g = random_bump_2d(&disc, &mut rng)?;
                let eps = c.eps_factor * disc.h() * disc.h();
                let p = boundary_argmax_probe(&rho, &g, &SinkhornConfig::with_eps(eps))?;
                Ok(ProbeRow {
                    dim,
                    index: i,
                    argmax: p.argmax.argmax,
                    is_interior: p.argmax.is_interior,
                    margin: p.argmax.margin,
                    max_norm: p.argmax.max_norm,
                    bound: (2f64.sqrt() + c.bound_slack) * c.radius_2d,
                    converged: p.sinkhorn_converged,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let one: Vec<&ProbeRow> = rows.iter().filter(|r| r.dim == 1).collect();
    let two: Vec<&ProbeRow> = rows.iter().filter(|r| r.dim == 2).collect();
    if !one.is_empty() {
        let boundary: Vec<usize> = one
            .iter()
            .filter(|r| !r.is_interior)
            .map(|r| r.index)
            .collect();
        report.checks.push(Check::new(
            "interior_argmax_1d",
            boundary.is_empty(),
            format!(
                "{} of {} pairs interior; boundary argmax on {boundary:?}",
                one.len() - boundary.len(),
                one.len()
            ),
        ));
    }
    if !two.is_empty() {
        let bad: Vec<usize> = two
            .iter()
            .filter(|r| !(r.is_interior && r.margin > 0.0 && r.converged))
            .map(|r| r.index)
            .collect();
        let min_margin = two.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        report.checks.push(Check::new(
            "interior_argmax_2d",
            bad.is_empty(),
            format!("min margin {min_margin:e}; failing probes {bad:?}"),
        ));
    }
    let over: Vec<String> = rows
        .iter()
        .filter(|r| r.max_norm > r.bound)
        .map(|r| format!("{}d#{}", r.dim, r.index))
        .collect();
    let ratio = rows
        .iter()
        .map(|r| r.max_norm / r.bound)
        .fold(0.0, f64::max);
    report.checks.push(Check::new(
        "gradient_bound",
        over.is_empty(),
        format!("max |grad phi| / bound {ratio:.4}; violations {over:?}"),
    ));
    let mut csv = String::from("dim,index,argmax,is_interior,margin,max_norm,bound,converged\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.dim, r.index, r.argmax, r.is_interior, r.margin, r.max_norm, r.bound, r.converged
        );
    }
    report.files.push(("probes.csv".into(), csv.into_bytes()));
    report.summary = json!({ "probes": rows });
    Ok(report)
}
