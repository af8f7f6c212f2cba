//! Subcommand implementations. Each returns a human-readable report and
//! writes its CSV outputs plus the resolved configuration into `cfg.out`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pipeshape::adjoint::{adjoint_outlet_residual, adjoint_table, solve_adjoint};
use pipeshape::geometry::io::{write_mesh, write_profile};
use pipeshape::geometry::{make_cylinder_profile, mesh_profile_graded, MeridianMesh, ShapeProfile};
use pipeshape::optimizer::{family_member, run_descent, run_sweep};
use pipeshape::shape_derivative::{dj, fd_dj, perturbation_basis, richardson, wall_gradient};
use pipeshape::state::{
    dissipated_energy, field_table, solve_navier_stokes, summary_csv, FlowField, NEWTON_MAX_ITER, NEWTON_TOL,
};
use pipeshape::verification::{beta_coercivity, divergence_identity, optimality_trace, psi_profile};
use pipeshape::Error;

use crate::config::{RunConfig, RESOLVED_CONFIG};
use crate::error::CliError;

fn write(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(out.join(name), contents)?;
    Ok(())
}

fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out)?;
    write(&cfg.out, RESOLVED_CONFIG, &cfg.to_toml())
}

fn profile(cfg: &RunConfig, cylinder: bool) -> Result<ShapeProfile, CliError> {
    Ok(if cylinder || cfg.family.e == 0.0 {
        make_cylinder_profile(&cfg.params, cfg.mode)?
    } else {
        family_member(&cfg.params, cfg.mode, &cfg.family.offsets, cfg.family.e)?
    })
}

fn mesh(cfg: &RunConfig, profile: &ShapeProfile) -> Result<MeridianMesh, CliError> {
    Ok(mesh_profile_graded(profile, cfg.mesh.h, cfg.mesh.grading())?)
}

fn converged_state(mesh: &MeridianMesh, cfg: &RunConfig) -> Result<FlowField, CliError> {
    let state = solve_navier_stokes(mesh, &cfg.params, NEWTON_TOL, NEWTON_MAX_ITER)?;
    if !state.converged {
        return Err(Error::SingularSystem(format!("Newton did not converge in {} steps", state.newton_steps())).into());
    }
    Ok(state)
}

fn relative_error(adjoint: f64, fd: f64) -> f64 {
    if adjoint == fd {
        0.0
    } else {
        (adjoint - fd).abs() / fd.abs()
    }
}

pub fn solve(cfg: &RunConfig, cylinder: bool) -> Result<String, CliError> {
    prepare(cfg)?;
    let prof = profile(cfg, cylinder)?;
    let mesh = mesh(cfg, &prof)?;
    write(&cfg.out, "profile.txt", &write_profile(&prof))?;
    write(&cfg.out, "mesh.txt", &write_mesh(&mesh))?;
    let state = solve_navier_stokes(&mesh, &cfg.params, NEWTON_TOL, NEWTON_MAX_ITER)?;
    write(&cfg.out, "field.csv", &field_table(&state))?;
    write(&cfg.out, "summary.csv", &summary_csv(&state))?;
    if !state.converged {
        return Err(Error::SingularSystem(format!("Newton did not converge in {} steps", state.newton_steps())).into());
    }
    Ok(format!(
        "mode {} h {} nodes {}: J = {:.9}, Newton steps {}",
        cfg.mode,
        cfg.mesh.h,
        mesh.nodes().len(),
        dissipated_energy(&state),
        state.newton_steps()
    ))
}

pub fn adjoint(cfg: &RunConfig) -> Result<String, CliError> {
    prepare(cfg)?;
    let mesh = mesh(cfg, &profile(cfg, false)?)?;
    let state = converged_state(&mesh, cfg)?;
    let adj = solve_adjoint(&state)?;
    let wg = wall_gradient(&state, &adj)?;
    write(&cfg.out, "adjoint.csv", &adjoint_table(&adj))?;
    let outlet = if cfg.mode.is_axisym() { adjoint_outlet_residual(&adj) } else { f64::NAN };
    let summary = format!(
        "J,adjoint_residual,divergence_residual,outlet_residual,g_relative_variation\n{},{},{},{},{}\n",
        dissipated_energy(&state),
        adj.residual,
        adj.divergence_residual(),
        outlet,
        wg.relative_variation()
    );
    write(&cfg.out, "adjoint_summary.csv", &summary)?;
    Ok(format!(
        "adjoint residual {:.3e}, wall gradient relative variation {:.4}",
        adj.residual,
        wg.relative_variation()
    ))
}

pub fn gradcheck(cfg: &RunConfig) -> Result<String, CliError> {
    prepare(cfg)?;
    let mesh = mesh(cfg, &profile(cfg, false)?)?;
    let state = converged_state(&mesh, cfg)?;
    let adj = solve_adjoint(&state)?;
    let wg = wall_gradient(&state, &adj)?;
    let basis = perturbation_basis(&mesh, cfg.gradcheck.volume_preserving)?;
    let ts = &cfg.gradcheck.t;
    let mut rows = String::from("t,h,dJ_adjoint,dJ_fd,rel_err\n");
    let mut summary = String::from("bump,dJ_adjoint,dJ_fd_coarse,dJ_fd_fine,richardson,rel_err_richardson\n");
    let mut worst_first: f64 = 0.0;
    let mut worst_rich: f64 = 0.0;
    let mut skipped = 0;
    for (i, pert) in basis.iter().enumerate() {
        let a = dj(&wg, &mesh, pert);
        let fd = fd_dj(&mesh, &cfg.params, pert, ts);
        for row in &fd {
            match row.quotient {
                Some(q) => {
                    let rel = relative_error(a, q);
                    if row.t == ts[0] {
                        worst_first = worst_first.max(rel);
                    }
                    let _ = writeln!(rows, "{},{},{},{},{}", row.t, cfg.mesh.h, a, q, rel);
                }
                None => {
                    skipped += 1;
                    let _ = writeln!(rows, "{},{},{},NaN,skipped", row.t, cfg.mesh.h, a);
                }
            }
        }
        if let [Some(coarse), Some(fine)] = [fd[0].quotient, fd.get(1).and_then(|r| r.quotient)] {
            let lim = richardson(coarse, fine, ts[0] / ts[1]);
            let rel = relative_error(a, lim);
            worst_rich = worst_rich.max(rel);
            let _ = writeln!(summary, "{i},{a},{coarse},{fine},{lim},{rel}");
        }
    }
    write(&cfg.out, "gradcheck.csv", &rows)?;
    write(&cfg.out, "gradcheck_summary.csv", &summary)?;
    Ok(format!(
        "{} perturbations: worst rel_err at t = {} is {:.3e}; worst Richardson rel_err {:.3e}; {} rows skipped",
        basis.len(),
        ts[0],
        worst_first,
        worst_rich,
        skipped
    ))
}

pub fn optimize(cfg: &RunConfig) -> Result<String, CliError> {
    prepare(cfg)?;
    let prof = profile(cfg, false)?;
    let mesh = mesh(cfg, &prof)?;
    let res = run_descent(&mesh, &cfg.params, prof.target_volume(), cfg.mesh.h, &cfg.optimizer)?;
    write(&cfg.out, "history.csv", &res.history_csv())?;
    write(&cfg.out, "wall.csv", &res.wall_csv())?;
    write(&cfg.out, "mesh.txt", &write_mesh(&res.mesh))?;
    let summary = format!(
        "J0,J_final,rel_change_percent,volume_violation,relative_volume_violation,iterations,converged,stop_reason\n{},{},{},{},{},{},{},{}\n",
        res.j0,
        res.final_j(),
        res.relative_change_percent(),
        res.volume_violation(),
        res.volume_violation() / res.v_target,
        res.history.len(),
        res.converged,
        res.stop_reason
    );
    write(&cfg.out, "optimize_summary.csv", &summary)?;
    Ok(format!(
        "J: {:.8} -> {:.8} ({:+.4}%), volume violation {:.3e} V, {} ({})",
        res.j0,
        res.final_j(),
        res.relative_change_percent(),
        res.volume_violation() / res.v_target,
        if res.converged { "converged" } else { "not converged" },
        res.stop_reason
    ))
}

pub fn sweep(cfg: &RunConfig) -> Result<String, CliError> {
    prepare(cfg)?;
    let grid = cfg.family.grid();
    let res = run_sweep(&grid, &cfg.params, cfg.mode, &cfg.family.offsets, cfg.mesh.h, cfg.mesh.grading())?;
    write(&cfg.out, "sweep.csv", &res.csv())?;
    let (e_min, j_min) = res.minimum.unwrap_or((f64::NAN, f64::NAN));
    Ok(format!(
        "{} members: minimum J = {:.9} at e* = {}; dips then rises: {}",
        res.entries.len(),
        j_min,
        e_min,
        res.dips_then_rises()
    ))
}

struct CheckRow {
    check: &'static str,
    quantity: &'static str,
    value: f64,
    threshold: String,
    status: &'static str,
}

pub fn verify(cfg: &RunConfig) -> Result<String, CliError> {
    prepare(cfg)?;
    let mesh = mesh(cfg, &make_cylinder_profile(&cfg.params, cfg.mode)?)?;
    let state = converged_state(&mesh, cfg)?;
    let adj = solve_adjoint(&state)?;
    let mut rows: Vec<CheckRow> = Vec::new();
    let mut report = String::new();
    let mut failures = Vec::new();
    let mut row = |check, quantity, value, threshold: &str, status| {
        rows.push(CheckRow { check, quantity, value, threshold: threshold.to_string(), status })
    };

    let ot = optimality_trace(&state, &adj)?;
    let verdict = ot.verdict();
    row("optimality_trace", "relative_variation", ot.relative_variation, "1e-3", "info");
    row("optimality_trace", "mean_dvz_dn", ot.mean, "", "info");
    row("optimality_trace", "equivalence_error", ot.equivalence_error(), "", "info");
    row("optimality_trace", "g_relative_variation", ot.g_relative_variation, "", "info");
    let _ = writeln!(
        report,
        "[optimality trace]\n  relative variation of dv_z/dn: {:.4}\n  mean eps(u):eps(v) = {:.6e}, c R mean dv_z/dn = {:.6e}, (c R / 2) mean dv_z/dn = {:.6e}\n  verdict: {verdict}",
        ot.relative_variation,
        ot.mean_eu_ev,
        ot.c_r * ot.mean,
        0.5 * ot.c_r * ot.mean
    );

    if cfg.mode.is_axisym() {
        let psi = psi_profile(&adj, cfg.verify.psi_samples)?;
        let ok = psi.non_affinity >= cfg.verify.non_affinity_min;
        let t = format!("{}", cfg.verify.non_affinity_min);
        row("psi", "non_affinity", psi.non_affinity, &t, if ok { "pass" } else { "fail" });
        row("psi", "slope_inlet", psi.slope_inlet, "", "info");
        row("psi", "reference_inlet", psi.reference_inlet, "", "info");
        row("psi", "slope_outlet", psi.slope_outlet, "", "info");
        row("psi", "reference_outlet", psi.reference_outlet, "", "info");
        let _ = writeln!(
            report,
            "[psi profile]\n  non-affinity {:.4e} (>= {}): {}\n  psi'(0+) = {:.6e} vs -8 mu c pi R^2 = {:.6e}\n  psi'(L-) = {:.6e} vs -16 mu c pi R^2 = {:.6e}",
            psi.non_affinity,
            cfg.verify.non_affinity_min,
            if ok { "pass" } else { "FAIL" },
            psi.slope_inlet,
            psi.reference_inlet,
            psi.slope_outlet,
            psi.reference_outlet
        );
        if !ok {
            failures.push("psi non-affinity");
        }

        let div = divergence_identity(&adj, cfg.verify.slabs)?;
        let ok = div.max_residual <= cfg.verify.divergence_tol;
        let t = format!("{}", cfg.verify.divergence_tol);
        row("divergence_identity", "max_residual", div.max_residual, &t, if ok { "pass" } else { "fail" });
        let _ = writeln!(
            report,
            "[divergence identity]\n  {} slabs, max relative residual {:.4e} (<= {}): {}",
            cfg.verify.slabs,
            div.max_residual,
            cfg.verify.divergence_tol,
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            failures.push("divergence identity");
        }
    } else {
        let _ = writeln!(report, "[psi profile]\n  skipped: axisymmetric only\n[divergence identity]\n  skipped: axisymmetric only");
    }

    let wq = pipeshape::verification::wall_pressure_gradient(&adj)?;
    let z_cut = 0.9 * cfg.params.length;
    let wq_inner = wq.l2_norm_up_to(z_cut);
    row("wall_pressure_gradient", "l2_norm", wq.l2_norm, "", "info");
    row("wall_pressure_gradient", "l2_norm_z_le_0.9L", wq_inner, "", "info");
    let _ = writeln!(
        report,
        "[wall pressure gradient]\n  ||dq/dr||_L2(wall) = {:.4e}\n  ||dq/dr||_L2(wall, z <= {z_cut}) = {wq_inner:.4e}",
        wq.l2_norm
    );

    let beta = beta_coercivity(&cfg.params, cfg.verify.beta_divisions)?;
    let ok = beta.min_eigenvalue > 0.0 && beta.zero_rhs_norm <= 1e-12;
    row("beta", "min_eigenvalue", beta.min_eigenvalue, "0", if beta.min_eigenvalue > 0.0 { "pass" } else { "fail" });
    row("beta", "zero_rhs_norm", beta.zero_rhs_norm, "1e-12", if beta.zero_rhs_norm <= 1e-12 { "pass" } else { "fail" });
    let _ = writeln!(
        report,
        "[beta coercivity]\n  min eigenvalue of symmetric part {:.4e}, zero-rhs solution norm {:.1e}: {}",
        beta.min_eigenvalue,
        beta.zero_rhs_norm,
        if ok { "pass" } else { "FAIL" }
    );
    if !ok {
        failures.push("beta coercivity");
    }

    let mut csv = String::from("check,quantity,value,threshold,status\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.check, r.quantity, r.value, r.threshold, r.status);
    }
    write(&cfg.out, "verify.csv", &csv)?;
    if failures.is_empty() {
        Ok(report)
    } else {
        print!("{report}");
        Err(CliError::CheckFailed(failures.join(", ")))
    }
}
