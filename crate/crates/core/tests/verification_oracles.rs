use std::f64::consts::PI;

use pipeshape::adjoint::{solve_adjoint, AdjointField};
use pipeshape::geometry::{make_cylinder_profile, make_spline_profile, mesh_profile};
use pipeshape::state::{solve_navier_stokes, FlowField};
use pipeshape::verification::{
    beta_coercivity, divergence_identity, optimality_trace, psi_profile, wall_pressure_gradient,
};
use pipeshape::{Error, FluidParams, Mode};

fn solved(params: &FluidParams, mode: Mode, h: f64) -> (FlowField, AdjointField) {
    let mesh = mesh_profile(&make_cylinder_profile(params, mode).unwrap(), h).unwrap();
    let st = solve_navier_stokes(&mesh, params, 1e-10, 25).unwrap();
    let adj = solve_adjoint(&st).unwrap();
    (st, adj)
}

#[test]
fn cylinder_is_not_first_order_optimal() {
    let (st, adj) = solved(&FluidParams::default(), Mode::Axisym, 0.1);
    let rep = optimality_trace(&st, &adj).unwrap();
    assert!(rep.cylinder);
    assert!(rep.relative_variation >= 0.05);
    assert_eq!(rep.verdict(), "not first-order optimal");
    assert!(rep.equivalence_error() <= 1e-6, "{}", rep.equivalence_error());
}

#[test]
fn trace_off_the_cylinder_has_no_equivalence_factor() {
    let params = FluidParams::default();
    let prof = make_spline_profile(&params, Mode::Axisym, &[1.0, -0.5, 1.0], 0.02).unwrap();
    let st = solve_navier_stokes(&mesh_profile(&prof, 0.2).unwrap(), &params, 1e-10, 25).unwrap();
    let rep = optimality_trace(&st, &solve_adjoint(&st).unwrap()).unwrap();
    assert!(!rep.cylinder && rep.c_r == 0.0);
    assert!(psi_profile(&solve_adjoint(&st).unwrap(), 33).is_err());
}

#[test]
fn zero_flow_is_vacuous_everywhere() {
    let params = FluidParams { c: 0.0, ..FluidParams::default() };
    let (st, adj) = solved(&params, Mode::Axisym, 0.2);
    let rep = optimality_trace(&st, &adj).unwrap();
    assert!(rep.trace.iter().all(|v| *v == 0.0));
    assert_eq!(rep.verdict(), "vacuous (zero trace)");
    let psi = psi_profile(&adj, 33).unwrap();
    assert!(psi.psi.iter().all(|v| *v == 0.0) && psi.non_affinity == 0.0);
    let div = divergence_identity(&adj, 8).unwrap();
    assert!(div.slabs.iter().all(|s| s.lhs.abs() <= 1e-14 && s.rhs == 0.0));
    assert_eq!(wall_pressure_gradient(&adj).unwrap().l2_norm, 0.0);
}

#[test]
fn psi_is_not_affine_on_the_cylinder() {
    let (_, adj) = solved(&FluidParams::default(), Mode::Axisym, 0.1);
    let rep = psi_profile(&adj, 33).unwrap();
    assert!(rep.z.len() >= 33);
    assert!((rep.reference_inlet - 8.0 * PI).abs() <= 1e-12);
    assert!((rep.reference_outlet - 16.0 * PI).abs() <= 1e-12);
    assert!(rep.non_affinity >= 1e-3, "{}", rep.non_affinity);
    assert!(rep.slope_inlet.is_finite() && rep.slope_outlet.is_finite());
}

#[test]
fn divergence_identity_converges_and_detects_perturbation() {
    let params = FluidParams::default();
    let (_, coarse) = solved(&params, Mode::Axisym, 0.1);
    let (_, fine) = solved(&params, Mode::Axisym, 0.05);
    let rc = divergence_identity(&coarse, 8).unwrap().max_residual;
    let rf = divergence_identity(&fine, 8).unwrap().max_residual;
    assert!(rf <= 5e-3 && rf < rc, "{rc} -> {rf}");

    let mut noisy = fine.clone();
    let scale = noisy.pressure.iter().map(|q| q.abs()).fold(0.0, f64::max);
    for (i, q) in noisy.pressure.iter_mut().enumerate() {
        *q += 0.2 * scale * ((i as f64 * 12.9898).sin() * 43758.5453).fract();
    }
    assert!(divergence_identity(&noisy, 8).unwrap().max_residual >= 0.1);
}

#[test]
fn wall_pressure_gradient_is_positive_and_stable_away_from_outlet() {
    let params = FluidParams::default();
    let coarse = wall_pressure_gradient(&solved(&params, Mode::Axisym, 0.1).1).unwrap();
    let fine = wall_pressure_gradient(&solved(&params, Mode::Axisym, 0.05).1).unwrap();
    assert!(fine.l2_norm > 0.0);
    let (gc, gf) = (coarse.l2_norm_up_to(1.8), fine.l2_norm_up_to(1.8));
    assert!(gf > 0.0 && (gf - gc).abs() <= 0.2 * gf, "{gc} vs {gf}");
}

#[test]
#[ignore = "dq/dr is not square integrable at the outlet/wall corner; the full norm roughly doubles per halving of h"]
fn wall_pressure_gradient_full_norm_is_stable() {
    let params = FluidParams::default();
    let gc = wall_pressure_gradient(&solved(&params, Mode::Axisym, 0.1).1).unwrap().l2_norm;
    let gf = wall_pressure_gradient(&solved(&params, Mode::Axisym, 0.05).1).unwrap().l2_norm;
    assert!((gf - gc).abs() <= 0.2 * gf, "{gc} vs {gf}");
}

#[test]
fn planar_mode_is_unsupported() {
    let (_, adj) = solved(&FluidParams::default(), Mode::Planar, 0.2);
    assert!(matches!(psi_profile(&adj, 33), Err(Error::UnsupportedMode(_))));
    assert!(matches!(divergence_identity(&adj, 8), Err(Error::UnsupportedMode(_))));
}

#[test]
fn beta_problem_is_coercive() {
    let params = FluidParams::default();
    let rep = beta_coercivity(&params, 12).unwrap();
    assert!(rep.min_eigenvalue > 0.0);
    assert!(rep.zero_rhs_norm <= 1e-12);
    assert!(rep.boundary_sign_defect <= 1e-14);
    let stiff = beta_coercivity(&FluidParams { mu: 2.0, ..params }, 12).unwrap();
    assert!(stiff.min_eigenvalue >= rep.min_eigenvalue);
    for c in [0.0, 1.0] {
        let bad = FluidParams { c, ..params };
        assert!(matches!(beta_coercivity(&bad, 12), Err(Error::Precondition(_))));
    }
}
