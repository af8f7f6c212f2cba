use pipeshape::adjoint::{adjoint_outlet_residual, outlet_residual_profile, outlet_residual_with_sign, reduced_fields, solve_adjoint, AdjointField};
use pipeshape::discretization::sparse::norm;
use pipeshape::geometry::{make_cylinder_profile, mesh_profile};
use pipeshape::state::{solve_navier_stokes, solve_stokes, wall_strain_trace, FlowField};
use pipeshape::{FluidParams, Mode};

fn state(params: &FluidParams, h: f64) -> FlowField {
    let mesh = mesh_profile(&make_cylinder_profile(params, Mode::Axisym).unwrap(), h).unwrap();
    solve_navier_stokes(&mesh, params, 1e-10, 25).unwrap()
}

fn adjoint(params: &FluidParams, h: f64) -> AdjointField {
    solve_adjoint(&state(params, h)).unwrap()
}

#[test]
fn zero_coefficient_gives_zero_flow_and_adjoint() {
    let params = FluidParams { c: 0.0, ..FluidParams::default() };
    let field = state(&params, 0.2);
    assert!(norm(&field.velocity) == 0.0 && norm(&field.pressure) == 0.0);
    let adj = solve_adjoint(&field).unwrap();
    assert!(norm(&adj.velocity) <= 1e-14 && norm(&adj.pressure) <= 1e-14);
    assert!(adjoint_outlet_residual(&adj) <= 1e-11);
}

#[test]
fn absurd_parameters_report_unconverged() {
    let params = FluidParams { mu: 1e-6, c: -1e3, ..FluidParams::default() };
    let mesh = mesh_profile(&make_cylinder_profile(&FluidParams::default(), Mode::Axisym).unwrap(), 0.2).unwrap();
    let mut bent = mesh.clone();
    if let Ok(moved) = pipeshape::geometry::deform_mesh(
        &mesh,
        &mesh.nodes().iter().map(|&[r, z]| [0.1 * r * (std::f64::consts::PI * z / 2.0).sin(), 0.0]).collect::<Vec<_>>(),
    ) {
        bent = moved;
    }
    match solve_navier_stokes(&bent, &params, 1e-10, 25) {
        Ok(field) => assert!(!field.converged),
        Err(e) => panic!("expected an unconverged field, got {e}"),
    }
}

#[test]
fn wall_strain_is_quadratic_in_coefficient() {
    let mesh = mesh_profile(&make_cylinder_profile(&FluidParams::default(), Mode::Axisym).unwrap(), 0.2).unwrap();
    let one = wall_strain_trace(&solve_stokes(&mesh, &FluidParams::default()).unwrap());
    let two = wall_strain_trace(&solve_stokes(&mesh, &FluidParams { c: -2.0, ..FluidParams::default() }).unwrap());
    for (a, b) in one.iter().zip(&two) {
        assert!((b.value - 4.0 * a.value).abs() <= 1e-8 * b.value.abs());
    }
}

#[test]
fn adjoint_residuals_and_wall_values() {
    let adj = adjoint(&FluidParams::default(), 0.1);
    assert!(adj.residual <= 1e-10, "{}", adj.residual);
    assert!(adj.divergence_residual() <= 1e-10);
    let samples = reduced_fields(&adj).unwrap();
    let mid = samples.iter().filter(|s| (s.r - 0.5).abs() < 0.06).map(|s| s.w.abs()).fold(0.0, f64::max);
    for s in &samples {
        if (s.r - 1.0).abs() <= 1e-12 {
            assert!(s.w.abs() <= 1e-12);
        }
        if s.r == 0.0 {
            assert!(s.w.is_finite() && s.w.abs() <= 10.0 * mid.max(1e-12), "{s:?} mid {mid}");
        }
    }
    for (n, s) in samples.iter().enumerate() {
        assert_eq!(s.q, adj.pressure[n]);
    }
}

fn interior_outlet_residual(adj: &AdjointField, sign: f64) -> f64 {
    outlet_residual_profile(adj, sign).iter().filter(|(r, _)| *r <= 0.9).map(|(_, sq)| sq).sum::<f64>().sqrt()
}

#[test]
#[ignore = "outlet/wall corner singularity keeps the full L2 residual near 1.6 under refinement"]
fn adjoint_outlet_residual_refines() {
    let params = FluidParams::default();
    let (rc, rf) = (adjoint_outlet_residual(&adjoint(&params, 0.1)), adjoint_outlet_residual(&adjoint(&params, 0.05)));
    assert!(rf / rc <= 0.7, "{rc} -> {rf}");
}

#[test]
fn adjoint_outlet_residual_refines_away_from_corner_and_detects_sign_flip() {
    let params = FluidParams::default();
    let coarse = adjoint(&params, 0.1);
    let fine = adjoint(&params, 0.05);
    let (rc, rf) = (interior_outlet_residual(&coarse, 1.0), interior_outlet_residual(&fine, 1.0));
    assert!(rf / rc <= 0.7, "{rc} -> {rf}");
    let flipped = interior_outlet_residual(&fine, -1.0);
    assert!(flipped >= 100.0 * rf, "{flipped} vs {rf}");
    assert!(outlet_residual_with_sign(&fine, -1.0) > adjoint_outlet_residual(&fine));
}

#[test]
fn adjoint_solves_the_transposed_linearization() {
    let field = state(&FluidParams::default(), 0.1);
    let adj = solve_adjoint(&field).unwrap();
    let x: Vec<f64> = adj.velocity.iter().chain(&adj.pressure).copied().collect();
    let at = field.disc.jacobian(&field.velocity).matrix.transpose_matvec(&x);
    let rhs: Vec<f64> = field.disc.viscous.matvec(&field.velocity).iter().map(|v| 2.0 * v).collect();
    let cons = &field.disc.constraints;
    let mut err = 0.0f64;
    for i in 0..field.disc.n_velocity() {
        if !cons.is_constrained(i) {
            err = err.max((at[i] - rhs[i]).abs());
        }
    }
    assert!(err <= 1e-10 * norm(&rhs), "{err}");
}
