use std::f64::consts::PI;

use pipeshape::geometry::{make_cylinder_profile, make_spline_profile, mesh_profile};
use pipeshape::state::{dissipated_energy, energy_from_matrix, solve_navier_stokes, solve_stokes, wall_strain_trace};
use pipeshape::{FluidParams, Mode};

fn poiseuille_errors(mode: Mode, h: f64) -> (f64, f64, usize, f64) {
    let params = FluidParams::default();
    let mesh = mesh_profile(&make_cylinder_profile(&params, mode).unwrap(), h).unwrap();
    let field = solve_navier_stokes(&mesh, &params, 1e-10, 25).unwrap();
    assert!(field.converged);
    let slope = if mode.is_axisym() { 4.0 } else { 2.0 };
    let mut eu: f64 = 0.0;
    for (k, [r, _]) in field.spaces().p2_coords().iter().enumerate() {
        let u = field.velocity_at(k);
        eu = eu.max(u[0].abs()).max((u[1] - params.c * (r * r - 1.0)).abs());
    }
    let mut ep: f64 = 0.0;
    for (k, [_, z]) in mesh.nodes().iter().enumerate() {
        ep = ep.max((field.pressure[k] - (slope * params.mu * params.c * (z - params.length) + params.p1)).abs());
    }
    (eu, ep, field.newton_steps(), dissipated_energy(&field))
}

#[test]
fn poiseuille_is_reproduced_exactly() {
    let (eu, ep, steps, j) = poiseuille_errors(Mode::Axisym, 0.1);
    println!("axisym: eu={eu:e} ep={ep:e} steps={steps} J={j}");
    assert!(eu <= 1e-9 && ep <= 1e-9 && steps <= 2);
    assert!((j - 4.0 * PI).abs() <= 1e-6 * 4.0 * PI);
    let (eu, ep, steps, j) = poiseuille_errors(Mode::Planar, 0.1);
    println!("planar: eu={eu:e} ep={ep:e} steps={steps} J={j}");
    assert!(eu <= 1e-9 && ep <= 1e-9 && steps <= 2);
    assert!((j - 16.0 / 3.0).abs() <= 1e-6 * 16.0 / 3.0);
}

#[test]
fn energy_matches_matrix_form_on_perturbed_profile() {
    let params = FluidParams::default();
    let p = make_spline_profile(&params, Mode::Axisym, &[1.0, -0.5, 1.0], 0.05).unwrap();
    let mesh = mesh_profile(&p, 0.1).unwrap();
    let field = solve_navier_stokes(&mesh, &params, 1e-10, 25).unwrap();
    assert!(field.converged);
    let (j, jm) = (dissipated_energy(&field), energy_from_matrix(&field));
    assert!((j - jm).abs() <= 1e-12 * j);
    assert!(field.divergence_residual() <= 1e-10);
    assert!(field.momentum_residual() <= 1e-9);
    let trace = wall_strain_trace(&field);
    let (lo, hi) = trace.iter().fold((f64::MAX, f64::MIN), |a, s| (a.0.min(s.value), a.1.max(s.value)));
    assert!(hi - lo >= 1e-3);
}

#[test]
fn cylinder_wall_strain_is_constant() {
    let params = FluidParams::default();
    let mesh = mesh_profile(&make_cylinder_profile(&params, Mode::Axisym).unwrap(), 0.1).unwrap();
    let field = solve_stokes(&mesh, &params).unwrap();
    for s in wall_strain_trace(&field) {
        assert!((s.value - 2.0).abs() <= 1e-8, "{s:?}");
    }
}
