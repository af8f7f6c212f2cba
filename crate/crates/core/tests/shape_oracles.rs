use std::f64::consts::PI;

use pipeshape::adjoint::solve_adjoint;
use pipeshape::geometry::{make_cylinder_profile, mesh_profile, mesh_profile_graded, MeridianMesh, MeshGrading};
use pipeshape::optimizer::{descent_direction, directional_derivative};
use pipeshape::shape_derivative::{
    dj, dvol, fd_dj, hat_perturbation, make_volume_preserving, wall_gradient, NormalPerturbation, WallGradient,
};
use pipeshape::state::solve_navier_stokes;
use pipeshape::{FluidParams, Mode};
use proptest::prelude::*;

fn cylinder(mode: Mode, h: f64) -> MeridianMesh {
    mesh_profile(&make_cylinder_profile(&FluidParams::default(), mode).unwrap(), h).unwrap()
}

fn gradient(mesh: &MeridianMesh, params: &FluidParams) -> WallGradient {
    let st = solve_navier_stokes(mesh, params, 1e-10, 25).unwrap();
    let adj = solve_adjoint(&st).unwrap();
    wall_gradient(&st, &adj).unwrap()
}

#[test]
fn gradient_vanishes_without_flow() {
    let mesh = cylinder(Mode::Axisym, 0.2);
    let params = FluidParams { c: 0.0, ..FluidParams::default() };
    let wg = gradient(&mesh, &params);
    assert!(wg.values().iter().all(|g| *g == 0.0));
    let rows = fd_dj(&mesh, &params, &hat_perturbation(&mesh, 3, 8), &[1e-2, 1e-3]);
    assert!(rows.iter().all(|r| r.quotient.unwrap().abs() <= 1e-12));
}

#[test]
fn cylinder_gradient_is_not_constant() {
    let mesh = cylinder(Mode::Axisym, 0.1);
    let wg = gradient(&mesh, &FluidParams::default());
    assert!(wg.cross_check() <= 1e-4, "{}", wg.cross_check());
    assert!(wg.relative_variation() >= 0.05);
    assert_eq!(dj(&wg, &mesh, &NormalPerturbation::zero(&mesh)), 0.0);
}

#[test]
fn arc_length_mean_of_gradient() {
    let mesh = cylinder(Mode::Planar, 0.2);
    let wg = gradient(&mesh, &FluidParams::default());
    let shifted = wg.scaled(0.0).shifted(2.5);
    assert!((shifted.mean() - 2.5).abs() <= 1e-12);
}

#[test]
fn volume_derivative_oracles() {
    let mesh = mesh_profile_graded(&make_cylinder_profile(&FluidParams::default(), Mode::Axisym).unwrap(), 0.05, MeshGrading::UNIFORM)
        .unwrap();
    assert_eq!(dvol(&mesh, &NormalPerturbation::zero(&mesh)), 0.0);
    let odd = NormalPerturbation::from_arc_length(&mesh, |s, total| (2.0 * PI * s / total).sin());
    assert!(dvol(&mesh, &odd).abs() <= 1e-12);

    let delta = 0.01;
    let cutoff = 0.05;
    let plateau = NormalPerturbation::from_arc_length(&mesh, |s, total| {
        let w = cutoff * total;
        delta * (s / w).min((total - s) / w).min(1.0)
    });
    let (radius, length) = (1.0, 2.0);
    let expected = 2.0 * PI * radius * delta * (length - cutoff * length);
    assert!((dvol(&mesh, &plateau) - expected).abs() <= 0.01 * expected);
}

#[test]
fn volume_projection() {
    let mesh = cylinder(Mode::Axisym, 0.1);
    let constant = NormalPerturbation::from_arc_length(&mesh, |_, _| 1.0);
    let p = make_volume_preserving(&constant, &mesh).unwrap();
    assert!(dvol(&mesh, &p).abs() <= 1e-12);
    let again = make_volume_preserving(&p, &mesh).unwrap();
    for (a, b) in p.values.iter().zip(&again.values) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn descent_direction_oracles() {
    let mesh = cylinder(Mode::Axisym, 0.1);
    let wg = gradient(&mesh, &FluidParams::default());
    let zero = descent_direction(&mesh, &wg.scaled(0.0)).unwrap();
    assert!(zero.iter().all(|d| d[0] == 0.0 && d[1] == 0.0));
    let d = descent_direction(&mesh, &wg).unwrap();
    assert!(directional_derivative(&mesh, &wg, &d) <= 0.0);
    let d3 = descent_direction(&mesh, &wg.scaled(3.0)).unwrap();
    let scale = d.iter().map(|x| x[0].abs().max(x[1].abs())).fold(0.0, f64::max);
    for (a, b) in d.iter().zip(&d3) {
        assert!((b[0] - 3.0 * a[0]).abs() <= 1e-10 * scale && (b[1] - 3.0 * a[1]).abs() <= 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dj_and_dvol_are_linear(a in -10.0f64..10.0, i in 0usize..8, k in 0usize..8) {
        let mesh = cylinder(Mode::Planar, 0.2);
        let wg = gradient(&mesh, &FluidParams::default());
        let p = hat_perturbation(&mesh, i, 8).axpy(0.5, &hat_perturbation(&mesh, k, 8));
        let base = dj(&wg, &mesh, &p);
        prop_assert!((dj(&wg, &mesh, &p.scaled(a)) - a * base).abs() <= 1e-12 * (1.0 + base.abs() * a.abs()));
        let v = dvol(&mesh, &p);
        prop_assert!((dvol(&mesh, &p.scaled(a)) - a * v).abs() <= 1e-12 * (1.0 + v.abs() * a.abs()));
    }

    #[test]
    fn projection_removes_volume_change(weights in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let mesh = cylinder(Mode::Axisym, 0.2);
        let mut p = NormalPerturbation::zero(&mesh);
        for (i, w) in weights.iter().enumerate() {
            p = p.axpy(*w, &hat_perturbation(&mesh, i, 8));
        }
        let q = make_volume_preserving(&p, &mesh).unwrap();
        prop_assert!(dvol(&mesh, &q).abs() <= 1e-12);
        prop_assert!(q.has_interior_support());
    }
}
