use std::f64::consts::PI;

use pipeshape::discretization::assembly::{
    assemble_convection, assemble_divergence, assemble_outlet_load, assemble_viscous,
};
use pipeshape::discretization::saddle::{
    apply_constraints, apply_essential, solve_saddle, velocity_constraints, Constraints, SaddleSystem,
};
use pipeshape::discretization::sparse::norm;
use pipeshape::discretization::spaces::FunctionSpaces;
use pipeshape::geometry::{make_cylinder_profile, mesh_profile, BoundaryEdge, BoundaryTag, MeridianMesh};
use pipeshape::{Error, FluidParams, Mode};
use proptest::prelude::*;

fn cylinder(mode: Mode, h: f64) -> MeridianMesh {
    mesh_profile(&make_cylinder_profile(&FluidParams::default(), mode).unwrap(), h).unwrap()
}

fn poiseuille(spaces: &FunctionSpaces, c: f64) -> Vec<f64> {
    spaces.interpolate_velocity(|r, _| [0.0, c * (r * r - 1.0)])
}

#[test]
fn dof_counts() {
    let tri = MeridianMesh::from_parts(
        Mode::Planar,
        1.0,
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        Vec::new(),
    )
    .unwrap();
    let s = FunctionSpaces::new(&tri);
    assert_eq!((s.n_velocity(), s.n_pressure()), (12, 3));

    let coarse = cylinder(Mode::Axisym, 0.2);
    let sc = FunctionSpaces::new(&coarse);
    assert_eq!(sc.n_pressure(), coarse.nodes().len());
    let sf = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.1));
    assert!(sf.n_velocity() > sc.n_velocity() && sf.n_pressure() > sc.n_pressure());
}

#[test]
fn viscous_energy_of_poiseuille() {
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.1));
    let a = assemble_viscous(&s, 1.0);
    let u = poiseuille(&s, -1.0);
    assert!((a.bilinear(&u, &u) - 4.0 * PI).abs() <= 1e-10);
    assert_eq!(a.max_abs_asymmetry(), 0.0);

    let a10 = assemble_viscous(&s, 10.0);
    for ((i, j, v), (i2, j2, v2)) in a.triplets().zip(a10.triplets()) {
        assert_eq!((i, j), (i2, j2));
        assert!((v2 - 10.0 * v).abs() <= 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn rigid_translation_has_no_planar_energy() {
    let s = FunctionSpaces::new(&cylinder(Mode::Planar, 0.1));
    let a = assemble_viscous(&s, 1.0);
    let u = s.interpolate_velocity(|_, _| [0.3, -1.2]);
    assert!(a.bilinear(&u, &u).abs() <= 1e-12);
}

#[test]
fn divergence_of_analytic_fields() {
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.1));
    let b = assemble_divergence(&s);
    assert!(norm(&b.matvec(&poiseuille(&s, -1.0))) <= 1e-12);
    let u = s.interpolate_velocity(|r, z| [r, -2.0 * z]);
    assert!(norm(&b.matvec(&u)) <= 1e-12);
    let u = s.interpolate_velocity(|r, _| [r, 0.0]);
    assert!(norm(&b.matvec(&u)) > 1e-3);
}

#[test]
fn convection_of_poiseuille_and_zero() {
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.1));
    let (res, _) = assemble_convection(&s, &poiseuille(&s, -1.0));
    assert!(norm(&res) <= 1e-12);
    let (res, jac) = assemble_convection(&s, &vec![0.0; s.n_velocity()]);
    assert!(norm(&res) == 0.0);
    assert!(jac.triplets().all(|(_, _, v)| v == 0.0));
}

#[test]
fn convection_jacobian_matches_finite_differences() {
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.2));
    let u = s.interpolate_velocity(|r, z| [0.3 * r * z, -(1.0 - r * r) * (1.0 + 0.2 * z)]);
    let du = s.interpolate_velocity(|r, z| [r * (1.0 - r) * z.sin(), (r * 3.0).cos() * z]);
    let (r0, jac) = assemble_convection(&s, &u);
    let t = 1e-6;
    let shifted: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
    let (r1, _) = assemble_convection(&s, &shifted);
    let jd = jac.matvec(&du);
    let err: Vec<f64> = r1.iter().zip(&r0).zip(&jd).map(|((a, b), j)| (a - b) / t - j).collect();
    assert!(norm(&err) <= 1e-4 * norm(&jd), "{} vs {}", norm(&err), norm(&jd));
}

#[test]
fn outlet_load_against_quadrature() {
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.1));
    let axial = |f: &[f64]| (0..s.n_p2()).map(|k| f[2 * k + 1]).sum::<f64>();
    let f0 = assemble_outlet_load(&s, &FluidParams::default());
    assert!(axial(&f0).abs() <= 1e-14);

    let params = FluidParams { p1: 2.0, ..FluidParams::default() };
    let f = assemble_outlet_load(&s, &params);
    assert!((axial(&f) + 2.0 * PI).abs() <= 1e-12);

    // w = (r, 0): 2 mu c int_0^1 r * r * 2 pi r dr by 1D Gauss
    let (nodes, weights) = ([-(3.0f64 / 5.0).sqrt(), 0.0, (3.0f64 / 5.0).sqrt()], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
    let oracle: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| {
            let r = 0.5 * (x + 1.0);
            0.5 * w * 2.0 * params.mu * params.c * r * r * 2.0 * PI * r
        })
        .sum();
    let radial: f64 = (0..s.n_p2()).map(|k| f[2 * k] * s.p2_coords()[k][0]).sum();
    assert!((radial - oracle).abs() <= 1e-12);
}

#[test]
fn essential_conditions() {
    let params = FluidParams::default();
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.2));
    let cons = velocity_constraints(&s, &params);
    let coords = s.p2_coords();
    let corner = (0..s.n_p2()).find(|&k| coords[k] == [1.0, 0.0]).unwrap();
    assert_eq!((cons.get(2 * corner), cons.get(2 * corner + 1)), (Some(0.0), Some(0.0)));
    for k in s.p2_nodes_with_tag(BoundaryTag::Axis) {
        let tags = s.p2_tags(k);
        if tags.len() == 1 {
            assert!(cons.is_constrained(2 * k) && !cons.is_constrained(2 * k + 1));
        }
    }

    let disc_a = assemble_viscous(&s, params.mu);
    let disc_b = assemble_divergence(&s);
    let sys = SaddleSystem::from_blocks(&disc_a, &disc_b, &assemble_outlet_load(&s, &params));
    let con = apply_essential(&sys, &s, &params);
    for i in 0..con.n_total() {
        if cons.is_constrained(i) {
            let row: Vec<(usize, f64)> = con.matrix.row(i).filter(|&(_, v)| v != 0.0).collect();
            assert_eq!(row, vec![(i, 1.0)]);
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let params = FluidParams::default();
    let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.2));
    let sys = SaddleSystem::from_blocks(&assemble_viscous(&s, 1.0), &assemble_divergence(&s), &[]);
    let sys = apply_constraints(&sys, &velocity_constraints(&s, &params).homogeneous());
    let (u, p) = solve_saddle(&sys).unwrap();
    assert!(norm(&u) == 0.0 && norm(&p) == 0.0);
}

#[test]
fn untagged_wall_is_singular() {
    let mesh = cylinder(Mode::Axisym, 0.2);
    let edges: Vec<BoundaryEdge> =
        mesh.boundary_edges().iter().filter(|e| e.tag != BoundaryTag::Wall).copied().collect();
    let bare =
        MeridianMesh::from_parts(mesh.mode(), mesh.length(), mesh.nodes().to_vec(), mesh.elements().to_vec(), edges)
            .unwrap();
    let s = FunctionSpaces::new(&bare);
    let sys = SaddleSystem::from_blocks(&assemble_viscous(&s, 1.0), &assemble_divergence(&s), &[]);
    let sys = apply_constraints(&sys, &Constraints::none(s.n_total()));
    let mut sys = sys;
    sys.rhs[1] = 1.0;
    assert!(matches!(solve_saddle(&sys), Err(Error::SingularSystem(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn viscous_form_is_quadratic_in_poiseuille_coefficient(c in -5.0f64..5.0, mu in 0.1f64..10.0) {
        let s = FunctionSpaces::new(&cylinder(Mode::Planar, 0.2));
        let a = assemble_viscous(&s, mu);
        let u = poiseuille(&s, c);
        let expected = 16.0 / 3.0 * mu * c * c;
        prop_assert!((a.bilinear(&u, &u) - expected).abs() <= 1e-10 * (1.0 + expected));
    }

    #[test]
    fn poiseuille_family_is_discretely_solenoidal(c in -5.0f64..5.0, k in 0.0f64..3.0) {
        let s = FunctionSpaces::new(&cylinder(Mode::Axisym, 0.2));
        let b = assemble_divergence(&s);
        let u = s.interpolate_velocity(|r, z| [k * r, c * (r * r - 1.0) - 2.0 * k * z]);
        prop_assert!(norm(&b.matvec(&u)) <= 1e-11 * (1.0 + c.abs() + k));
    }
}
