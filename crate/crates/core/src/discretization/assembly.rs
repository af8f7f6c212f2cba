//! Weighted meridian-plane finite-element operators.
//!
//! Every volume integral carries the weight `kappa * rho(r)`: `2 pi r` in
//! axisymmetric mode and `2` in planar mode.

use super::element::{basis_strain, p2_gradients, p2_values, strain_dot, strain_trace, ElementGeometry};
use super::sparse::{CsrMatrix, TripletBuilder};
use super::spaces::FunctionSpaces;
use crate::geometry::BoundaryTag;
use crate::params::{FluidParams, Mode};
use crate::quadrature::{gauss_legendre, TriangleRule};

/// Basis data at one quadrature point of one element.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub lam: [f64; 3],
    pub r: f64,
    pub z: f64,
    /// `area * w * kappa * rho(r)`.
    pub weight: f64,
    pub n: [f64; 6],
    pub dn: [[f64; 2]; 6],
}

pub fn quad_points(mode: Mode, geo: &ElementGeometry, rule: &TriangleRule) -> Vec<QuadPoint> {
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(lam, w)| {
            let [r, z] = geo.point(lam);
            QuadPoint {
                lam: *lam,
                r,
                z,
                weight: geo.area * w * mode.weight(r),
                n: p2_values(lam),
                dn: p2_gradients(geo, lam),
            }
        })
        .collect()
}

/// Velocity value and gradient `grad[i][j] = d u_i / d x_j` at a quadrature point.
pub fn eval_velocity(u: &[f64], dofs: &[usize; 6], qp: &QuadPoint) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for a in 0..6 {
        for c in 0..2 {
            let coef = u[2 * dofs[a] + c];
            val[c] += coef * qp.n[a];
            grad[c][0] += coef * qp.dn[a][0];
            grad[c][1] += coef * qp.dn[a][1];
        }
    }
    (val, grad)
}

/// Strains of the 12 local velocity basis fields, index `2 * a + c`.
fn local_strains(mode: Mode, qp: &QuadPoint) -> [[f64; 4]; 12] {
    let mut e = [[0.0; 4]; 12];
    for a in 0..6 {
        for c in 0..2 {
            e[2 * a + c] = basis_strain(mode, qp.r, qp.n[a], qp.dn[a], c);
        }
    }
    e
}

/// `int 2 mu eps(u):eps(w) kappa rho`, so that `u^T A u = J(u)`.
pub fn assemble_viscous(spaces: &FunctionSpaces, mu: f64) -> CsrMatrix {
    let mode = spaces.mode();
    let rule = TriangleRule::assembly();
    let ne = spaces.mesh().elements().len();
    let mut b = TripletBuilder::with_capacity(spaces.n_velocity(), spaces.n_velocity(), ne * 144);
    for k in 0..ne {
        let geo = spaces.element_geometry(k);
        let p2 = spaces.element_p2(k);
        let mut local = [[0.0; 12]; 12];
        for qp in quad_points(mode, &geo, &rule) {
            let e = local_strains(mode, &qp);
            for i in 0..12 {
                for j in 0..12 {
                    local[i][j] += 2.0 * mu * strain_dot(&e[i], &e[j]) * qp.weight;
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                b.push(2 * p2[i / 2] + i % 2, 2 * p2[j / 2] + j % 2, local[i][j]);
            }
        }
    }
    b.build()
}

/// `B[p][w] = int psi_p div(w) kappa rho` (pressure rows, velocity columns).
pub fn assemble_divergence(spaces: &FunctionSpaces) -> CsrMatrix {
    let mode = spaces.mode();
    let rule = TriangleRule::assembly();
    let ne = spaces.mesh().elements().len();
    let mut b = TripletBuilder::with_capacity(spaces.n_pressure(), spaces.n_velocity(), ne * 36);
    for k in 0..ne {
        let geo = spaces.element_geometry(k);
        let p2 = spaces.element_p2(k);
        let mut local = [[0.0; 12]; 3];
        for qp in quad_points(mode, &geo, &rule) {
            let e = local_strains(mode, &qp);
            for (p, row) in local.iter_mut().enumerate() {
                for j in 0..12 {
                    row[j] += qp.lam[p] * strain_trace(&e[j]) * qp.weight;
                }
            }
        }
        for (p, row) in local.iter().enumerate() {
            for j in 0..12 {
                b.push(p2[p], 2 * p2[j / 2] + j % 2, row[j]);
            }
        }
    }
    b.build()
}

/// Convective residual `int ((grad u) u) . w kappa rho` and its Jacobian
/// `int ((grad u) du + (grad du) u) . w kappa rho`.
pub fn assemble_convection(spaces: &FunctionSpaces, u: &[f64]) -> (Vec<f64>, CsrMatrix) {
    let mode = spaces.mode();
    let rule = TriangleRule::assembly();
    let ne = spaces.mesh().elements().len();
    let nv = spaces.n_velocity();
    let mut res = vec![0.0; nv];
    let mut b = TripletBuilder::with_capacity(nv, nv, ne * 144);
    for k in 0..ne {
        let geo = spaces.element_geometry(k);
        let p2 = spaces.element_p2(k);
        let mut local = [[0.0; 12]; 12];
        let mut local_res = [0.0; 12];
        for qp in quad_points(mode, &geo, &rule) {
            let (val, g) = eval_velocity(u, &p2, &qp);
            let conv = [g[0][0] * val[0] + g[0][1] * val[1], g[1][0] * val[0] + g[1][1] * val[1]];
            for a in 0..6 {
                for i in 0..2 {
                    local_res[2 * a + i] += conv[i] * qp.n[a] * qp.weight;
                }
            }
            for bb in 0..6 {
                let adv = val[0] * qp.dn[bb][0] + val[1] * qp.dn[bb][1];
                for j in 0..2 {
                    for a in 0..6 {
                        for i in 0..2 {
                            let mut v = g[i][j] * qp.n[bb];
                            if i == j {
                                v += adv;
                            }
                            local[2 * a + i][2 * bb + j] += qp.n[a] * v * qp.weight;
                        }
                    }
                }
            }
        }
        for i in 0..12 {
            res[2 * p2[i / 2] + i % 2] += local_res[i];
            for j in 0..12 {
                b.push(2 * p2[i / 2] + i % 2, 2 * p2[j / 2] + j % 2, local[i][j]);
            }
        }
    }
    (res, b.build())
}

/// Outlet traction load `int_S h . w kappa rho ds`.
pub fn assemble_outlet_load(spaces: &FunctionSpaces, params: &FluidParams) -> Vec<f64> {
    let mut f = vec![0.0; spaces.n_velocity()];
    boundary_load(spaces, BoundaryTag::Outlet, |r, _| params.outlet_traction(r), &mut f);
    f
}

/// Adds `int_{tag} h . w kappa rho ds` over boundary edges carrying `tag`.
pub fn boundary_load(
    spaces: &FunctionSpaces,
    tag: BoundaryTag,
    h: impl Fn(f64, f64) -> [f64; 2],
    f: &mut [f64],
) {
    let mesh = spaces.mesh();
    let mode = mesh.mode();
    let (gx, gw) = gauss_legendre(5);
    for e in mesh.edges_with_tag(tag) {
        let [a, b] = e.nodes;
        let m = spaces.edge_midpoint(a, b).expect("boundary edge belongs to an element");
        let pa = mesh.nodes()[a];
        let pb = mesh.nodes()[b];
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for (s, w) in gx.iter().zip(&gw) {
            let r = pa[0] + s * (pb[0] - pa[0]);
            let z = pa[1] + s * (pb[1] - pa[1]);
            let n = [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)];
            let hv = h(r, z);
            let wt = w * len * mode.weight(r);
            for (node, phi) in [a, b, m].iter().zip(n) {
                f[2 * node] += hv[0] * phi * wt;
                f[2 * node + 1] += hv[1] * phi * wt;
            }
        }
    }
}

/// Scalar P1 stiffness `int grad phi . grad psi kappa rho` and mass
/// `int phi psi kappa rho`.
pub fn assemble_p1_stiffness_mass(spaces: &FunctionSpaces) -> (CsrMatrix, CsrMatrix) {
    let mode = spaces.mode();
    let rule = TriangleRule::assembly();
    let mesh = spaces.mesh();
    let n = mesh.nodes().len();
    let mut ks = TripletBuilder::with_capacity(n, n, mesh.elements().len() * 9);
    let mut ms = TripletBuilder::with_capacity(n, n, mesh.elements().len() * 9);
    for (k, el) in mesh.elements().iter().enumerate() {
        let geo = spaces.element_geometry(k);
        let g = geo.grad_lambda;
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let [r, _] = geo.point(lam);
            let wt = geo.area * w * mode.weight(r);
            for i in 0..3 {
                for j in 0..3 {
                    ks.push(el[i], el[j], (g[i][0] * g[j][0] + g[i][1] * g[j][1]) * wt);
                    ms.push(el[i], el[j], lam[i] * lam[j] * wt);
                }
            }
        }
    }
    (ks.build(), ms.build())
}

/// `int 2 mu |eps(u)|^2 kappa rho` evaluated by quadrature.
pub fn energy_integral(spaces: &FunctionSpaces, mu: f64, u: &[f64]) -> f64 {
    let mode = spaces.mode();
    let rule = TriangleRule::assembly();
    let mut total = 0.0;
    for k in 0..spaces.mesh().elements().len() {
        let geo = spaces.element_geometry(k);
        let p2 = spaces.element_p2(k);
        for qp in quad_points(mode, &geo, &rule) {
            let (val, g) = eval_velocity(u, &p2, &qp);
            let e = super::element::strain(mode, qp.r, val, g);
            total += 2.0 * mu * strain_dot(&e, &e) * qp.weight;
        }
    }
    total
}

/// Basis data at an arbitrary barycentric point of element `k` (zero weight).
pub fn point_data(spaces: &FunctionSpaces, k: usize, lam: [f64; 3]) -> QuadPoint {
    let geo = spaces.element_geometry(k);
    let [r, z] = geo.point(&lam);
    QuadPoint { lam, r, z, weight: 0.0, n: p2_values(&lam), dn: p2_gradients(&geo, &lam) }
}

/// Pressure value and gradient at a point of element `k`.
pub fn eval_pressure(spaces: &FunctionSpaces, p: &[f64], k: usize, lam: [f64; 3]) -> (f64, [f64; 2]) {
    let el = spaces.mesh().elements()[k];
    let g = spaces.element_geometry(k).grad_lambda;
    let mut val = 0.0;
    let mut grad = [0.0; 2];
    for i in 0..3 {
        val += p[el[i]] * lam[i];
        grad[0] += p[el[i]] * g[i][0];
        grad[1] += p[el[i]] * g[i][1];
    }
    (val, grad)
}

/// Sum of two matrices of equal shape.
pub fn add(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    let mut t = TripletBuilder::with_capacity(a.nrows(), a.ncols(), a.nnz() + b.nnz());
    for (i, j, v) in a.triplets().chain(b.triplets()) {
        t.push(i, j, v);
    }
    t.build()
}
