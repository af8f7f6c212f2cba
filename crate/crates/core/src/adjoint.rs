//! Adjoint problem of the dissipated energy.
//!
//! The adjoint solves the transposed Newton system of the state at the
//! converged state, with right-hand side `l(w) = 4 mu int eps(u):eps(w)`
//! and homogeneous velocity constraints on the inlet, wall, and axis.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::discretization::assembly::{eval_pressure, eval_velocity, point_data};
use crate::discretization::element::strain;
use crate::discretization::saddle::{solve_sparse, SOLVE_TOLERANCE};
use crate::discretization::sparse::norm;
use crate::discretization::{apply_constraints, FunctionSpaces};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, MeridianMesh};
use crate::quadrature::gauss_legendre;
use crate::state::{Discretization, FlowField};

#[derive(Debug, Clone)]
pub struct AdjointField {
    pub disc: Arc<Discretization>,
    /// State velocity the adjoint was linearized about.
    pub state_velocity: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Relative algebraic residual of the transposed system.
    pub residual: f64,
}

impl AdjointField {
    pub fn spaces(&self) -> &FunctionSpaces {
        &self.disc.spaces
    }

    pub fn mesh(&self) -> &MeridianMesh {
        self.disc.spaces.mesh()
    }

    pub fn divergence_residual(&self) -> f64 {
        norm(&self.disc.divergence.matvec(&self.velocity))
    }

    pub fn velocity_at(&self, k: usize) -> [f64; 2] {
        [self.velocity[2 * k], self.velocity[2 * k + 1]]
    }
}

pub fn solve_adjoint(state: &FlowField) -> Result<AdjointField> {
    if !state.converged {
        log::warn!("adjoint requested for an unconverged state");
    }
    let disc = state.disc.clone();
    let nv = disc.n_velocity();
    let mut sys = disc.jacobian(&state.velocity);
    sys.matrix = sys.matrix.transpose();
    let au = disc.viscous.matvec(&state.velocity);
    for i in 0..nv {
        sys.rhs[i] = 2.0 * au[i];
    }
    let sys = apply_constraints(&sys, &disc.constraints.homogeneous());
    let x = solve_sparse(&sys.matrix, &sys.rhs, SOLVE_TOLERANCE)?;
    let ax = sys.matrix.matvec(&x);
    let diff: Vec<f64> = ax.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
    let residual = norm(&diff) / norm(&sys.rhs).max(f64::MIN_POSITIVE);
    Ok(AdjointField {
        state_velocity: state.velocity.clone(),
        velocity: x[..nv].to_vec(),
        pressure: x[nv..].to_vec(),
        residual,
        disc,
    })
}

/// Adjoint evaluated in the reduced variables `w = v_r / r`, `w3 = v_z`, `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSample {
    pub r: f64,
    pub z: f64,
    pub w: f64,
    pub w3: f64,
    pub q: f64,
}

/// Reduced fields at the mesh vertices. On the axis `w` is replaced by its
/// limit `d v_r / d r`, taken from an adjacent element.
pub fn reduced_fields(adj: &AdjointField) -> Result<Vec<ReducedSample>> {
    let spaces = adj.spaces();
    if !spaces.mode().is_axisym() {
        return Err(Error::UnsupportedMode("reduced fields need the axisymmetric mode"));
    }
    let mesh = spaces.mesh();
    let mut owner = vec![(usize::MAX, 0usize); mesh.nodes().len()];
    for (k, el) in mesh.elements().iter().enumerate() {
        for (i, &v) in el.iter().enumerate() {
            if owner[v].0 == usize::MAX {
                owner[v] = (k, i);
            }
        }
    }
    Ok(mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(n, &[r, z])| {
            let v = adj.velocity_at(n);
            let w = if r > 0.0 {
                v[0] / r
            } else {
                let (k, i) = owner[n];
                let mut lam = [0.0; 3];
                lam[i] = 1.0;
                let qp = point_data(spaces, k, lam);
                let (_, g) = eval_velocity(&adj.velocity, &spaces.element_p2(k), &qp);
                g[0][0]
            };
            ReducedSample { r, z, w, w3: v[1], q: adj.pressure[n] }
        })
        .collect())
}

/// `L2(S)` norm of `-q n + 2 mu eps(v) n + (u.n) v - 4 mu eps(u) n` on the
/// outlet, weighted by `kappa rho`.
pub fn adjoint_outlet_residual(adj: &AdjointField) -> f64 {
    outlet_residual_with_sign(adj, 1.0)
}

/// Same as [`adjoint_outlet_residual`] with the `eps(u)` term scaled by `sign`.
pub fn outlet_residual_with_sign(adj: &AdjointField, sign: f64) -> f64 {
    outlet_residual_profile(adj, sign).iter().map(|(_, sq)| sq).sum::<f64>().sqrt()
}

/// Squared outlet residual per outlet edge, paired with the edge midpoint radius.
pub fn outlet_residual_profile(adj: &AdjointField, sign: f64) -> Vec<(f64, f64)> {
    let spaces = adj.spaces();
    let mesh = spaces.mesh();
    let mode = mesh.mode();
    let mu = adj.disc.params.mu;
    let (gx, gw) = gauss_legendre(4);
    let mut owner = std::collections::HashMap::new();
    for (k, el) in mesh.elements().iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (el[i], el[(i + 1) % 3]);
            owner.insert((a.min(b), a.max(b)), k);
        }
    }
    let mut out = Vec::new();
    for e in mesh.edges_with_tag(BoundaryTag::Outlet) {
        let [a, b] = e.nodes;
        let k = owner[&(a.min(b), a.max(b))];
        let el = mesh.elements()[k];
        let pa = mesh.nodes()[a];
        let pb = mesh.nodes()[b];
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let n = mesh.outward_normal(a, b);
        let mut total = 0.0;
        for (s, w) in gx.iter().zip(&gw) {
            let mut lam = [0.0; 3];
            for (i, v) in el.iter().enumerate() {
                if *v == a {
                    lam[i] = 1.0 - s;
                } else if *v == b {
                    lam[i] = *s;
                }
            }
            let qp = point_data(spaces, k, lam);
            let p2 = spaces.element_p2(k);
            let (uv, ug) = eval_velocity(&adj.state_velocity, &p2, &qp);
            let (vv, vg) = eval_velocity(&adj.velocity, &p2, &qp);
            let (q, _) = eval_pressure(spaces, &adj.pressure, k, lam);
            let eu = strain(mode, qp.r, uv, ug);
            let ev = strain(mode, qp.r, vv, vg);
            let un = uv[0] * n[0] + uv[1] * n[1];
            let tn = |e: &[f64; 4]| [e[0] * n[0] + e[2] * n[1], e[2] * n[0] + e[1] * n[1]];
            let (evn, eun) = (tn(&ev), tn(&eu));
            let mut sq = 0.0;
            for c in 0..2 {
                let rc = -q * n[c] + 2.0 * mu * evn[c] + un * vv[c] - sign * 4.0 * mu * eun[c];
                sq += rc * rc;
            }
            total += sq * w * len * mode.weight(qp.r);
        }
        out.push((0.5 * (pa[0] + pb[0]), total));
    }
    out
}

/// Vertex table `r z v_r v_z q w w3`.
pub fn adjoint_table(adj: &AdjointField) -> String {
    let mut s = String::from("r,z,v_r,v_z,q,w,w3\n");
    let reduced = reduced_fields(adj).ok();
    for (k, [r, z]) in adj.mesh().nodes().iter().enumerate() {
        let v = adj.velocity_at(k);
        let w = reduced.as_ref().map_or(f64::NAN, |red| red[k].w);
        let _ = writeln!(s, "{r},{z},{},{},{},{w},{}", v[0], v[1], adj.pressure[k], v[1]);
    }
    s
}
