//! Stationary Navier–Stokes state solves and the dissipated energy.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::discretization::assembly::{add, eval_velocity, point_data};
use crate::discretization::element::{strain, strain_dot};
use crate::discretization::sparse::{dot, norm};
use crate::discretization::{
    apply_constraints, assemble_convection, assemble_divergence, assemble_outlet_load, assemble_viscous,
    energy_integral, saddle::solve_sparse, velocity_constraints, Constraints, CsrMatrix, FunctionSpaces,
    SaddleSystem,
};
use crate::error::{Error, Result};
use crate::geometry::MeridianMesh;
use crate::params::FluidParams;

/// Default Newton tolerance on the free-dof residual.
pub const NEWTON_TOL: f64 = 1e-10;
/// Default Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 25;

/// Operators shared by the state and adjoint solves on one mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub spaces: FunctionSpaces,
    pub params: FluidParams,
    pub viscous: CsrMatrix,
    pub divergence: CsrMatrix,
    pub load: Vec<f64>,
    pub constraints: Constraints,
}

impl Discretization {
    pub fn new(mesh: &MeridianMesh, params: &FluidParams) -> Result<Self> {
        params.validate()?;
        let spaces = FunctionSpaces::new(mesh);
        Ok(Self {
            viscous: assemble_viscous(&spaces, params.mu),
            divergence: assemble_divergence(&spaces),
            load: assemble_outlet_load(&spaces, params),
            constraints: velocity_constraints(&spaces, params),
            params: *params,
            spaces,
        })
    }

    pub fn n_velocity(&self) -> usize {
        self.spaces.n_velocity()
    }

    /// Full nonlinear residual `[A u + C(u) - B^T p - f; -B u]`, including
    /// constrained rows.
    pub fn residual(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        let (conv, _) = assemble_convection(&self.spaces, u);
        let mut r = self.viscous.matvec(u);
        let bt = self.divergence.transpose_matvec(p);
        for i in 0..r.len() {
            r[i] += conv[i] - bt[i] - self.load[i];
        }
        r.extend(self.divergence.matvec(u).iter().map(|v| -v));
        r
    }

    /// Newton Jacobian of [`Self::residual`] at `u`, without constraints.
    pub fn jacobian(&self, u: &[f64]) -> SaddleSystem {
        let (_, jc) = assemble_convection(&self.spaces, u);
        SaddleSystem::from_blocks(&add(&self.viscous, &jc), &self.divergence, &[])
    }
}

/// Discrete velocity and pressure with solver diagnostics.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub disc: Arc<Discretization>,
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub converged: bool,
    /// Free-dof residual norm before each Newton update (last entry is final).
    pub newton_log: Vec<f64>,
}

impl FlowField {
    pub fn spaces(&self) -> &FunctionSpaces {
        &self.disc.spaces
    }

    pub fn mesh(&self) -> &MeridianMesh {
        self.disc.spaces.mesh()
    }

    pub fn params(&self) -> &FluidParams {
        &self.disc.params
    }

    pub fn newton_steps(&self) -> usize {
        self.newton_log.len().saturating_sub(1)
    }

    /// Norm of `B u`.
    pub fn divergence_residual(&self) -> f64 {
        norm(&self.disc.divergence.matvec(&self.velocity))
    }

    /// Free-dof momentum residual relative to the load norm.
    pub fn momentum_residual(&self) -> f64 {
        let mut r = self.disc.residual(&self.velocity, &self.pressure);
        self.disc.constraints.zero_constrained(&mut r);
        r.truncate(self.disc.n_velocity());
        norm(&r) / norm(&self.disc.load).max(1.0)
    }

    /// Velocity at a P2 node.
    pub fn velocity_at(&self, k: usize) -> [f64; 2] {
        [self.velocity[2 * k], self.velocity[2 * k + 1]]
    }
}

/// Stokes problem: the state system without convection.
pub fn solve_stokes(mesh: &MeridianMesh, params: &FluidParams) -> Result<FlowField> {
    let disc = Arc::new(Discretization::new(mesh, params)?);
    stokes_on(disc)
}

fn stokes_on(disc: Arc<Discretization>) -> Result<FlowField> {
    let sys = SaddleSystem::from_blocks(&disc.viscous, &disc.divergence, &disc.load);
    let sys = apply_constraints(&sys, &disc.constraints);
    let (velocity, pressure) = crate::discretization::solve_saddle(&sys)?;
    Ok(FlowField { disc, velocity, pressure, converged: true, newton_log: Vec::new() })
}

/// Newton iteration from the Stokes solution. A run that hits `max_iter`
/// returns the last iterate with `converged == false`.
pub fn solve_navier_stokes(mesh: &MeridianMesh, params: &FluidParams, tol: f64, max_iter: usize) -> Result<FlowField> {
    let disc = Arc::new(Discretization::new(mesh, params)?);
    newton_on(disc, tol, max_iter)
}

pub fn newton_on(disc: Arc<Discretization>, tol: f64, max_iter: usize) -> Result<FlowField> {
    let mut field = stokes_on(disc.clone())?;
    let nv = disc.n_velocity();
    let hom = disc.constraints.homogeneous();
    let threshold = tol * (1.0 + norm(&disc.load));
    field.converged = false;
    for it in 0..=max_iter {
        let mut r = disc.residual(&field.velocity, &field.pressure);
        hom.zero_constrained(&mut r);
        let rn = norm(&r);
        field.newton_log.push(rn);
        log::debug!("newton {it}: residual {rn:.3e}");
        if !rn.is_finite() {
            log::warn!("Newton diverged (non-finite residual)");
            break;
        }
        if rn <= threshold {
            field.converged = true;
            break;
        }
        if it == max_iter {
            log::warn!("Newton did not converge in {max_iter} iterations (residual {rn:.3e})");
            break;
        }
        let mut sys = disc.jacobian(&field.velocity);
        sys.rhs = r.iter().map(|v| -v).collect();
        let sys = apply_constraints(&sys, &hom);
        let delta = match solve_sparse(&sys.matrix, &sys.rhs, 1e-8) {
            Ok(d) => d,
            Err(Error::SingularSystem(msg)) => {
                log::warn!("Newton step failed: {msg}");
                break;
            }
            Err(e) => return Err(e),
        };
        for i in 0..nv {
            field.velocity[i] += delta[i];
        }
        for (i, p) in field.pressure.iter_mut().enumerate() {
            *p += delta[nv + i];
        }
    }
    Ok(field)
}

/// Dissipated energy `J = 2 mu int |eps(u)|^2 kappa rho`.
pub fn dissipated_energy(field: &FlowField) -> f64 {
    energy_integral(&field.disc.spaces, field.disc.params.mu, &field.velocity)
}

/// `u^T A u` with the assembled viscous matrix.
pub fn energy_from_matrix(field: &FlowField) -> f64 {
    dot(&field.velocity, &field.disc.viscous.matvec(&field.velocity))
}

/// One sample on the wall at an edge midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSample {
    pub s: f64,
    pub r: f64,
    pub z: f64,
    pub value: f64,
}

/// `|eps(u)|^2` at the wall edge midpoints, ordered by arc length.
pub fn wall_strain_trace(field: &FlowField) -> Vec<WallSample> {
    let spaces = field.spaces();
    let mode = spaces.mode();
    spaces
        .wall_edges()
        .iter()
        .map(|we| {
            let el = spaces.mesh().elements()[we.element];
            let lam = midpoint_lambda(&el, we.nodes);
            let qp = point_data(spaces, we.element, lam);
            let (val, g) = eval_velocity(&field.velocity, &spaces.element_p2(we.element), &qp);
            let e = strain(mode, qp.r, val, g);
            WallSample { s: we.s_mid, r: qp.r, z: qp.z, value: strain_dot(&e, &e) }
        })
        .collect()
}

/// Barycentric coordinates of the midpoint of edge `nodes` in element `el`.
pub fn midpoint_lambda(el: &[usize; 3], nodes: [usize; 2]) -> [f64; 3] {
    let mut lam = [0.0; 3];
    for (i, v) in el.iter().enumerate() {
        if nodes.contains(v) {
            lam[i] = 0.5;
        }
    }
    lam
}

/// Node table `r z u_r u_z p` over the mesh vertices.
pub fn field_table(field: &FlowField) -> String {
    let mut s = String::from("r,z,u_r,u_z,p\n");
    for (k, [r, z]) in field.mesh().nodes().iter().enumerate() {
        let u = field.velocity_at(k);
        let _ = writeln!(s, "{r},{z},{},{},{}", u[0], u[1], field.pressure[k]);
    }
    s
}

/// Scalar summary CSV of a state solve.
pub fn summary_csv(field: &FlowField) -> String {
    format!(
        "J,divergence_residual,momentum_residual,newton_steps,converged\n{},{:e},{:e},{},{}\n",
        dissipated_energy(field),
        field.divergence_residual(),
        field.momentum_residual(),
        field.newton_steps(),
        field.converged
    )
}
