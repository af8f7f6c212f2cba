//! Boundary shape gradient of the dissipated energy, volume derivative,
//! wall perturbations, and the finite-difference oracle.

use std::f64::consts::PI;

use crate::adjoint::AdjointField;
use crate::discretization::assembly::{eval_velocity, point_data};
use crate::discretization::element::{strain, strain_dot};
use crate::discretization::extension::solve_vector_p1;
use crate::error::{Error, Result};
use crate::geometry::{deform_mesh, BoundaryTag, MeridianMesh};
use crate::params::FluidParams;
use crate::state::{dissipated_energy, solve_navier_stokes, FlowField, NEWTON_MAX_ITER, NEWTON_TOL};

/// Gauss points per wall edge used for boundary integrals of `g`.
const EDGE_GAUSS: usize = 3;

/// Gradient density at one wall edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WallGradientSample {
    /// Arc length of the edge midpoint.
    pub s: f64,
    pub r: f64,
    pub z: f64,
    pub normal: [f64; 2],
    /// `kappa * rho` at the midpoint.
    pub weight: f64,
    /// `eps(u):eps(v)` at the midpoint.
    pub eu_ev: f64,
    /// `(eps(v) n) . (grad u n)` at the midpoint.
    pub eu_ev_normal_form: f64,
    /// `|eps(u)|^2` at the midpoint.
    pub eu_sq: f64,
    /// `2 mu (eps(u):eps(v) - |eps(u)|^2)` at the midpoint.
    pub g: f64,
    /// `d v_z / d n` at the midpoint.
    pub dvz_dn: f64,
    /// Density `g` at the edge Gauss points, paired with the local edge
    /// coordinate `t` in `[0, 1]` and the quadrature weight.
    pub gauss: Vec<(f64, f64, f64)>,
}

/// Shape gradient density on the wall, ordered by arc length from the inlet.
#[derive(Debug, Clone)]
pub struct WallGradient {
    pub mu: f64,
    pub samples: Vec<WallGradientSample>,
    /// Wall vertex ids (chain order) bounding each sample's edge.
    pub edges: Vec<[usize; 2]>,
}

impl WallGradient {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.g).collect()
    }

    /// `(max g - min g) / |mean g|` with the mean taken in arc length.
    pub fn relative_variation(&self) -> f64 {
        let (lo, hi) = self.samples.iter().fold((f64::MAX, f64::MIN), |a, s| (a.0.min(s.g), a.1.max(s.g)));
        let mean = self.mean();
        if mean == 0.0 {
            return 0.0;
        }
        (hi - lo) / mean.abs()
    }

    /// Arc-length weighted mean of the midpoint values.
    pub fn mean(&self) -> f64 {
        let mut lengths = Vec::with_capacity(self.samples.len());
        for (i, smp) in self.samples.iter().enumerate() {
            let lo = if i == 0 { 0.0 } else { 0.5 * (self.samples[i - 1].s + smp.s) };
            let hi = match self.samples.get(i + 1) {
                Some(next) => 0.5 * (smp.s + next.s),
                None => 2.0 * smp.s - lo,
            };
            lengths.push(hi - lo);
        }
        let total: f64 = lengths.iter().sum();
        if !(total > 0.0) {
            return 0.0;
        }
        self.samples.iter().zip(&lengths).map(|(s, l)| s.g * l).sum::<f64>() / total
    }

    /// Largest relative disagreement between the two evaluations of `eps(u):eps(v)`.
    pub fn cross_check(&self) -> f64 {
        let scale = self.samples.iter().map(|s| s.eu_ev.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.samples.iter().map(|s| (s.eu_ev - s.eu_ev_normal_form).abs()).fold(0.0, f64::max) / scale
    }

    /// Adds a constant to the density (Lagrangian terms of the optimizer).
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.g += shift;
            for gp in &mut s.gauss {
                gp.1 += shift;
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.g *= a;
            for gp in &mut s.gauss {
                gp.1 *= a;
            }
        }
        out
    }
}

pub fn wall_gradient(state: &FlowField, adj: &AdjointField) -> Result<WallGradient> {
    if !std::sync::Arc::ptr_eq(&state.disc, &adj.disc) && state.mesh() != adj.mesh() {
        return Err(Error::MeshMismatch);
    }
    let spaces = state.spaces();
    let mode = spaces.mode();
    let mu = state.params().mu;
    let (gx, gw) = crate::quadrature::gauss_legendre(EDGE_GAUSS);
    let mut samples = Vec::new();
    let mut edges = Vec::new();
    for we in spaces.wall_edges() {
        let el = spaces.mesh().elements()[we.element];
        let p2 = spaces.element_p2(we.element);
        let n = we.normal;
        let at = |t: f64| {
            let mut lam = [0.0; 3];
            for (i, v) in el.iter().enumerate() {
                if *v == we.nodes[0] {
                    lam[i] = 1.0 - t;
                } else if *v == we.nodes[1] {
                    lam[i] = t;
                }
            }
            let qp = point_data(spaces, we.element, lam);
            let (uv, ug) = eval_velocity(&state.velocity, &p2, &qp);
            let (vv, vg) = eval_velocity(&adj.velocity, &p2, &qp);
            let eu = strain(mode, qp.r, uv, ug);
            let ev = strain(mode, qp.r, vv, vg);
            (qp, ug, vg, eu, ev)
        };
        let (qp, ug, vg, eu, ev) = at(0.5);
        let eu_ev = strain_dot(&eu, &ev);
        let eu_sq = strain_dot(&eu, &eu);
        let evn = [ev[0] * n[0] + ev[2] * n[1], ev[2] * n[0] + ev[1] * n[1]];
        let dudn = [ug[0][0] * n[0] + ug[0][1] * n[1], ug[1][0] * n[0] + ug[1][1] * n[1]];
        let gauss = gx
            .iter()
            .zip(&gw)
            .map(|(t, w)| {
                let (_, _, _, eu, ev) = at(*t);
                (*t, 2.0 * mu * (strain_dot(&eu, &ev) - strain_dot(&eu, &eu)), *w)
            })
            .collect();
        samples.push(WallGradientSample {
            s: we.s_mid,
            r: qp.r,
            z: qp.z,
            normal: n,
            weight: mode.weight(qp.r),
            eu_ev,
            eu_ev_normal_form: evn[0] * dudn[0] + evn[1] * dudn[1],
            eu_sq,
            g: 2.0 * mu * (eu_ev - eu_sq),
            dvz_dn: vg[1][0] * n[0] + vg[1][1] * n[1],
            gauss,
        });
        edges.push(we.nodes);
    }
    Ok(WallGradient { mu, samples, edges })
}

/// Normal speed `V.n` on the wall, piecewise linear in arc length, stored
/// at the wall vertices in chain order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPerturbation {
    pub values: Vec<f64>,
}

impl NormalPerturbation {
    pub fn zero(mesh: &MeridianMesh) -> Self {
        Self { values: vec![0.0; mesh.wall_chain().len()] }
    }

    /// Samples `f(s, S)` at the wall vertices, `S` being the total wall length.
    pub fn from_arc_length(mesh: &MeridianMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let s = mesh.wall_arc_lengths();
        let total = *s.last().unwrap();
        Self { values: s.iter().map(|&si| f(si, total)).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect() }
    }

    /// True when the end values (inlet and outlet corners) vanish.
    pub fn has_interior_support(&self) -> bool {
        self.values.first().copied() == Some(0.0) && self.values.last().copied() == Some(0.0)
    }
}

/// Hat of half-width `S / (count + 1)` centred at `S (i + 1) / (count + 1)`.
pub fn hat_perturbation(mesh: &MeridianMesh, i: usize, count: usize) -> NormalPerturbation {
    NormalPerturbation::from_arc_length(mesh, |s, total| {
        let h = total / (count + 1) as f64;
        let c = h * (i + 1) as f64;
        (1.0 - (s - c).abs() / h).max(0.0)
    })
}

/// Reference bump `sin(pi s / S)` used for volume projection.
pub fn reference_bump(mesh: &MeridianMesh) -> NormalPerturbation {
    NormalPerturbation::from_arc_length(mesh, |s, total| {
        if s <= 0.0 || s >= total {
            0.0
        } else {
            (PI * s / total).sin()
        }
    })
}

/// Number of members of the non-optimality perturbation basis.
pub const BASIS_SIZE: usize = 16;

/// Arc-length hats, optionally made volume preserving.
pub fn perturbation_basis(mesh: &MeridianMesh, volume_preserving: bool) -> Result<Vec<NormalPerturbation>> {
    (0..BASIS_SIZE)
        .map(|i| {
            let hat = hat_perturbation(mesh, i, BASIS_SIZE);
            if volume_preserving {
                make_volume_preserving(&hat, mesh)
            } else {
                Ok(hat)
            }
        })
        .collect()
}

/// `int_edge V.n kappa rho ds` for every wall edge (exact for linear data).
fn edge_moments(mesh: &MeridianMesh, pert: &NormalPerturbation) -> Vec<f64> {
    let chain = mesh.wall_chain();
    let mode = mesh.mode();
    let nodes = mesh.nodes();
    (0..chain.len() - 1)
        .map(|i| {
            let (pa, pb) = (nodes[chain[i]], nodes[chain[i + 1]]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let (va, vb) = (pert.values[i], pert.values[i + 1]);
            let (ra, rb) = (mode.weight(pa[0]), mode.weight(pb[0]));
            len * (2.0 * va * ra + va * rb + vb * ra + 2.0 * vb * rb) / 6.0
        })
        .collect()
}

/// `dJ = int_wall g (V.n) kappa rho ds`.
pub fn dj(wg: &WallGradient, mesh: &MeridianMesh, pert: &NormalPerturbation) -> f64 {
    let chain = mesh.wall_chain();
    let nodes = mesh.nodes();
    let mode = mesh.mode();
    wg.samples
        .iter()
        .enumerate()
        .map(|(i, smp)| {
            let (pa, pb) = (nodes[chain[i]], nodes[chain[i + 1]]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            smp.gauss
                .iter()
                .map(|(t, g, w)| {
                    let v = (1.0 - t) * pert.values[i] + t * pert.values[i + 1];
                    let r = (1.0 - t) * pa[0] + t * pb[0];
                    g * v * mode.weight(r) * w * len
                })
                .sum::<f64>()
        })
        .sum()
}

/// `dVol = int_wall V.n kappa rho ds`.
pub fn dvol(mesh: &MeridianMesh, pert: &NormalPerturbation) -> f64 {
    edge_moments(mesh, pert).iter().sum()
}

/// Removes the volume change by subtracting a multiple of the reference bump.
pub fn make_volume_preserving(pert: &NormalPerturbation, mesh: &MeridianMesh) -> Result<NormalPerturbation> {
    let bump = reference_bump(mesh);
    let db = dvol(mesh, &bump);
    if db.abs() <= 1e-14 {
        return Err(Error::DegenerateProjection);
    }
    Ok(pert.axpy(-dvol(mesh, pert) / db, &bump))
}

/// Mesh displacement for a wall motion `t (V.n) n`: harmonic extension with
/// zero inlet/outlet data and zero radial motion on the axis.
pub fn extend_normal_motion(mesh: &MeridianMesh, pert: &NormalPerturbation, t: f64) -> Result<Vec<[f64; 2]>> {
    let n = mesh.nodes().len();
    let mut dirichlet: Vec<[Option<f64>; 2]> = vec![[None, None]; n];
    let normals = mesh.wall_vertex_normals();
    for (i, &v) in mesh.wall_chain().iter().enumerate() {
        let nv = normals[i];
        dirichlet[v] = [Some(t * pert.values[i] * nv[0]), Some(t * pert.values[i] * nv[1])];
    }
    for e in mesh.boundary_edges() {
        for &v in &e.nodes {
            match e.tag {
                BoundaryTag::Inlet | BoundaryTag::Outlet => dirichlet[v] = [Some(0.0), Some(0.0)],
                BoundaryTag::Axis => dirichlet[v][0] = Some(0.0),
                BoundaryTag::Wall => {}
            }
        }
    }
    let load = vec![[0.0; 2]; n];
    solve_vector_p1(mesh, false, 0.0, &dirichlet, &load)
}

/// Dissipated energy on the mesh moved by `t V`.
pub fn perturbed_energy(mesh: &MeridianMesh, params: &FluidParams, pert: &NormalPerturbation, t: f64) -> Result<f64> {
    let d = extend_normal_motion(mesh, pert, t)?;
    let moved = deform_mesh(mesh, &d)?;
    let field = solve_navier_stokes(&moved, params, NEWTON_TOL, NEWTON_MAX_ITER)?;
    if !field.converged {
        return Err(Error::SingularSystem("state solve did not converge on the perturbed mesh".into()));
    }
    Ok(dissipated_energy(&field))
}

/// One central difference quotient of `J` along a perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct FdRow {
    pub t: f64,
    /// `(J(t) - J(-t)) / (2 t)`, or `None` when the step could not be taken.
    pub quotient: Option<f64>,
    pub note: Option<String>,
}

/// Central finite-difference quotients of `J` for every `t` in `t_list`.
pub fn fd_dj(mesh: &MeridianMesh, params: &FluidParams, pert: &NormalPerturbation, t_list: &[f64]) -> Vec<FdRow> {
    t_list
        .iter()
        .map(|&t| {
            let q = perturbed_energy(mesh, params, pert, t)
                .and_then(|jp| perturbed_energy(mesh, params, pert, -t).map(|jm| (jp - jm) / (2.0 * t)));
            match q {
                Ok(q) => FdRow { t, quotient: Some(q), note: None },
                Err(e) => FdRow { t, quotient: None, note: Some(format!("skipped: {e}")) },
            }
        })
        .collect()
}

/// Richardson extrapolation of two central quotients at `t` and `t / ratio`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64) -> f64 {
    let k = ratio * ratio;
    fine + (fine - coarse) / (k - 1.0)
}
