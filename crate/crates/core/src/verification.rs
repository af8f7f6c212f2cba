//! Numerical checks of the cylinder non-optimality argument: the optimality
//! trace, the psi profile, the slab divergence identity, the wall pressure
//! gradient of the adjoint, and coercivity of the beta problem.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::adjoint::AdjointField;
use crate::discretization::assembly::{eval_velocity, point_data, quad_points};
use crate::discretization::element::ElementGeometry;
use crate::discretization::saddle::solve_sparse;
use crate::discretization::sparse::TripletBuilder;
use crate::error::{Error, Result};
use crate::geometry::{locate::PointLocator, make_cylinder_profile, mesh_profile_divisions, BoundaryTag, MeridianMesh};
use crate::params::{FluidParams, Mode};
use crate::quadrature::{gauss_legendre, TriangleRule};
use crate::shape_derivative::wall_gradient;
use crate::state::FlowField;

/// Relative variation at or below which the trace counts as constant.
pub const OPTIMALITY_THRESHOLD: f64 = 1e-3;

/// Wall radius of a straight pipe, or `None` if the wall is not straight.
fn cylinder_radius(mesh: &MeridianMesh) -> Option<f64> {
    let radii: Vec<f64> = mesh.wall_chain().iter().map(|&v| mesh.nodes()[v][0]).collect();
    let r0 = radii[0];
    radii.iter().all(|r| (r - r0).abs() <= 1e-12 * r0).then_some(r0)
}

fn require_cylinder(mesh: &MeridianMesh) -> Result<f64> {
    cylinder_radius(mesh).ok_or_else(|| Error::Precondition("check needs a cylinder profile".into()))
}

/// Evaluation of adjoint fields at arbitrary meridian points.
struct Probe<'a> {
    adj: &'a AdjointField,
    locator: PointLocator,
}

impl<'a> Probe<'a> {
    fn new(adj: &'a AdjointField) -> Self {
        Self { adj, locator: PointLocator::new(adj.mesh()) }
    }

    fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        self.locator
            .locate(self.adj.mesh(), p)
            .ok_or_else(|| Error::InvalidInput(format!("point {p:?} lies outside the mesh")))
    }

    fn velocity(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let (k, lam) = self.locate(p)?;
        let qp = point_data(self.adj.spaces(), k, lam);
        Ok(eval_velocity(&self.adj.velocity, &self.adj.spaces().element_p2(k), &qp).0)
    }

    fn pressure(&self, p: [f64; 2]) -> Result<f64> {
        let (k, lam) = self.locate(p)?;
        let el = self.adj.mesh().elements()[k];
        Ok((0..3).map(|i| lam[i] * self.adj.pressure[el[i]]).sum())
    }
}

fn element_gradient(geo: &ElementGeometry, el: &[usize; 3], f: &[f64]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for i in 0..3 {
        g[0] += f[el[i]] * geo.grad_lambda[i][0];
        g[1] += f[el[i]] * geo.grad_lambda[i][1];
    }
    g
}

#[derive(Debug, Clone)]
pub struct OptimalityTraceReport {
    /// Arc length of each wall sample.
    pub s: Vec<f64>,
    /// `d v_z / d n` at the wall edge midpoints.
    pub trace: Vec<f64>,
    /// Arc-length mean of the trace.
    pub mean: f64,
    /// `(max - min) / |mean|` of the trace.
    pub relative_variation: f64,
    /// Arc-length mean of `eps(u):eps(v)` on the wall.
    pub mean_eu_ev: f64,
    /// Relative variation of the gradient density `g`.
    pub g_relative_variation: f64,
    /// Whether the profile is a cylinder (the equivalence statements apply).
    pub cylinder: bool,
    /// `c R` on the cylinder (zero otherwise).
    pub c_r: f64,
}

impl OptimalityTraceReport {
    pub fn first_order_optimal(&self) -> bool {
        self.relative_variation <= OPTIMALITY_THRESHOLD
    }

    pub fn verdict(&self) -> &'static str {
        if self.trace.iter().all(|v| *v == 0.0) {
            "vacuous (zero trace)"
        } else if self.first_order_optimal() {
            "first-order optimal"
        } else {
            "not first-order optimal"
        }
    }

    /// `|mean(eps(u):eps(v)) - c R mean(dv_z/dn)| / |mean(eps(u):eps(v))|`.
    pub fn equivalence_error(&self) -> f64 {
        let scale = self.mean_eu_ev.abs().max(f64::MIN_POSITIVE);
        (self.mean_eu_ev - self.c_r * self.mean).abs() / scale
    }
}

fn variation(values: &[f64], mean: f64) -> f64 {
    let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |a, v| (a.0.min(*v), a.1.max(*v)));
    if mean == 0.0 {
        if hi == lo {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (hi - lo) / mean.abs()
    }
}

/// Samples `d v_z / d n` on the wall and compares it with `eps(u):eps(v)`.
pub fn optimality_trace(state: &FlowField, adj: &AdjointField) -> Result<OptimalityTraceReport> {
    let wg = wall_gradient(state, adj)?;
    let mesh = state.mesh();
    let radius = cylinder_radius(mesh);
    let lengths: Vec<f64> = wg
        .edges
        .iter()
        .map(|&[a, b]| {
            let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
            ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
        })
        .collect();
    let total: f64 = lengths.iter().sum();
    let mean_of = |f: &dyn Fn(usize) -> f64| (0..lengths.len()).map(|i| f(i) * lengths[i]).sum::<f64>() / total;
    let trace: Vec<f64> = wg.samples.iter().map(|s| s.dvz_dn).collect();
    let mean = mean_of(&|i| trace[i]);
    let g: Vec<f64> = wg.values();
    let g_mean = mean_of(&|i| g[i]);
    Ok(OptimalityTraceReport {
        s: wg.samples.iter().map(|s| s.s).collect(),
        relative_variation: variation(&trace, mean),
        mean,
        mean_eu_ev: mean_of(&|i| wg.samples[i].eu_ev),
        g_relative_variation: variation(&g, g_mean),
        cylinder: radius.is_some(),
        c_r: radius.map_or(0.0, |r| state.params().c * r),
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct PsiReport {
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
    /// Radial sample lines and `w0(r_i, z_k)` (`w0[k][i]`).
    pub r_lines: Vec<f64>,
    pub w0: Vec<Vec<f64>>,
    /// Least-squares fit `psi ~ a z + b`.
    pub fit: (f64, f64),
    /// `max |psi - fit| / max |psi|`.
    pub non_affinity: f64,
    pub slope_inlet: f64,
    pub slope_outlet: f64,
    /// `-8 mu c pi R^2` (inlet reference) and `-16 mu c pi R^2` (outlet).
    pub reference_inlet: f64,
    pub reference_outlet: f64,
}

impl PsiReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("z,psi,fit\n");
        for (z, p) in self.z.iter().zip(&self.psi) {
            let _ = writeln!(s, "{z},{p},{}", self.fit.0 * z + self.fit.1);
        }
        s
    }
}

/// Number of radial Gauss lines used for the psi quadrature.
const PSI_LINES: usize = 8;

/// `psi(z) = 2 pi int_0^R (q - 2 c r^2 w0) r dr` with `w0 = int_0^z v_r / r`.
pub fn psi_profile(adj: &AdjointField, z_samples: usize) -> Result<PsiReport> {
    let mesh = adj.mesh();
    if !mesh.mode().is_axisym() {
        return Err(Error::UnsupportedMode("psi profile needs the axisymmetric mode"));
    }
    let radius = require_cylinder(mesh)?;
    let nz = z_samples.max(33);
    let length = mesh.length();
    let c = adj.disc.params.c;
    let mu = adj.disc.params.mu;
    let probe = Probe::new(adj);
    let (gx, gw) = gauss_legendre(PSI_LINES);
    let r_lines: Vec<f64> = gx.iter().map(|x| x * radius).collect();
    let z: Vec<f64> = (0..nz).map(|k| length * k as f64 / (nz - 1) as f64).collect();
    let mut w0 = vec![vec![0.0; PSI_LINES]; nz];
    let (sx, sw) = gauss_legendre(3);
    for k in 1..nz {
        for (i, &r) in r_lines.iter().enumerate() {
            let (za, zb) = (z[k - 1], z[k]);
            let mut inc = 0.0;
            for (x, w) in sx.iter().zip(&sw) {
                let zz = za + x * (zb - za);
                inc += w * (zb - za) * probe.velocity([r, zz])?[0] / r;
            }
            w0[k][i] = w0[k - 1][i] + inc;
        }
    }
    let mut psi = Vec::with_capacity(nz);
    for k in 0..nz {
        let zz = z[k].min(length * (1.0 - 1e-14));
        let mut acc = 0.0;
        for (i, &r) in r_lines.iter().enumerate() {
            let q = probe.pressure([r, zz])?;
            acc += gw[i] * radius * (q - 2.0 * c * r * r * w0[k][i]) * r;
        }
        psi.push(2.0 * PI * acc);
    }
    let n = nz as f64;
    let (sz, sp) = (z.iter().sum::<f64>(), psi.iter().sum::<f64>());
    let szz: f64 = z.iter().map(|v| v * v).sum();
    let szp: f64 = z.iter().zip(&psi).map(|(a, b)| a * b).sum();
    let a = (n * szp - sz * sp) / (n * szz - sz * sz);
    let b = (sp - a * sz) / n;
    let scale = psi.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let dev = z.iter().zip(&psi).map(|(zz, p)| (p - (a * zz + b)).abs()).fold(0.0, f64::max);
    let dz = z[1] - z[0];
    Ok(PsiReport {
        slope_inlet: (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dz),
        slope_outlet: (3.0 * psi[nz - 1] - 4.0 * psi[nz - 2] + psi[nz - 3]) / (2.0 * dz),
        reference_inlet: -8.0 * mu * c * PI * radius * radius,
        reference_outlet: -16.0 * mu * c * PI * radius * radius,
        non_affinity: if scale == 0.0 { 0.0 } else { dev / scale },
        fit: (a, b),
        r_lines,
        w0,
        z,
        psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabIdentity {
    pub z_lo: f64,
    pub z_hi: f64,
    /// Flux of the recovered adjoint pressure gradient out of the slab.
    pub lhs: f64,
    /// `2 c int r dv_r/dz dV`.
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct DivergenceIdentityReport {
    pub slabs: Vec<SlabIdentity>,
    /// `max |lhs - rhs| / max |rhs|` over the slabs.
    pub max_residual: f64,
}

/// Smooth cutoff of a slab: rises from 0 to 1 over `[lo - d, lo + d]` and
/// falls back over `[hi - d, hi + d]`, with the bands clipped into `[0, L]`.
#[derive(Debug, Clone, Copy)]
struct SlabCutoff {
    rise: (f64, f64),
    fall: (f64, f64),
}

fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (t * t * t * (10.0 - 15.0 * t + 6.0 * t * t), 30.0 * t * t * (1.0 - t) * (1.0 - t))
}

impl SlabCutoff {
    fn new(lo: f64, hi: f64, band: f64, length: f64) -> Self {
        let rise = if lo <= 0.0 { (0.0, 2.0 * band) } else { (lo - band, lo + band) };
        let fall = if hi >= length { (length - 2.0 * band, length) } else { (hi - band, hi + band) };
        Self { rise, fall }
    }

    /// `(chi, dchi/dz)`.
    fn eval(&self, z: f64) -> (f64, f64) {
        let (a, da) = smoothstep((z - self.rise.0) / (self.rise.1 - self.rise.0));
        let (b, db) = smoothstep((z - self.fall.0) / (self.fall.1 - self.fall.0));
        (a - b, da / (self.rise.1 - self.rise.0) - db / (self.fall.1 - self.fall.0))
    }
}

/// Checks `int_slab lap q dV = 2 c int_slab r dv_r/dz dV` slab by slab, in
/// weak form against a smooth cutoff `chi` of each slab:
/// `int q chi'' dV + int_wall chi dq/dn = -2 c int r v_r chi' dV`.
///
/// Both left-hand terms are evaluated against the P2 interpolant `Phi` of
/// `(0, chi')`: the volume term as `int q div Phi`, and the wall flux as the
/// adjoint reaction on the wall tested with `Phi` (on the no-slip wall
/// `dq/dn = -mu d/dz dv_z/dn`, which is the axial traction paired with `chi'`).
pub fn divergence_identity(adj: &AdjointField, slab_count: usize) -> Result<DivergenceIdentityReport> {
    let mesh = adj.mesh();
    if !mesh.mode().is_axisym() {
        return Err(Error::UnsupportedMode("divergence identity needs the axisymmetric mode"));
    }
    require_cylinder(mesh)?;
    if slab_count == 0 {
        return Err(Error::InvalidInput("slab count must be positive".into()));
    }
    let spaces = adj.spaces();
    let c = adj.disc.params.c;
    let length = mesh.length();
    let width = length / slab_count as f64;
    let cutoffs: Vec<SlabCutoff> = (0..slab_count)
        .map(|k| SlabCutoff::new(k as f64 * width, (k + 1) as f64 * width, 0.25 * width, length))
        .collect();

    let mut rhs = vec![0.0; slab_count];
    let rule = TriangleRule::assembly();
    for k in 0..mesh.elements().len() {
        let geo = spaces.element_geometry(k);
        let dofs = spaces.element_p2(k);
        for qp in quad_points(mesh.mode(), &geo, &rule) {
            let vr = eval_velocity(&adj.velocity, &dofs, &qp).0[0];
            for (s, cut) in cutoffs.iter().enumerate() {
                rhs[s] -= 2.0 * c * qp.r * vr * cut.eval(qp.z).1 * qp.weight;
            }
        }
    }

    let pressure_load = adj.disc.divergence.transpose_matvec(&adj.pressure);
    let x: Vec<f64> = adj.velocity.iter().chain(&adj.pressure).copied().collect();
    let operator = adj.disc.jacobian(&adj.state_velocity).matrix.transpose_matvec(&x);
    let source = adj.disc.viscous.matvec(&adj.state_velocity);
    let mut lhs = vec![0.0; slab_count];
    for k in 0..spaces.n_p2() {
        let z = spaces.p2_coords()[k][1];
        let i = 2 * k + 1;
        let mut load = pressure_load[i];
        if spaces.p2_tags(k).contains(&BoundaryTag::Wall) {
            load += operator[i] - 2.0 * source[i];
        }
        for (s, cut) in cutoffs.iter().enumerate() {
            lhs[s] += load * cut.eval(z).1;
        }
    }

    let slabs: Vec<SlabIdentity> = (0..slab_count)
        .map(|k| SlabIdentity { z_lo: k as f64 * width, z_hi: (k + 1) as f64 * width, lhs: lhs[k], rhs: rhs[k] })
        .collect();
    let scale = slabs.iter().map(|s| s.rhs.abs()).fold(0.0, f64::max);
    let worst = slabs.iter().map(|s| (s.lhs - s.rhs).abs()).fold(0.0, f64::max);
    let max_residual = if scale == 0.0 { worst } else { worst / scale };
    Ok(DivergenceIdentityReport { slabs, max_residual })
}

#[derive(Debug, Clone)]
pub struct WallPressureGradient {
    pub z: Vec<f64>,
    /// One-sided `dq/dr` from the wall-adjacent elements.
    pub dq_dr: Vec<f64>,
    /// Edge length times `kappa rho` at the edge midpoint.
    pub edge_weight: Vec<f64>,
    /// `L2(wall)` norm with weight `kappa rho`.
    pub l2_norm: f64,
}

impl WallPressureGradient {
    /// `L2` norm over the wall edges whose midpoint lies at `z <= z_max`.
    pub fn l2_norm_up_to(&self, z_max: f64) -> f64 {
        self.z
            .iter()
            .zip(&self.dq_dr)
            .zip(&self.edge_weight)
            .filter(|((z, _), _)| **z <= z_max)
            .map(|((_, d), w)| d * d * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// Radial derivative of the adjoint pressure at the wall.
pub fn wall_pressure_gradient(adj: &AdjointField) -> Result<WallPressureGradient> {
    let mesh = adj.mesh();
    require_cylinder(mesh)?;
    let spaces = adj.spaces();
    let mut z = Vec::new();
    let mut dq = Vec::new();
    let mut weight = Vec::new();
    for we in spaces.wall_edges() {
        let el = mesh.elements()[we.element];
        let g = element_gradient(&spaces.element_geometry(we.element), &el, &adj.pressure);
        let (pa, pb) = (mesh.nodes()[we.nodes[0]], mesh.nodes()[we.nodes[1]]);
        let d = g[0] * we.normal[0] + g[1] * we.normal[1];
        z.push(0.5 * (pa[1] + pb[1]));
        dq.push(d);
        weight.push(we.length * mesh.mode().weight(0.5 * (pa[0] + pb[0])));
    }
    let l2_norm = dq.iter().zip(&weight).map(|(d, w)| d * d * w).sum::<f64>().sqrt();
    Ok(WallPressureGradient { z, dq_dr: dq, edge_weight: weight, l2_norm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaReport {
    /// Smallest eigenvalue of the symmetric part of the reduced matrix.
    pub min_eigenvalue: f64,
    /// Norm of the solution of the homogeneous system.
    pub zero_rhs_norm: f64,
    /// Largest entry of `B(c) + B(-c)` for the outlet boundary matrix `B`.
    pub boundary_sign_defect: f64,
}

/// Assembled beta operator: `(volume part, outlet boundary part, free dofs)`.
fn beta_matrices(params: &FluidParams, mesh: &MeridianMesh, c: f64) -> (DMatrix<f64>, DMatrix<f64>, Vec<usize>) {
    let radius = params.radius;
    let mu = params.mu;
    let nodes = mesh.nodes();
    let tags = mesh.node_tags();
    let free: Vec<usize> = (0..nodes.len())
        .filter(|&v| !tags[v].contains(&BoundaryTag::Inlet) && !tags[v].contains(&BoundaryTag::Wall))
        .collect();
    let mut index = vec![usize::MAX; nodes.len()];
    for (i, &v) in free.iter().enumerate() {
        index[v] = i;
    }
    let n = free.len();
    let mut vol = DMatrix::zeros(n, n);
    let mut bnd = DMatrix::zeros(n, n);
    let rule = TriangleRule::assembly();
    for el in mesh.elements() {
        let geo = ElementGeometry::new([nodes[el[0]], nodes[el[1]], nodes[el[2]]]);
        let g = geo.grad_lambda;
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let [r, _] = geo.point(lam);
            let wt = geo.area * w;
            let r3 = r * r * r;
            for i in 0..3 {
                let Some(&a) = index.get(el[i]).filter(|a| **a != usize::MAX) else { continue };
                for j in 0..3 {
                    let Some(&b) = index.get(el[j]).filter(|b| **b != usize::MAX) else { continue };
                    let diff = mu * r3 * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    let conv = -c * (r * r - radius * radius) * r3 * g[j][1] * lam[i];
                    vol[(a, b)] += (diff + conv) * wt;
                }
            }
        }
    }
    let (gx, gw) = gauss_legendre(5);
    for e in mesh.edges_with_tag(BoundaryTag::Outlet) {
        let [p, q] = e.nodes;
        let (pa, pb) = (nodes[p][0], nodes[q][0]);
        let len = (pb - pa).abs();
        for (s, w) in gx.iter().zip(&gw) {
            let r = pa + s * (pb - pa);
            let phi = [(p, 1.0 - s), (q, *s)];
            for &(u, fu) in &phi {
                let a = index[u];
                if a == usize::MAX {
                    continue;
                }
                for &(v, fv) in &phi {
                    let b = index[v];
                    if b == usize::MAX {
                        continue;
                    }
                    bnd[(a, b)] += c * (r * r - radius * radius) * r.powi(3) * fu * fv * w * len;
                }
            }
        }
    }
    (vol, bnd, free)
}

/// Coercivity of the beta problem on a `divisions x divisions` P1 mesh of
/// the rectangle `(0, R) x (0, L)`.
pub fn beta_coercivity(params: &FluidParams, divisions: usize) -> Result<BetaReport> {
    if !(params.c < 0.0) {
        return Err(Error::Precondition(format!("beta coercivity needs c < 0, got c = {}", params.c)));
    }
    let profile = make_cylinder_profile(params, Mode::Axisym)?;
    let mesh = mesh_profile_divisions(&profile, divisions, divisions)?;
    let (vol, bnd, _) = beta_matrices(params, &mesh, params.c);
    let (_, bnd_neg, _) = beta_matrices(params, &mesh, -params.c);
    let full = &vol + &bnd;
    let sym = (&full + full.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let n = full.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, n * 9);
    for i in 0..n {
        for j in 0..n {
            if full[(i, j)] != 0.0 {
                t.push(i, j, full[(i, j)]);
            }
        }
    }
    let x = solve_sparse(&t.build(), &vec![0.0; n], 1e-12)?;
    Ok(BetaReport {
        min_eigenvalue,
        zero_rhs_norm: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        boundary_sign_defect: (&bnd + &bnd_neg).amax(),
    })
}
