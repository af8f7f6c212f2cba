//! Augmented-Lagrangian shape descent and the spline-family sweep.

use std::fmt::Write as _;

use crate::adjoint::solve_adjoint;
use crate::discretization::extension::solve_vector_p1;
use crate::error::{Error, Result};
use crate::geometry::{
    deform_mesh, make_spline_profile, mesh_profile_graded, renormalize_volume, BoundaryTag, MeridianMesh, MeshGrading,
    ShapeProfile,
};
use crate::params::{FluidParams, Mode};
use crate::shape_derivative::{extend_normal_motion, wall_gradient, NormalPerturbation, WallGradient};
use crate::state::{dissipated_energy, solve_navier_stokes, FlowField, NEWTON_MAX_ITER, NEWTON_TOL};

/// `L = J + mu_m (vol - V) + (b / 2) (vol - V)^2`.
pub fn lagrangian(j: f64, vol: f64, mu_m: f64, b: f64, v_target: f64) -> f64 {
    let dv = vol - v_target;
    j + mu_m * dv + 0.5 * b * dv * dv
}

/// `mu_{m+1} = mu_m + tau (vol - V)`.
pub fn update_multiplier(mu_m: f64, tau: f64, vol: f64, v_target: f64) -> f64 {
    mu_m + tau * (vol - v_target)
}

/// Solves `-lap d + d = 0` with `d = 0` on inlet and outlet, `d_r = 0` on
/// the axis, and Neumann data `-gL n` on the wall. Returns nodal displacements.
pub fn descent_direction(mesh: &MeridianMesh, gl: &WallGradient) -> Result<Vec<[f64; 2]>> {
    let n = mesh.nodes().len();
    let mode = mesh.mode();
    let mut load = vec![[0.0; 2]; n];
    for (smp, &[a, b]) in gl.samples.iter().zip(&gl.edges) {
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for &(t, g, w) in &smp.gauss {
            let r = (1.0 - t) * pa[0] + t * pb[0];
            let wt = w * len * mode.weight(r);
            for c in 0..2 {
                load[a][c] -= g * smp.normal[c] * (1.0 - t) * wt;
                load[b][c] -= g * smp.normal[c] * t * wt;
            }
        }
    }
    solve_vector_p1(mesh, true, 1.0, &descent_dirichlet(mesh), &load)
}

fn descent_dirichlet(mesh: &MeridianMesh) -> Vec<[Option<f64>; 2]> {
    let mut dir = vec![[None, None]; mesh.nodes().len()];
    for e in mesh.boundary_edges() {
        for &v in &e.nodes {
            match e.tag {
                BoundaryTag::Inlet | BoundaryTag::Outlet => dir[v] = [Some(0.0), Some(0.0)],
                BoundaryTag::Axis => dir[v][0] = Some(0.0),
                BoundaryTag::Wall => {}
            }
        }
    }
    dir
}

/// `int_wall g (d . n) kappa rho ds` for a nodal displacement `d`.
pub fn directional_derivative(mesh: &MeridianMesh, wg: &WallGradient, d: &[[f64; 2]]) -> f64 {
    let mode = mesh.mode();
    let mut total = 0.0;
    for (smp, &[a, b]) in wg.samples.iter().zip(&wg.edges) {
        let (pa, pb) = (mesh.nodes()[a], mesh.nodes()[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let (dna, dnb) = (
            d[a][0] * smp.normal[0] + d[a][1] * smp.normal[1],
            d[b][0] * smp.normal[0] + d[b][1] * smp.normal[1],
        );
        for &(t, g, w) in &smp.gauss {
            let r = (1.0 - t) * pa[0] + t * pb[0];
            total += g * ((1.0 - t) * dna + t * dnb) * mode.weight(r) * w * len;
        }
    }
    total
}

/// Result of a backtracking search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    Accepted { eps: f64, value: f64, backtracks: usize },
    Stagnated,
}

/// Armijo backtracking from `eps0` with halving; accepted steps decrease
/// the value strictly. `eval` returns `None` for
/// steps that cannot be evaluated (inverted mesh, failed solve).
pub fn line_search(
    mut eval: impl FnMut(f64) -> Option<f64>,
    l0: f64,
    dl: f64,
    eps0: f64,
    armijo: f64,
    max_backtracks: usize,
) -> LineSearch {
    if !(dl < 0.0) || !(eps0 > 0.0) {
        return LineSearch::Stagnated;
    }
    let mut eps = eps0;
    for k in 0..=max_backtracks {
        if let Some(v) = eval(eps) {
            if v < l0 && v <= l0 + armijo * eps * dl {
                return LineSearch::Accepted { eps, value: v, backtracks: k };
            }
        }
        eps *= 0.5;
    }
    LineSearch::Stagnated
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentConfig {
    pub mu0: f64,
    /// Penalty `b`; `None` means `10 J0 / V^2`.
    pub b: Option<f64>,
    /// Multiplier step; `None` means `b / 2`.
    pub tau: Option<f64>,
    /// Tolerance on `|dL|`; `None` means `1e-4 J0`.
    pub tol_dl: Option<f64>,
    pub multiplier_tol: f64,
    pub max_iter: usize,
    /// Initial trial step moves the wall by at most this multiple of `h`.
    pub step_fraction: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Consecutive stagnated line searches tolerated before stopping; the
    /// multiplier is still updated after each one.
    pub max_stalls: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            mu0: 0.0,
            b: None,
            tau: None,
            tol_dl: None,
            multiplier_tol: 1e-6,
            max_iter: 80,
            step_fraction: 1.0,
            armijo: 1e-4,
            max_backtracks: 20,
            max_stalls: 3,
        }
    }
}

/// One row of the descent history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub m: usize,
    pub j: f64,
    pub vol: f64,
    pub l: f64,
    pub mu: f64,
    pub eps: f64,
    pub dl: f64,
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub history: Vec<IterationRecord>,
    pub mesh: MeridianMesh,
    pub j0: f64,
    pub v_target: f64,
    pub b: f64,
    pub tau: f64,
    pub converged: bool,
    pub stop_reason: String,
}

impl DescentResult {
    pub fn final_j(&self) -> f64 {
        self.history.last().map_or(self.j0, |r| r.j)
    }

    /// `100 (J_final - J0) / J0`.
    pub fn relative_change_percent(&self) -> f64 {
        100.0 * (self.final_j() - self.j0) / self.j0
    }

    pub fn volume_violation(&self) -> f64 {
        self.history.last().map_or(0.0, |r| (r.vol - self.v_target).abs())
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("m,J,vol,L,mu,eps,dL\n");
        for r in &self.history {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.m, r.j, r.vol, r.l, r.mu, r.eps, r.dl);
        }
        s
    }

    /// Final wall as `z,r` pairs in arc-length order.
    pub fn wall_csv(&self) -> String {
        let mut s = String::from("z,r\n");
        for &v in self.mesh.wall_chain() {
            let [r, z] = self.mesh.nodes()[v];
            let _ = writeln!(s, "{z},{r}");
        }
        s
    }
}

fn solve_state(mesh: &MeridianMesh, params: &FluidParams) -> Result<FlowField> {
    let f = solve_navier_stokes(mesh, params, NEWTON_TOL, NEWTON_MAX_ITER)?;
    if !f.converged {
        return Err(Error::SingularSystem("state solve did not converge".into()));
    }
    Ok(f)
}

/// Descent loop: state, adjoint, Lagrangian gradient, descent direction,
/// line search, deformation, multiplier update.
pub fn run_descent(
    initial: &MeridianMesh,
    params: &FluidParams,
    v_target: f64,
    h: f64,
    cfg: &DescentConfig,
) -> Result<DescentResult> {
    let mut mesh = initial.clone();
    let mut state = solve_state(&mesh, params)?;
    let j0 = dissipated_energy(&state);
    let b = cfg.b.unwrap_or(10.0 * j0 / (v_target * v_target));
    let tau = cfg.tau.unwrap_or(0.5 * b);
    let tol_dl = cfg.tol_dl.unwrap_or(1e-4 * j0);
    let mut mu = cfg.mu0;
    let mut history = Vec::new();
    let mut eps_prev: Option<f64> = None;
    let mut converged = false;
    let mut stalls = 0usize;
    let mut stop_reason = format!("reached {} iterations", cfg.max_iter);
    for m in 0..cfg.max_iter {
        let j = dissipated_energy(&state);
        let vol = mesh.volume();
        let l0 = lagrangian(j, vol, mu, b, v_target);
        let adj = solve_adjoint(&state)?;
        let wg = wall_gradient(&state, &adj)?;
        let gl = wg.shifted(mu + b * (vol - v_target));
        let mut d = descent_direction(&mesh, &gl)?;
        let mut dl = directional_derivative(&mesh, &gl, &d);
        if !(dl < 0.0) {
            log::warn!("iteration {m}: PDE direction is not a descent direction (dL = {dl:.3e}); using -gL n");
            let pert = NormalPerturbation {
                values: vertex_average(&mesh, &gl),
            }
            .scaled(-1.0);
            d = extend_normal_motion(&mesh, &pert, 1.0)?;
            dl = directional_derivative(&mesh, &gl, &d);
        }
        history.push(IterationRecord { m, j, vol, l: l0, mu, eps: 0.0, dl });
        if dl.abs() <= tol_dl && m > 0 {
            let last_dmu = history.len() >= 2 && (history[history.len() - 1].mu - history[history.len() - 2].mu).abs() <= cfg.multiplier_tol;
            if last_dmu {
                converged = true;
                stop_reason = "converged".into();
                break;
            }
        }
        let dmax = mesh
            .wall_chain()
            .iter()
            .map(|&v| (d[v][0] * d[v][0] + d[v][1] * d[v][1]).sqrt())
            .fold(0.0, f64::max);
        if dmax == 0.0 {
            stop_reason = "zero descent direction".into();
            break;
        }
        let cap = cfg.step_fraction * h / dmax;
        let eps0 = eps_prev.map_or(cap, |e| (2.0 * e).min(cap));
        let mut trial: Option<(f64, MeridianMesh, FlowField)> = None;
        let outcome = line_search(
            |eps| {
                let disp: Vec<[f64; 2]> = d.iter().map(|x| [eps * x[0], eps * x[1]]).collect();
                let moved = deform_mesh(&mesh, &disp).ok()?;
                let st = solve_state(&moved, params).ok()?;
                let val = lagrangian(dissipated_energy(&st), moved.volume(), mu, b, v_target);
                trial = Some((eps, moved, st));
                Some(val)
            },
            l0,
            dl,
            eps0,
            cfg.armijo,
            cfg.max_backtracks,
        );
        match outcome {
            LineSearch::Accepted { eps, backtracks, .. } => {
                let (teps, moved, st) = trial.take().expect("accepted step was evaluated");
                debug_assert_eq!(teps, eps);
                log::info!("iteration {m}: J = {j:.8}, vol = {vol:.6}, dL = {dl:.3e}, eps = {eps:.3e} ({backtracks} backtracks)");
                history.last_mut().unwrap().eps = eps;
                eps_prev = Some(eps);
                mesh = moved;
                state = st;
                mu = update_multiplier(mu, tau, mesh.volume(), v_target);
                stalls = 0;
            }
            LineSearch::Stagnated => {
                stalls += 1;
                eps_prev = None;
                log::info!("iteration {m}: line search stagnated (dL = {dl:.3e})");
                if stalls >= cfg.max_stalls {
                    stop_reason = "line search stagnated".into();
                    break;
                }
                mu = update_multiplier(mu, tau, vol, v_target);
                continue;
            }
        }
    }
    if !converged && history.last().map_or(true, |r| r.eps != 0.0) {
        let j = dissipated_energy(&state);
        let vol = mesh.volume();
        history.push(IterationRecord { m: history.len(), j, vol, l: lagrangian(j, vol, mu, b, v_target), mu, eps: 0.0, dl: f64::NAN });
    }
    Ok(DescentResult { history, mesh, j0, v_target, b, tau, converged, stop_reason })
}

/// Averages the per-edge densities to the wall vertices.
fn vertex_average(mesh: &MeridianMesh, wg: &WallGradient) -> Vec<f64> {
    let m = mesh.wall_chain().len();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut acc = 0.0;
        let mut cnt = 0.0;
        if i > 0 {
            acc += wg.samples[i - 1].g;
            cnt += 1.0;
        }
        if i + 1 < m {
            acc += wg.samples[i].g;
            cnt += 1.0;
        }
        out[i] = acc / cnt;
    }
    out[0] = 0.0;
    out[m - 1] = 0.0;
    out
}

/// One member of the spline-family sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub e: f64,
    pub j: Option<f64>,
    pub rel_percent: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// `(e*, J(e*))` over the evaluated members.
    pub minimum: Option<(f64, f64)>,
}

impl SweepResult {
    pub fn csv(&self) -> String {
        let mut s = String::from("e,J,rel_percent\n");
        for en in &self.entries {
            match (en.j, en.rel_percent) {
                (Some(j), Some(p)) => {
                    let _ = writeln!(s, "{},{},{}", en.e, j, p);
                }
                _ => {
                    let _ = writeln!(s, "{},NaN,NaN", en.e);
                }
            }
        }
        s
    }

    /// True when the curve dips below `J(0)` at an interior member and the
    /// last member lies above the minimum.
    pub fn dips_then_rises(&self) -> bool {
        let js: Vec<(f64, f64)> = self.entries.iter().filter_map(|e| e.j.map(|j| (e.e, j))).collect();
        let Some(&(_, j0)) = js.iter().find(|(e, _)| *e == 0.0) else { return false };
        let Some((emin, jmin)) = self.minimum else { return false };
        let last = js.last().map(|p| p.1).unwrap_or(jmin);
        emin > 0.0 && jmin < j0 && last > jmin
    }
}

/// Family member with amplitude `e`, volume restored to the cylinder value.
pub fn family_member(params: &FluidParams, mode: Mode, offsets: &[f64], e: f64) -> Result<ShapeProfile> {
    renormalize_volume(&make_spline_profile(params, mode, offsets, e)?)
}

/// Evaluates `J(e)` over `e_grid` (which must contain 0).
pub fn run_sweep(
    e_grid: &[f64],
    params: &FluidParams,
    mode: Mode,
    offsets: &[f64],
    h: f64,
    grading: MeshGrading,
) -> Result<SweepResult> {
    if !e_grid.contains(&0.0) {
        return Err(Error::InvalidInput("the sweep grid must contain e = 0".into()));
    }
    let eval = |e: f64| -> Result<f64> {
        let profile = family_member(params, mode, offsets, e)?;
        let mesh = mesh_profile_graded(&profile, h, grading)?;
        Ok(dissipated_energy(&solve_state(&mesh, params)?))
    };
    let j0 = eval(0.0)?;
    let mut entries = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        let res = if e == 0.0 { Ok(j0) } else { eval(e) };
        entries.push(match res {
            Ok(j) => SweepEntry { e, j: Some(j), rel_percent: Some(100.0 * (j - j0) / j0), note: None },
            Err(err) => {
                log::warn!("sweep member e = {e} skipped: {err}");
                SweepEntry { e, j: None, rel_percent: None, note: Some(err.to_string()) }
            }
        });
    }
    let minimum = entries
        .iter()
        .filter_map(|en| en.j.map(|j| (en.e, j)))
        .fold(None, |acc: Option<(f64, f64)>, p| match acc {
            Some(a) if a.1 <= p.1 => Some(a),
            _ => Some(p),
        });
    Ok(SweepResult { entries, minimum })
}
