//! Componentwise P1 elliptic problems `-div(grad d) + alpha d = load` on a
//! meridian mesh, used for mesh-motion extensions and descent directions.

use super::sparse::{CsrMatrix, TripletBuilder};
use super::saddle::solve_sparse;
use crate::error::Result;
use crate::geometry::MeridianMesh;
use crate::quadrature::TriangleRule;

/// Scalar P1 stiffness and mass, weighted by `kappa * rho` when `weighted`
/// and by 1 otherwise.
pub fn p1_operators(mesh: &MeridianMesh, weighted: bool) -> (CsrMatrix, CsrMatrix) {
    let rule = TriangleRule::collapsed(3);
    let mode = mesh.mode();
    let nodes = mesh.nodes();
    let n = nodes.len();
    let mut ks = TripletBuilder::with_capacity(n, n, mesh.elements().len() * 9);
    let mut ms = TripletBuilder::with_capacity(n, n, mesh.elements().len() * 9);
    for el in mesh.elements() {
        let geo = super::element::ElementGeometry::new([nodes[el[0]], nodes[el[1]], nodes[el[2]]]);
        let g = geo.grad_lambda;
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let [r, _] = geo.point(lam);
            let wt = geo.area * w * if weighted { mode.weight(r) } else { 1.0 };
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

/// Solves `(K + alpha M) d_c = load_c` independently for both components,
/// with `dirichlet[node][c]` fixing `d_c` at that node.
pub fn solve_vector_p1(
    mesh: &MeridianMesh,
    weighted: bool,
    alpha: f64,
    dirichlet: &[[Option<f64>; 2]],
    load: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = mesh.nodes().len();
    let (k, m) = p1_operators(mesh, weighted);
    let mut out = vec![[0.0; 2]; n];
    for c in 0..2 {
        let mut t = TripletBuilder::with_capacity(n, n, k.nnz() * 2);
        let mut rhs: Vec<f64> = load.iter().map(|l| l[c]).collect();
        for (i, j, v) in k.triplets().chain(m.scale(alpha).triplets()) {
            if dirichlet[i][c].is_some() {
                continue;
            }
            match dirichlet[j][c] {
                Some(g) => rhs[i] -= v * g,
                None => t.push(i, j, v),
            }
        }
        for i in 0..n {
            if let Some(g) = dirichlet[i][c] {
                t.push(i, i, 1.0);
                rhs[i] = g;
            }
        }
        let x = solve_sparse(&t.build(), &rhs, 1e-10)?;
        for i in 0..n {
            out[i][c] = dirichlet[i][c].unwrap_or(x[i]);
        }
    }
    Ok(out)
}

/// Boundary integral `int_edge phi_a kappa rho ds` of the two P1 hats on
/// edge `[a, b]`, returned as `(for a, for b)`.
pub fn edge_hat_moments(mesh: &MeridianMesh, a: usize, b: usize, weighted: bool) -> (f64, f64) {
    let pa = mesh.nodes()[a];
    let pb = mesh.nodes()[b];
    let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
    if !weighted {
        return (0.5 * len, 0.5 * len);
    }
    let mode = mesh.mode();
    let (wa, wb) = (mode.weight(pa[0]), mode.weight(pb[0]));
    (len * (2.0 * wa + wb) / 6.0, len * (wa + 2.0 * wb) / 6.0)
}
