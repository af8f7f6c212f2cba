//! Quadratic (P2) and linear (P1) shape functions on affine triangles.
//!
//! Local P2 node order: the three vertices, then the midpoints of the
//! local edges `(0,1)`, `(1,2)`, `(2,0)`.

use crate::params::Mode;

pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = vertices;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grad_lambda = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self { vertices, area: 0.5 * det, grad_lambda }
    }

    pub fn point(&self, lam: &[f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            lam[0] * v[0][0] + lam[1] * v[1][0] + lam[2] * v[2][0],
            lam[0] * v[0][1] + lam[1] * v[1][1] + lam[2] * v[2][1],
        ]
    }
}

/// P2 basis values at barycentric point `lam`.
pub fn p2_values(lam: &[f64; 3]) -> [f64; 6] {
    let mut n = [0.0; 6];
    for i in 0..3 {
        n[i] = lam[i] * (2.0 * lam[i] - 1.0);
    }
    for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
        n[3 + k] = 4.0 * lam[*i] * lam[*j];
    }
    n
}

/// Physical gradients `[d/dr, d/dz]` of the P2 basis at `lam`.
pub fn p2_gradients(geo: &ElementGeometry, lam: &[f64; 3]) -> [[f64; 2]; 6] {
    let g = &geo.grad_lambda;
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * lam[i] - 1.0;
        out[i] = [s * g[i][0], s * g[i][1]];
    }
    for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
        out[3 + k] = [
            4.0 * (lam[*i] * g[*j][0] + lam[*j] * g[*i][0]),
            4.0 * (lam[*i] * g[*j][1] + lam[*j] * g[*i][1]),
        ];
    }
    out
}

/// Strain components `[rr, zz, rz, tt]` of a velocity field. In planar mode
/// the hoop component is zero.
#[inline]
pub fn strain(mode: Mode, r: f64, u: [f64; 2], grad: [[f64; 2]; 2]) -> [f64; 4] {
    let tt = if mode.is_axisym() { u[0] / r } else { 0.0 };
    [grad[0][0], grad[1][1], 0.5 * (grad[0][1] + grad[1][0]), tt]
}

/// Strain of the basis field `N e_comp`.
#[inline]
pub fn basis_strain(mode: Mode, r: f64, n: f64, dn: [f64; 2], comp: usize) -> [f64; 4] {
    if comp == 0 {
        let tt = if mode.is_axisym() { n / r } else { 0.0 };
        [dn[0], 0.0, 0.5 * dn[1], tt]
    } else {
        [0.0, dn[1], 0.5 * dn[0], 0.0]
    }
}

/// Frobenius product `e:f` of two strains in component form.
#[inline]
pub fn strain_dot(e: &[f64; 4], f: &[f64; 4]) -> f64 {
    e[0] * f[0] + e[1] * f[1] + 2.0 * e[2] * f[2] + e[3] * f[3]
}

#[inline]
pub fn strain_trace(e: &[f64; 4]) -> f64 {
    e[0] + e[1] + e[3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_nodal_property() {
        let nodes: [[f64; 3]; 6] = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for (a, lam) in nodes.iter().enumerate() {
            let n = p2_values(lam);
            for (b, v) in n.iter().enumerate() {
                assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let geo = ElementGeometry::new([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]]);
        let g = p2_gradients(&geo, &[0.2, 0.3, 0.5]);
        let s: [f64; 2] = g.iter().fold([0.0, 0.0], |acc, d| [acc[0] + d[0], acc[1] + d[1]]);
        assert!(s[0].abs() < 1e-13 && s[1].abs() < 1e-13);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geo = ElementGeometry::new([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]]);
        let lam = [0.2, 0.3, 0.5];
        let p = geo.point(&lam);
        let g = p2_gradients(&geo, &lam);
        let to_lam = |q: [f64; 2]| {
            let gl = geo.grad_lambda;
            let v0 = geo.vertices[0];
            let l1 = gl[1][0] * (q[0] - v0[0]) + gl[1][1] * (q[1] - v0[1]);
            let l2 = gl[2][0] * (q[0] - v0[0]) + gl[2][1] * (q[1] - v0[1]);
            [1.0 - l1 - l2, l1, l2]
        };
        let h = 1e-6;
        for d in 0..2 {
            let mut qp = p;
            let mut qm = p;
            qp[d] += h;
            qm[d] -= h;
            let np = p2_values(&to_lam(qp));
            let nm = p2_values(&to_lam(qm));
            for a in 0..6 {
                assert!(((np[a] - nm[a]) / (2.0 * h) - g[a][d]).abs() < 1e-8);
            }
        }
    }
}
