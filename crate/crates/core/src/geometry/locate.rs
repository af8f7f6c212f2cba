//! Point location on a meridian mesh.

use super::mesh::MeridianMesh;

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &MeridianMesh) -> Self {
        let nodes = mesh.nodes();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let n = (mesh.elements().len() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [n, n];
        let cell = [((hi[0] - lo[0]) / n as f64).max(1e-300), ((hi[1] - lo[1]) / n as f64).max(1e-300)];
        let mut buckets = vec![Vec::new(); n * n];
        for (k, el) in mesh.elements().iter().enumerate() {
            let mut bl = [f64::INFINITY; 2];
            let mut bh = [f64::NEG_INFINITY; 2];
            for &v in el {
                for d in 0..2 {
                    bl[d] = bl[d].min(nodes[v][d]);
                    bh[d] = bh[d].max(nodes[v][d]);
                }
            }
            let i0 = Self::index(bl[0], lo[0], cell[0], n);
            let i1 = Self::index(bh[0], lo[0], cell[0], n);
            let j0 = Self::index(bl[1], lo[1], cell[1], n);
            let j1 = Self::index(bh[1], lo[1], cell[1], n);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * n + i].push(k);
                }
            }
        }
        Self { origin: lo, cell, dims, buckets }
    }

    fn index(x: f64, lo: f64, h: f64, n: usize) -> usize {
        (((x - lo) / h).floor().max(0.0) as usize).min(n - 1)
    }

    /// Element containing `p` and the barycentric coordinates of `p` in it.
    /// Points slightly outside the mesh snap to the closest candidate element.
    pub fn locate(&self, mesh: &MeridianMesh, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let i = Self::index(p[0], self.origin[0], self.cell[0], self.dims[0]);
        let j = Self::index(p[1], self.origin[1], self.cell[1], self.dims[1]);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= self.dims[0] as i64 || jj >= self.dims[1] as i64 {
                    continue;
                }
                for &k in &self.buckets[jj as usize * self.dims[0] + ii as usize] {
                    let lam = barycentric(mesh, k, p);
                    let worst = lam[0].min(lam[1]).min(lam[2]);
                    if worst >= -1e-12 {
                        return Some((k, lam));
                    }
                    if best.map_or(true, |b| worst > b.2) {
                        best = Some((k, lam, worst));
                    }
                }
            }
        }
        best.filter(|b| b.2 > -1e-6).map(|b| (b.0, b.1))
    }
}

pub fn barycentric(mesh: &MeridianMesh, k: usize, p: [f64; 2]) -> [f64; 3] {
    let el = mesh.elements()[k];
    let [a, b, c] = [mesh.nodes()[el[0]], mesh.nodes()[el[1]], mesh.nodes()[el[2]]];
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}
