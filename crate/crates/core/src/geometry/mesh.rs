//! Triangulated meridian domains.

use std::collections::HashMap;

use super::profile::ShapeProfile;
use crate::error::{Error, Result};
use crate::params::Mode;

/// Boundary part an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Inlet disc `E` at `z = 0`.
    Inlet,
    /// Outlet disc `S` at `z = L`.
    Outlet,
    /// Lateral wall `Gamma`, the free boundary.
    Wall,
    /// Symmetry axis `r = 0`.
    Axis,
}

impl BoundaryTag {
    pub fn code(self) -> &'static str {
        match self {
            BoundaryTag::Inlet => "E",
            BoundaryTag::Outlet => "S",
            BoundaryTag::Wall => "Gamma",
            BoundaryTag::Axis => "Axis",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "E" => Some(BoundaryTag::Inlet),
            "S" => Some(BoundaryTag::Outlet),
            "Gamma" => Some(BoundaryTag::Wall),
            "Axis" => Some(BoundaryTag::Axis),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Straight-sided triangulation of `{0 <= r <= R(z), 0 <= z <= L}`.
///
/// Node coordinates are `[r, z]`. Elements are counter-clockwise. Wall edges
/// are stored in arc-length order from the inlet corner to the outlet corner.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianMesh {
    mode: Mode,
    length: f64,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    wall_chain: Vec<usize>,
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl MeridianMesh {
    /// Assembles a mesh from raw parts and checks element orientation.
    pub fn from_parts(
        mode: Mode,
        length: f64,
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        for (k, el) in elements.iter().enumerate() {
            if el.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::Mesher(format!("element {k} references a missing node")));
            }
        }
        let mut seen = HashMap::new();
        for e in &boundary_edges {
            let key = (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1]));
            if seen.insert(key, e.tag).is_some() {
                return Err(Error::Mesher(format!("boundary edge {key:?} tagged twice")));
            }
        }
        let wall_chain = Self::chain_wall(&boundary_edges)?;
        let mut mesh = Self { mode, length, nodes, elements, boundary_edges, wall_chain };
        mesh.orient_wall_edges();
        mesh.check_elements()?;
        Ok(mesh)
    }

    fn chain_wall(edges: &[BoundaryEdge]) -> Result<Vec<usize>> {
        let wall: Vec<[usize; 2]> = edges.iter().filter(|e| e.tag == BoundaryTag::Wall).map(|e| e.nodes).collect();
        if wall.is_empty() {
            return Ok(Vec::new());
        }
        let inlet: std::collections::HashSet<usize> =
            edges.iter().filter(|e| e.tag == BoundaryTag::Inlet).flat_map(|e| e.nodes).collect();
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for [a, b] in &wall {
            adj.entry(*a).or_default().push(*b);
            adj.entry(*b).or_default().push(*a);
        }
        let mut ends: Vec<usize> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
        ends.sort_unstable();
        if ends.len() != 2 || adj.values().any(|v| v.len() > 2) {
            return Err(Error::Mesher("wall edges do not form a single open chain".into()));
        }
        let start = if inlet.contains(&ends[1]) && !inlet.contains(&ends[0]) { ends[1] } else { ends[0] };
        let mut chain = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while chain.len() <= wall.len() {
            let next = adj[&cur].iter().copied().find(|&n| n != prev);
            match next {
                Some(n) => {
                    chain.push(n);
                    prev = cur;
                    cur = n;
                }
                None => break,
            }
        }
        if chain.len() != wall.len() + 1 {
            return Err(Error::Mesher("wall chain is disconnected".into()));
        }
        Ok(chain)
    }

    fn orient_wall_edges(&mut self) {
        if self.wall_chain.is_empty() {
            return;
        }
        let mut walls: Vec<BoundaryEdge> = self
            .wall_chain
            .windows(2)
            .map(|w| BoundaryEdge { nodes: [w[0], w[1]], tag: BoundaryTag::Wall })
            .collect();
        let mut rest: Vec<BoundaryEdge> = self.boundary_edges.iter().filter(|e| e.tag != BoundaryTag::Wall).copied().collect();
        rest.append(&mut walls);
        self.boundary_edges = rest;
    }

    fn check_elements(&self) -> Result<()> {
        for (k, el) in self.elements.iter().enumerate() {
            let a = signed_area(self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
            if !(a > 0.0) {
                return Err(Error::InvertedElement { element: k, area: a });
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Wall vertices ordered from the inlet corner to the outlet corner.
    pub fn wall_chain(&self) -> &[usize] {
        &self.wall_chain
    }

    /// Wall edges in arc-length order.
    pub fn wall_edges(&self) -> Vec<[usize; 2]> {
        self.wall_chain.windows(2).map(|w| [w[0], w[1]]).collect()
    }

    pub fn element_area(&self, k: usize) -> f64 {
        let el = self.elements[k];
        signed_area(self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]])
    }

    /// `kappa int rho dr dz`; exact for straight-sided elements.
    pub fn volume(&self) -> f64 {
        let mode = self.mode;
        (0..self.elements.len())
            .map(|k| {
                let el = self.elements[k];
                let rc = (self.nodes[el[0]][0] + self.nodes[el[1]][0] + self.nodes[el[2]][0]) / 3.0;
                self.element_area(k) * mode.weight(rc)
            })
            .sum()
    }

    /// Shortest element edge length.
    pub fn min_edge_length(&self) -> f64 {
        let mut h = f64::INFINITY;
        for el in &self.elements {
            for i in 0..3 {
                let a = self.nodes[el[i]];
                let b = self.nodes[el[(i + 1) % 3]];
                h = h.min(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Longest element edge length.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for el in &self.elements {
            for i in 0..3 {
                let a = self.nodes[el[i]];
                let b = self.nodes[el[(i + 1) % 3]];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Tags carried by each vertex (a corner vertex carries two).
    pub fn node_tags(&self) -> Vec<Vec<BoundaryTag>> {
        let mut tags = vec![Vec::new(); self.nodes.len()];
        for e in &self.boundary_edges {
            for &n in &e.nodes {
                if !tags[n].contains(&e.tag) {
                    tags[n].push(e.tag);
                }
            }
        }
        tags
    }

    /// Outward unit normal of the boundary edge `[a, b]` of this mesh.
    pub fn outward_normal(&self, a: usize, b: usize) -> [f64; 2] {
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let mut n = [t[1] / len, -t[0] / len];
        // Orient away from the opposite vertex of the adjacent element.
        if let Some(el) = self.elements.iter().find(|el| el.contains(&a) && el.contains(&b)) {
            let c = el.iter().copied().find(|&v| v != a && v != b).unwrap();
            let pc = self.nodes[c];
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if n[0] * (pc[0] - mid[0]) + n[1] * (pc[1] - mid[1]) > 0.0 {
                n = [-n[0], -n[1]];
            }
        }
        n
    }

    /// Averaged outward normals at the wall vertices (same order as `wall_chain`).
    pub fn wall_vertex_normals(&self) -> Vec<[f64; 2]> {
        let edges = self.wall_edges();
        let normals: Vec<[f64; 2]> = edges.iter().map(|e| self.outward_normal(e[0], e[1])).collect();
        let m = self.wall_chain.len();
        (0..m)
            .map(|i| {
                let mut n = [0.0, 0.0];
                if i > 0 {
                    n[0] += normals[i - 1][0];
                    n[1] += normals[i - 1][1];
                }
                if i < m - 1 {
                    n[0] += normals[i][0];
                    n[1] += normals[i][1];
                }
                let l = (n[0] * n[0] + n[1] * n[1]).sqrt();
                [n[0] / l, n[1] / l]
            })
            .collect()
    }

    /// Cumulative arc length at each wall vertex.
    pub fn wall_arc_lengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.wall_chain.len());
        let mut acc = 0.0;
        for (i, &v) in self.wall_chain.iter().enumerate() {
            if i > 0 {
                let a = self.nodes[self.wall_chain[i - 1]];
                let b = self.nodes[v];
                acc += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            }
            s.push(acc);
        }
        s
    }

    /// Moves the vertices by `displacement`; tags and connectivity are kept.
    pub fn deform(&self, displacement: &[[f64; 2]]) -> Result<Self> {
        deform_mesh(self, displacement)
    }
}

/// Local refinement toward the outlet (in `z`) and toward the wall (in `r`).
///
/// The cell size drops linearly from `h` to `ratio * h` over a band of width
/// `band` (a fraction of `L` axially and of `R(z)` radially) next to the
/// outlet and the wall. `ratio = 1` gives a uniform mesh.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshGrading {
    pub ratio: f64,
    pub band: f64,
}

impl MeshGrading {
    pub const UNIFORM: Self = Self { ratio: 1.0, band: 0.0 };
}

impl Default for MeshGrading {
    fn default() -> Self {
        Self { ratio: 0.1, band: 0.2 }
    }
}

/// Points `0 = x_0 < ... < x_n = 1` whose spacing follows the size function
/// `h (ratio + (1 - ratio) min(1, (1 - x) / band))`, with `h` the nominal
/// fraction `1 / n_uniform`.
pub fn graded_points(n_uniform: usize, grading: MeshGrading) -> Vec<f64> {
    if grading.ratio >= 1.0 || grading.band <= 0.0 {
        return (0..=n_uniform).map(|k| k as f64 / n_uniform as f64).collect();
    }
    let size = |x: f64| grading.ratio + (1.0 - grading.ratio) * ((1.0 - x) / grading.band).min(1.0);
    let samples = 8192;
    let mut cum = vec![0.0; samples + 1];
    for k in 0..samples {
        let (x0, x1) = (k as f64 / samples as f64, (k + 1) as f64 / samples as f64);
        cum[k + 1] = cum[k] + 0.5 * (1.0 / size(x0) + 1.0 / size(x1)) / samples as f64;
    }
    let n = (cum[samples] * n_uniform as f64).ceil() as usize;
    let mut pts = Vec::with_capacity(n + 1);
    let mut k = 0;
    for m in 0..=n {
        if m == n {
            pts.push(1.0);
            break;
        }
        let target = cum[samples] * m as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
        pts.push((k as f64 + frac) / samples as f64);
    }
    pts
}

/// Structured triangulation of `profile` with roughly `target_h` spacing,
/// graded toward the outlet and the wall with [`MeshGrading::default`].
pub fn mesh_profile(profile: &ShapeProfile, target_h: f64) -> Result<MeridianMesh> {
    mesh_profile_graded(profile, target_h, MeshGrading::default())
}

pub fn mesh_profile_graded(profile: &ShapeProfile, target_h: f64, grading: MeshGrading) -> Result<MeridianMesh> {
    let limit = profile.reference_radius().min(profile.length()) / 4.0;
    if !(target_h > 0.0 && target_h < limit) {
        return Err(Error::InvalidInput(format!("target_h must lie in (0, {limit}), got {target_h}")));
    }
    if !(grading.ratio > 0.0 && grading.ratio <= 1.0 && grading.band >= 0.0 && grading.band <= 1.0) {
        return Err(Error::InvalidInput(format!("invalid mesh grading {grading:?}")));
    }
    let nr = (profile.reference_radius() / target_h).ceil() as usize;
    let nz = (profile.length() / target_h).ceil() as usize;
    mesh_profile_fractions(profile, &graded_points(nr, grading), &graded_points(nz, grading))
}

/// Mapped mesh with `nr` radial and `nz` axial divisions: vertex `(i, j)`
/// sits at `r = (i / nr) R(z_j)`, `z_j = j L / nz`, so wall vertices lie
/// exactly on the profile.
pub fn mesh_profile_divisions(profile: &ShapeProfile, nr: usize, nz: usize) -> Result<MeridianMesh> {
    if nr == 0 || nz == 0 {
        return Err(Error::Mesher("need at least one division in each direction".into()));
    }
    let xi: Vec<f64> = (0..=nr).map(|i| i as f64 / nr as f64).collect();
    let eta: Vec<f64> = (0..=nz).map(|j| j as f64 / nz as f64).collect();
    mesh_profile_fractions(profile, &xi, &eta)
}

/// Mapped mesh on increasing fractions `xi` (radial, of `R(z)`) and `eta`
/// (axial, of `L`), both running from 0 to 1.
pub fn mesh_profile_fractions(profile: &ShapeProfile, xi: &[f64], eta: &[f64]) -> Result<MeridianMesh> {
    let (nr, nz) = (xi.len() - 1, eta.len() - 1);
    if nr == 0 || nz == 0 {
        return Err(Error::Mesher("need at least one division in each direction".into()));
    }
    let length = profile.length();
    let id = |i: usize, j: usize| j * (nr + 1) + i;
    let mut nodes = Vec::with_capacity((nr + 1) * (nz + 1));
    for j in 0..=nz {
        let z = if j == nz { length } else { length * eta[j] };
        let rw = profile.radius(z);
        if !(rw > 0.0) {
            return Err(Error::Mesher(format!("degenerate wall radius {rw} at z = {z}")));
        }
        for i in 0..=nr {
            let r = if i == nr { rw } else { rw * xi[i] };
            nodes.push([r, z]);
        }
    }
    let mut elements = Vec::with_capacity(2 * nr * nz);
    for j in 0..nz {
        for i in 0..nr {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            // Corner cells at (R, 0) and (0, L) are split through the corner so
            // that no triangle has all three vertices on the boundary.
            let anti = (i == nr - 1 && j == 0) || (i == 0 && j == nz - 1);
            let anti = anti && !(nr == 1 && nz == 1);
            if anti {
                elements.push([a, b, d]);
                elements.push([b, c, d]);
            } else {
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..nr {
        edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: BoundaryTag::Inlet });
        edges.push(BoundaryEdge { nodes: [id(i, nz), id(i + 1, nz)], tag: BoundaryTag::Outlet });
    }
    for j in 0..nz {
        edges.push(BoundaryEdge { nodes: [id(0, j), id(0, j + 1)], tag: BoundaryTag::Axis });
        edges.push(BoundaryEdge { nodes: [id(nr, j), id(nr, j + 1)], tag: BoundaryTag::Wall });
    }
    MeridianMesh::from_parts(profile.mode(), length, nodes, elements, edges)
}

/// Shifts every vertex by `displacement`.
///
/// The displacement must vanish on the inlet and outlet and be purely axial
/// on the symmetry axis. Inverted elements are rejected.
pub fn deform_mesh(mesh: &MeridianMesh, displacement: &[[f64; 2]]) -> Result<MeridianMesh> {
    if displacement.len() != mesh.nodes.len() {
        return Err(Error::InvalidInput("displacement length differs from node count".into()));
    }
    let tags = mesh.node_tags();
    for (i, t) in tags.iter().enumerate() {
        let d = displacement[i];
        if (t.contains(&BoundaryTag::Inlet) || t.contains(&BoundaryTag::Outlet)) && (d[0] != 0.0 || d[1] != 0.0) {
            return Err(Error::InvalidInput(format!("displacement does not vanish on inlet/outlet node {i}")));
        }
        if t.contains(&BoundaryTag::Axis) && d[0] != 0.0 {
            return Err(Error::InvalidInput(format!("displacement moves axis node {i} off the axis")));
        }
    }
    let nodes: Vec<[f64; 2]> = mesh.nodes.iter().zip(displacement).map(|(x, d)| [x[0] + d[0], x[1] + d[1]]).collect();
    let out = MeridianMesh { nodes, ..mesh.clone() };
    out.check_elements()?;
    Ok(out)
}
