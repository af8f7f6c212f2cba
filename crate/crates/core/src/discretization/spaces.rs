//! Taylor–Hood P2/P1 dof maps on a meridian mesh.

use std::collections::HashMap;

use super::element::{ElementGeometry, LOCAL_EDGES};
use crate::geometry::{BoundaryTag, MeridianMesh};
use crate::params::Mode;

/// Velocity (P2, two components) and pressure (P1) spaces.
///
/// P2 nodes are the mesh vertices followed by one midpoint per edge.
/// Velocity dof `2 * k + c` is component `c` (0 = r, 1 = z) at P2 node `k`;
/// in the coupled unknown vector the pressure dofs follow the velocity dofs.
#[derive(Debug, Clone)]
pub struct FunctionSpaces {
    mesh: MeridianMesh,
    edges: Vec<[usize; 2]>,
    edge_index: HashMap<(usize, usize), usize>,
    element_edges: Vec<[usize; 3]>,
    p2_coords: Vec<[f64; 2]>,
    p2_tags: Vec<Vec<BoundaryTag>>,
}

impl FunctionSpaces {
    pub fn new(mesh: &MeridianMesh) -> Self {
        let nn = mesh.nodes().len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut element_edges = Vec::with_capacity(mesh.elements().len());
        for el in mesh.elements() {
            let mut ids = [0; 3];
            for (k, [i, j]) in LOCAL_EDGES.iter().enumerate() {
                let (a, b) = (el[*i], el[*j]);
                let key = (a.min(b), a.max(b));
                ids[k] = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
            element_edges.push(ids);
        }
        let nodes = mesh.nodes();
        let mut p2_coords: Vec<[f64; 2]> = nodes.to_vec();
        p2_coords.extend(edges.iter().map(|[a, b]| {
            [0.5 * (nodes[*a][0] + nodes[*b][0]), 0.5 * (nodes[*a][1] + nodes[*b][1])]
        }));
        let mut p2_tags = mesh.node_tags();
        p2_tags.resize(nn + edges.len(), Vec::new());
        for be in mesh.boundary_edges() {
            let [a, b] = be.nodes;
            let e = edge_index[&(a.min(b), a.max(b))];
            p2_tags[nn + e].push(be.tag);
        }
        Self { mesh: mesh.clone(), edges, edge_index, element_edges, p2_coords, p2_tags }
    }

    pub fn mesh(&self) -> &MeridianMesh {
        &self.mesh
    }

    pub fn mode(&self) -> Mode {
        self.mesh.mode()
    }

    pub fn n_p2(&self) -> usize {
        self.p2_coords.len()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_p2()
    }

    pub fn n_pressure(&self) -> usize {
        self.mesh.nodes().len()
    }

    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn p2_coords(&self) -> &[[f64; 2]] {
        &self.p2_coords
    }

    pub fn p2_tags(&self, k: usize) -> &[BoundaryTag] {
        &self.p2_tags[k]
    }

    /// Global P2 node ids of element `k` in local order.
    pub fn element_p2(&self, k: usize) -> [usize; 6] {
        let el = self.mesh.elements()[k];
        let ed = self.element_edges[k];
        let nn = self.mesh.nodes().len();
        [el[0], el[1], el[2], nn + ed[0], nn + ed[1], nn + ed[2]]
    }

    pub fn element_geometry(&self, k: usize) -> ElementGeometry {
        let el = self.mesh.elements()[k];
        let n = self.mesh.nodes();
        ElementGeometry::new([n[el[0]], n[el[1]], n[el[2]]])
    }

    /// Global P2 id of the midpoint of mesh edge `{a, b}`, if it exists.
    pub fn edge_midpoint(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).map(|e| self.mesh.nodes().len() + e)
    }

    /// P2 node ids lying on boundary edges with `tag` (vertices and midpoints).
    pub fn p2_nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.n_p2()).filter(|&k| self.p2_tags[k].contains(&tag)).collect()
    }

    /// Interpolates a vector field at the P2 nodes into velocity dofs.
    pub fn interpolate_velocity(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_velocity()];
        for (k, [r, z]) in self.p2_coords.iter().enumerate() {
            let v = f(*r, *z);
            u[2 * k] = v[0];
            u[2 * k + 1] = v[1];
        }
        u
    }

    /// Interpolates a scalar at the mesh vertices into pressure dofs.
    pub fn interpolate_pressure(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.mesh.nodes().iter().map(|[r, z]| f(*r, *z)).collect()
    }
}

pub fn build_spaces(mesh: &MeridianMesh) -> FunctionSpaces {
    FunctionSpaces::new(mesh)
}

/// One wall edge in arc-length order with its adjacent element.
#[derive(Debug, Clone, Copy)]
pub struct WallEdge {
    pub nodes: [usize; 2],
    pub element: usize,
    /// Arc length at the edge midpoint, measured from the inlet corner.
    pub s_mid: f64,
    pub length: f64,
    pub normal: [f64; 2],
}

impl FunctionSpaces {
    /// Wall edges ordered from the inlet corner to the outlet corner.
    pub fn wall_edges(&self) -> Vec<WallEdge> {
        let mesh = &self.mesh;
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, el) in mesh.elements().iter().enumerate() {
            for [i, j] in LOCAL_EDGES {
                owner.insert((el[i].min(el[j]), el[i].max(el[j])), k);
            }
        }
        let s = mesh.wall_arc_lengths();
        mesh.wall_edges()
            .iter()
            .enumerate()
            .map(|(i, &[a, b])| WallEdge {
                nodes: [a, b],
                element: owner[&(a.min(b), a.max(b))],
                s_mid: 0.5 * (s[i] + s[i + 1]),
                length: s[i + 1] - s[i],
                normal: mesh.outward_normal(a, b),
            })
            .collect()
    }
}
