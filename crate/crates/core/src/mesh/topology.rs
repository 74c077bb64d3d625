use std::collections::HashMap;

use super::{edge_key, BoundaryKind, Mesh};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, ordered as they appear counter-clockwise in the first cell.
    pub vertices: [usize; 2],
    /// Adjacent cells; the second entry is `None` on the boundary.
    pub cells: [Option<usize>; 2],
    /// Local edge index of this edge inside each adjacent cell.
    pub local: [u8; 2],
    /// Unit normal pointing out of the first adjacent cell.
    pub normal: [f64; 2],
    pub length: f64,
    pub class: EdgeClass,
}

impl Edge {
    pub fn first_cell(&self) -> usize {
        self.cells[0].expect("every edge has at least one cell")
    }
}

#[derive(Clone, Debug)]
pub struct EdgeTopology {
    pub edges: Vec<Edge>,
    /// `cell_edges[c][i]` is the edge opposite local vertex `i` of cell `c`.
    pub cell_edges: Vec<[usize; 3]>,
}

impl EdgeTopology {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

pub fn build_edge_topology(mesh: &Mesh) -> Result<EdgeTopology> {
    let kinds: HashMap<(usize, usize), BoundaryKind> = mesh
        .boundary_edges()
        .iter()
        .map(|e| (edge_key(e.vertices[0], e.vertices[1]), e.kind))
        .collect();
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.num_cells() / 2 + 8);
    let mut edges: Vec<Edge> = Vec::with_capacity(3 * mesh.num_cells() / 2 + 8);
    let mut cell_edges = Vec::with_capacity(mesh.num_cells());
    let verts = mesh.vertices();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let mut ce = [0usize; 3];
        for i in 0..3 {
            let (a, b) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
            let key = edge_key(a, b);
            match index.get(&key) {
                Some(&e) => {
                    let edge = &mut edges[e];
                    if edge.cells[1].is_some() {
                        return Err(Error::NonConforming(format!(
                            "edge ({}, {}) has more than two cells",
                            key.0, key.1
                        )));
                    }
                    edge.cells[1] = Some(c);
                    edge.local[1] = i as u8;
                    ce[i] = e;
                }
                None => {
                    let (pa, pb) = (verts[a], verts[b]);
                    let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                    let length = dx.hypot(dy);
                    index.insert(key, edges.len());
                    ce[i] = edges.len();
                    edges.push(Edge {
                        vertices: [a, b],
                        cells: [Some(c), None],
                        local: [i as u8, 0],
                        normal: [dy / length, -dx / length],
                        length,
                        class: EdgeClass::Interior,
                    });
                }
            }
        }
        cell_edges.push(ce);
    }
    for edge in &mut edges {
        let key = edge_key(edge.vertices[0], edge.vertices[1]);
        match (edge.cells[1], kinds.get(&key)) {
            (Some(_), None) => {}
            (None, Some(BoundaryKind::Dirichlet)) => edge.class = EdgeClass::Dirichlet,
            (None, Some(BoundaryKind::Neumann)) => edge.class = EdgeClass::Neumann,
            (None, None) => return Err(Error::UntaggedBoundaryEdge(key.0, key.1)),
            (Some(_), Some(_)) => {
                return Err(Error::NonConforming(format!(
                    "interior edge ({}, {}) carries a boundary tag",
                    key.0, key.1
                )))
            }
        }
    }
    Ok(EdgeTopology { edges, cell_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    #[test]
    fn two_cell_square() {
        let m = unit_square_mesh(1).unwrap();
        let t = build_edge_topology(&m).unwrap();
        assert_eq!(t.num_edges(), 5);
        let interior: Vec<_> = t
            .edges
            .iter()
            .filter(|e| e.class == EdgeClass::Interior)
            .collect();
        assert_eq!(interior.len(), 1);
        assert!((interior[0].length - 2f64.sqrt()).abs() <= 1e-14);
        let normal = interior[0].normal;
        assert!((normal[0].hypot(normal[1]) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn boundary_audit_n2() {
        let m = unit_square_mesh(2).unwrap();
        let t = build_edge_topology(&m).unwrap();
        let boundary: Vec<_> = t.edges.iter().filter(|e| e.class != EdgeClass::Interior).collect();
        assert_eq!(boundary.len(), 8);
        let refs: usize = t
            .cell_edges
            .iter()
            .flatten()
            .filter(|&&e| t.edges[e].class != EdgeClass::Interior)
            .count();
        assert_eq!(refs, 8);
        assert!(boundary.iter().all(|e| e.cells[1].is_none()));
        let total: usize = t.edges.iter().map(|e| e.cells.iter().flatten().count()).sum();
        assert_eq!(total, 3 * m.num_cells());
    }

    #[test]
    fn normals_point_outward() {
        let m = unit_square_mesh(3).unwrap();
        let t = build_edge_topology(&m).unwrap();
        for e in &t.edges {
            let c = m.cell_centroid(e.first_cell());
            let a = m.vertices()[e.vertices[0]];
            let d = (a[0] - c[0]) * e.normal[0] + (a[1] - c[1]) * e.normal[1];
            assert!(d > 0.0);
        }
    }
}
