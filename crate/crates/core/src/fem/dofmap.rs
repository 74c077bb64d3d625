//! Degree-of-freedom numbering.
//!
//! Scalar displacement nodes are numbered vertices first, then edges (Taylor-Hood)
//! or cells (mini). Vector dof `2 * node + component`. Pressure dofs are the
//! mesh vertices. Displacement dofs anchored on the Dirichlet boundary are
//! constrained to zero and removed from the free numbering.

use super::element::ElementFamily;
use crate::error::{Error, Result};
use crate::mesh::{build_edge_topology, EdgeClass, EdgeTopology, Mesh, Point};

/// Geometric location of a scalar displacement node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Vertex(usize),
    /// Edge midpoint (Taylor-Hood only).
    Edge(usize),
    /// Cell bubble (mini only).
    Cell(usize),
}

pub const CONSTRAINED: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct DofMap {
    family: ElementFamily,
    topology: EdgeTopology,
    anchors: Vec<Anchor>,
    /// `local_scalar()` entries per cell.
    cell_nodes: Vec<usize>,
    num_pressure: usize,
    /// Free index of each vector displacement dof, `CONSTRAINED` on Γ_D.
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
}

pub fn build_dof_map(mesh: &Mesh, family: ElementFamily) -> Result<DofMap> {
    build(mesh, family, true)
}

/// Dof map with no constrained dofs, for kernel and consistency checks.
pub fn build_unconstrained_dof_map(mesh: &Mesh, family: ElementFamily) -> Result<DofMap> {
    build(mesh, family, false)
}

fn build(mesh: &Mesh, family: ElementFamily, constrain: bool) -> Result<DofMap> {
    let topology = build_edge_topology(mesh)?;
    let nv = mesh.num_vertices();
    let nls = family.local_scalar_dofs();
    let mut anchors: Vec<Anchor> = (0..nv).map(Anchor::Vertex).collect();
    let mut cell_nodes = Vec::with_capacity(nls * mesh.num_cells());
    match family {
        ElementFamily::TaylorHood => {
            anchors.extend((0..topology.num_edges()).map(Anchor::Edge));
            for (cell, edges) in mesh.cells().iter().zip(&topology.cell_edges) {
                cell_nodes.extend_from_slice(cell);
                cell_nodes.extend(edges.iter().map(|&e| nv + e));
            }
        }
        ElementFamily::Mini => {
            anchors.extend((0..mesh.num_cells()).map(Anchor::Cell));
            for (c, cell) in mesh.cells().iter().enumerate() {
                cell_nodes.extend_from_slice(cell);
                cell_nodes.push(nv + c);
            }
        }
    }

    let mut on_dirichlet = vec![false; anchors.len()];
    if constrain {
        for (e, edge) in topology.edges.iter().enumerate() {
            if edge.class == EdgeClass::Dirichlet {
                on_dirichlet[edge.vertices[0]] = true;
                on_dirichlet[edge.vertices[1]] = true;
                if family == ElementFamily::TaylorHood {
                    on_dirichlet[nv + e] = true;
                }
            }
        }
        if !on_dirichlet.iter().any(|&d| d) {
            return Err(Error::EmptyDirichlet);
        }
    }
    let mut free_index = vec![CONSTRAINED; 2 * anchors.len()];
    let mut free_dofs = Vec::with_capacity(free_index.len());
    for (dof, slot) in free_index.iter_mut().enumerate() {
        if !on_dirichlet[dof / 2] {
            *slot = free_dofs.len();
            free_dofs.push(dof);
        }
    }
    Ok(DofMap {
        family,
        topology,
        anchors,
        cell_nodes,
        num_pressure: nv,
        free_index,
        free_dofs,
    })
}

impl DofMap {
    pub fn family(&self) -> ElementFamily {
        self.family
    }

    pub fn topology(&self) -> &EdgeTopology {
        &self.topology
    }

    pub fn num_scalar_nodes(&self) -> usize {
        self.anchors.len()
    }

    /// All vector displacement dofs, constrained ones included.
    pub fn num_displacement(&self) -> usize {
        2 * self.anchors.len()
    }

    pub fn num_free_displacement(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_pressure(&self) -> usize {
        self.num_pressure
    }

    /// Displacement plus pressure dofs, constrained ones included.
    pub fn total_dofs(&self) -> usize {
        self.num_displacement() + self.num_pressure
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn anchor_point(&self, mesh: &Mesh, node: usize) -> Point {
        match self.anchors[node] {
            Anchor::Vertex(v) => mesh.vertices()[v],
            Anchor::Edge(e) => {
                let [a, b] = self.topology.edges[e].vertices;
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]
            }
            Anchor::Cell(c) => mesh.cell_centroid(c),
        }
    }

    /// Global scalar nodes of cell `c`, in shape-function order.
    #[inline]
    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        let n = self.family.local_scalar_dofs();
        &self.cell_nodes[n * c..n * (c + 1)]
    }

    /// Free index of a vector displacement dof, or `CONSTRAINED`.
    #[inline]
    pub fn free_index(&self, dof: usize) -> usize {
        self.free_index[dof]
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.free_index[dof] == CONSTRAINED
    }

    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.free_index.len()).filter(|&d| self.is_dirichlet(d)).collect()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Restriction of a full displacement vector to the free dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.num_displacement());
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Extension by zero of a free-dof vector.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.num_free_displacement());
        let mut full = vec![0.0; self.num_displacement()];
        for (&d, &v) in self.free_dofs.iter().zip(free) {
            full[d] = v;
        }
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_mesh, unit_square_mesh_with, SideKinds};

    #[test]
    fn counts_on_two_cell_square() {
        let m = unit_square_mesh(1).unwrap();
        let th = build_dof_map(&m, ElementFamily::TaylorHood).unwrap();
        assert_eq!(th.num_displacement(), 18);
        assert_eq!(th.num_pressure(), 4);
        let mini = build_dof_map(&m, ElementFamily::Mini).unwrap();
        assert_eq!(mini.num_displacement(), 12);
        assert_eq!(mini.num_pressure(), 4);
    }

    #[test]
    fn bottom_clamped_th_dirichlet_set() {
        let m = unit_square_mesh(1).unwrap();
        let th = build_dof_map(&m, ElementFamily::TaylorHood).unwrap();
        let d = th.dirichlet_dofs();
        assert_eq!(d.len(), 6);
        for dof in d {
            let p = th.anchor_point(&m, dof / 2);
            assert!(p[1].abs() < 1e-15);
        }
        assert_eq!(th.num_free_displacement(), 12);
    }

    #[test]
    fn mini_bubbles_never_constrained() {
        let m = unit_square_mesh_with(2, SideKinds::ALL_DIRICHLET).unwrap();
        let mini = build_dof_map(&m, ElementFamily::Mini).unwrap();
        // only the interior vertex and the 8 bubbles remain
        assert_eq!(mini.num_free_displacement(), 2 * (1 + 8));
    }

    #[test]
    fn local_maps_are_injective() {
        let m = unit_square_mesh(3).unwrap();
        for fam in [ElementFamily::TaylorHood, ElementFamily::Mini] {
            let dm = build_dof_map(&m, fam).unwrap();
            for c in 0..m.num_cells() {
                let mut n = dm.cell_nodes(c).to_vec();
                n.sort_unstable();
                n.dedup();
                assert_eq!(n.len(), fam.local_scalar_dofs());
            }
        }
    }

    #[test]
    fn restrict_extend_round_trip() {
        let m = unit_square_mesh(2).unwrap();
        let dm = build_dof_map(&m, ElementFamily::TaylorHood).unwrap();
        let free: Vec<f64> = (0..dm.num_free_displacement()).map(|i| i as f64).collect();
        assert_eq!(dm.restrict(&dm.extend(&free)), free);
        assert!(build_unconstrained_dof_map(&m, ElementFamily::TaylorHood)
            .unwrap()
            .dirichlet_dofs()
            .is_empty());
    }
}
