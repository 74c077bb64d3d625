//! Newest-vertex bisection.
//!
//! A marked cell has all three of its edges marked, so it is split into four
//! children (two bisection generations). Closure then marks the refinement
//! edge of every cell that has any marked edge, until stable; after that each
//! cell bisects its refinement edge first and its children bisect theirs when
//! marked. Every marked edge is split from both sides, so the result is
//! conforming.

use std::collections::{HashMap, HashSet};

use super::{edge_key, BoundaryEdge, Mesh, Point};

/// Result of [`refine`]: the new mesh and, for each parent cell, the indices
/// of its children in the new mesh (a single entry when untouched).
#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Mesh,
    pub children: Vec<Vec<usize>>,
}

pub fn refine(mesh: &Mesh, marked: &[usize]) -> Refinement {
    if marked.is_empty() {
        return Refinement {
            mesh: mesh.clone(),
            children: (0..mesh.num_cells()).map(|c| vec![c]).collect(),
        };
    }
    let cells = mesh.cells();
    let ref_edge = mesh.refinement_edge();
    let local_edge = |c: usize, i: usize| {
        let cell = cells[c];
        edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3])
    };

    let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(3 * cells.len() / 2);
    for c in 0..cells.len() {
        for i in 0..3 {
            edge_cells.entry(local_edge(c, i)).or_default().push(c);
        }
    }

    let mut marked_edges: HashSet<(usize, usize)> = HashSet::new();
    let mut queue: Vec<usize> = Vec::new();
    for &c in marked {
        assert!(c < cells.len(), "marked cell {c} out of range");
        for i in 0..3 {
            if marked_edges.insert(local_edge(c, i)) {
                queue.extend(edge_cells[&local_edge(c, i)].iter().copied());
            }
        }
    }
    // closure
    while let Some(c) = queue.pop() {
        let re = local_edge(c, ref_edge[c] as usize);
        if !marked_edges.contains(&re) {
            marked_edges.insert(re);
            queue.extend(edge_cells[&re].iter().copied());
        }
    }

    let mut vertices: Vec<Point> = mesh.vertices().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(marked_edges.len());
    let mut new_cells: Vec<[usize; 3]> = Vec::with_capacity(cells.len() + 3 * marked_edges.len());
    let mut new_sub = Vec::with_capacity(new_cells.capacity());
    let mut new_ref = Vec::with_capacity(new_cells.capacity());
    let mut children = Vec::with_capacity(cells.len());

    for c in 0..cells.len() {
        let cell = cells[c];
        let r = ref_edge[c] as usize;
        // peak first: the refinement edge is (a, b)
        let tri = [cell[r], cell[(r + 1) % 3], cell[(r + 2) % 3]];
        let first = new_cells.len();
        let mut stack = vec![(tri, 0u8)];
        while let Some((t, generation)) = stack.pop() {
            let [p, a, b] = t;
            let key = edge_key(a, b);
            if generation < 2 && marked_edges.contains(&key) {
                let m = *midpoint.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                    vertices.len() - 1
                });
                // children (p, a, m) and (p, m, b) rewritten peak-first; pushed
                // in reverse so the first child is emitted first
                stack.push(([m, b, p], generation + 1));
                stack.push(([m, p, a], generation + 1));
            } else {
                new_cells.push(t);
                new_sub.push(mesh.cell_subdomain()[c]);
                new_ref.push(0u8);
            }
        }
        children.push((first..new_cells.len()).collect());
    }

    let mut boundary = Vec::with_capacity(mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let [a, b] = e.vertices;
        match midpoint.get(&edge_key(a, b)) {
            Some(&m) => {
                boundary.push(BoundaryEdge {
                    vertices: [a, m],
                    ..e.clone()
                });
                boundary.push(BoundaryEdge {
                    vertices: [m, b],
                    ..e.clone()
                });
            }
            None => boundary.push(e.clone()),
        }
    }

    Refinement {
        mesh: Mesh::from_parts_unchecked(vertices, new_cells, boundary, new_sub, new_ref),
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{l_shape_mesh, unit_square_mesh};

    fn audit(m: &Mesh) {
        m.check_conformity().expect("conforming");
    }

    #[test]
    fn refine_all_preserves_area() {
        let m = unit_square_mesh(1).unwrap();
        let r = refine(&m, &[0, 1]);
        audit(&r.mesh);
        assert_eq!(r.mesh.num_cells(), 8);
        assert!((r.mesh.total_area() - 1.0).abs() <= 1e-14);
        assert_eq!(r.children.iter().map(Vec::len).sum::<usize>(), 8);
    }

    #[test]
    fn single_mark_stays_conforming() {
        let m = unit_square_mesh(1).unwrap();
        let r = refine(&m, &[0]);
        audit(&r.mesh);
        assert!(r.children[0].len() == 4);
        // the neighbour bisects the shared diagonal
        assert!(r.children[1].len() >= 2);
        assert!((r.mesh.total_area() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn empty_mark_is_identity() {
        let m = unit_square_mesh(2).unwrap();
        let r = refine(&m, &[]);
        assert_eq!(r.mesh, m);
    }

    #[test]
    fn subdomains_and_tags_are_inherited() {
        let m = l_shape_mesh(1).unwrap();
        let r = refine(&m, &[0, 3]);
        audit(&r.mesh);
        for (parent, kids) in r.children.iter().enumerate() {
            for &k in kids {
                assert_eq!(r.mesh.cell_subdomain()[k], m.cell_subdomain()[parent]);
            }
        }
        let len_of = |mesh: &Mesh, kind| -> f64 {
            mesh.boundary_edges()
                .iter()
                .filter(|e| e.kind == kind)
                .map(|e| {
                    let (p, q) = (mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]);
                    (p[0] - q[0]).hypot(p[1] - q[1])
                })
                .sum()
        };
        use crate::mesh::BoundaryKind::*;
        assert!((len_of(&m, Neumann) - len_of(&r.mesh, Neumann)).abs() < 1e-13);
        assert!((len_of(&m, Dirichlet) - len_of(&r.mesh, Dirichlet)).abs() < 1e-13);
    }

    #[test]
    fn corner_refinement_keeps_angles() {
        let mut m = l_shape_mesh(1).unwrap();
        let initial = m.min_angle();
        for _ in 0..10 {
            // mark cells touching the re-entrant corner
            let marked: Vec<usize> = (0..m.num_cells())
                .filter(|&c| m.cell_points(c).iter().any(|p| p[0].hypot(p[1]) < 1e-12))
                .collect();
            m = refine(&m, &marked).mesh;
            audit(&m);
            assert!(m.min_angle() >= 0.5 * initial - 1e-12);
        }
        assert!((m.total_area() - 3.0).abs() < 1e-12);
    }
}
