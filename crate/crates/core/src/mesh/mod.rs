//! Conforming triangle meshes with tagged boundaries and subdomains.

mod io;
mod refine;
mod topology;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_mesh, parse_msh2, parse_native, write_native, MeshFormat};
pub use refine::{refine, Refinement};
pub use topology::{build_edge_topology, Edge, EdgeClass, EdgeTopology};

pub type Point = [f64; 2];

/// Boundary condition carried by a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub kind: BoundaryKind,
    pub label: Option<String>,
}

impl BoundaryEdge {
    pub fn new(a: usize, b: usize, kind: BoundaryKind) -> Self {
        Self {
            vertices: [a, b],
            kind,
            label: None,
        }
    }

    pub fn labeled(a: usize, b: usize, kind: BoundaryKind, label: impl Into<String>) -> Self {
        Self {
            vertices: [a, b],
            kind,
            label: Some(label.into()),
        }
    }
}

/// A conforming triangulation. Immutable once built; refinement returns a new
/// mesh.
///
/// Cells are stored counter-clockwise. Local edge `i` of a cell is the edge
/// opposite local vertex `i`; `refinement_edge[c]` names the local edge that
/// newest-vertex bisection splits first.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    cell_subdomain: Vec<i32>,
    refinement_edge: Vec<u8>,
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

#[inline]
fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

impl Mesh {
    /// Builds and validates a mesh. Clockwise cells are reoriented, the
    /// initial refinement edge of each cell is its longest edge.
    pub fn new(
        vertices: Vec<Point>,
        mut cells: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
        cell_subdomain: Vec<i32>,
    ) -> Result<Self> {
        if cell_subdomain.len() != cells.len() {
            return Err(Error::InvalidMesh(format!(
                "{} subdomain tags for {} cells",
                cell_subdomain.len(),
                cells.len()
            )));
        }
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references a vertex out of range"
                )));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area.abs() <= f64::EPSILON * 1e-3 {
                return Err(Error::DegenerateCell(c));
            }
            if area < 0.0 {
                cell.swap(1, 2);
            }
        }
        let refinement_edge = cells
            .iter()
            .map(|cell| {
                let p = cell.map(|v| vertices[v]);
                let lens = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
                let mut best = 0u8;
                for i in 1..3u8 {
                    if lens[i as usize] > lens[best as usize] * (1.0 + 1e-12) {
                        best = i;
                    }
                }
                best
            })
            .collect();
        let mesh = Self {
            vertices,
            cells,
            boundary,
            cell_subdomain,
            refinement_edge,
        };
        mesh.check_conformity()?;
        if !mesh.boundary.iter().any(|e| e.kind == BoundaryKind::Dirichlet) {
            return Err(Error::EmptyDirichlet);
        }
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
        cell_subdomain: Vec<i32>,
        refinement_edge: Vec<u8>,
    ) -> Self {
        Self {
            vertices,
            cells,
            boundary,
            cell_subdomain,
            refinement_edge,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn cell_subdomain(&self) -> &[i32] {
        &self.cell_subdomain
    }

    pub fn refinement_edge(&self) -> &[u8] {
        &self.refinement_edge
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [p, q, r] = self.cell_points(c);
        signed_area(p, q, r)
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let [p, q, r] = self.cell_points(c);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Longest edge of the cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let [p, q, r] = self.cell_points(c);
        dist(p, q).max(dist(q, r)).max(dist(r, p))
    }

    /// Mesh size `h`: the largest cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Smallest interior angle over all cells, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for c in 0..self.num_cells() {
            let p = self.cell_points(c);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let d = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [d[0] - a[0], d[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    pub fn has_neumann_boundary(&self) -> bool {
        self.boundary.iter().any(|e| e.kind == BoundaryKind::Neumann)
    }

    /// Returns a copy whose boundary kinds are replaced by `kind_of(edge)`.
    pub fn with_boundary_kinds<F>(&self, mut kind_of: F) -> Result<Self>
    where
        F: FnMut(&BoundaryEdge) -> BoundaryKind,
    {
        let mut mesh = self.clone();
        for e in &mut mesh.boundary {
            e.kind = kind_of(e);
        }
        if !mesh.boundary.iter().any(|e| e.kind == BoundaryKind::Dirichlet) {
            return Err(Error::EmptyDirichlet);
        }
        Ok(mesh)
    }

    /// Edge-sharing audit: every edge belongs to one or two cells, the
    /// one-cell edges are exactly the tagged boundary edges, no boundary edge
    /// hides a hanging node, and every cell is positively oriented.
    pub fn check_conformity(&self) -> Result<()> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.cells.len());
        for (c, cell) in self.cells.iter().enumerate() {
            if self.cell_area(c) <= 0.0 {
                return Err(Error::NonConforming(format!("cell {c} is not counter-clockwise")));
            }
            for i in 0..3 {
                *count
                    .entry(edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3]))
                    .or_insert(0) += 1;
            }
        }
        let mut tagged = HashSet::with_capacity(self.boundary.len());
        for e in &self.boundary {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            if !tagged.insert(key) {
                return Err(Error::NonConforming(format!(
                    "boundary edge ({}, {}) tagged twice",
                    key.0, key.1
                )));
            }
            match count.get(&key) {
                Some(1) => {}
                Some(_) => {
                    return Err(Error::NonConforming(format!(
                        "tagged boundary edge ({}, {}) is interior",
                        key.0, key.1
                    )))
                }
                None => {
                    return Err(Error::NonConforming(format!(
                        "tagged boundary edge ({}, {}) is not a cell edge",
                        key.0, key.1
                    )))
                }
            }
        }
        let mut open: HashMap<usize, Vec<usize>> = HashMap::new();
        for (&key, &n) in &count {
            if n > 2 {
                return Err(Error::NonConforming(format!(
                    "edge ({}, {}) shared by {n} cells",
                    key.0, key.1
                )));
            }
            if n == 1 {
                if !tagged.contains(&key) {
                    return Err(Error::UntaggedBoundaryEdge(key.0, key.1));
                }
                open.entry(key.0).or_default().push(key.1);
                open.entry(key.1).or_default().push(key.0);
            }
        }
        // hanging node: boundary edge (a, b) plus boundary edges (a, m), (m, b) with m on [a, b]
        for &(a, b) in &tagged {
            let (Some(na), Some(nb)) = (open.get(&a), open.get(&b)) else {
                continue;
            };
            for &m in na {
                if m == b || !nb.contains(&m) {
                    continue;
                }
                let (pa, pb, pm) = (self.vertices[a], self.vertices[b], self.vertices[m]);
                let len = dist(pa, pb);
                if signed_area(pa, pb, pm).abs() <= 1e-12 * len * len
                    && (dist(pa, pm) + dist(pm, pb) - len).abs() <= 1e-12 * len
                {
                    return Err(Error::NonConforming(format!(
                        "hanging node {m} on edge ({a}, {b})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Boundary kinds of the four sides of a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideKinds {
    pub bottom: BoundaryKind,
    pub right: BoundaryKind,
    pub top: BoundaryKind,
    pub left: BoundaryKind,
}

impl SideKinds {
    /// Clamped at the bottom, free elsewhere.
    pub const BOTTOM_CLAMPED: SideKinds = SideKinds {
        bottom: BoundaryKind::Dirichlet,
        right: BoundaryKind::Neumann,
        top: BoundaryKind::Neumann,
        left: BoundaryKind::Neumann,
    };

    pub const ALL_DIRICHLET: SideKinds = SideKinds {
        bottom: BoundaryKind::Dirichlet,
        right: BoundaryKind::Dirichlet,
        top: BoundaryKind::Dirichlet,
        left: BoundaryKind::Dirichlet,
    };
}

/// Structured mesh over the `nx × ny` grid of `[x0, x1] × [y0, y1]`. Each grid
/// square is kept when `square_tag(center)` returns a subdomain tag, and split
/// along its `/` diagonal. Boundary edges are tagged by `boundary_tag(midpoint)`.
pub fn structured_mesh<S, B>(
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    nx: usize,
    ny: usize,
    square_tag: S,
    boundary_tag: B,
) -> Result<Mesh>
where
    S: Fn(Point) -> Option<i32>,
    B: Fn(Point) -> (BoundaryKind, String),
{
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("subdivisions must be at least 1".into()));
    }
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut used = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(2 * nx * ny);
    let mut tags = Vec::with_capacity(2 * nx * ny);
    let mut index = |g: usize, vertices: &mut Vec<Point>| {
        if used[g] == usize::MAX {
            let (i, j) = (g % (nx + 1), g / (nx + 1));
            // exact grid coordinates at both ends of each axis
            let x = if i == nx { x1 } else { x0 + i as f64 * hx };
            let y = if j == ny { y1 } else { y0 + j as f64 * hy };
            used[g] = vertices.len();
            vertices.push([x, y]);
        }
        used[g]
    };
    for j in 0..ny {
        for i in 0..nx {
            let center = [x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy];
            let Some(tag) = square_tag(center) else {
                continue;
            };
            let v00 = index(grid(i, j), &mut vertices);
            let v10 = index(grid(i + 1, j), &mut vertices);
            let v11 = index(grid(i + 1, j + 1), &mut vertices);
            let v01 = index(grid(i, j + 1), &mut vertices);
            cells.push([v00, v10, v11]);
            tags.push(tag);
            cells.push([v00, v11, v01]);
            tags.push(tag);
        }
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order = Vec::new();
    for cell in &cells {
        for i in 0..3 {
            let (a, b) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
            let n = count.entry(edge_key(a, b)).or_insert(0);
            if *n == 0 {
                order.push((a, b));
            }
            *n += 1;
        }
    }
    let boundary = order
        .into_iter()
        .filter(|&(a, b)| count[&edge_key(a, b)] == 1)
        .map(|(a, b)| {
            let (pa, pb) = (vertices[a], vertices[b]);
            let (kind, label) = boundary_tag([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
            BoundaryEdge::labeled(a, b, kind, label)
        })
        .collect();
    Mesh::new(vertices, cells, boundary, tags)
}

fn side_of_unit_square(p: Point, kinds: SideKinds) -> (BoundaryKind, String) {
    let tol = 1e-12;
    if p[1] < tol {
        (kinds.bottom, "bottom".into())
    } else if p[0] > 1.0 - tol {
        (kinds.right, "right".into())
    } else if p[1] > 1.0 - tol {
        (kinds.top, "top".into())
    } else {
        (kinds.left, "left".into())
    }
}

/// Unit square split into `2n²` right triangles, clamped at the bottom and
/// free on the other sides.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    unit_square_mesh_with(n, SideKinds::BOTTOM_CLAMPED)
}

pub fn unit_square_mesh_with(n: usize, kinds: SideKinds) -> Result<Mesh> {
    structured_mesh((0.0, 1.0), (0.0, 1.0), n, n, |_| Some(1), |p| {
        side_of_unit_square(p, kinds)
    })
}

/// Unit square split into the vertical strips `(0,1/3)`, `(1/3,2/3)`,
/// `(2/3,1)` with subdomain tags 1, 2, 3. `n` must be a multiple of 3 so the
/// strip interfaces are mesh edges.
pub fn three_strip_square_mesh(n: usize, kinds: SideKinds) -> Result<Mesh> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(Error::InvalidArgument(format!(
            "three-strip square needs n divisible by 3 so subdomain interfaces align with edges, got {n}"
        )));
    }
    structured_mesh(
        (0.0, 1.0),
        (0.0, 1.0),
        n,
        n,
        |c| Some(1 + (3.0 * c[0]).floor() as i32),
        |p| side_of_unit_square(p, kinds),
    )
}

/// L-shaped domain `(-1,1)² \ (0,1)×(-1,0)` built from three unit squares
/// with `n` subdivisions each. Subdomains: 1 = `(-1,0)×(-1,0)`,
/// 2 = `(-1,0)×(0,1)`, 3 = `(0,1)×(0,1)`. Free at `y = -1` and `x = 1`,
/// clamped elsewhere.
pub fn l_shape_mesh(n: usize) -> Result<Mesh> {
    structured_mesh(
        (-1.0, 1.0),
        (-1.0, 1.0),
        2 * n,
        2 * n,
        |c| match (c[0] < 0.0, c[1] < 0.0) {
            (true, true) => Some(1),
            (true, false) => Some(2),
            (false, false) => Some(3),
            (false, true) => None,
        },
        |p| {
            let tol = 1e-12;
            if p[1] < -1.0 + tol {
                (BoundaryKind::Neumann, "bottom".into())
            } else if p[0] > 1.0 - tol {
                (BoundaryKind::Neumann, "right".into())
            } else {
                (BoundaryKind::Dirichlet, "clamped".into())
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_square() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_cells(), 2);
        assert!((m.total_area() - 1.0).abs() <= 1e-14);
        assert_eq!(m.boundary_edges().len(), 4);
        let dirichlet = m
            .boundary_edges()
            .iter()
            .filter(|e| e.kind == BoundaryKind::Dirichlet)
            .count();
        assert_eq!(dirichlet, 1);
    }

    #[test]
    fn diameter_bound() {
        let m = unit_square_mesh(20).unwrap();
        assert!(m.h_max() <= 2f64.sqrt() / 20.0 + 1e-12);
    }

    #[test]
    fn all_dirichlet_override() {
        let m = unit_square_mesh_with(2, SideKinds::ALL_DIRICHLET).unwrap();
        assert_eq!(m.boundary_edges().len(), 8);
        assert!(m
            .boundary_edges()
            .iter()
            .all(|e| e.kind == BoundaryKind::Dirichlet));
    }

    #[test]
    fn all_neumann_is_rejected() {
        let kinds = SideKinds {
            bottom: BoundaryKind::Neumann,
            ..SideKinds::BOTTOM_CLAMPED
        };
        assert!(matches!(unit_square_mesh_with(2, kinds), Err(Error::EmptyDirichlet)));
    }

    #[test]
    fn three_strip_tags() {
        let m = three_strip_square_mesh(6, SideKinds::BOTTOM_CLAMPED).unwrap();
        for c in 0..m.num_cells() {
            let x = m.cell_centroid(c)[0];
            assert_eq!(m.cell_subdomain()[c], 1 + (3.0 * x).floor() as i32);
        }
        assert!(three_strip_square_mesh(20, SideKinds::BOTTOM_CLAMPED).is_err());
    }

    #[test]
    fn l_shape_geometry() {
        let m = l_shape_mesh(2).unwrap();
        assert_eq!(m.num_cells(), 24);
        assert!((m.total_area() - 3.0).abs() < 1e-14);
        let neumann_len: f64 = m
            .boundary_edges()
            .iter()
            .filter(|e| e.kind == BoundaryKind::Neumann)
            .map(|e| dist(m.vertices()[e.vertices[0]], m.vertices()[e.vertices[1]]))
            .sum();
        assert!((neumann_len - 2.0).abs() < 1e-14);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b = vec![
            BoundaryEdge::new(0, 1, BoundaryKind::Dirichlet),
            BoundaryEdge::new(1, 2, BoundaryKind::Neumann),
            BoundaryEdge::new(2, 0, BoundaryKind::Neumann),
        ];
        let m = Mesh::new(v, vec![[0, 2, 1]], b, vec![1]).unwrap();
        assert!(m.cell_area(0) > 0.0);
    }

    #[test]
    fn hanging_node_is_detected() {
        // big triangle next to two small ones sharing a split edge
        let v = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [0.5, 0.5],
        ];
        let cells = vec![[0, 1, 2], [1, 3, 4], [4, 3, 2]];
        let b = vec![
            BoundaryEdge::new(0, 1, BoundaryKind::Dirichlet),
            BoundaryEdge::new(2, 0, BoundaryKind::Neumann),
            BoundaryEdge::new(1, 3, BoundaryKind::Neumann),
            BoundaryEdge::new(3, 2, BoundaryKind::Neumann),
            BoundaryEdge::new(1, 2, BoundaryKind::Neumann),
            BoundaryEdge::new(1, 4, BoundaryKind::Neumann),
            BoundaryEdge::new(4, 2, BoundaryKind::Neumann),
        ];
        let err = Mesh::new(v, cells, b, vec![1, 1, 1]).unwrap_err();
        assert!(matches!(err, Error::NonConforming(_)), "{err}");
    }
}
