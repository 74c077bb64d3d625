//! Nodal interpolation and pointwise evaluation of discrete fields.

use super::dofmap::{Anchor, DofMap};
use super::element::{BasisEval, CellGeometry};
use crate::mesh::{Mesh, Point};

/// Nodal interpolant of a vector field as a full displacement vector
/// (constrained dofs included). Bubble coefficients are zero.
pub fn interpolate_vector<F>(mesh: &Mesh, dofs: &DofMap, f: F) -> Vec<f64>
where
    F: Fn(Point) -> [f64; 2],
{
    let mut out = vec![0.0; dofs.num_displacement()];
    for (node, anchor) in dofs.anchors().iter().enumerate() {
        if matches!(anchor, Anchor::Cell(_)) {
            continue;
        }
        let v = f(dofs.anchor_point(mesh, node));
        out[2 * node] = v[0];
        out[2 * node + 1] = v[1];
    }
    out
}

/// Continuous P1 interpolant of a scalar field (one value per vertex).
pub fn interpolate_scalar<F>(mesh: &Mesh, f: F) -> Vec<f64>
where
    F: Fn(Point) -> f64,
{
    mesh.vertices().iter().map(|&p| f(p)).collect()
}

/// Local coefficients of a full displacement vector on cell `c`.
pub fn cell_displacement(dofs: &DofMap, u: &[f64], c: usize) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for (slot, &node) in out.iter_mut().zip(dofs.cell_nodes(c)) {
        *slot = [u[2 * node], u[2 * node + 1]];
    }
    out
}

/// Value, gradient (`grad[i][j] = ∂_j u_i`) and Laplacian-type second
/// derivatives of a discrete displacement at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct DisplacementJet {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
    /// Hessian of each component, `(∂xx, ∂xy, ∂yy)`.
    pub hessian: [[f64; 3]; 2],
}

pub fn displacement_jet(basis: &BasisEval, coeffs: &[[f64; 2]; 6]) -> DisplacementJet {
    let mut jet = DisplacementJet::default();
    for a in 0..basis.n {
        for i in 0..2 {
            let u = coeffs[a][i];
            jet.value[i] += u * basis.values[a];
            for j in 0..2 {
                jet.grad[i][j] += u * basis.grads[a][j];
            }
            for k in 0..3 {
                jet.hessian[i][k] += u * basis.hessians[a][k];
            }
        }
    }
    jet
}

/// Value and gradient of a P1 pressure on a cell.
pub fn pressure_at(geo: &CellGeometry, local: [f64; 3], l: [f64; 3]) -> (f64, [f64; 2]) {
    let value = local[0] * l[0] + local[1] * l[1] + local[2] * l[2];
    let g = &geo.grad_lambda;
    let grad = [
        local[0] * g[0][0] + local[1] * g[1][0] + local[2] * g[2][0],
        local[0] * g[0][1] + local[1] * g[1][1] + local[2] * g[2][1],
    ];
    (value, grad)
}

/// Evaluates a discrete displacement at a physical point inside cell `c`.
pub fn eval_displacement(mesh: &Mesh, dofs: &DofMap, u: &[f64], c: usize, x: Point) -> [f64; 2] {
    let geo = CellGeometry::new(mesh.cell_points(c)).expect("valid cell");
    let basis = dofs.family().eval(&geo, geo.barycentric(x));
    displacement_jet(&basis, &cell_displacement(dofs, u, c)).value
}
