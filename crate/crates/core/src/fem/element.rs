//! Element families, affine cell geometry and scalar shape functions written
//! in barycentric coordinates.

use serde::{Deserialize, Serialize};

use crate::mesh::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementFamily {
    /// Vector P2 displacement, continuous P1 pressure.
    TaylorHood,
    /// Vector P1 plus cubic bubble displacement, continuous P1 pressure.
    Mini,
}

impl ElementFamily {
    /// Scalar displacement shape functions per cell.
    pub const fn local_scalar_dofs(self) -> usize {
        match self {
            ElementFamily::TaylorHood => 6,
            ElementFamily::Mini => 4,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ElementFamily::TaylorHood => "taylor_hood",
            ElementFamily::Mini => "mini",
        }
    }

    /// Evaluates all scalar displacement shape functions at barycentric point `l`.
    pub fn eval(self, geo: &CellGeometry, l: [f64; 3]) -> BasisEval {
        let g = &geo.grad_lambda;
        let mut out = BasisEval {
            n: self.local_scalar_dofs(),
            ..BasisEval::default()
        };
        match self {
            ElementFamily::TaylorHood => {
                for i in 0..3 {
                    out.values[i] = l[i] * (2.0 * l[i] - 1.0);
                    let s = 4.0 * l[i] - 1.0;
                    out.grads[i] = [s * g[i][0], s * g[i][1]];
                    out.hessians[i] = sym_outer(g[i], g[i], 4.0 * 0.5);
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    out.values[3 + i] = 4.0 * l[j] * l[k];
                    out.grads[3 + i] = [
                        4.0 * (l[k] * g[j][0] + l[j] * g[k][0]),
                        4.0 * (l[k] * g[j][1] + l[j] * g[k][1]),
                    ];
                    out.hessians[3 + i] = sym_outer(g[j], g[k], 4.0);
                }
            }
            ElementFamily::Mini => {
                for i in 0..3 {
                    out.values[i] = l[i];
                    out.grads[i] = g[i];
                }
                out.values[3] = 27.0 * l[0] * l[1] * l[2];
                let c = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
                out.grads[3] = [
                    27.0 * (c[0] * g[0][0] + c[1] * g[1][0] + c[2] * g[2][0]),
                    27.0 * (c[0] * g[0][1] + c[1] * g[1][1] + c[2] * g[2][1]),
                ];
                let mut h = [0.0; 3];
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    let t = sym_outer(g[j], g[k], 27.0 * l[i]);
                    for (hh, tt) in h.iter_mut().zip(t) {
                        *hh += tt;
                    }
                }
                out.hessians[3] = h;
            }
        }
        out
    }
}

/// `scale * (a ⊗ b + b ⊗ a)` stored as `(xx, xy, yy)`.
#[inline]
fn sym_outer(a: [f64; 2], b: [f64; 2], scale: f64) -> [f64; 3] {
    [
        scale * 2.0 * a[0] * b[0],
        scale * (a[0] * b[1] + a[1] * b[0]),
        scale * 2.0 * a[1] * b[1],
    ]
}

/// Scalar shape functions at one point. Hessians are `(∂xx, ∂xy, ∂yy)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BasisEval {
    pub n: usize,
    pub values: [f64; 6],
    pub grads: [[f64; 2]; 6],
    pub hessians: [[f64; 3]; 6],
}

/// Affine triangle data.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    /// `None` for a cell with non-positive area.
    pub fn new(points: [Point; 3]) -> Option<Self> {
        let [p0, p1, p2] = points;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        if !(det > 0.0) {
            return None;
        }
        let mut grad_lambda = [[0.0; 2]; 3];
        for (i, g) in grad_lambda.iter_mut().enumerate() {
            let (a, b) = (points[(i + 1) % 3], points[(i + 2) % 3]);
            *g = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Some(Self {
            points,
            area: 0.5 * det,
            grad_lambda,
        })
    }

    #[inline]
    pub fn map(&self, l: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.points;
        [
            l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let p0 = self.points[0];
        let d = [x[0] - p0[0], x[1] - p0[1]];
        let l1 = self.grad_lambda[1][0] * d[0] + self.grad_lambda[1][1] * d[1];
        let l2 = self.grad_lambda[2][0] * d[0] + self.grad_lambda[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}
