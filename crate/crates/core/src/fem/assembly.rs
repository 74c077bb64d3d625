//! Sparse assembly of the stiffness, coupling, pressure and mass blocks.
//!
//! With `u = φ_b e_d`, `v = φ_a e_c` and pressure shape functions `ψ_k`:
//!
//! ```text
//! A[(a,c),(b,d)] = ∫ μ (δ_cd ∇φ_a·∇φ_b + ∂_d φ_a ∂_c φ_b)     (2∫ μ ε(u):ε(v))
//! B[k,(a,c)]     = -∫ ψ_k ∂_c φ_a                             (-∫ q div v)
//! C[k,l]         = ∫ (1/λ) ψ_k ψ_l
//! M[(a,c),(b,d)] = δ_cd ∫ ρ φ_a φ_b
//! ```
//!
//! Coefficients are evaluated exactly at the quadrature points. Cells are
//! integrated independently and scattered in cell order, so the result does
//! not depend on the execution policy.

use super::dofmap::{DofMap, CONSTRAINED};
use super::element::CellGeometry;
use super::quadrature::quadrature_rule;
use crate::coefficients::{inverse_lambda, MaterialModel};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, TripletBuilder};

pub const DEFAULT_QUAD_DEGREE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    pub quad_degree: usize,
    pub exec: Execution,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            quad_degree: DEFAULT_QUAD_DEGREE,
            exec: Execution::default(),
        }
    }
}

/// Blocks restricted to the free displacement dofs. Pressure dofs are never
/// constrained.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub a: CsrMatrix,
    /// Pressure rows, free displacement columns.
    pub b: CsrMatrix,
    pub c: CsrMatrix,
    pub m: CsrMatrix,
    pub stokes_limit: bool,
}

impl SystemMatrices {
    pub fn num_free_displacement(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_pressure(&self) -> usize {
        self.c.nrows()
    }

    pub fn size(&self) -> usize {
        self.num_free_displacement() + self.num_pressure()
    }
}

struct LocalMatrices {
    a: [[f64; 12]; 12],
    b: [[f64; 12]; 3],
    c: [[f64; 3]; 3],
    m: [[f64; 6]; 6],
}

pub fn assemble(mesh: &Mesh, dofs: &DofMap, model: &MaterialModel, opts: AssemblyOptions) -> Result<SystemMatrices> {
    let nu = model.poisson();
    if nu == 0.0 {
        return Err(Error::InvalidArgument(
            "nu = 0 gives 1/lambda = infinity; the mixed formulation needs 0 < nu <= 0.5".into(),
        ));
    }
    if model.stokes_limit() && !mesh.has_neumann_boundary() {
        return Err(Error::PressureNonUnique);
    }
    if dofs.num_pressure() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch("dof map does not belong to this mesh".into()));
    }
    let rule = quadrature_rule(opts.quad_degree)?;
    let family = dofs.family();
    let nls = family.local_scalar_dofs();
    let rho = model.density();

    let locals = opts.exec.map_range(mesh.num_cells(), |cell| -> Result<LocalMatrices> {
        let geo = CellGeometry::new(mesh.cell_points(cell)).ok_or(Error::DegenerateCell(cell))?;
        let field = model.field(mesh.cell_subdomain()[cell])?;
        let mut loc = LocalMatrices {
            a: [[0.0; 12]; 12],
            b: [[0.0; 12]; 3],
            c: [[0.0; 3]; 3],
            m: [[0.0; 6]; 6],
        };
        for q in 0..rule.len() {
            let l = rule.barycentric(q);
            let w = rule.weights[q] * 2.0 * geo.area;
            let e = field.eval(geo.map(l));
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::NonPositiveYoung {
                    subdomain: mesh.cell_subdomain()[cell],
                    value: e,
                });
            }
            let (mu, inv_lambda) = (0.5 * e, inverse_lambda(e, nu));
            let phi = family.eval(&geo, l);
            for a in 0..nls {
                let ga = phi.grads[a];
                for b in 0..nls {
                    let gb = phi.grads[b];
                    let dot = ga[0] * gb[0] + ga[1] * gb[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let diag = if c == d { dot } else { 0.0 };
                            loc.a[2 * a + c][2 * b + d] += w * mu * (diag + ga[d] * gb[c]);
                        }
                    }
                    loc.m[a][b] += w * rho * phi.values[a] * phi.values[b];
                }
                for k in 0..3 {
                    for c in 0..2 {
                        loc.b[k][2 * a + c] -= w * l[k] * ga[c];
                    }
                }
            }
            for k in 0..3 {
                for j in 0..3 {
                    loc.c[k][j] += w * inv_lambda * l[k] * l[j];
                }
            }
        }
        Ok(loc)
    });

    let nf = dofs.num_free_displacement();
    let np = dofs.num_pressure();
    let ncell = mesh.num_cells();
    let mut a = TripletBuilder::with_capacity(nf, nf, ncell * 4 * nls * nls);
    let mut b = TripletBuilder::with_capacity(np, nf, ncell * 6 * nls);
    let mut c = TripletBuilder::with_capacity(np, np, ncell * 9);
    let mut m = TripletBuilder::with_capacity(nf, nf, ncell * 2 * nls * nls);
    for (cell, loc) in locals.into_iter().enumerate() {
        let loc = loc?;
        let nodes = dofs.cell_nodes(cell);
        let free = |i: usize| dofs.free_index(2 * nodes[i / 2] + i % 2);
        let pv = mesh.cells()[cell];
        for i in 0..2 * nls {
            let fi = free(i);
            if fi == CONSTRAINED {
                continue;
            }
            for j in 0..2 * nls {
                let fj = free(j);
                if fj == CONSTRAINED {
                    continue;
                }
                a.push(fi, fj, loc.a[i][j]);
                if i % 2 == j % 2 {
                    m.push(fi, fj, loc.m[i / 2][j / 2]);
                }
            }
            for k in 0..3 {
                b.push(pv[k], fi, loc.b[k][i]);
            }
        }
        if !model.stokes_limit() {
            for k in 0..3 {
                for j in 0..3 {
                    c.push(pv[k], pv[j], loc.c[k][j]);
                }
            }
        }
    }
    Ok(SystemMatrices {
        a: a.build(),
        b: b.build(),
        c: c.build(),
        m: m.build(),
        stokes_limit: model.stokes_limit(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_dof_map, build_unconstrained_dof_map, interpolate_vector, ElementFamily};
    use crate::mesh::{unit_square_mesh, unit_square_mesh_with, SideKinds};

    fn model(e: f64, nu: f64) -> MaterialModel {
        MaterialModel::uniform(e, nu, 1.0).unwrap()
    }

    fn opts() -> AssemblyOptions {
        AssemblyOptions {
            quad_degree: 6,
            exec: Execution::Sequential,
        }
    }

    #[test]
    fn symmetry() {
        let mesh = unit_square_mesh(4).unwrap();
        for fam in [ElementFamily::TaylorHood, ElementFamily::Mini] {
            let dm = build_dof_map(&mesh, fam).unwrap();
            let s = assemble(&mesh, &dm, &model(3.0, 0.3), opts()).unwrap();
            for mat in [&s.a, &s.c, &s.m] {
                assert!(mat.symmetry_defect() <= 1e-12 * mat.max_abs());
            }
        }
    }

    #[test]
    fn rigid_translation_in_kernel() {
        let mesh = unit_square_mesh(3).unwrap();
        for fam in [ElementFamily::TaylorHood, ElementFamily::Mini] {
            let dm = build_unconstrained_dof_map(&mesh, fam).unwrap();
            let s = assemble(&mesh, &dm, &model(2.0, 0.35), opts()).unwrap();
            for t in [[1.0, 0.0], [0.0, 1.0]] {
                let u = interpolate_vector(&mesh, &dm, |_| t);
                let au = s.a.mul_vec(&u);
                let norm = au.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(norm <= 1e-10 * s.a.max_abs(), "{fam:?}: {norm}");
            }
        }
    }

    #[test]
    fn divergence_of_linear_field() {
        let mesh = unit_square_mesh(3).unwrap();
        for fam in [ElementFamily::TaylorHood, ElementFamily::Mini] {
            let dm = build_unconstrained_dof_map(&mesh, fam).unwrap();
            let s = assemble(&mesh, &dm, &model(1.0, 0.35), opts()).unwrap();
            let u = interpolate_vector(&mesh, &dm, |x| [x[0], 0.0]);
            let bu = s.b.mul_vec(&u);
            assert!((bu.iter().sum::<f64>() + 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn stokes_limit_zero_c() {
        let mesh = unit_square_mesh(2).unwrap();
        let dm = build_dof_map(&mesh, ElementFamily::TaylorHood).unwrap();
        let s = assemble(&mesh, &dm, &model(1.0, 0.5), opts()).unwrap();
        assert_eq!(s.c.nnz(), 0);
        assert!(s.stokes_limit);
    }

    #[test]
    fn rejects_pressure_nonunique_and_nu_zero() {
        let mesh = unit_square_mesh_with(2, SideKinds::ALL_DIRICHLET).unwrap();
        let dm = build_dof_map(&mesh, ElementFamily::TaylorHood).unwrap();
        assert!(matches!(
            assemble(&mesh, &dm, &model(1.0, 0.5), opts()),
            Err(Error::PressureNonUnique)
        ));
        assert!(assemble(&mesh, &dm, &model(1.0, 0.49), opts()).is_ok());
        assert!(assemble(&mesh, &dm, &model(1.0, 0.0), opts()).is_err());
    }

    #[test]
    fn scaling_in_young() {
        let mesh = unit_square_mesh(3).unwrap();
        let dm = build_dof_map(&mesh, ElementFamily::TaylorHood).unwrap();
        let base = assemble(&mesh, &dm, &model(1.7, 0.35), opts()).unwrap();
        for factor in [10.0, 100.0] {
            let s = assemble(&mesh, &dm, &model(1.7 * factor, 0.35), opts()).unwrap();
            // entries that cancel to roundoff are measured against the largest entry
            let close = |x: &CsrMatrix, y: &CsrMatrix, f: f64| {
                let scale = f * y.max_abs();
                x.values()
                    .iter()
                    .zip(y.values())
                    .all(|(p, q)| (p - f * q).abs() <= 1e-14 * (f * q).abs().max(1e-2 * scale))
            };
            assert!(close(&s.a, &base.a, factor));
            assert!(close(&s.c, &base.c, 1.0 / factor));
            assert_eq!(s.b.values(), base.b.values());
            assert_eq!(s.m.values(), base.m.values());
        }
    }

    #[test]
    fn sequential_and_parallel_identical() {
        let mesh = unit_square_mesh(6).unwrap();
        let dm = build_dof_map(&mesh, ElementFamily::TaylorHood).unwrap();
        let s = assemble(&mesh, &dm, &model(1.0, 0.35), opts()).unwrap();
        let p = assemble(
            &mesh,
            &dm,
            &model(1.0, 0.35),
            AssemblyOptions {
                exec: Execution::Parallel,
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(s.a.values(), p.a.values());
        assert_eq!(s.b.values(), p.b.values());
    }
}
