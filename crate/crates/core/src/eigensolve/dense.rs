//! Dense reference eigensolver for small systems.
//!
//! Forms `S = [K⁻¹]_uu` column by column through a dense LU of `K`, factors
//! `M = L Lᵀ` and diagonalizes the symmetric matrix `Lᵀ S L`, whose nonzero
//! eigenvalues are `1/κ`. Independent of the sparse factorization and of the
//! Krylov iteration; intended for a few hundred dofs.

use nalgebra::{DMatrix, SymmetricEigen};

use super::SaddleSystem;
use crate::error::{Error, Result};

/// All finite eigenvalues `κ` of the pencil, ascending.
pub fn dense_eigenvalues(system: &SaddleSystem) -> Result<Vec<f64>> {
    let n = system.size();
    let nu = system.num_displacement();
    let k = system.k().to_dense();
    let m = system.mass().to_dense();
    let mut rhs = DMatrix::<f64>::zeros(n, nu);
    rhs.view_mut((0, 0), (nu, nu)).copy_from(&m);
    let z = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Factorization("dense K is singular".into()))?;
    // Z_u = S M
    let zu = z.rows(0, nu).into_owned();
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Factorization("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // Lᵀ S L = Lᵀ Z_u L⁻ᵀ
    let xt = l
        .solve_lower_triangular(&zu.transpose())
        .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let g = l.transpose() * xt.transpose();
    let g = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let theta_max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut kappas: Vec<f64> = eig
        .eigenvalues
        .iter()
        .filter(|&&th| th.abs() > 1e-10 * theta_max)
        .map(|&th| 1.0 / th)
        .collect();
    kappas.sort_by(f64::total_cmp);
    Ok(kappas)
}
