//! Generalized eigenproblem `K x = κ M̂ x` for the saddle-point pencil
//!
//! ```text
//! K = [ A  Bᵀ ]      M̂ = [ M  0 ]
//!     [ B  -C ]           [ 0  0 ]
//! ```
//!
//! solved by shift-invert Krylov-Schur iteration in the `M` inner product on
//! the free displacement space, and the associated source problem.

pub mod dense;
mod krylov;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::SystemMatrices;
use crate::sparse::CsrMatrix;

pub use krylov::{solve_eigen, EigenOptions};

/// Assembled pencil over the free dofs, displacement block first.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    k: CsrMatrix,
    m: CsrMatrix,
    nu: usize,
    np: usize,
}

impl SaddleSystem {
    pub fn new(mats: &SystemMatrices) -> Result<Self> {
        let nu = mats.num_free_displacement();
        let np = mats.num_pressure();
        if mats.b.nrows() != np || mats.b.ncols() != nu || mats.m.nrows() != nu {
            return Err(Error::DimensionMismatch("inconsistent block sizes".into()));
        }
        let mut t = crate::sparse::TripletBuilder::with_capacity(
            nu + np,
            nu + np,
            mats.a.nnz() + 2 * mats.b.nnz() + mats.c.nnz(),
        );
        for (i, j, v) in mats.a.triplets() {
            t.push(i, j, v);
        }
        for (i, j, v) in mats.b.triplets() {
            t.push(nu + i, j, v);
            t.push(j, nu + i, v);
        }
        for (i, j, v) in mats.c.triplets() {
            t.push(nu + i, nu + j, -v);
        }
        Ok(Self {
            k: t.build(),
            m: mats.m.clone(),
            nu,
            np,
        })
    }

    pub fn k(&self) -> &CsrMatrix {
        &self.k
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.m
    }

    pub fn num_displacement(&self) -> usize {
        self.nu
    }

    pub fn num_pressure(&self) -> usize {
        self.np
    }

    pub fn size(&self) -> usize {
        self.nu + self.np
    }

    /// `M̂ x` for a full vector.
    pub fn apply_mass_hat(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.m.mul_vec(&x[..self.nu]);
        out.resize(self.size(), 0.0);
        out
    }

    /// `‖K x − κ M̂ x‖₂ / ‖K x‖₂`.
    pub fn relative_residual(&self, kappa: f64, x: &[f64]) -> f64 {
        let kx = self.k.mul_vec(x);
        let mx = self.apply_mass_hat(x);
        let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - kappa * b).powi(2)).sum::<f64>().sqrt();
        let n: f64 = kx.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            r
        } else {
            r / n
        }
    }
}

/// Sparse LU of `K − σ M̂`, computed once and reused for every solve.
///
/// The matrix is symmetrically equilibrated first (`D (K − σ M̂) D` with
/// Ruiz scaling) because the displacement and pressure blocks can differ by
/// many orders of magnitude (moduli near 1e11 against 1/λ near 1e-16).
pub struct ShiftInvert {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    shifted: CsrMatrix,
    scale: Vec<f64>,
    n: usize,
    nu: usize,
    pub shift: f64,
}

fn ruiz_scaling(mat: &CsrMatrix, sweeps: usize) -> Vec<f64> {
    let n = mat.nrows();
    let mut d = vec![1.0; n];
    for _ in 0..sweeps {
        let mut row_max = vec![0.0f64; n];
        for (i, j, v) in mat.triplets() {
            row_max[i] = row_max[i].max((d[i] * v * d[j]).abs());
        }
        for (di, m) in d.iter_mut().zip(&row_max) {
            if *m > 0.0 {
                *di /= m.sqrt();
            }
        }
    }
    d
}

impl ShiftInvert {
    pub fn new(system: &SaddleSystem, shift: f64) -> Result<Self> {
        let n = system.size();
        let mut b = crate::sparse::TripletBuilder::with_capacity(n, n, system.k.nnz() + system.m.nnz());
        for (i, j, v) in system.k.triplets() {
            b.push(i, j, v);
        }
        if shift != 0.0 {
            for (i, j, v) in system.m.triplets() {
                b.push(i, j, -shift * v);
            }
        }
        let shifted = b.build();
        let scale = ruiz_scaling(&shifted, 8);
        let triplets: Vec<Triplet<usize, usize, f64>> = shifted
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, scale[i] * v * scale[j]))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let this = Self {
            lu,
            shifted,
            scale,
            n,
            nu: system.nu,
            shift,
        };
        // a numerically singular pencil factors without complaint but yields
        // garbage; probe with a fixed right-hand side
        let probe: Vec<f64> = (0..n).map(|i| (1.0 + (i % 7) as f64 * 0.1) / this.scale[i]).collect();
        let x = this.solve(&probe);
        let res = this.residual(&x, &probe);
        if !x.iter().all(|v| v.is_finite()) || res > 1e-6 {
            return Err(Error::Factorization(format!(
                "K - {shift}·M̂ is numerically singular (probe residual {res:.3e})"
            )));
        }
        Ok(this)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves `(K − σ M̂) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let d = &self.scale;
        let mut col = Mat::<f64>::from_fn(self.n, 1, |i, _| d[i] * rhs[i]);
        self.lu.solve_in_place(col.as_mut());
        (0..self.n).map(|i| d[i] * col[(i, 0)]).collect()
    }

    /// Solve with one step of iterative refinement.
    pub fn solve_refined(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.solve(rhs);
        let ax = self.shifted.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }

    /// `‖(K − σ M̂) x − rhs‖ / ‖rhs‖`.
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let ax = self.shifted.mul_vec(x);
        let r: f64 = ax.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let n: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            r
        } else {
            r / n
        }
    }

    pub(crate) fn num_displacement(&self) -> usize {
        self.nu
    }
}

/// Solves the source problem `K (u, p) = (M f, 0)` for a free-dof load `f`.
pub fn solve_source(system: &SaddleSystem, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if f.len() != system.nu {
        return Err(Error::DimensionMismatch(format!(
            "load has {} entries, expected {}",
            f.len(),
            system.nu
        )));
    }
    if !f.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("load vector is not finite".into()));
    }
    let fac = ShiftInvert::new(system, 0.0)?;
    let mut rhs = system.m.mul_vec(f);
    rhs.resize(system.size(), 0.0);
    let mut x = fac.solve_refined(&rhs);
    for _ in 0..3 {
        if fac.residual(&x, &rhs) <= 1e-12 {
            break;
        }
        let ax = system.k.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        for (xi, di) in x.iter_mut().zip(fac.solve(&r)) {
            *xi += di;
        }
    }
    let res = fac.residual(&x, &rhs);
    if res > 1e-10 {
        return Err(Error::Factorization(format!("source solve residual {res:.3e} above 1e-10")));
    }
    let p = x.split_off(system.nu);
    Ok((x, p))
}

/// `xᵀ K x / xᵀ M̂ x` for a full free-dof vector.
pub fn rayleigh_quotient(system: &SaddleSystem, x: &[f64]) -> Result<f64> {
    if x.len() != system.size() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries, expected {}",
            x.len(),
            system.size()
        )));
    }
    let u = &x[..system.nu];
    let mu = system.m.mul_vec(u);
    let den: f64 = u.iter().zip(&mu).map(|(a, b)| a * b).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("vector has zero M̂-norm".into()));
    }
    let kx = system.k.mul_vec(x);
    let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
    Ok(num / den)
}

/// Iteration statistics of one eigensolve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenDiagnostics {
    pub restarts: usize,
    pub operator_applications: usize,
    pub subspace_dimension: usize,
    pub requested: usize,
    pub computed: usize,
    pub seed: u64,
    pub shift: f64,
    pub system_size: usize,
    pub matrix_nnz: usize,
    /// Ritz pairs dropped because their displacement part vanished.
    pub spurious_discarded: usize,
}

/// Eigenpairs in ascending order of `κ_h`, displacement vectors normalized to
/// `uᵀ M u = 1`.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub kappas: Vec<f64>,
    /// Free displacement coefficients.
    pub displacements: Vec<Vec<f64>>,
    pub pressures: Vec<Vec<f64>>,
    /// `‖K x − κ M̂ x‖₂ / ‖K x‖₂` per pair.
    pub residuals: Vec<f64>,
    pub diagnostics: EigenDiagnostics,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    /// Unscaled eigenvalues `κ̂ = κ / (1 + ν)`.
    pub fn kappa_hat(&self, nu: f64) -> Vec<f64> {
        self.kappas.iter().map(|k| k / (1.0 + nu)).collect()
    }

    /// Eigenfrequencies `√κ̂`.
    pub fn frequencies(&self, nu: f64) -> Vec<f64> {
        self.kappa_hat(nu).into_iter().map(f64::sqrt).collect()
    }

    /// Full `(u, p)` vector of pair `i`.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        let mut x = self.displacements[i].clone();
        x.extend_from_slice(&self.pressures[i]);
        x
    }
}

/// Eigenvalues closer than `rel_tol` (relative) grouped as one multiplet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub mean: f64,
    pub members: Vec<usize>,
}

/// Groups an ascending list into clusters of nearly equal values.
pub fn cluster_eigenvalues(sorted: &[f64], rel_tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (v - sorted[*c.members.last().unwrap()]).abs() <= rel_tol * v.abs() => c.members.push(i),
            _ => out.push(Cluster {
                mean: 0.0,
                members: vec![i],
            }),
        }
    }
    for c in &mut out {
        c.mean = c.members.iter().map(|&i| sorted[i]).sum::<f64>() / c.members.len() as f64;
    }
    out
}

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering() {
        let c = cluster_eigenvalues(&[1.0, 2.0, 2.0 + 1e-9, 3.0], 1e-6);
        assert_eq!(c.len(), 3);
        assert_eq!(c[1].members, vec![1, 2]);
        assert!((c[1].mean - (2.0 + 0.5e-9)).abs() < 1e-15);
        assert!(cluster_eigenvalues(&[], 1e-6).is_empty());
    }
}
