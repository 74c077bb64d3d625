//! Thick-restart (Krylov-Schur) Lanczos for the shift-inverted pencil.
//!
//! The operator `Op v = [(K − σ M̂)⁻¹ (M v, 0)]_u` is self-adjoint in the `M`
//! inner product on the free displacement space, with eigenvalues
//! `θ = 1/(κ − σ)`. The largest `|θ|` give the eigenvalues closest to `σ`.
//! Orthogonalization is full classical Gram-Schmidt applied twice.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenDiagnostics, EigenResult, SaddleSystem, ShiftInvert};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    /// Number of eigenpairs wanted.
    pub k: usize,
    pub shift: f64,
    /// Relative residual tolerance `‖Kx − κM̂x‖ ≤ tol ‖Kx‖`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Extra Ritz pairs carried to stabilize the wanted ones.
    pub buffer: usize,
    /// Krylov subspace dimension; chosen from `k + buffer` when `None`.
    pub subspace: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            k: 6,
            shift: 0.0,
            tol: 1e-8,
            max_restarts: 300,
            seed: 20_240_917,
            buffer: 4,
            subspace: None,
        }
    }
}

struct Basis {
    v: Vec<Vec<f64>>,
    /// `M v` for each basis vector.
    mv: Vec<Vec<f64>>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Basis {
    /// Two passes of classical Gram-Schmidt against the first `upto` vectors;
    /// returns the accumulated coefficients.
    fn orthogonalize(&self, w: &mut [f64], upto: usize) -> Vec<f64> {
        let mut h = vec![0.0; upto];
        for _ in 0..2 {
            let c: Vec<f64> = (0..upto).map(|i| dot(&self.mv[i], w)).collect();
            for (i, ci) in c.iter().enumerate() {
                axpy(-ci, &self.v[i], w);
                h[i] += ci;
            }
        }
        h
    }
}

pub fn solve_eigen(system: &SaddleSystem, opts: &EigenOptions) -> Result<EigenResult> {
    let n = system.num_displacement();
    if opts.k == 0 {
        return Err(Error::InvalidArgument("at least one eigenpair must be requested".into()));
    }
    if opts.k > n {
        return Err(Error::InvalidArgument(format!(
            "{} eigenpairs requested but only {n} free displacement dofs",
            opts.k
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let fac = ShiftInvert::new(system, opts.shift)?;
    debug_assert_eq!(fac.num_displacement(), n);
    let mass = system.mass();
    let nev = (opts.k + opts.buffer).min(n);
    let ncv = opts
        .subspace
        .unwrap_or((2 * nev + 1).max(nev + 20))
        .clamp(nev.min(n), n);
    let internal_tol = (opts.tol * 1e-3).max(1e-13);

    let mut applications = 0usize;
    let apply = |v: &[f64], count: &mut usize| -> Vec<f64> {
        *count += 1;
        let mut rhs = mass.mul_vec(v);
        rhs.resize(system.size(), 0.0);
        let mut x = fac.solve(&rhs);
        x.truncate(n);
        x
    };
    let m_norm = |w: &[f64]| -> (f64, Vec<f64>) {
        let mw = mass.mul_vec(w);
        (dot(w, &mw).max(0.0).sqrt(), mw)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    // start inside the range of Op so kernel directions never enter
    let mut start = apply(&random(&mut rng), &mut applications);
    let (s, ms) = m_norm(&start);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Factorization("operator annihilated the start vector".into()));
    }
    start.iter_mut().for_each(|x| *x /= s);
    let mut basis = Basis {
        v: vec![start],
        mv: vec![ms.into_iter().map(|x| x / s).collect()],
    };

    let mut t = DMatrix::<f64>::zeros(ncv, ncv);
    let mut kept = 0usize;
    let mut restarts = 0usize;
    let mut beta_last;
    let (theta, y, order) = loop {
        beta_last = 0.0;
        for j in kept..ncv {
            let mut w = apply(&basis.v[j], &mut applications);
            let h = basis.orthogonalize(&mut w, j + 1);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            let (mut beta, mut mw) = m_norm(&w);
            let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if beta <= 1e-12 * scale || beta == 0.0 {
                // invariant subspace: continue with a fresh orthogonal direction
                let mut r = random(&mut rng);
                basis.orthogonalize(&mut r, j + 1);
                let (rn, mr) = m_norm(&r);
                w = r;
                mw = mr;
                if rn > 0.0 {
                    w.iter_mut().for_each(|x| *x /= rn);
                    mw.iter_mut().for_each(|x| *x /= rn);
                }
                beta = 0.0;
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
                mw.iter_mut().for_each(|x| *x /= beta);
            }
            basis.v.push(w);
            basis.mv.push(mw);
            beta_last = beta;
        }

        let eig = SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..ncv).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
        let converged = order
            .iter()
            .take_while(|&&i| {
                let th = eig.eigenvalues[i];
                (beta_last * eig.eigenvectors[(ncv - 1, i)]).abs() <= internal_tol * th.abs()
            })
            .count();
        if converged >= nev || ncv == n {
            break (eig.eigenvalues, eig.eigenvectors, order);
        }
        if restarts >= opts.max_restarts {
            return Err(Error::NoConvergence {
                iterations: restarts,
                converged: converged.min(opts.k),
                requested: opts.k,
            });
        }
        restarts += 1;

        // thick restart: keep the best Ritz vectors plus the continuation vector
        let keep = (nev + (ncv - nev) / 2).max(nev).min(ncv - 1);
        let mut v_new = Vec::with_capacity(ncv + 1);
        let mut mv_new = Vec::with_capacity(ncv + 1);
        for &i in &order[..keep] {
            let mut x = vec![0.0; n];
            let mut mx = vec![0.0; n];
            for j in 0..ncv {
                let c = eig.eigenvectors[(j, i)];
                axpy(c, &basis.v[j], &mut x);
                axpy(c, &basis.mv[j], &mut mx);
            }
            v_new.push(x);
            mv_new.push(mx);
        }
        v_new.push(basis.v.pop().expect("continuation vector"));
        mv_new.push(basis.mv.pop().expect("continuation vector"));
        basis = Basis { v: v_new, mv: mv_new };
        t.fill(0.0);
        for (r, &i) in order[..keep].iter().enumerate() {
            t[(r, r)] = eig.eigenvalues[i];
        }
        kept = keep;
    };

    let theta_max = order.first().map(|&i| theta[i].abs()).unwrap_or(0.0);
    let mut spurious = 0usize;
    let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(nev);
    for &i in order.iter().take(nev) {
        let th = theta[i];
        if th.abs() <= 1e-8 * theta_max {
            spurious += 1;
            continue;
        }
        let mut x = vec![0.0; n];
        for j in 0..ncv {
            axpy(y[(j, i)], &basis.v[j], &mut x);
        }
        let mut z = reconstruct(system, &fac, &x);
        let mut kappa = rayleigh(system, &z);
        let mut res = system.relative_residual(kappa, &z);
        // polish with a few inverse-iteration steps if needed
        for _ in 0..3 {
            if res <= opts.tol {
                break;
            }
            let zu: Vec<f64> = z[..n].to_vec();
            z = reconstruct(system, &fac, &zu);
            kappa = rayleigh(system, &z);
            res = system.relative_residual(kappa, &z);
        }
        pairs.push((kappa, z, res));
    }
    pairs.retain(|p| p.0 > 0.0);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.len() < opts.k {
        return Err(Error::InvalidArgument(format!(
            "only {} finite positive eigenvalues exist near the shift, {} requested",
            pairs.len(),
            opts.k
        )));
    }
    pairs.truncate(opts.k);
    let unconverged = pairs.iter().filter(|p| !(p.2 <= opts.tol)).count();
    if unconverged > 0 {
        return Err(Error::NoConvergence {
            iterations: restarts,
            converged: opts.k - unconverged,
            requested: opts.k,
        });
    }

    let diagnostics = EigenDiagnostics {
        restarts,
        operator_applications: applications,
        subspace_dimension: ncv,
        requested: opts.k,
        computed: nev,
        seed: opts.seed,
        shift: opts.shift,
        system_size: system.size(),
        matrix_nnz: system.k().nnz(),
        spurious_discarded: spurious,
    };
    let mut result = EigenResult {
        kappas: Vec::with_capacity(opts.k),
        displacements: Vec::with_capacity(opts.k),
        pressures: Vec::with_capacity(opts.k),
        residuals: Vec::with_capacity(opts.k),
        diagnostics,
    };
    for (kappa, mut z, res) in pairs {
        let p = z.split_off(n);
        result.kappas.push(kappa);
        result.displacements.push(z);
        result.pressures.push(p);
        result.residuals.push(res);
    }
    Ok(result)
}

/// Full eigenvector from a displacement approximation: one shift-invert
/// solve, normalized to `uᵀ M u = 1` with a deterministic sign.
fn reconstruct(system: &SaddleSystem, fac: &ShiftInvert, x: &[f64]) -> Vec<f64> {
    let n = system.num_displacement();
    let mut rhs = system.mass().mul_vec(x);
    rhs.resize(system.size(), 0.0);
    let mut z = fac.solve_refined(&rhs);
    let mu = system.mass().mul_vec(&z[..n]);
    let norm = dot(&z[..n], &mu).sqrt();
    let pivot = z[..n].iter().fold(0.0f64, |m, &v| if v.abs() > m.abs() { v } else { m });
    let s = if pivot < 0.0 { -norm } else { norm };
    z.iter_mut().for_each(|v| *v /= s);
    z
}

fn rayleigh(system: &SaddleSystem, z: &[f64]) -> f64 {
    let n = system.num_displacement();
    let kz = system.k().mul_vec(z);
    let mz = system.mass().mul_vec(&z[..n]);
    dot(z, &kz) / dot(&z[..n], &mz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_options() {
        let o = EigenOptions::default();
        assert_eq!((o.k, o.buffer, o.tol, o.shift), (6, 4, 1e-8, 0.0));
    }
}
