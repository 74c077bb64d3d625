//! Residual a posteriori error indicators for a discrete eigenpair.
//!
//! Per cell `K` with projected coefficient `μ_h`:
//!
//! ```text
//! R1 = 2μ_h div ε(u_h) − ∇p_h + ρ κ_h u_h
//! R2 = div u_h + (1/λ) p_h
//! η_K² = h_K² ρ1² ‖R1‖²_K + ρ2 ‖R2‖²_K,    ρ1² = 1/(2μ_h),  ρ2 = [1/(2μ_h) + 1/λ_h]⁻¹
//! Θ_K² = ‖ρ1 (μ − μ_h) ε(u_h)‖²_K
//! ```
//!
//! and per edge `E` the term `h_E ρ_E² ‖J_E‖²_E` with `ρ_E² = 1/(2 μ_E) / 2`,
//! `μ_E` the mean of the adjacent `μ_h`, `J_E = ½ (σ_K − σ_K') n_K` inside,
//! `σ_K n` on the Neumann boundary and zero on the Dirichlet boundary, where
//! `σ = 2μ_h ε(u_h) − p_h I`. Each interior edge term is charged to both
//! neighbours.

use std::io::Write;

use crate::coefficients::{inverse_lambda, MaterialModel, ProjectedCoefficients};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::{
    cell_displacement, displacement_jet, gauss_legendre, pressure_at, quadrature_rule, CellGeometry, DisplacementJet,
    DofMap, QuadratureRule,
};
use crate::mesh::{Edge, EdgeClass, Mesh};

pub const ELEMENT_QUAD_DEGREE: usize = 6;
pub const OSCILLATION_QUAD_DEGREE: usize = 8;
pub const EDGE_GAUSS_POINTS: usize = 4;

/// A discrete eigenpair on the full displacement numbering.
#[derive(Clone, Copy, Debug)]
pub struct Eigenpair<'a> {
    /// Displacement coefficients, constrained dofs included (zero there).
    pub u: &'a [f64],
    /// Pressure coefficients, one per vertex.
    pub p: &'a [f64],
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorWeights {
    /// `(2μ_h)^{-1/2}` per cell.
    pub rho1: Vec<f64>,
    /// `[(2μ_h)^{-1} + λ_h^{-1}]^{-1}` per cell.
    pub rho2: Vec<f64>,
    /// `(2μ_E)^{-1/2} / √2` per edge.
    pub rho_e: Vec<f64>,
}

pub fn estimator_weights(proj: &ProjectedCoefficients, dofs: &DofMap) -> EstimatorWeights {
    let rho1 = proj.mu_h.iter().map(|m| (2.0 * m).powf(-0.5)).collect();
    let rho2 = proj
        .mu_h
        .iter()
        .zip(&proj.lambda_inv)
        .map(|(m, li)| 1.0 / (1.0 / (2.0 * m) + li))
        .collect();
    let rho_e = dofs
        .topology()
        .edges
        .iter()
        .map(|e| {
            let mu_e = match e.cells {
                [Some(a), Some(b)] => 0.5 * (proj.mu_h[a] + proj.mu_h[b]),
                [Some(a), None] => proj.mu_h[a],
                _ => unreachable!("edge without a cell"),
            };
            (2.0 * mu_e).powf(-0.5) / std::f64::consts::SQRT_2
        })
        .collect();
    EstimatorWeights { rho1, rho2, rho_e }
}

/// Per-cell and global indicator values.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorIndicators {
    pub eta_k_sq: Vec<f64>,
    /// Sum of the edge terms of each cell's three edges.
    pub eta_j_sq: Vec<f64>,
    pub theta_sq: Vec<f64>,
    /// Edge term `h_E ρ_E² ‖J_E‖²` per edge.
    pub edge_sq: Vec<f64>,
    /// `(Σ_K η_K² + η_J²)^{1/2}`.
    pub eta: f64,
    pub theta: f64,
}

impl ErrorIndicators {
    /// `η_T² = η_K² + η_J² + Θ_K²` used for marking.
    pub fn marking_indicator(&self) -> Vec<f64> {
        (0..self.eta_k_sq.len())
            .map(|c| self.eta_k_sq[c] + self.eta_j_sq[c] + self.theta_sq[c])
            .collect()
    }

    pub fn eta_sq(&self) -> f64 {
        self.eta * self.eta
    }

    /// CSV with columns `cell_id,eta_K_sq,eta_J_sq,theta_sq`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "cell_id,eta_K_sq,eta_J_sq,theta_sq")?;
        for c in 0..self.eta_k_sq.len() {
            writeln!(
                out,
                "{c},{:e},{:e},{:e}",
                self.eta_k_sq[c], self.eta_j_sq[c], self.theta_sq[c]
            )?;
        }
        Ok(())
    }
}

/// Everything needed to evaluate indicators on one mesh.
pub struct Estimator<'a> {
    mesh: &'a Mesh,
    dofs: &'a DofMap,
    model: &'a MaterialModel,
    proj: &'a ProjectedCoefficients,
    weights: EstimatorWeights,
    element_rule: QuadratureRule,
    oscillation_rule: QuadratureRule,
    edge_rule: (Vec<f64>, Vec<f64>),
}

/// Local data of one cell: geometry, displacement and pressure coefficients.
struct CellData {
    geo: CellGeometry,
    u: [[f64; 2]; 6],
    p: [f64; 3],
}

fn strain(jet: &DisplacementJet) -> [[f64; 2]; 2] {
    let g = jet.grad;
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

impl<'a> Estimator<'a> {
    pub fn new(
        mesh: &'a Mesh,
        dofs: &'a DofMap,
        model: &'a MaterialModel,
        proj: &'a ProjectedCoefficients,
    ) -> Result<Self> {
        if proj.mu_h.len() != mesh.num_cells() || dofs.num_pressure() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch("mesh, dof map and coefficients disagree".into()));
        }
        Ok(Self {
            mesh,
            dofs,
            model,
            proj,
            weights: estimator_weights(proj, dofs),
            element_rule: quadrature_rule(ELEMENT_QUAD_DEGREE)?,
            oscillation_rule: quadrature_rule(OSCILLATION_QUAD_DEGREE)?,
            edge_rule: gauss_legendre(EDGE_GAUSS_POINTS),
        })
    }

    pub fn weights(&self) -> &EstimatorWeights {
        &self.weights
    }

    fn check(&self, pair: &Eigenpair) -> Result<()> {
        if pair.u.len() != self.dofs.num_displacement() || pair.p.len() != self.dofs.num_pressure() {
            return Err(Error::DimensionMismatch(format!(
                "eigenpair has {}+{} coefficients, mesh expects {}+{}",
                pair.u.len(),
                pair.p.len(),
                self.dofs.num_displacement(),
                self.dofs.num_pressure()
            )));
        }
        Ok(())
    }

    fn cell_data(&self, c: usize, pair: &Eigenpair) -> Result<CellData> {
        let geo = CellGeometry::new(self.mesh.cell_points(c)).ok_or(Error::DegenerateCell(c))?;
        let v = self.mesh.cells()[c];
        Ok(CellData {
            geo,
            u: cell_displacement(self.dofs, pair.u, c),
            p: [pair.p[v[0]], pair.p[v[1]], pair.p[v[2]]],
        })
    }

    /// `h_K² ρ1² ‖R1‖²_K`.
    pub fn element_residual_1(&self, c: usize, pair: &Eigenpair) -> Result<f64> {
        let d = self.cell_data(c, pair)?;
        let two_mu = 2.0 * self.proj.mu_h[c];
        let rho = self.model.density();
        let fam = self.dofs.family();
        let mut integral = 0.0;
        for q in 0..self.element_rule.len() {
            let l = self.element_rule.barycentric(q);
            let w = self.element_rule.weights[q] * 2.0 * d.geo.area;
            let jet = displacement_jet(&fam.eval(&d.geo, l), &d.u);
            let (_, gp) = pressure_at(&d.geo, d.p, l);
            let [h0, h1] = jet.hessian;
            // div ε(u) = ½ Δu + ½ ∇ div u
            let div_eps = [
                h0[0] + 0.5 * h0[2] + 0.5 * h1[1],
                h1[2] + 0.5 * h1[0] + 0.5 * h0[1],
            ];
            let r = [
                two_mu * div_eps[0] - gp[0] + rho * pair.kappa * jet.value[0],
                two_mu * div_eps[1] - gp[1] + rho * pair.kappa * jet.value[1],
            ];
            integral += w * (r[0] * r[0] + r[1] * r[1]);
        }
        let h = self.mesh.cell_diameter(c);
        Ok(h * h * self.weights.rho1[c].powi(2) * integral)
    }

    /// `ρ2 ‖R2‖²_K` with the exact `1/λ(x)`.
    pub fn element_residual_2(&self, c: usize, pair: &Eigenpair) -> Result<f64> {
        let d = self.cell_data(c, pair)?;
        let field = self.model.field(self.mesh.cell_subdomain()[c])?;
        let nu = self.model.poisson();
        let fam = self.dofs.family();
        let mut integral = 0.0;
        for q in 0..self.element_rule.len() {
            let l = self.element_rule.barycentric(q);
            let w = self.element_rule.weights[q] * 2.0 * d.geo.area;
            let jet = displacement_jet(&fam.eval(&d.geo, l), &d.u);
            let (p, _) = pressure_at(&d.geo, d.p, l);
            let inv_l = inverse_lambda(field.eval(d.geo.map(l)), nu);
            let r = jet.grad[0][0] + jet.grad[1][1] + inv_l * p;
            integral += w * r * r;
        }
        Ok(self.weights.rho2[c] * integral)
    }

    /// `Θ_K² = ‖ρ1 (μ − μ_h) ε(u_h)‖²_K`.
    pub fn oscillation(&self, c: usize, pair: &Eigenpair) -> Result<f64> {
        let field = self.model.field(self.mesh.cell_subdomain()[c])?;
        if field.is_constant() {
            return Ok(0.0);
        }
        let d = self.cell_data(c, pair)?;
        let mu_h = self.proj.mu_h[c];
        let fam = self.dofs.family();
        let rule = &self.oscillation_rule;
        let mut integral = 0.0;
        for q in 0..rule.len() {
            let l = rule.barycentric(q);
            let w = rule.weights[q] * 2.0 * d.geo.area;
            let eps = strain(&displacement_jet(&fam.eval(&d.geo, l), &d.u));
            let dmu = 0.5 * field.eval(d.geo.map(l)) - mu_h;
            let e2 = eps[0][0].powi(2) + 2.0 * eps[0][1].powi(2) + eps[1][1].powi(2);
            integral += w * dmu * dmu * e2;
        }
        Ok(self.weights.rho1[c].powi(2) * integral)
    }

    /// Traction `σ n` of cell `c` at physical point `x`.
    fn traction(&self, c: usize, d: &CellData, x: [f64; 2], n: [f64; 2]) -> [f64; 2] {
        let l = d.geo.barycentric(x);
        let eps = strain(&displacement_jet(&self.dofs.family().eval(&d.geo, l), &d.u));
        let (p, _) = pressure_at(&d.geo, d.p, l);
        let two_mu = 2.0 * self.proj.mu_h[c];
        [
            two_mu * (eps[0][0] * n[0] + eps[0][1] * n[1]) - p * n[0],
            two_mu * (eps[1][0] * n[0] + eps[1][1] * n[1]) - p * n[1],
        ]
    }

    /// `h_E ρ_E² ‖J_E‖²_E` for edge `e`.
    pub fn edge_jump(&self, e: usize, pair: &Eigenpair) -> Result<f64> {
        let edge: &Edge = &self.dofs.topology().edges[e];
        if edge.class == EdgeClass::Dirichlet {
            return Ok(0.0);
        }
        let first = self.cell_data(edge.first_cell(), pair)?;
        let second = match (edge.class, edge.cells[1]) {
            (EdgeClass::Interior, Some(c2)) => Some((c2, self.cell_data(c2, pair)?)),
            (EdgeClass::Interior, None) => {
                return Err(Error::NonConforming(format!("interior edge {e} has one cell")));
            }
            _ => None,
        };
        let [a, b] = edge.vertices;
        let (pa, pb) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
        let n = edge.normal;
        let (nodes, weights) = &self.edge_rule;
        let mut integral = 0.0;
        for (s, w) in nodes.iter().zip(weights) {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let t1 = self.traction(edge.first_cell(), &first, x, n);
            let j = match &second {
                Some((c2, d2)) => {
                    let t2 = self.traction(*c2, d2, x, n);
                    [0.5 * (t1[0] - t2[0]), 0.5 * (t1[1] - t2[1])]
                }
                None => t1,
            };
            integral += w * edge.length * (j[0] * j[0] + j[1] * j[1]);
        }
        Ok(edge.length * self.weights.rho_e[e].powi(2) * integral)
    }

    pub fn assemble_indicators(&self, pair: &Eigenpair, exec: Execution) -> Result<ErrorIndicators> {
        self.check(pair)?;
        let nc = self.mesh.num_cells();
        let cells = exec.map_range(nc, |c| -> Result<[f64; 3]> {
            Ok([
                self.element_residual_1(c, pair)? + self.element_residual_2(c, pair)?,
                self.oscillation(c, pair)?,
                0.0,
            ])
        });
        let ne = self.dofs.topology().num_edges();
        let edges = exec.map_range(ne, |e| self.edge_jump(e, pair));
        let mut eta_k_sq = Vec::with_capacity(nc);
        let mut theta_sq = Vec::with_capacity(nc);
        for r in cells {
            let [k, t, _] = r?;
            eta_k_sq.push(k);
            theta_sq.push(t);
        }
        let edge_sq: Vec<f64> = edges.into_iter().collect::<Result<_>>()?;
        let mut eta_j_sq = vec![0.0; nc];
        for (c, ce) in self.dofs.topology().cell_edges.iter().enumerate() {
            eta_j_sq[c] = ce.iter().map(|&e| edge_sq[e]).sum();
        }
        let eta_sq: f64 = eta_k_sq.iter().zip(&eta_j_sq).map(|(a, b)| a + b).sum();
        let theta = theta_sq.iter().sum::<f64>().sqrt();
        Ok(ErrorIndicators {
            eta_k_sq,
            eta_j_sq,
            theta_sq,
            edge_sq,
            eta: eta_sq.sqrt(),
            theta,
        })
    }
}

/// Convenience wrapper building an [`Estimator`] for one evaluation.
pub fn assemble_indicators(
    mesh: &Mesh,
    dofs: &DofMap,
    model: &MaterialModel,
    proj: &ProjectedCoefficients,
    pair: &Eigenpair,
    exec: Execution,
) -> Result<ErrorIndicators> {
    Estimator::new(mesh, dofs, model, proj)?.assemble_indicators(pair, exec)
}

/// `(‖μ^{1/2}∇v‖² + ‖μ^{-1/2}q‖² + ‖λ^{-1/2}q‖²)^{1/2}` with exact coefficients.
pub fn weighted_triple_norm(mesh: &Mesh, dofs: &DofMap, model: &MaterialModel, u: &[f64], p: &[f64]) -> Result<f64> {
    if u.len() != dofs.num_displacement() || p.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch("coefficient vectors do not match the mesh".into()));
    }
    let rule = quadrature_rule(ELEMENT_QUAD_DEGREE)?;
    let fam = dofs.family();
    let nu = model.poisson();
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh.cell_points(c)).ok_or(Error::DegenerateCell(c))?;
        let field = model.field(mesh.cell_subdomain()[c])?;
        let coeffs = cell_displacement(dofs, u, c);
        let v = mesh.cells()[c];
        let pl = [p[v[0]], p[v[1]], p[v[2]]];
        for q in 0..rule.len() {
            let l = rule.barycentric(q);
            let w = rule.weights[q] * 2.0 * geo.area;
            let e = field.eval(geo.map(l));
            let mu = 0.5 * e;
            let g = displacement_jet(&fam.eval(&geo, l), &coeffs).grad;
            let grad2 = g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2);
            let (pv, _) = pressure_at(&geo, pl, l);
            total += w * (mu * grad2 + pv * pv / mu + inverse_lambda(e, nu) * pv * pv);
        }
    }
    Ok(total.sqrt())
}

/// `err / η²`.
pub fn effectivity(err: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("estimator must be positive, got {eta}")));
    }
    Ok(err / (eta * eta))
}
