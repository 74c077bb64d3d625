//! Material parameters: Young's modulus fields, scaled Lamé coefficients and
//! their per-cell projection.
//!
//! With the eigenvalue scaled by `1 + ν`, the coefficients are `μ = E/2` and
//! `λ = Eν/(1-2ν)`. Only `1/λ` is ever stored, so the Stokes limit `ν = 1/2`
//! is the exact value `1/λ = 0`.

mod expr;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fem::quadrature_rule;
use crate::mesh::{Mesh, Point};

pub use expr::Expr;

/// Young's modulus on one subdomain.
#[derive(Clone, Debug, PartialEq)]
pub enum YoungField {
    Constant(f64),
    Expression(Expr),
}

impl YoungField {
    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            YoungField::Constant(v) => *v,
            YoungField::Expression(e) => e.eval(p[0], p[1]),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            YoungField::Constant(_) => true,
            YoungField::Expression(e) => e.is_constant(),
        }
    }

    fn scaled(&self, factor: f64) -> YoungField {
        match self {
            YoungField::Constant(v) => YoungField::Constant(v * factor),
            YoungField::Expression(e) => YoungField::Expression(Expr::Mul(
                Box::new(Expr::Number(factor)),
                Box::new(e.clone()),
            )),
        }
    }
}

/// Scaled Lamé pair. `lambda` is `f64::INFINITY` in the Stokes limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lame {
    pub mu: f64,
    pub lambda: f64,
}

fn check_poisson(nu: f64) -> Result<()> {
    if (0.0..=0.5).contains(&nu) {
        Ok(())
    } else {
        Err(Error::PoissonOutOfRange(nu))
    }
}

pub fn lame_from_young(young: f64, nu: f64) -> Result<Lame> {
    check_poisson(nu)?;
    if young.is_nan() || young <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "young's modulus must be positive, got {young}"
        )));
    }
    let lambda = if nu == 0.5 {
        f64::INFINITY
    } else {
        young * nu / (1.0 - 2.0 * nu)
    };
    Ok(Lame {
        mu: young / 2.0,
        lambda,
    })
}

/// `1/λ` for a given modulus; exactly zero when `ν = 1/2`.
#[inline]
pub fn inverse_lambda(young: f64, nu: f64) -> f64 {
    if nu == 0.5 {
        0.0
    } else {
        (1.0 - 2.0 * nu) / (young * nu)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialModel {
    young: BTreeMap<i32, YoungField>,
    /// Applies to any subdomain without its own entry.
    fallback: Option<YoungField>,
    poisson: f64,
    density: f64,
}

impl MaterialModel {
    pub fn new(young: BTreeMap<i32, YoungField>, poisson: f64, density: f64) -> Result<Self> {
        Self::build(young, None, poisson, density)
    }

    /// Same modulus on every subdomain.
    pub fn uniform(young: f64, poisson: f64, density: f64) -> Result<Self> {
        Self::build(BTreeMap::new(), Some(YoungField::Constant(young)), poisson, density)
    }

    fn build(
        young: BTreeMap<i32, YoungField>,
        fallback: Option<YoungField>,
        poisson: f64,
        density: f64,
    ) -> Result<Self> {
        check_poisson(poisson)?;
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidArgument(format!("density must be positive, got {density}")));
        }
        for (&tag, field) in young.iter().chain(fallback.iter().map(|f| (&0, f))) {
            if let YoungField::Constant(v) = field {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::NonPositiveYoung { subdomain: tag, value: *v });
                }
            }
        }
        if young.is_empty() && fallback.is_none() {
            return Err(Error::InvalidArgument("no young's modulus given".into()));
        }
        Ok(Self {
            young,
            fallback,
            poisson,
            density,
        })
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn stokes_limit(&self) -> bool {
        self.poisson == 0.5
    }

    pub fn field(&self, subdomain: i32) -> Result<&YoungField> {
        self.young
            .get(&subdomain)
            .or(self.fallback.as_ref())
            .ok_or(Error::UnknownSubdomain(subdomain))
    }

    pub fn young(&self, p: Point, subdomain: i32) -> Result<f64> {
        Ok(self.field(subdomain)?.eval(p))
    }

    /// True when every subdomain modulus is a constant.
    pub fn is_piecewise_constant(&self) -> bool {
        self.young.values().chain(self.fallback.iter()).all(YoungField::is_constant)
    }

    /// Same model with every modulus multiplied by `factor`.
    pub fn with_scaled_young(&self, factor: f64) -> Result<Self> {
        Self::build(
            self.young.iter().map(|(&t, f)| (t, f.scaled(factor))).collect(),
            self.fallback.as_ref().map(|f| f.scaled(factor)),
            self.poisson,
            self.density,
        )
    }

    pub fn with_poisson(&self, poisson: f64) -> Result<Self> {
        Self::build(self.young.clone(), self.fallback.clone(), poisson, self.density)
    }

    /// Checks that every cell's subdomain has a modulus and that it is
    /// positive at the vertices and centroid of every cell.
    pub fn validate_on(&self, mesh: &Mesh) -> Result<()> {
        for c in 0..mesh.num_cells() {
            let tag = mesh.cell_subdomain()[c];
            let field = self.field(tag)?;
            let pts = mesh.cell_points(c);
            for p in pts.iter().copied().chain(std::iter::once(mesh.cell_centroid(c))) {
                let e = field.eval(p);
                if !(e > 0.0 && e.is_finite()) {
                    return Err(Error::NonPositiveYoung { subdomain: tag, value: e });
                }
            }
        }
        Ok(())
    }

    pub fn from_spec(spec: &MaterialSpec) -> Result<Self> {
        let mut young = BTreeMap::new();
        let mut fallback = None;
        for (key, value) in &spec.young {
            let field = match value {
                YoungSpec::Value(v) => YoungField::Constant(*v),
                YoungSpec::Expression(s) => {
                    let e = Expr::parse(s)?;
                    match e.is_constant() {
                        true => YoungField::Constant(e.eval(0.0, 0.0)),
                        false => YoungField::Expression(e),
                    }
                }
            };
            if key == "*" {
                fallback = Some(field);
            } else {
                let tag: i32 = key
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("subdomain key '{key}' is not an integer")))?;
                young.insert(tag, field);
            }
        }
        Self::build(young, fallback, spec.nu, spec.rho.unwrap_or(1.0))
    }

    pub fn to_spec(&self) -> MaterialSpec {
        let conv = |f: &YoungField| match f {
            YoungField::Constant(v) => YoungSpec::Value(*v),
            YoungField::Expression(e) => YoungSpec::Expression(e.to_string()),
        };
        let mut young: BTreeMap<String, YoungSpec> =
            self.young.iter().map(|(t, f)| (t.to_string(), conv(f))).collect();
        if let Some(f) = &self.fallback {
            young.insert("*".into(), conv(f));
        }
        MaterialSpec {
            nu: self.poisson,
            rho: Some(self.density),
            young,
        }
    }
}

/// JSON material block, e.g. `{"nu": 0.35, "rho": 7700.0, "young": {"1": 1.44e11}}`
/// or `{"nu": 0.35, "young": {"1": "sqrt(x^2+y^2+4)"}}`. The key `"*"` applies
/// to every subdomain without its own entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub young: BTreeMap<String, YoungSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum YoungSpec {
    Value(f64),
    Expression(String),
}

/// `μ(x)` at a point of the given subdomain.
pub fn evaluate_mu(model: &MaterialModel, p: Point, subdomain: i32) -> Result<f64> {
    Ok(model.young(p, subdomain)? / 2.0)
}

/// Per-cell means of `μ` and `1/λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedCoefficients {
    pub mu_h: Vec<f64>,
    pub lambda_inv: Vec<f64>,
}

pub fn project_coefficients(
    model: &MaterialModel,
    mesh: &Mesh,
    quad_degree: usize,
    exec: Execution,
) -> Result<ProjectedCoefficients> {
    if quad_degree < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection quadrature degree must be at least 2, got {quad_degree}"
        )));
    }
    let rule = quadrature_rule(quad_degree)?;
    let nu = model.poisson();
    let per_cell = exec.map_range(mesh.num_cells(), |c| -> Result<(f64, f64)> {
        let field = model.field(mesh.cell_subdomain()[c])?;
        let [p0, p1, p2] = mesh.cell_points(c);
        if let YoungField::Constant(e) = field {
            return Ok((e / 2.0, inverse_lambda(*e, nu)));
        }
        let (mut mu, mut inv) = (0.0, 0.0);
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let (l1, l2) = (q[0], q[1]);
            let l0 = 1.0 - l1 - l2;
            let x = [
                l0 * p0[0] + l1 * p1[0] + l2 * p2[0],
                l0 * p0[1] + l1 * p1[1] + l2 * p2[1],
            ];
            let e = field.eval(x);
            mu += w * e / 2.0;
            inv += w * inverse_lambda(e, nu);
        }
        // reference weights sum to 1/2
        Ok((2.0 * mu, 2.0 * inv))
    });
    let mut mu_h = Vec::with_capacity(per_cell.len());
    let mut lambda_inv = Vec::with_capacity(per_cell.len());
    for r in per_cell {
        let (m, l) = r?;
        mu_h.push(m);
        lambda_inv.push(l);
    }
    Ok(ProjectedCoefficients { mu_h, lambda_inv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{l_shape_mesh, three_strip_square_mesh, unit_square_mesh, SideKinds};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn steel_table_values() {
        let l = lame_from_young(1.44e11, 0.35).unwrap();
        assert!(rel(l.mu, 7.2e10) < 1e-15);
        assert!(rel(l.lambda, 1.68e11) < 1e-12);
        let l = lame_from_young(1.44e11, 0.49999).unwrap();
        assert!(rel(l.mu, 7.2e10) < 1e-15);
        // 3.5999e15 at four significant digits
        assert!((l.lambda / 1e15 * 1e4).round() / 1e4 == 3.5999);
        let l = lame_from_young(1.44e11, 0.49).unwrap();
        assert!(rel(l.lambda, 3.528e12) < 1e-12);
        let l = lame_from_young(3.0, 0.0).unwrap();
        assert_eq!((l.mu, l.lambda), (1.5, 0.0));
        assert!(lame_from_young(1.0, 0.5).unwrap().lambda.is_infinite());
    }

    #[test]
    fn poisson_range() {
        assert!(matches!(lame_from_young(1.0, 0.6), Err(Error::PoissonOutOfRange(_))));
        assert!(matches!(lame_from_young(1.0, -0.1), Err(Error::PoissonOutOfRange(_))));
        assert!(MaterialModel::uniform(1.0, 0.51, 1.0).is_err());
    }

    #[test]
    fn homogeneous_in_young() {
        for nu in [0.0, 0.2, 0.35, 0.49999] {
            let a = lame_from_young(3.7, nu).unwrap();
            let b = lame_from_young(3.7 * 8.0, nu).unwrap();
            assert_eq!(b.mu, 8.0 * a.mu);
            assert_eq!(b.lambda, 8.0 * a.lambda);
        }
    }

    fn l_shape_model(nu: f64) -> MaterialModel {
        let spec: MaterialSpec = serde_json::from_str(
            r#"{"nu": 0.35, "young": {"1": "sqrt(x^2+y^2+4)", "2": "sqrt(x^2+y^2+2)", "3": "sqrt(x^2+y^2+4)"}}"#,
        )
        .unwrap();
        MaterialModel::from_spec(&spec).unwrap().with_poisson(nu).unwrap()
    }

    #[test]
    fn evaluate_mu_cases() {
        let m = l_shape_model(0.35);
        assert_eq!(evaluate_mu(&m, [0.5, 0.5], 1).unwrap(), 0.5 * 4.5f64.sqrt());
        let c = MaterialModel::uniform(1.44e11, 0.35, 7.7e3).unwrap();
        assert_eq!(evaluate_mu(&c, [0.3, 0.9], 7).unwrap(), 7.2e10);
        let strips = MaterialModel::new(
            [(1, YoungField::Constant(2.0)), (2, YoungField::Constant(1.0)), (3, YoungField::Constant(3.0))].into(),
            0.35,
            1.0,
        )
        .unwrap();
        assert_eq!(evaluate_mu(&strips, [0.5, 0.5], 2).unwrap(), 0.5);
        assert!(matches!(evaluate_mu(&strips, [0.5, 0.5], 9), Err(Error::UnknownSubdomain(9))));
    }

    #[test]
    fn projection_of_constants() {
        let mesh = unit_square_mesh(3).unwrap();
        let m = MaterialModel::uniform(1.44e11, 0.35, 7.7e3).unwrap();
        let p = project_coefficients(&m, &mesh, 6, Execution::Sequential).unwrap();
        assert!(p.mu_h.iter().all(|&v| rel(v, 7.2e10) <= 1e-12));
        let s = project_coefficients(&m.with_poisson(0.5).unwrap(), &mesh, 6, Execution::Sequential).unwrap();
        assert!(s.lambda_inv.iter().all(|&v| v == 0.0));
        assert!(p.lambda_inv.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn projection_reproduces_strip_constants() {
        let mesh = three_strip_square_mesh(6, SideKinds::BOTTOM_CLAMPED).unwrap();
        let strips = MaterialModel::new(
            [(1, YoungField::Constant(2.0)), (2, YoungField::Constant(1.0)), (3, YoungField::Constant(3.0))].into(),
            0.49999,
            1.0,
        )
        .unwrap();
        let p = project_coefficients(&strips, &mesh, 4, Execution::Parallel).unwrap();
        for c in 0..mesh.num_cells() {
            let e = [2.0, 1.0, 3.0][(mesh.cell_subdomain()[c] - 1) as usize];
            assert_eq!(p.mu_h[c], e / 2.0);
        }
    }

    #[test]
    fn validate_rejects_unknown_tags() {
        let mesh = l_shape_mesh(1).unwrap();
        let partial = MaterialModel::new([(1, YoungField::Constant(1.0))].into(), 0.3, 1.0).unwrap();
        assert!(matches!(partial.validate_on(&mesh), Err(Error::UnknownSubdomain(2))));
        assert!(l_shape_model(0.35).validate_on(&mesh).is_ok());
    }

    #[test]
    fn spec_round_trip() {
        let m = l_shape_model(0.49);
        let back = MaterialModel::from_spec(&m.to_spec()).unwrap();
        for (p, tag) in [([0.1, 0.2], 1), ([-0.7, 0.4], 2)] {
            assert!(rel(back.young(p, tag).unwrap(), m.young(p, tag).unwrap()) < 1e-15);
        }
    }
}
