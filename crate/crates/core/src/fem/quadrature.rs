//! Quadrature on the reference triangle and on the unit interval.

use super::quadrature_tables as tables;
use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

/// Points are reference coordinates `(ξ, η)` on the triangle `(0,0), (1,0),
/// (0,1)`; equivalently the barycentric coordinates `λ1 = ξ`, `λ2 = η`,
/// `λ0 = 1 - ξ - η`. Weights sum to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates `(λ0, λ1, λ2)` of point `q`.
    #[inline]
    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [xi, eta] = self.points[q];
        [1.0 - xi - eta, xi, eta]
    }
}

fn from_table(degree: usize, table: &[[f64; 3]]) -> QuadratureRule {
    QuadratureRule {
        degree,
        points: table.iter().map(|r| [r[0], r[1]]).collect(),
        weights: table.iter().map(|r| r[2]).collect(),
    }
}

/// Symmetric Gaussian rule exact for polynomials of total degree `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let rule = match degree {
        1 => from_table(1, &tables::DEGREE_1),
        2 => from_table(2, &tables::DEGREE_2),
        3 => from_table(3, &tables::DEGREE_3),
        4 => from_table(4, &tables::DEGREE_4),
        5 => from_table(5, &tables::DEGREE_5),
        6 => from_table(6, &tables::DEGREE_6),
        7 => from_table(7, &tables::DEGREE_7),
        8 => from_table(8, &tables::DEGREE_8),
        9 => from_table(9, &tables::DEGREE_9),
        10 => from_table(10, &tables::DEGREE_10),
        d => return Err(Error::UnsupportedQuadrature(d)),
    };
    Ok(rule)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one Gauss point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, refined by Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    fn apply(rule: &QuadratureRule, a: u32, b: u32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
            .sum()
    }

    #[test]
    fn exact_through_advertised_degree() {
        for d in 1..=MAX_DEGREE {
            let rule = quadrature_rule(d).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let err = (apply(&rule, a, b) - monomial(a, b)).abs();
                    assert!(err < 1e-15, "degree {d}: x^{a} y^{b} off by {err}");
                }
            }
        }
    }

    #[test]
    fn centroid_rule_and_x2y2() {
        let r1 = quadrature_rule(1).unwrap();
        assert_eq!(r1.points, vec![[1.0 / 3.0, 1.0 / 3.0]]);
        assert_eq!(r1.weights.iter().sum::<f64>(), 0.5);
        let r4 = quadrature_rule(4).unwrap();
        assert!((apply(&r4, 2, 2) - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn degree_six_misses_degree_seven() {
        let r6 = quadrature_rule(6).unwrap();
        let worst = (0..=7u32)
            .map(|a| (apply(&r6, a, 7 - a) - monomial(a, 7 - a)).abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-12, "degree 6 rule unexpectedly exact at degree 7");
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(quadrature_rule(0), Err(Error::UnsupportedQuadrature(0))));
        assert!(matches!(quadrature_rule(11), Err(Error::UnsupportedQuadrature(11))));
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) as i32 {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }
}
