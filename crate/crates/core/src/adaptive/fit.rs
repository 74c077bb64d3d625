//! Least-squares rate fits and extrapolation of convergent sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn least_squares_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("a line fit needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Power law `err ≈ C·x^slope` fitted in log-log coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub constant: f64,
    pub points: usize,
    /// Input positions dropped for a zero, negative or non-finite error.
    pub excluded: Vec<usize>,
}

pub fn power_law_fit(x: &[f64], err: &[f64]) -> Result<RateFit> {
    if x.len() != err.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} errors", x.len(), err.len())));
    }
    let mut lx = Vec::with_capacity(x.len());
    let mut ly = Vec::with_capacity(x.len());
    let mut excluded = Vec::new();
    for (i, (&xi, &ei)) in x.iter().zip(err).enumerate() {
        if ei > 0.0 && ei.is_finite() && xi > 0.0 && xi.is_finite() {
            lx.push(xi.ln());
            ly.push(ei.ln());
        } else {
            excluded.push(i);
        }
    }
    if !excluded.is_empty() {
        log::warn!("rate fit: excluded points {excluded:?} with non-positive values");
    }
    if lx.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a rate fit needs at least 3 positive errors, got {}",
            lx.len()
        )));
    }
    let line = least_squares_line(&lx, &ly)?;
    Ok(RateFit {
        slope: line.slope,
        constant: line.intercept.exp(),
        points: lx.len(),
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMethod {
    /// Joint fit of limit, constant and order.
    ThreeParameter,
    /// Order taken from successive differences, then limit and constant fitted.
    FixedOrder,
}

/// `y ≈ value + constant·h^order`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub order: f64,
    pub constant: f64,
    pub method: ExtrapolationMethod,
}

const ORDER_MIN: f64 = 0.2;
const ORDER_MAX: f64 = 6.0;
const ORDER_STEP: f64 = 0.01;

/// Least-squares `(a, C)` of `y ≈ a + C·h^t` and the residual sum of squares.
fn fixed_order_fit(h: &[f64], y: &[f64], t: f64) -> Option<(f64, f64, f64)> {
    let z: Vec<f64> = h.iter().map(|v| v.powf(t)).collect();
    let line = least_squares_line(&z, y).ok()?;
    // the h^t column must not be numerically constant
    let spread = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - z.iter().cloned().fold(f64::INFINITY, f64::min);
    let zmax = z.iter().cloned().fold(0.0f64, f64::max);
    if !(spread > 1e-10 * zmax) {
        return None;
    }
    let rss = z
        .iter()
        .zip(y)
        .map(|(zi, yi)| (yi - line.intercept - line.slope * zi).powi(2))
        .sum();
    Some((line.intercept, line.slope, rss))
}

/// Fits `y ≈ value + C·hᵗ`. The order is searched on `[0.2, 6]` by a grid
/// scan refined with golden-section search; if the optimum sits on the
/// boundary or the fit degenerates, the order is taken from the successive
/// differences instead.
pub fn extrapolate_sequence(h: &[f64], y: &[f64]) -> Result<Extrapolation> {
    if h.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} mesh sizes, {} values", h.len(), y.len())));
    }
    if h.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least 3 levels, got {}",
            h.len()
        )));
    }
    if h.iter().chain(y).any(|v| !v.is_finite()) || h.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument("extrapolation needs finite values and positive mesh sizes".into()));
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.windows(2).any(|d| d[0] * d[1] < 0.0) {
        log::warn!("extrapolation: sequence is not monotone, fitting anyway");
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let rss = |t: f64| fixed_order_fit(h, y, t).map_or(f64::INFINITY, |f| f.2);

    let steps = ((ORDER_MAX - ORDER_MIN) / ORDER_STEP).round() as usize;
    let (mut best_t, mut best) = (ORDER_MIN, f64::INFINITY);
    for i in 0..=steps {
        let t = ORDER_MIN + i as f64 * ORDER_STEP;
        let r = rss(t);
        if r < best {
            best = r;
            best_t = t;
        }
    }
    let interior = best.is_finite() && best_t > ORDER_MIN + 0.5 * ORDER_STEP && best_t < ORDER_MAX - 0.5 * ORDER_STEP;
    if interior {
        let t = golden_section(rss, best_t - ORDER_STEP, best_t + ORDER_STEP, 1e-12);
        if let Some((a, c, _)) = fixed_order_fit(h, y, t) {
            if c.abs() > 1e-14 * scale {
                return Ok(Extrapolation {
                    value: a,
                    order: t,
                    constant: c,
                    method: ExtrapolationMethod::ThreeParameter,
                });
            }
        }
    }

    let abs_diffs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let fit = power_law_fit(&h[..h.len() - 1], &abs_diffs).or_else(|_| {
        // two differences still define an order
        let pts: Vec<(f64, f64)> = h
            .iter()
            .zip(&abs_diffs)
            .filter(|(_, d)| **d > 0.0)
            .map(|(hi, d)| (hi.ln(), d.ln()))
            .collect();
        let (lx, ly): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        least_squares_line(&lx, &ly).map(|l| RateFit {
            slope: l.slope,
            constant: l.intercept.exp(),
            points: lx.len(),
            excluded: Vec::new(),
        })
    });
    let t = fit
        .map_err(|_| Error::InvalidArgument("sequence is constant; no order can be fitted".into()))?
        .slope;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sequence does not converge (difference order {t:.3})"
        )));
    }
    let (a, c, _) = fixed_order_fit(h, y, t)
        .ok_or_else(|| Error::InvalidArgument("mesh sizes too close to separate the terms".into()))?;
    Ok(Extrapolation {
        value: a,
        order: t,
        constant: c,
        method: ExtrapolationMethod::FixedOrder,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
