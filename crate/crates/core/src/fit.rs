//! Least-squares power-law fits on log2 scales.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// The fitted `(abscissa, log2 value)` pairs.
    pub points: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `log2 value` against `log2 abscissa`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(a, _)| !(a > 0.0)) {
        return Err(invalid("points", "abscissae must be positive"));
    }
    let logged: Vec<(f64, f64)> = points.iter().map(|&(a, v)| (a.log2(), v)).collect();
    fit_semilog(&logged)
}

/// Fits `log2 value` against the abscissa as given.
pub fn fit_semilog(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("points", "values must be positive and finite"));
    }
    let logged: Vec<(f64, f64)> = points.iter().map(|&(a, v)| (a, v.log2())).collect();
    fit_line(&logged)
}

/// Ordinary least squares on raw `(x, y)` pairs.
pub fn fit_line(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(invalid("points", format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("points", "non-finite coordinate"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
