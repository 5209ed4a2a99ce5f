//! Log-log least-squares fit of mean evaluations against problem size.

use crate::experiment::{HarnessError, SummaryRow};

/// Ordinary least squares on `(ln n, ln mean_evaluations)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Slope of the fitted line: the empirical scaling exponent.
    pub exponent: f64,
    /// Intercept in log space.
    pub intercept: f64,
    /// Euclidean norm of the residuals.
    pub residual_norm: f64,
    /// How many sweep points entered the fit.
    pub points: usize,
}

/// Fit a power law through the sweep points whose trials all reached the
/// optimum. Needs at least three such points.
pub fn fit_scaling_exponent(summary: &[SummaryRow]) -> Result<ScalingFit, HarnessError> {
    let points: Vec<(f64, f64)> = summary
        .iter()
        .filter(|row| row.all_optimal())
        .map(|row| ((row.n as f64).ln(), row.mean_evaluations.ln()))
        .collect();
    if points.len() < 3 {
        return Err(HarnessError::InsufficientFitPoints {
            have: points.len(),
            need: 3,
        });
    }

    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let exponent = sxy / sxx;
    let intercept = mean_y - exponent * mean_x;
    let residual_norm = points
        .iter()
        .map(|p| (p.1 - (intercept + exponent * p.0)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScalingFit {
        exponent,
        intercept,
        residual_norm,
        points: points.len(),
    })
}
