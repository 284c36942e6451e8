//! Log-log slope fits for convergence-order checks.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% half-width of the slope (normal approximation).
    pub confidence: f64,
    pub points: usize,
}

/// Least-squares fit of `ln(y) = intercept + slope * ln(x)`.
///
/// Requires at least four strictly positive points.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit, String> {
    if points.len() < 4 {
        return Err(format!("need at least 4 points, got {}", points.len()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err("all points must be positive to fit in log-log space".into());
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err("all x values identical; slope undefined".into());
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let slope_se = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        confidence: 1.96 * slope_se,
        points: points.len(),
    })
}
