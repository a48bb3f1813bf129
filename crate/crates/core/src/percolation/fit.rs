//! Least-squares power-law fits.

use serde::{Deserialize, Serialize};

/// Fit of ln y = intercept + slope·ln x over the points with y > 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residuals of ln y, one per point used.
    pub residuals: Vec<f64>,
    /// Points used as (x, y).
    pub used: Vec<(f64, f64)>,
    /// Number of points dropped because y ≤ 0.
    pub dropped: usize,
}

impl LogLogFit {
    /// Root mean square of the residuals.
    pub fn rms_residual(&self) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }
}

/// Ordinary least squares on the log-log points; `None` with fewer than two
/// usable points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<LogLogFit> {
    let used: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0).collect();
    let dropped = points.len() - used.len();
    if used.len() < 2 {
        return None;
    }
    let n = used.len() as f64;
    let lx: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| y - (intercept + slope * x)).collect();
    Some(LogLogFit { slope, intercept, residuals, used, dropped })
}
