use std::f64::consts::LN_10;

use serde::Serialize;

use super::{BinTable, StatsError};

/// Ordinary least-squares line `y = slope * x + intercept`.
///
/// On log-log axes `slope` is the negated scaling exponent and `intercept`
/// is the log of the prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope, `sqrt(SSE / ((n - 2) * Sxx))`.
    pub slope_std_err: f64,
    /// Residual standard error, `sqrt(SSE / (n - 2))`.
    pub residual_std_err: f64,
    pub n_points: usize,
    /// `-slope`
    pub beta: f64,
}

impl RegressionFit {
    /// Intercept expressed for base-10 logarithms on both axes.
    pub fn intercept_log10(&self) -> f64 {
        self.intercept / LN_10
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Closed-form simple linear regression of `ys` on `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<RegressionFit, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { n, required: 3 });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - x_mean, y - y_mean);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVarianceX);
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVarianceY);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let dof = (n - 2) as f64;
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared: (1.0 - sse / syy).clamp(0.0, 1.0),
        slope_std_err: (sse / (dof * sxx)).sqrt(),
        residual_std_err: (sse / dof).sqrt(),
        n_points: n,
        beta: -slope,
    })
}

/// Fits `ln sigma = -beta * ln center + ln a` over the retained bins.
/// Bins with zero sigma have no logarithm and are skipped with a warning.
pub fn fit_power_law(table: &BinTable) -> Result<RegressionFit, StatsError> {
    let (mut xs, mut ys) = (
        Vec::with_capacity(table.bins.len()),
        Vec::with_capacity(table.bins.len()),
    );
    for row in &table.bins {
        if row.sigma > 0.0 {
            xs.push(row.center.ln());
            ys.push(row.sigma.ln());
        } else {
            log::warn!(
                "bin {} (center {:.4e}) has zero sigma; excluded from fit",
                row.index,
                row.center
            );
        }
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFewPoints {
            n: xs.len(),
            required: 3,
        });
    }
    ols(&xs, &ys)
}
