use serde::Serialize;

use super::{BinTable, StatsError};
use crate::growth::ObservationSet;

/// Smallest bin population accepted by [`fit_conditional_laplace`].
pub const MIN_CONDITIONAL_SAMPLE: usize = 10;

/// Maximum-likelihood Laplace (double exponential) fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceFit {
    pub location: f64,
    /// Mean absolute deviation from `location`.
    pub scale: f64,
    pub n: usize,
    pub log_likelihood: f64,
}

impl LaplaceFit {
    /// Standard deviation implied by the fit, `scale * sqrt(2)`.
    pub fn std_dev(&self) -> f64 {
        self.scale * std::f64::consts::SQRT_2
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Laplace MLE: location is the sample median, scale the mean absolute
/// deviation about it.
pub fn fit_laplace(values: &[f64]) -> Result<LaplaceFit, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints { n, required: 2 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let location = median(&sorted);
    let abs_dev: f64 = sorted.iter().map(|v| (v - location).abs()).sum();
    let scale = abs_dev / n as f64;
    if scale == 0.0 {
        return Err(StatsError::ZeroScale);
    }
    let nf = n as f64;
    Ok(LaplaceFit {
        location,
        scale,
        n,
        log_likelihood: -nf * (2.0 * scale).ln() - abs_dev / scale,
    })
}

/// Laplace fit of the log growth rates whose initial size falls in grid
/// bin `bin_index` of `table`.
pub fn fit_conditional_laplace(
    obs: &ObservationSet,
    table: &BinTable,
    bin_index: usize,
) -> Result<LaplaceFit, StatsError> {
    if bin_index >= table.n_bins_requested {
        return Err(StatsError::BinOutOfRange {
            index: bin_index,
            n_bins: table.n_bins_requested,
        });
    }
    let values: Vec<f64> = obs
        .observations
        .iter()
        .filter(|o| table.bin_index(o.s0) == Some(bin_index))
        .map(|o| o.log_growth)
        .collect();
    if values.len() < MIN_CONDITIONAL_SAMPLE {
        return Err(StatsError::TooFewPoints {
            n: values.len(),
            required: MIN_CONDITIONAL_SAMPLE,
        });
    }
    fit_laplace(&values)
}
