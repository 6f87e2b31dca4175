//! Conditional fluctuation statistics: logarithmic binning, log-log least
//! squares, and Laplace fits of the conditional growth distribution.

mod binning;
mod laplace;
mod regression;

pub use binning::{log_bin, BinRow, BinTable, DroppedBin, DEFAULT_MIN_COUNT};
pub use laplace::{fit_conditional_laplace, fit_laplace, LaplaceFit, MIN_CONDITIONAL_SAMPLE};
pub use regression::{fit_power_law, ols, RegressionFit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 bins, got {0}")]
    InvalidBinCount(usize),
    #[error("min_count must be at least 2, got {0}")]
    MinCountTooSmall(usize),
    #[error("initial sizes span no range ({distinct} distinct value(s)); nothing to bin")]
    NoSizeRange { distinct: usize },
    #[error("every one of {n_bins} bins holds fewer than {min_count} observations")]
    AllBinsDropped { n_bins: usize, min_count: usize },
    #[error("x and y have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {required} points, got {n}")]
    TooFewPoints { n: usize, required: usize },
    #[error("non-finite input value")]
    NonFinite,
    #[error("x values have zero variance")]
    ZeroVarianceX,
    #[error("y values have zero variance; R-squared undefined")]
    ZeroVarianceY,
    #[error("bin {index} out of range for a {n_bins}-bin table")]
    BinOutOfRange { index: usize, n_bins: usize },
    #[error("zero scale: all values identical")]
    ZeroScale,
}
