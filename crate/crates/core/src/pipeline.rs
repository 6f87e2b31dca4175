//! The single-sample path: extract, drop outliers, bin, fit.

use thiserror::Error;

use crate::growth::{self, GrowthError, ObservationSet, DEFAULT_MAX_GROWTH_PCT};
use crate::panel::{FirmPanel, SizeMeasure};
use crate::stats::{self, BinTable, RegressionFit, StatsError, DEFAULT_MIN_COUNT};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("binning failed: {0}")]
    Binning(StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub measure: SizeMeasure,
    pub n_bins: usize,
    pub min_count: usize,
    pub max_growth_pct: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            measure: SizeMeasure::Sales,
            n_bins: 20,
            min_count: DEFAULT_MIN_COUNT,
            max_growth_pct: DEFAULT_MAX_GROWTH_PCT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub observations: ObservationSet,
    pub table: BinTable,
    /// A fit failure still leaves the bin table available for inspection.
    pub fit: Result<RegressionFit, StatsError>,
}

/// Pools every growth observation in `panel` and fits the scaling law.
pub fn analyze_panel(panel: &FirmPanel, cfg: &AnalysisConfig) -> Result<Analysis, PipelineError> {
    let extracted = growth::extract_growth_observations(panel, cfg.measure);
    analyze_observations(
        growth::filter_outliers(&extracted, cfg.max_growth_pct)?,
        cfg,
    )
}

/// Bins and fits an already-filtered observation set.
pub fn analyze_observations(
    observations: ObservationSet,
    cfg: &AnalysisConfig,
) -> Result<Analysis, PipelineError> {
    let table =
        stats::log_bin(&observations, cfg.n_bins, cfg.min_count).map_err(PipelineError::Binning)?;
    let fit = stats::fit_power_law(&table);
    Ok(Analysis {
        observations,
        table,
        fit,
    })
}
