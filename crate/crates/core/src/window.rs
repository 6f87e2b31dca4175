//! Moving-window pooled regressions and detection of a sustained drop in
//! the slope standard error.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::growth::{self, GrowthError, DEFAULT_MAX_GROWTH_PCT};
use crate::panel::{FirmPanel, SizeMeasure};
use crate::stats::{self, RegressionFit, StatsError, DEFAULT_MIN_COUNT};

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window length must be at least 1")]
    InvalidWindowLength,
    #[error("panel is empty")]
    EmptyPanel,
    #[error(
        "panel spans {first}..={last}; a {window_length}-year window needs {needed} years of data"
    )]
    PanelTooShort {
        first: i32,
        last: i32,
        window_length: u32,
        needed: u32,
    },
    #[error("empty window series")]
    EmptySeries,
    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("persistence must be at least 1")]
    InvalidPersistence,
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub measure: SizeMeasure,
    pub window_length: u32,
    pub n_bins: usize,
    pub min_count: usize,
    pub max_growth_pct: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            measure: SizeMeasure::Sales,
            window_length: 5,
            n_bins: 10,
            min_count: DEFAULT_MIN_COUNT,
            max_growth_pct: DEFAULT_MAX_GROWTH_PCT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub start_year: i32,
    /// Last initial-size year pooled; final sizes reach `end_year + 1`.
    pub end_year: i32,
    pub fit: Result<RegressionFit, StatsError>,
    pub n_obs: usize,
    pub n_firms: usize,
}

impl WindowEntry {
    pub fn slope_std_err(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.slope_std_err)
    }

    pub fn status(&self) -> &'static str {
        if self.fit.is_ok() {
            "ok"
        } else {
            "insufficient-data"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub label: String,
    pub entries: Vec<WindowEntry>,
    pub window_length: u32,
    pub n_bins: usize,
}

impl WindowSeries {
    pub fn first_fit(&self) -> Option<&WindowEntry> {
        self.entries.iter().find(|e| e.fit.is_ok())
    }

    pub fn last_fit(&self) -> Option<&WindowEntry> {
        self.entries.iter().rev().find(|e| e.fit.is_ok())
    }
}

/// Fits the scaling law in every feasible window of `window_length`
/// initial-size years, stepping the start year by one.
///
/// A window starting at `y` pools observations with `year0` in
/// `y..=y + window_length - 1`, so it needs size data through
/// `y + window_length`. Windows too sparse to fit carry the fit error
/// instead of a fit.
pub fn moving_window_fits(
    panel: &FirmPanel,
    cfg: &WindowConfig,
) -> Result<WindowSeries, WindowError> {
    if cfg.window_length == 0 {
        return Err(WindowError::InvalidWindowLength);
    }
    let (first, last) = panel.year_span().ok_or(WindowError::EmptyPanel)?;
    let len = cfg.window_length as i32;
    if last - first < len {
        return Err(WindowError::PanelTooShort {
            first,
            last,
            window_length: cfg.window_length,
            needed: cfg.window_length + 1,
        });
    }
    let extracted = growth::extract_growth_observations(panel, cfg.measure);
    let obs = growth::filter_outliers(&extracted, cfg.max_growth_pct)?;

    let starts: Vec<i32> = (first..=last - len).collect();
    let entries = starts
        .par_iter()
        .map(|&start| {
            let end = start + len - 1;
            let pooled = growth::pool(&obs, start, end)?;
            let fit = stats::log_bin(&pooled, cfg.n_bins, cfg.min_count)
                .and_then(|t| stats::fit_power_law(&t));
            Ok(WindowEntry {
                start_year: start,
                end_year: end,
                fit,
                n_obs: pooled.len(),
                n_firms: pooled.firm_count(),
            })
        })
        .collect::<Result<Vec<_>, WindowError>>()?;

    Ok(WindowSeries {
        label: panel.provenance().to_string(),
        entries,
        window_length: cfg.window_length,
        n_bins: cfg.n_bins,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub converged: bool,
    pub onset_year: Option<i32>,
    pub onset_index: Option<usize>,
    pub threshold: f64,
    pub persistence: usize,
    pub series_ref: String,
}

impl fmt::Display for ConvergenceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.onset_year {
            Some(y) if self.converged => write!(f, "converged at {y}")?,
            _ => write!(f, "no convergence onset")?,
        }
        write!(
            f,
            " (rule: slope SE < {} for >= {} consecutive windows and in every later fitted window)",
            self.threshold, self.persistence
        )
    }
}

/// Finds the earliest window from which the slope standard error stays
/// below `threshold`: the onset must open a run of `persistence` fitted
/// windows below threshold, and no later fitted window may reach it.
/// Failed windows break a run but are ignored after one is established.
pub fn detect_convergence(
    series: &WindowSeries,
    threshold: f64,
    persistence: usize,
) -> Result<ConvergenceResult, WindowError> {
    if series.entries.is_empty() {
        return Err(WindowError::EmptySeries);
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(WindowError::InvalidThreshold(threshold));
    }
    if persistence == 0 {
        return Err(WindowError::InvalidPersistence);
    }
    let below: Vec<Option<bool>> = series
        .entries
        .iter()
        .map(|e| e.slope_std_err().map(|se| se < threshold))
        .collect();
    let after_last_violation = below
        .iter()
        .rposition(|b| *b == Some(false))
        .map_or(0, |i| i + 1);
    let onset = (after_last_violation..below.len()).find(|&i| {
        i + persistence <= below.len() && below[i..i + persistence].iter().all(|b| *b == Some(true))
    });
    Ok(ConvergenceResult {
        converged: onset.is_some(),
        onset_year: onset.map(|i| series.entries[i].start_year),
        onset_index: onset,
        threshold,
        persistence,
        series_ref: series.label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::FirmRecord;

    fn series_of(ses: &[Option<f64>]) -> WindowSeries {
        let entries = ses
            .iter()
            .enumerate()
            .map(|(i, se)| WindowEntry {
                start_year: 2000 + i as i32,
                end_year: 2004 + i as i32,
                fit: se
                    .map(|s| RegressionFit {
                        slope: -0.25,
                        intercept: 0.0,
                        r_squared: 0.9,
                        slope_std_err: s,
                        residual_std_err: s,
                        n_points: 10,
                        beta: 0.25,
                    })
                    .ok_or(StatsError::TooFewPoints { n: 2, required: 3 }),
                n_obs: 100,
                n_firms: 20,
            })
            .collect();
        WindowSeries {
            label: "t".into(),
            entries,
            window_length: 5,
            n_bins: 10,
        }
    }

    fn onset(ses: &[Option<f64>], persistence: usize) -> Option<usize> {
        detect_convergence(&series_of(ses), 0.1, persistence)
            .unwrap()
            .onset_index
    }

    #[test]
    fn sustained_drop() {
        let s: Vec<_> = [0.5, 0.3, 0.08, 0.07, 0.06].map(Some).to_vec();
        let r = detect_convergence(&series_of(&s), 0.1, 3).unwrap();
        assert!(r.converged);
        assert_eq!((r.onset_index, r.onset_year), (Some(2), Some(2002)));
        assert!(r.to_string().starts_with("converged at 2002"));
    }

    #[test]
    fn transient_dip_ignored() {
        assert_eq!(onset(&[0.08, 0.3, 0.07, 0.06, 0.05].map(Some), 3), Some(2));
    }

    #[test]
    fn never_below() {
        let r = detect_convergence(&series_of(&[0.5, 0.4, 0.3, 0.2].map(Some)), 0.1, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.onset_year, None);
        assert!(r.to_string().starts_with("no convergence onset"));
    }

    #[test]
    fn below_from_the_start() {
        assert_eq!(onset(&[0.05, 0.04, 0.03].map(Some), 3), Some(0));
    }

    #[test]
    fn run_too_short_at_end() {
        assert_eq!(onset(&[0.5, 0.3, 0.08, 0.07].map(Some), 3), None);
        assert_eq!(onset(&[0.5, 0.3, 0.08, 0.07].map(Some), 2), Some(2));
    }

    #[test]
    fn failures_break_runs_but_not_regimes() {
        assert_eq!(
            onset(
                &[
                    Some(0.5),
                    Some(0.05),
                    None,
                    Some(0.05),
                    Some(0.04),
                    Some(0.03)
                ],
                3
            ),
            Some(3)
        );
        assert_eq!(
            onset(
                &[
                    Some(0.5),
                    Some(0.05),
                    Some(0.04),
                    Some(0.03),
                    None,
                    Some(0.02)
                ],
                3
            ),
            Some(1)
        );
        assert_eq!(onset(&[None, None, None], 1), None);
    }

    #[test]
    fn precondition_errors() {
        let s = series_of(&[Some(0.1)]);
        assert_eq!(
            detect_convergence(&s, 0.0, 3).unwrap_err(),
            WindowError::InvalidThreshold(0.0)
        );
        assert_eq!(
            detect_convergence(&s, 0.1, 0).unwrap_err(),
            WindowError::InvalidPersistence
        );
        assert_eq!(
            detect_convergence(&series_of(&[]), 0.1, 1).unwrap_err(),
            WindowError::EmptySeries
        );
    }

    fn flat_panel(first: i32, last: i32, firms: usize) -> FirmPanel {
        let mut recs = Vec::new();
        for f in 0..firms {
            for y in first..=last {
                let s = 10f64.powf(1.0 + 4.0 * f as f64 / firms as f64)
                    * (1.0 + 0.01 * ((f * 7 + y as usize) % 13) as f64);
                recs.push(
                    FirmRecord::new(format!("f{f:03}"), y).with_measure(SizeMeasure::Sales, s),
                );
            }
        }
        FirmPanel::from_records(recs, "flat").unwrap()
    }

    #[test]
    fn feasible_start_years() {
        let cfg = WindowConfig {
            min_count: 6,
            ..WindowConfig::default()
        };
        let series = moving_window_fits(&flat_panel(1980, 1990, 4), &cfg).unwrap();
        let starts: Vec<i32> = series.entries.iter().map(|e| e.start_year).collect();
        assert_eq!(starts, (1980..=1985).collect::<Vec<_>>());
        assert_eq!(series.entries[0].end_year, 1984);
        // each firm fills one bin with five observations
        assert!(series
            .entries
            .iter()
            .all(|e| e.fit.is_err() && e.status() == "insufficient-data"));
        assert!(series
            .entries
            .iter()
            .all(|e| e.n_obs == 20 && e.n_firms == 4));
    }

    #[test]
    fn too_short_panel() {
        let err =
            moving_window_fits(&flat_panel(1980, 1984, 2), &WindowConfig::default()).unwrap_err();
        assert!(matches!(err, WindowError::PanelTooShort { needed: 6, .. }));
        assert_eq!(
            moving_window_fits(&FirmPanel::empty(""), &WindowConfig::default()).unwrap_err(),
            WindowError::EmptyPanel
        );
    }
}
