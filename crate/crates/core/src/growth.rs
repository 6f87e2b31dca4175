//! One-year growth observations extracted from a panel.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::panel::{ClassificationCode, FirmPanel, SizeMeasure};

/// Default outlier cut: one-year growth above 1000% is discarded.
pub const DEFAULT_MAX_GROWTH_PCT: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum GrowthError {
    #[error("outlier threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("pool window {start}..={end} is empty")]
    InvalidWindow { start: i32, end: i32 },
}

/// A firm's size in two consecutive years and the growth between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthObservation {
    pub firm_id: String,
    /// Year of the initial size; the final size is from `year0 + 1`.
    pub year0: i32,
    pub s0: f64,
    pub s1: f64,
    /// `s1 / s0`
    pub ratio: f64,
    /// `ln(ratio)`
    pub log_growth: f64,
    pub classification: Option<ClassificationCode>,
}

/// Exclusion counts, by reason, for candidate consecutive-record pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterLog {
    /// Year gap between records, or a size measure absent in either year.
    pub missing: usize,
    /// Either size is zero.
    pub nonpositive: usize,
    /// Removed by [`filter_outliers`].
    pub outlier: usize,
}

impl FilterLog {
    pub fn total(&self) -> usize {
        self.missing + self.nonpositive + self.outlier
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSet {
    pub observations: Vec<GrowthObservation>,
    pub measure: SizeMeasure,
    pub filter_log: FilterLog,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of candidate pairs that produced either an observation or an
    /// exclusion.
    pub fn candidates(&self) -> usize {
        self.observations.len() + self.filter_log.total()
    }

    pub fn firm_count(&self) -> usize {
        self.observations
            .iter()
            .map(|o| o.firm_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// Builds one observation per adjacent pair of a firm's records.
///
/// A pair whose years are not consecutive, or where either size is absent,
/// counts as `missing`; a pair with a zero size counts as `nonpositive`.
pub fn extract_growth_observations(panel: &FirmPanel, measure: SizeMeasure) -> ObservationSet {
    let mut observations = Vec::new();
    let mut log = FilterLog::default();
    for firm in panel.firms() {
        for pair in firm.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.year != a.year + 1 {
                log.missing += 1;
                continue;
            }
            let (Some(s0), Some(s1)) = (a.measure(measure), b.measure(measure)) else {
                log.missing += 1;
                continue;
            };
            if s0 <= 0.0 || s1 <= 0.0 {
                log.nonpositive += 1;
                continue;
            }
            let ratio = s1 / s0;
            observations.push(GrowthObservation {
                firm_id: a.firm_id.clone(),
                year0: a.year,
                s0,
                s1,
                ratio,
                log_growth: ratio.ln(),
                classification: a.classification.clone(),
            });
        }
    }
    ObservationSet {
        observations,
        measure,
        filter_log: log,
    }
}

/// Drops observations whose percentage growth `(ratio - 1) * 100` strictly
/// exceeds `max_growth_pct`. Shrinking firms are never dropped.
pub fn filter_outliers(
    obs: &ObservationSet,
    max_growth_pct: f64,
) -> Result<ObservationSet, GrowthError> {
    if max_growth_pct.is_nan() || max_growth_pct <= 0.0 {
        return Err(GrowthError::InvalidThreshold(max_growth_pct));
    }
    let limit = max_growth_pct / 100.0;
    let (kept, dropped): (Vec<_>, Vec<_>) = obs
        .observations
        .iter()
        .cloned()
        .partition(|o| o.ratio - 1.0 <= limit);
    let mut filter_log = obs.filter_log;
    filter_log.outlier += dropped.len();
    Ok(ObservationSet {
        observations: kept,
        measure: obs.measure,
        filter_log,
    })
}

/// Keeps observations with `start_year <= year0 <= end_year`.
///
/// The exclusion log is carried over unchanged; it describes extraction,
/// not pooling.
pub fn pool(
    obs: &ObservationSet,
    start_year: i32,
    end_year: i32,
) -> Result<ObservationSet, GrowthError> {
    if start_year > end_year {
        return Err(GrowthError::InvalidWindow {
            start: start_year,
            end: end_year,
        });
    }
    Ok(ObservationSet {
        observations: obs
            .observations
            .iter()
            .filter(|o| (start_year..=end_year).contains(&o.year0))
            .cloned()
            .collect(),
        measure: obs.measure,
        filter_log: obs.filter_log,
    })
}

/// Tab-separated dump of observations for auditing.
pub fn write_observations<W: Write>(obs: &ObservationSet, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "firm_id\tyear0\ts0\ts1\tratio\tlog_growth\tclassification"
    )?;
    for o in &obs.observations {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            o.firm_id,
            o.year0,
            o.s0,
            o.s1,
            o.ratio,
            o.log_growth,
            o.classification.as_ref().map(|c| c.as_str()).unwrap_or("")
        )?;
    }
    Ok(())
}
