use serde::Serialize;

use super::StatsError;
use crate::growth::ObservationSet;

pub const DEFAULT_MIN_COUNT: usize = 5;

/// Aggregates of log growth for observations whose initial size falls in
/// one logarithmic bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    /// Position in the full bin grid, including dropped bins.
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    /// Geometric center `sqrt(lower * upper)`.
    pub center: f64,
    pub count: usize,
    /// Sample standard deviation (n - 1 denominator) of log growth.
    pub sigma: f64,
    pub mean_log_growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DroppedBin {
    pub index: usize,
    pub center: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinTable {
    pub bins: Vec<BinRow>,
    pub dropped: Vec<DroppedBin>,
    pub n_bins_requested: usize,
    /// `(ln s_min, ln s_max)` over the binned observations.
    pub log_range: (f64, f64),
    pub min_count: usize,
    ln_edges: Vec<f64>,
}

impl BinTable {
    /// Bin edges in natural-log size, `n_bins_requested + 1` values.
    pub fn ln_edges(&self) -> &[f64] {
        &self.ln_edges
    }

    /// Grid index of the bin holding `s0`, or `None` outside the range.
    /// Bins are closed on the left; the last bin is also closed on the right.
    pub fn bin_index(&self, s0: f64) -> Option<usize> {
        assign(&self.ln_edges, s0.ln())
    }

    pub fn row(&self, index: usize) -> Option<&BinRow> {
        self.bins.iter().find(|r| r.index == index)
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|r| r.count).sum::<usize>()
            + self.dropped.iter().map(|d| d.count).sum::<usize>()
    }
}

fn assign(ln_edges: &[f64], x: f64) -> Option<usize> {
    let n = ln_edges.len() - 1;
    if !(x >= ln_edges[0] && x <= ln_edges[n]) {
        return None;
    }
    Some(ln_edges[1..n].partition_point(|&e| e <= x))
}

/// Welford running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn sample_std(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).max(0.0).sqrt()
    }
}

/// Partitions observations into `n_bins` bins of equal width in `ln s0`
/// between the smallest and largest initial size, then summarises log
/// growth per bin. Bins with fewer than `min_count` observations are moved
/// to [`BinTable::dropped`].
pub fn log_bin(
    obs: &ObservationSet,
    n_bins: usize,
    min_count: usize,
) -> Result<BinTable, StatsError> {
    if n_bins < 2 {
        return Err(StatsError::InvalidBinCount(n_bins));
    }
    if min_count < 2 {
        return Err(StatsError::MinCountTooSmall(min_count));
    }
    let (lo, hi) = obs
        .observations
        .iter()
        .map(|o| o.s0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s), hi.max(s))
        });
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(StatsError::NoSizeRange {
            distinct: usize::from(!obs.is_empty()),
        });
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let width = (l1 - l0) / n_bins as f64;
    let mut ln_edges: Vec<f64> = (0..=n_bins).map(|i| l0 + width * i as f64).collect();
    ln_edges[n_bins] = l1;

    let mut acc = vec![Running::default(); n_bins];
    for o in &obs.observations {
        let i = assign(&ln_edges, o.s0.ln()).unwrap_or(if o.s0 < lo { 0 } else { n_bins - 1 });
        acc[i].push(o.log_growth);
    }

    let mut bins = Vec::new();
    let mut dropped = Vec::new();
    for (index, a) in acc.iter().enumerate() {
        let (ll, lu) = (ln_edges[index], ln_edges[index + 1]);
        let center = (0.5 * (ll + lu)).exp();
        if a.n < min_count {
            dropped.push(DroppedBin {
                index,
                center,
                count: a.n,
            });
            continue;
        }
        bins.push(BinRow {
            index,
            lower: ll.exp(),
            upper: lu.exp(),
            center,
            count: a.n,
            sigma: a.sample_std(),
            mean_log_growth: a.mean,
        });
    }
    if bins.is_empty() {
        return Err(StatsError::AllBinsDropped { n_bins, min_count });
    }
    if !dropped.is_empty() {
        log::debug!(
            "log_bin: dropped {} of {n_bins} bins below min_count {min_count}",
            dropped.len()
        );
    }
    Ok(BinTable {
        bins,
        dropped,
        n_bins_requested: n_bins,
        log_range: (l0, l1),
        min_count,
        ln_edges,
    })
}
