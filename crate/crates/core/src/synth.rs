//! Seeded synthetic firm panels with known scaling exponents.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). Firm `i` draws from the
//! generator seeded with `seed_from_u64(seed)` and switched to stream `i`,
//! so every firm has its own reproducible substream and output does not
//! depend on how firms are scheduled across threads.
//!
//! | model     | one-year log growth                          | exponent |
//! |-----------|----------------------------------------------|----------|
//! | gibrat    | Normal(0, sigma_eps^2)                       | 0        |
//! | units     | log of mean of K unit shocks 1 + eta         | 1/2      |
//! | laplace   | Laplace with std a * S^-beta                  | beta     |
//! | emerging  | as laplace, firms entering on a schedule     | beta     |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::panel::{ClassificationCode, FirmPanel, FirmRecord, SizeMeasure, YEAR_MAX, YEAR_MIN};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid entry schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown model `{0}` (expected gibrat, units, laplace or emerging)")]
    UnknownModel(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_firms: usize,
    pub n_years: usize,
    pub seed: u64,
    /// Bounds of the log-uniform initial size distribution.
    pub size_range: (f64, f64),
    pub first_year: i32,
    pub classification: ClassificationCode,
}

impl SynthConfig {
    pub fn new(n_firms: usize, n_years: usize, seed: u64) -> Self {
        SynthConfig {
            n_firms,
            n_years,
            seed,
            size_range: (1e3, 1e8),
            first_year: 1990,
            classification: ClassificationCode::new("35201010").expect("valid literal"),
        }
    }

    pub fn with_size_range(mut self, lo: f64, hi: f64) -> Self {
        self.size_range = (lo, hi);
        self
    }

    pub fn with_first_year(mut self, year: i32) -> Self {
        self.first_year = year;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_firms < 1 {
            return bad("n_firms must be at least 1".into());
        }
        if self.n_years < 2 {
            return bad("n_years must be at least 2".into());
        }
        let (lo, hi) = self.size_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad(format!(
                "size range ({lo}, {hi}) must satisfy 0 < min < max"
            ));
        }
        let last = i64::from(self.first_year) + self.n_years as i64 - 1;
        if self.first_year < YEAR_MIN || last > i64::from(YEAR_MAX) {
            return bad(format!(
                "years {}..={last} outside [{YEAR_MIN}, {YEAR_MAX}]",
                self.first_year
            ));
        }
        Ok(())
    }

    fn firm_rng(&self, firm: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(firm as u64);
        rng
    }

    fn log_uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = (self.size_range.0.ln(), self.size_range.1.ln());
        (lo + (hi - lo) * rng.random::<f64>()).exp()
    }

    fn firm_id(firm: usize) -> String {
        format!("F{firm:07}")
    }
}

/// Standard deviation of one-year log growth at size `s`: `a * s^-beta`.
pub fn power_law_sigma(s: f64, beta: f64, a: f64) -> f64 {
    a * s.powf(-beta)
}

/// Draws from a zero-centred Laplace distribution by inverting its CDF.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

/// Cumulative firm counts keyed by year offset from the panel's first year.
///
/// The count is a step function: each knot's count holds until the next
/// knot, and no firm exists before the first knot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntrySchedule(BTreeMap<u32, usize>);

impl EntrySchedule {
    pub fn new(knots: impl IntoIterator<Item = (u32, usize)>) -> Result<Self, SynthError> {
        let map: BTreeMap<u32, usize> = knots.into_iter().collect();
        if map.is_empty() {
            return Err(SynthError::InvalidSchedule("no knots".into()));
        }
        let counts: Vec<(u32, usize)> = map.iter().map(|(&k, &v)| (k, v)).collect();
        if let Some(w) = counts.windows(2).find(|w| w[1].1 < w[0].1) {
            return Err(SynthError::InvalidSchedule(format!(
                "count decreases from {} at year {} to {} at year {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
        Ok(EntrySchedule(map))
    }

    pub fn final_count(&self) -> usize {
        *self.0.values().next_back().expect("non-empty")
    }

    pub fn last_offset(&self) -> u32 {
        *self.0.keys().next_back().expect("non-empty")
    }

    /// Number of firms present `offset` years after the first year.
    pub fn count_at(&self, offset: u32) -> usize {
        self.0.range(..=offset).next_back().map_or(0, |(_, &c)| c)
    }
}

impl FromStr for EntrySchedule {
    type Err = SynthError;

    /// Parses `offset:count` pairs separated by commas, e.g. `0:53,11:214`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let knots = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (k, v) = p.split_once(':').ok_or_else(|| {
                    SynthError::InvalidSchedule(format!("`{p}` is not offset:count"))
                })?;
                let k = k
                    .trim()
                    .parse()
                    .map_err(|_| SynthError::InvalidSchedule(format!("bad offset `{k}`")))?;
                let v = v
                    .trim()
                    .parse()
                    .map_err(|_| SynthError::InvalidSchedule(format!("bad count `{v}`")))?;
                Ok((k, v))
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        EntrySchedule::new(knots)
    }
}

impl fmt::Display for EntrySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Builds a panel from per-firm size paths. `paths[i]` is `(entry_offset,
/// sizes)` with one size per year from the entry year on.
fn assemble(cfg: &SynthConfig, model: &str, paths: Vec<(usize, Vec<f64>)>) -> FirmPanel {
    let records = paths
        .into_iter()
        .enumerate()
        .flat_map(|(firm, (entry, sizes))| {
            let id = SynthConfig::firm_id(firm);
            sizes.into_iter().enumerate().map(move |(t, s)| {
                FirmRecord::new(id.clone(), cfg.first_year + (entry + t) as i32)
                    .with_classification(cfg.classification.clone())
                    .with_measure(SizeMeasure::Sales, s)
            })
        })
        .collect();
    let provenance = format!(
        "synth:{model} seed={} firms={} years={}",
        cfg.seed, cfg.n_firms, cfg.n_years
    );
    FirmPanel::from_records(records, provenance).expect("generated keys are unique and in bounds")
}

/// Gibrat process: log size performs a Gaussian random walk whose step
/// variance does not depend on size.
pub fn gen_gibrat(cfg: &SynthConfig, sigma_eps: f64) -> Result<FirmPanel, SynthError> {
    cfg.validate()?;
    if !(sigma_eps > 0.0 && sigma_eps.is_finite()) {
        return Err(SynthError::InvalidParameter(format!(
            "sigma_eps must be positive, got {sigma_eps}"
        )));
    }
    let shock = Normal::new(0.0, sigma_eps).expect("positive sigma");
    let paths = (0..cfg.n_firms)
        .into_par_iter()
        .map(|firm| {
            let mut rng = cfg.firm_rng(firm);
            let mut s = cfg.log_uniform(&mut rng);
            let sizes = (0..cfg.n_years)
                .map(|_| {
                    let cur = s;
                    s *= shock.sample(&mut rng).exp();
                    cur
                })
                .collect();
            (0, sizes)
        })
        .collect();
    Ok(assemble(cfg, "gibrat", paths))
}

/// Largest initial size accepted by [`gen_units`].
pub const MAX_UNIT_SIZE: f64 = 1e6;

/// Independent-units process: a firm of size `S` is `K = round(S)` equal
/// units, each growing by an independent factor `1 + eta` with
/// `eta ~ Normal(0, unit_sigma^2)` truncated at `eta > -1`. The unit split
/// is redrawn from the new size every year.
pub fn gen_units(cfg: &SynthConfig, unit_sigma: f64) -> Result<FirmPanel, SynthError> {
    cfg.validate()?;
    if !(unit_sigma > 0.0 && unit_sigma <= 0.5) {
        return Err(SynthError::InvalidParameter(format!(
            "unit_sigma must be in (0, 0.5], got {unit_sigma}"
        )));
    }
    if cfg.size_range.1 > MAX_UNIT_SIZE {
        return Err(SynthError::InvalidConfig(format!(
            "units model draws one shock per unit; size max {} exceeds {MAX_UNIT_SIZE}",
            cfg.size_range.1
        )));
    }
    let shock = Normal::new(0.0, unit_sigma).expect("positive sigma");
    let paths = (0..cfg.n_firms)
        .into_par_iter()
        .map(|firm| {
            let mut rng = cfg.firm_rng(firm);
            let mut s = cfg.log_uniform(&mut rng).round().max(1.0);
            let sizes = (0..cfg.n_years)
                .map(|_| {
                    let cur = s;
                    let units = s.round().max(1.0) as u64;
                    let total: f64 = (0..units)
                        .map(|_| loop {
                            let eta: f64 = shock.sample(&mut rng);
                            if eta > -1.0 {
                                break 1.0 + eta;
                            }
                        })
                        .sum();
                    s = s / units as f64 * total;
                    cur
                })
                .collect();
            (0, sizes)
        })
        .collect();
    Ok(assemble(cfg, "units", paths))
}

fn check_power_law(beta: f64, a: f64) -> Result<(), SynthError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(SynthError::InvalidParameter(format!(
            "beta must be in [0, 1], got {beta}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(SynthError::InvalidParameter(format!(
            "a must be positive, got {a}"
        )));
    }
    Ok(())
}

fn power_law_path(
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    years: usize,
    beta: f64,
    a: f64,
) -> Vec<f64> {
    let mut s = cfg.log_uniform(rng);
    (0..years)
        .map(|_| {
            let cur = s;
            let scale = power_law_sigma(s, beta, a) / std::f64::consts::SQRT_2;
            s *= sample_laplace(rng, scale).exp();
            cur
        })
        .collect()
}

/// Log growth is Laplace with standard deviation `a * S^-beta`, where `S`
/// is the size at the start of each year.
pub fn gen_power_law_laplace(
    cfg: &SynthConfig,
    beta: f64,
    a: f64,
) -> Result<FirmPanel, SynthError> {
    cfg.validate()?;
    check_power_law(beta, a)?;
    let paths = (0..cfg.n_firms)
        .into_par_iter()
        .map(|firm| {
            (
                0,
                power_law_path(cfg, &mut cfg.firm_rng(firm), cfg.n_years, beta, a),
            )
        })
        .collect();
    Ok(assemble(cfg, "laplace", paths))
}

/// Same growth law as [`gen_power_law_laplace`], but firms enter over time
/// so that the population follows `schedule`. Firm `i` enters in the first
/// year whose cumulative count exceeds `i`.
pub fn gen_emerging_industry(
    cfg: &SynthConfig,
    beta: f64,
    a: f64,
    schedule: &EntrySchedule,
) -> Result<FirmPanel, SynthError> {
    cfg.validate()?;
    check_power_law(beta, a)?;
    if schedule.final_count() > cfg.n_firms {
        return Err(SynthError::InvalidSchedule(format!(
            "final count {} exceeds n_firms {}",
            schedule.final_count(),
            cfg.n_firms
        )));
    }
    if schedule.last_offset() as usize >= cfg.n_years {
        return Err(SynthError::InvalidSchedule(format!(
            "knot at year offset {} beyond a {}-year panel",
            schedule.last_offset(),
            cfg.n_years
        )));
    }
    let entries: Vec<usize> = (0..schedule.final_count())
        .map(|firm| {
            (0..cfg.n_years)
                .find(|&t| schedule.count_at(t as u32) > firm)
                .expect("final count reached within the panel")
        })
        .collect();
    let paths = entries
        .par_iter()
        .enumerate()
        .map(|(firm, &entry)| {
            (
                entry,
                power_law_path(cfg, &mut cfg.firm_rng(firm), cfg.n_years - entry, beta, a),
            )
        })
        .collect();
    Ok(assemble(cfg, "emerging", paths))
}

/// A generator and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthModel {
    Gibrat {
        sigma_eps: f64,
    },
    Units {
        unit_sigma: f64,
    },
    Laplace {
        beta: f64,
        a: f64,
    },
    Emerging {
        beta: f64,
        a: f64,
        schedule: EntrySchedule,
    },
}

impl SynthModel {
    pub fn name(&self) -> &'static str {
        match self {
            SynthModel::Gibrat { .. } => "gibrat",
            SynthModel::Units { .. } => "units",
            SynthModel::Laplace { .. } => "laplace",
            SynthModel::Emerging { .. } => "emerging",
        }
    }

    pub fn generate(&self, cfg: &SynthConfig) -> Result<FirmPanel, SynthError> {
        match self {
            SynthModel::Gibrat { sigma_eps } => gen_gibrat(cfg, *sigma_eps),
            SynthModel::Units { unit_sigma } => gen_units(cfg, *unit_sigma),
            SynthModel::Laplace { beta, a } => gen_power_law_laplace(cfg, *beta, *a),
            SynthModel::Emerging { beta, a, schedule } => {
                gen_emerging_industry(cfg, *beta, *a, schedule)
            }
        }
    }
}
