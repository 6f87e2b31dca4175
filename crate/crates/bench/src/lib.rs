//! Fixtures shared by the criterion benchmarks.

use firmscale::{
    extract_growth_observations, filter_outliers, FirmPanel, ObservationSet, SizeMeasure,
    SynthConfig,
};

/// Laplace-model panel with roughly `2 * n_firms` growth observations.
pub fn laplace_panel(n_firms: usize, seed: u64) -> FirmPanel {
    firmscale::synth::gen_power_law_laplace(&SynthConfig::new(n_firms, 3, seed), 0.25, 1.0)
        .expect("valid config")
}

pub fn laplace_observations(n_firms: usize, seed: u64) -> ObservationSet {
    let obs = extract_growth_observations(&laplace_panel(n_firms, seed), SizeMeasure::Sales);
    filter_outliers(&obs, firmscale::DEFAULT_MAX_GROWTH_PCT).expect("positive threshold")
}
