//! Growth-rate fluctuation scaling for firm panels.
//!
//! The pipeline turns a [`FirmPanel`] into one-year growth observations,
//! bins them logarithmically by initial size, and fits the conditional
//! standard deviation of log growth to `sigma(S0) = a * S0^-beta` on
//! log-log axes. Moving pooled windows track how well that law holds over
//! time, and the [`synth`] generators provide panels with known exponents.

pub mod growth;
pub mod panel;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod window;

pub use growth::{
    extract_growth_observations, filter_outliers, pool, FilterLog, GrowthError, GrowthObservation,
    ObservationSet, DEFAULT_MAX_GROWTH_PCT,
};
pub use panel::{
    filter_classification, filter_years, load_panel, validate_panel, write_panel,
    ClassificationCode, FirmPanel, FirmRecord, LoadedPanel, PanelError, PanelSchema, SizeMeasure,
    ValidationReport,
};
pub use pipeline::{analyze_panel, Analysis, AnalysisConfig, PipelineError};
pub use report::{render_sector_table, OutputFormat, SectorRow};
pub use stats::{
    fit_conditional_laplace, fit_laplace, fit_power_law, log_bin, ols, BinRow, BinTable,
    LaplaceFit, RegressionFit, StatsError, DEFAULT_MIN_COUNT,
};
pub use synth::{EntrySchedule, SynthConfig, SynthError, SynthModel};
pub use window::{
    detect_convergence, moving_window_fits, ConvergenceResult, WindowConfig, WindowEntry,
    WindowError, WindowSeries,
};
