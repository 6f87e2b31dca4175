use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "firmscale",
    version,
    about = "Size dependence of firm growth fluctuations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a panel and report accepted and rejected rows.
    Validate(ValidateArgs),
    /// Pool growth rates, bin by initial size and fit sigma(S0) = a * S0^-beta.
    Analyze(AnalyzeArgs),
    /// Fit the scaling law in moving windows and look for a sustained drop in slope SE.
    Window(WindowArgs),
    /// Generate a synthetic panel.
    Synth(SynthArgs),
    /// Fit one row per sector and print an exponent table.
    Report(ReportArgs),
}

/// Where the panel comes from and how its columns are named.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Delimited panel file (comma or tab).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate the panel in memory instead: gibrat, units, laplace or emerging.
    #[arg(long, value_name = "MODEL", conflicts_with = "input")]
    pub synth: Option<String>,
    /// key=value file with column names and defaults for any long flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Column mapping, e.g. --col firm_id=gvkey. Repeatable.
    #[arg(long = "col", value_name = "KEY=NAME")]
    pub cols: Vec<String>,
    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub firms: Option<usize>,
    #[arg(long = "n-years")]
    pub n_years: Option<usize>,
    #[arg(long = "first-year")]
    pub first_year: Option<i32>,
    #[arg(long = "size-min")]
    pub size_min: Option<f64>,
    #[arg(long = "size-max")]
    pub size_max: Option<f64>,
    /// Exponent for the laplace and emerging models.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Prefactor a in sigma = a * S^-beta.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long = "sigma-eps")]
    pub sigma_eps: Option<f64>,
    #[arg(long = "unit-sigma")]
    pub unit_sigma: Option<f64>,
    /// Cumulative firm counts by year offset, e.g. 0:53,11:214,24:514.
    #[arg(long)]
    pub schedule: Option<String>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, value_name = "sales|employees|assets")]
    pub measure: Option<String>,
    /// Keep records whose classification starts with these digits.
    #[arg(long)]
    pub prefix: Option<String>,
    /// Inclusive year range A:B.
    #[arg(long, value_name = "A:B")]
    pub years: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long = "min-count")]
    pub min_count: Option<usize>,
    #[arg(long = "max-growth-pct")]
    pub max_growth_pct: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "tsv|jsonl")]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Row name in fit output; defaults to the prefix and year range.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long = "window-len")]
    pub window_len: Option<u32>,
    #[arg(long = "se-threshold")]
    pub se_threshold: Option<f64>,
    #[arg(long)]
    pub persistence: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// gibrat, units, laplace or emerging.
    pub model: String,
    #[command(flatten)]
    pub gen: GenArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for panel.tsv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Named sector as NAME=PREFIX. Repeatable; default is one row per 2-digit code.
    #[arg(long = "sector", value_name = "NAME=PREFIX")]
    pub sectors: Vec<String>,
}
