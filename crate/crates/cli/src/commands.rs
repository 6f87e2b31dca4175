use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use firmscale::pipeline::analyze_observations;
use firmscale::report::{
    write_bin_table, write_convergence, write_plot_data, write_sector_table, write_window_series,
};
use firmscale::{
    detect_convergence, extract_growth_observations, filter_classification, filter_outliers,
    filter_years, load_panel, moving_window_fits, validate_panel, write_panel, AnalysisConfig,
    ClassificationCode, EntrySchedule, FirmPanel, LoadedPanel, ObservationSet, OutputFormat,
    PanelError, PipelineError, SectorRow, SizeMeasure, SynthConfig, SynthError, SynthModel,
    WindowConfig, WindowError, DEFAULT_MAX_GROWTH_PCT, DEFAULT_MIN_COUNT,
};

use crate::cli::{
    AnalyzeArgs, FilterArgs, GenArgs, OutputArgs, ReportArgs, SourceArgs, SynthArgs, ValidateArgs,
    WindowArgs,
};
use crate::config::Config;
use crate::error::CliError;

const DEFAULT_SCHEDULE: &str = "0:53,11:214,24:514";
const DEFAULT_OUT: &str = "firmscale-out";

fn synth_error(e: SynthError) -> CliError {
    match e {
        SynthError::UnknownModel(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn build_synth(
    model: &str,
    gen: &GenArgs,
    cfg: &Config,
) -> Result<(SynthModel, SynthConfig), CliError> {
    let model = match model {
        "gibrat" => SynthModel::Gibrat {
            sigma_eps: cfg.or(gen.sigma_eps, "sigma_eps", 0.2)?,
        },
        "units" => SynthModel::Units {
            unit_sigma: cfg.or(gen.unit_sigma, "unit_sigma", 0.2)?,
        },
        "laplace" => SynthModel::Laplace {
            beta: cfg.or(gen.beta, "beta", 0.25)?,
            a: cfg.or(gen.amplitude, "amplitude", 1.0)?,
        },
        "emerging" => SynthModel::Emerging {
            beta: cfg.or(gen.beta, "beta", 0.25)?,
            a: cfg.or(gen.amplitude, "amplitude", 1.0)?,
            schedule: cfg
                .or(
                    gen.schedule.clone(),
                    "schedule",
                    DEFAULT_SCHEDULE.to_string(),
                )?
                .parse::<EntrySchedule>()
                .map_err(synth_error)?,
        },
        other => return Err(synth_error(SynthError::UnknownModel(other.to_string()))),
    };
    let (firms, years) = match &model {
        SynthModel::Emerging { schedule, .. } => (schedule.final_count(), 30),
        _ => (1000, 10),
    };
    let mut sc = SynthConfig::new(
        cfg.or(gen.firms, "firms", firms)?,
        cfg.or(gen.n_years, "n_years", years)?,
        cfg.or(gen.seed, "seed", 1)?,
    );
    if matches!(model, SynthModel::Units { .. }) {
        sc = sc.with_size_range(10.0, 1e5);
    }
    let (lo, hi) = sc.size_range;
    let first_year = cfg.or(gen.first_year, "first_year", sc.first_year)?;
    sc = sc
        .with_size_range(
            cfg.or(gen.size_min, "size_min", lo)?,
            cfg.or(gen.size_max, "size_max", hi)?,
        )
        .with_first_year(first_year);
    Ok((model, sc))
}

enum Source {
    File(PathBuf),
    Synth(String),
}

/// A source flag replaces any source named in the config file.
fn source(src: &SourceArgs, cfg: &Config) -> Result<Source, CliError> {
    match (&src.input, &src.synth) {
        (Some(p), _) => return Ok(Source::File(p.clone())),
        (None, Some(m)) => return Ok(Source::Synth(m.clone())),
        (None, None) => {}
    }
    match (
        cfg.get::<PathBuf>(None, "input")?,
        cfg.get::<String>(None, "synth")?,
    ) {
        (Some(p), None) => Ok(Source::File(p)),
        (None, Some(m)) => Ok(Source::Synth(m)),
        (Some(_), Some(_)) => Err(CliError::Usage("config names both input and synth".into())),
        (None, None) => Err(CliError::Usage(
            "no panel source: give --input FILE or --synth MODEL".into(),
        )),
    }
}

fn load_source(src: &SourceArgs, cfg: &Config) -> Result<FirmPanel, CliError> {
    match source(src, cfg)? {
        Source::File(path) => Ok(read_panel(&path, src, cfg)?.panel),
        Source::Synth(model) => {
            let (model, sc) = build_synth(&model, &src.gen, cfg)?;
            model.generate(&sc).map_err(synth_error)
        }
    }
}

fn read_panel(path: &Path, src: &SourceArgs, cfg: &Config) -> Result<LoadedPanel, CliError> {
    let schema = cfg.schema(&src.cols)?;
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let loaded = load_panel(
        io::BufReader::new(file),
        &schema,
        &path.display().to_string(),
    )
    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if loaded.report.rejected > 0 {
        log::warn!(
            "{}: {} of {} rows rejected",
            path.display(),
            loaded.report.rejected,
            loaded.report.record_count
        );
    }
    Ok(loaded)
}

/// Parsed `--years A:B`.
fn parse_years(text: &str) -> Result<(i32, i32), CliError> {
    let bad = || CliError::Usage(format!("bad year range `{text}`: expected A:B"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_prefix(text: &str) -> Result<ClassificationCode, CliError> {
    ClassificationCode::new(text).map_err(|e| CliError::Usage(e.to_string()))
}

/// Analysis settings shared by analyze, window and report.
struct Settings {
    measure: SizeMeasure,
    prefix: Option<ClassificationCode>,
    years: Option<(i32, i32)>,
    bins: usize,
    min_count: usize,
    max_growth_pct: f64,
}

impl Settings {
    fn resolve(f: &FilterArgs, cfg: &Config, default_bins: usize) -> Result<Self, CliError> {
        let measure = cfg
            .or(f.measure.clone(), "measure", "sales".to_string())?
            .parse::<SizeMeasure>()
            .map_err(|e: PanelError| CliError::Usage(e.to_string()))?;
        let s = Settings {
            measure,
            prefix: cfg
                .get(f.prefix.clone(), "prefix")?
                .as_deref()
                .map(parse_prefix)
                .transpose()?,
            years: cfg
                .get(f.years.clone(), "years")?
                .as_deref()
                .map(parse_years)
                .transpose()?,
            bins: cfg.or(f.bins, "bins", default_bins)?,
            min_count: cfg.or(f.min_count, "min_count", DEFAULT_MIN_COUNT)?,
            max_growth_pct: cfg.or(f.max_growth_pct, "max_growth_pct", DEFAULT_MAX_GROWTH_PCT)?,
        };
        if s.bins == 0 {
            return Err(CliError::Usage("--bins must be at least 1".into()));
        }
        if s.min_count < 2 {
            return Err(CliError::Usage("--min-count must be at least 2".into()));
        }
        if s.max_growth_pct.is_nan() || s.max_growth_pct <= 0.0 {
            return Err(CliError::Usage("--max-growth-pct must be positive".into()));
        }
        if let Some((a, b)) = s.years {
            if a > b {
                return Err(CliError::Usage(format!("year range {a}:{b} is empty")));
            }
        }
        Ok(s)
    }

    fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            measure: self.measure,
            n_bins: self.bins,
            min_count: self.min_count,
            max_growth_pct: self.max_growth_pct,
        }
    }

    /// Applies the prefix and year filters, failing if either leaves nothing.
    fn filter(&self, panel: FirmPanel) -> Result<FirmPanel, CliError> {
        if panel.is_empty() {
            return Err(CliError::Data(format!(
                "panel `{}` has no records",
                panel.provenance()
            )));
        }
        let mut panel = panel;
        if let Some(p) = &self.prefix {
            panel = filter_classification(&panel, p);
            if panel.is_empty() {
                return Err(CliError::Data(format!(
                    "no records left after filter --prefix {p}"
                )));
            }
        }
        if let Some((a, b)) = self.years {
            panel = filter_years(&panel, a, b).map_err(|e| CliError::Usage(e.to_string()))?;
            if panel.is_empty() {
                return Err(CliError::Data(format!(
                    "no records left after filter --years {a}:{b}"
                )));
            }
        }
        Ok(panel)
    }

    fn observations(&self, panel: &FirmPanel) -> Result<ObservationSet, CliError> {
        let extracted = extract_growth_observations(panel, self.measure);
        filter_outliers(&extracted, self.max_growth_pct).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn label(&self) -> String {
        let prefix = self.prefix.as_ref().map_or("all", |p| p.as_str());
        match self.years {
            Some((a, b)) => format!("{prefix} {a}:{b}"),
            None => prefix.to_string(),
        }
    }
}

struct Output {
    dir: PathBuf,
    format: OutputFormat,
}

impl Output {
    fn resolve(o: &OutputArgs, cfg: &Config) -> Result<Self, CliError> {
        let dir = cfg.or(o.out.clone(), "out", PathBuf::from(DEFAULT_OUT))?;
        let format = cfg
            .or(o.format.clone(), "format", "tsv".to_string())?
            .parse()
            .map_err(CliError::Usage)?;
        Ok(Output { dir, format })
    }

    fn create(&self, stem: &str) -> Result<BufWriter<File>, CliError> {
        self.create_exact(&format!("{stem}.{}", self.format.extension()))
    }

    fn create_exact(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(BufWriter::new(file))
    }
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.source.config.as_deref())?;
    let report = match source(&args.source, &cfg)? {
        Source::File(path) => read_panel(&path, &args.source, &cfg)?.report,
        Source::Synth(_) => validate_panel(&load_source(&args.source, &cfg)?),
    };
    print!("{report}");
    if report.rejected > 0 {
        return Err(CliError::Data(format!(
            "{} of {} rows rejected",
            report.rejected, report.record_count
        )));
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.source.config.as_deref())?;
    let settings = Settings::resolve(&args.filter, &cfg, AnalysisConfig::default().n_bins)?;
    let output = Output::resolve(&args.output, &cfg)?;
    let name = cfg.or(args.name.clone(), "name", settings.label())?;

    let panel = settings.filter(load_source(&args.source, &cfg)?)?;
    let obs = settings.observations(&panel)?;
    if obs.is_empty() {
        return Err(CliError::Data(format!(
            "no usable {} growth observations in `{}`",
            settings.measure,
            panel.provenance()
        )));
    }
    let n_obs = obs.len();
    let analysis = analyze_observations(obs, &settings.analysis()).map_err(|e| match e {
        PipelineError::Binning(e) => CliError::Fit(format!("{name}: {e}")),
        other => CliError::Usage(other.to_string()),
    })?;

    let mut w = output.create("bins")?;
    write_bin_table(&analysis.table, output.format, &mut w)?;
    finish(w)?;
    let row = SectorRow {
        name: name.clone(),
        fit: analysis.fit.clone(),
        n_obs,
    };
    let mut w = output.create("fit")?;
    write_sector_table(std::slice::from_ref(&row), output.format, &mut w)?;
    finish(w)?;
    let fit = analysis
        .fit
        .map_err(|e| CliError::Fit(format!("{name}: {e}")))?;
    let mut w = output.create("plotdata")?;
    write_plot_data(&analysis.table, &fit, output.format, &mut w)?;
    finish(w)?;

    println!(
        "{name}\tbeta={:.4}\tse={:.4}\tr2={:.3}\tn={n_obs}\tout={}",
        fit.beta,
        fit.slope_std_err,
        fit.r_squared,
        output.dir.display()
    );
    Ok(())
}

pub fn window(args: &WindowArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.source.config.as_deref())?;
    let defaults = WindowConfig::default();
    let settings = Settings::resolve(&args.filter, &cfg, defaults.n_bins)?;
    let output = Output::resolve(&args.output, &cfg)?;
    let window_length = cfg.or(args.window_len, "window_len", defaults.window_length)?;
    let threshold = cfg.or(args.se_threshold, "se_threshold", 0.1)?;
    let persistence = cfg.or(args.persistence, "persistence", 3)?;
    if window_length == 0 {
        return Err(CliError::Usage("--window-len must be at least 1".into()));
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(CliError::Usage("--se-threshold must be positive".into()));
    }
    if persistence == 0 {
        return Err(CliError::Usage("--persistence must be at least 1".into()));
    }

    let panel = settings.filter(load_source(&args.source, &cfg)?)?;
    let wc = WindowConfig {
        measure: settings.measure,
        window_length,
        n_bins: settings.bins,
        min_count: settings.min_count,
        max_growth_pct: settings.max_growth_pct,
    };
    let series = moving_window_fits(&panel, &wc).map_err(|e| match e {
        WindowError::PanelTooShort { .. } | WindowError::EmptyPanel => {
            CliError::Data(e.to_string())
        }
        other => CliError::Usage(other.to_string()),
    })?;
    let result = detect_convergence(&series, threshold, persistence)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut w = output.create("windows")?;
    write_window_series(&series, output.format, &mut w)?;
    finish(w)?;
    let mut w = output.create_exact("convergence.txt")?;
    write_convergence(&result, &mut w)?;
    finish(w)?;

    println!("{result}");
    let fitted = series.entries.iter().filter(|e| e.fit.is_ok()).count();
    if fitted == 0 {
        return Err(CliError::Fit(format!(
            "none of {} windows could be fitted",
            series.entries.len()
        )));
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let (model, sc) = build_synth(&args.model, &args.gen, &cfg)?;
    let panel = model.generate(&sc).map_err(synth_error)?;
    let output = Output {
        dir: cfg.or(args.out.clone(), "out", PathBuf::from(DEFAULT_OUT))?,
        format: OutputFormat::Tsv,
    };
    let mut w = output.create_exact("panel.tsv")?;
    write_panel(&panel, &mut w)?;
    finish(w)?;
    println!(
        "model={}\tseed={}\tfirms={}\tyears={}\trecords={}\tpath={}",
        model.name(),
        sc.seed,
        sc.n_firms,
        sc.n_years,
        panel.len(),
        output.dir.join("panel.tsv").display()
    );
    Ok(())
}

fn parse_sector(text: &str) -> Result<(String, ClassificationCode), CliError> {
    let (name, prefix) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("bad --sector `{text}`: expected NAME=PREFIX")))?;
    Ok((name.trim().to_string(), parse_prefix(prefix.trim())?))
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.source.config.as_deref())?;
    let settings = Settings::resolve(&args.filter, &cfg, AnalysisConfig::default().n_bins)?;
    let panel = settings.filter(load_source(&args.source, &cfg)?)?;

    let sectors: Vec<(String, ClassificationCode)> = if args.sectors.is_empty() {
        panel
            .records()
            .iter()
            .filter_map(|r| r.classification.as_ref().map(|c| c.sector()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|c| (c.as_str().to_string(), c))
            .collect()
    } else {
        args.sectors
            .iter()
            .map(|s| parse_sector(s))
            .collect::<Result<_, _>>()?
    };
    if sectors.is_empty() {
        return Err(CliError::Data(
            "no classified records to group into sectors".into(),
        ));
    }

    let rows: Vec<SectorRow> = sectors
        .into_iter()
        .map(|(name, prefix)| {
            let obs = settings.observations(&filter_classification(&panel, &prefix))?;
            let n_obs = obs.len();
            let fit = match analyze_observations(obs, &settings.analysis()) {
                Ok(a) => a.fit,
                Err(PipelineError::Binning(e)) => Err(e),
                Err(e) => return Err(CliError::Usage(e.to_string())),
            };
            if let Err(e) = &fit {
                log::warn!("sector {name}: {e}");
            }
            Ok(SectorRow { name, fit, n_obs })
        })
        .collect::<Result<_, CliError>>()?;

    match cfg.get(args.output.out.clone(), "out")? {
        Some(dir) => {
            let output = Output {
                dir,
                format: Output::resolve(&args.output, &cfg)?.format,
            };
            let mut w = output.create("sectors")?;
            write_sector_table(&rows, output.format, &mut w)?;
            finish(w)?;
        }
        None => {
            let format = Output::resolve(&args.output, &cfg)?.format;
            let stdout = io::stdout();
            write_sector_table(&rows, format, stdout.lock())?;
        }
    }
    if rows.iter().all(|r| r.fit.is_err()) {
        return Err(CliError::Fit("no sector could be fitted".into()));
    }
    Ok(())
}
