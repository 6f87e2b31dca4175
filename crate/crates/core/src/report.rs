//! Text renderings of bin tables, fits and window series.
//!
//! Data files use the shortest round-trip formatting for floats so they
//! are byte-stable for fixed inputs; the sector table uses the fixed
//! decimal layout of published exponent tables.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::stats::{BinTable, RegressionFit, StatsError};
use crate::window::{ConvergenceResult, WindowSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Tsv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Tsv => "tsv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(OutputFormat::Tsv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(format!("unknown format `{s}` (expected tsv or jsonl)")),
        }
    }
}

/// One named line of a sector exponent table.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorRow {
    pub name: String,
    pub fit: Result<RegressionFit, StatsError>,
    /// Growth observations behind the fit.
    pub n_obs: usize,
}

pub const SECTOR_HEADER: &str =
    "Name\tSlope\tIntercept\tRSqr\tStd-Err\tNo.Data Points\tIntercept-log10\tResid-SE\tStatus";

/// Renders fits in the column order Name, Slope, Intercept, RSqr, Std-Err,
/// No.Data Points, followed by the base-10 intercept, the residual
/// standard error and a status column.
pub fn render_sector_table(rows: &[SectorRow]) -> String {
    let mut out = String::new();
    out.push_str(SECTOR_HEADER);
    out.push('\n');
    for row in rows {
        match &row.fit {
            Ok(f) => writeln!(
                out,
                "{}\t{:.3}\t{:.3}\t{:.3}\t{:.4}\t{}\t{:.3}\t{:.4}\tok",
                row.name,
                f.slope,
                f.intercept,
                f.r_squared,
                f.slope_std_err,
                row.n_obs,
                f.intercept_log10(),
                f.residual_std_err
            ),
            Err(_) => writeln!(
                out,
                "{}\t\t\t\t\t{}\t\t\tinsufficient-data",
                row.name, row.n_obs
            ),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Serialize)]
struct SectorJson<'a> {
    name: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    fit: Option<&'a RegressionFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept_log10: Option<f64>,
    n_obs: usize,
}

pub fn write_sector_table<W: Write>(
    rows: &[SectorRow],
    format: OutputFormat,
    mut out: W,
) -> io::Result<()> {
    match format {
        OutputFormat::Tsv => out.write_all(render_sector_table(rows).as_bytes()),
        OutputFormat::Jsonl => {
            for row in rows {
                let rec = SectorJson {
                    name: &row.name,
                    status: if row.fit.is_ok() {
                        "ok"
                    } else {
                        "insufficient-data"
                    },
                    error: row.fit.as_ref().err().map(|e| e.to_string()),
                    fit: row.fit.as_ref().ok(),
                    intercept_log10: row.fit.as_ref().ok().map(|f| f.intercept_log10()),
                    n_obs: row.n_obs,
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BinJson {
    index: usize,
    lower: f64,
    upper: f64,
    center: f64,
    count: usize,
    sigma: Option<f64>,
    mean_log_growth: Option<f64>,
    status: &'static str,
}

fn bin_rows(table: &BinTable) -> Vec<BinJson> {
    let edges = table.ln_edges();
    let mut rows: Vec<BinJson> = table
        .bins
        .iter()
        .map(|r| BinJson {
            index: r.index,
            lower: r.lower,
            upper: r.upper,
            center: r.center,
            count: r.count,
            sigma: Some(r.sigma),
            mean_log_growth: Some(r.mean_log_growth),
            status: "kept",
        })
        .chain(table.dropped.iter().map(|d| BinJson {
            index: d.index,
            lower: edges[d.index].exp(),
            upper: edges[d.index + 1].exp(),
            center: d.center,
            count: d.count,
            sigma: None,
            mean_log_growth: None,
            status: "dropped",
        }))
        .collect();
    rows.sort_by_key(|r| r.index);
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Every grid bin, kept or dropped, in index order.
pub fn write_bin_table<W: Write>(
    table: &BinTable,
    format: OutputFormat,
    mut out: W,
) -> io::Result<()> {
    let rows = bin_rows(table);
    match format {
        OutputFormat::Tsv => {
            writeln!(
                out,
                "index\tlower\tupper\tcenter\tcount\tsigma\tmean_log_growth\tstatus"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.index,
                    r.lower,
                    r.upper,
                    r.center,
                    r.count,
                    opt(r.sigma),
                    opt(r.mean_log_growth),
                    r.status
                )?;
            }
        }
        OutputFormat::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut out, &r)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PlotPoint {
    ln_center: f64,
    ln_sigma: f64,
    ln_fitted: f64,
}

/// `(ln center, ln sigma, fitted ln sigma)` for every bin used in the fit.
pub fn write_plot_data<W: Write>(
    table: &BinTable,
    fit: &RegressionFit,
    format: OutputFormat,
    mut out: W,
) -> io::Result<()> {
    let points = table.bins.iter().filter(|r| r.sigma > 0.0).map(|r| {
        let x = r.center.ln();
        PlotPoint {
            ln_center: x,
            ln_sigma: r.sigma.ln(),
            ln_fitted: fit.predict(x),
        }
    });
    if format == OutputFormat::Tsv {
        writeln!(out, "ln_center\tln_sigma\tln_fitted")?;
    }
    for p in points {
        match format {
            OutputFormat::Tsv => writeln!(out, "{}\t{}\t{}", p.ln_center, p.ln_sigma, p.ln_fitted)?,
            OutputFormat::Jsonl => {
                serde_json::to_writer(&mut out, &p)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct WindowJson {
    start_year: i32,
    beta: Option<f64>,
    slope_std_err: Option<f64>,
    r_squared: Option<f64>,
    n_obs: usize,
    n_firms: usize,
    status: &'static str,
    end_year: i32,
    residual_std_err: Option<f64>,
}

pub fn write_window_series<W: Write>(
    series: &WindowSeries,
    format: OutputFormat,
    mut out: W,
) -> io::Result<()> {
    if format == OutputFormat::Tsv {
        writeln!(
            out,
            "start_year\tbeta\tslope_std_err\tr_squared\tn_obs\tn_firms\tstatus\tend_year\tresidual_std_err"
        )?;
    }
    for e in &series.entries {
        let fit = e.fit.as_ref().ok();
        let row = WindowJson {
            start_year: e.start_year,
            beta: fit.map(|f| f.beta),
            slope_std_err: fit.map(|f| f.slope_std_err),
            r_squared: fit.map(|f| f.r_squared),
            n_obs: e.n_obs,
            n_firms: e.n_firms,
            status: e.status(),
            end_year: e.end_year,
            residual_std_err: fit.map(|f| f.residual_std_err),
        };
        match format {
            OutputFormat::Tsv => writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.start_year,
                opt(row.beta),
                opt(row.slope_std_err),
                opt(row.r_squared),
                row.n_obs,
                row.n_firms,
                row.status,
                row.end_year,
                opt(row.residual_std_err)
            )?,
            OutputFormat::Jsonl => {
                serde_json::to_writer(&mut out, &row)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

pub fn write_convergence<W: Write>(result: &ConvergenceResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{result}")?;
    writeln!(out, "series\t{}", result.series_ref)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(slope: f64, intercept: f64, r2: f64, se: f64) -> RegressionFit {
        RegressionFit {
            slope,
            intercept,
            r_squared: r2,
            slope_std_err: se,
            residual_std_err: 0.05,
            n_points: 20,
            beta: -slope,
        }
    }

    #[test]
    fn manufacturing_style_row() {
        let rows = [SectorRow {
            name: "Manufacturing".into(),
            fit: Ok(fit(-0.2561, 0.4213, 0.9572, 0.01271)),
            n_obs: 40908,
        }];
        let text = render_sector_table(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], SECTOR_HEADER);
        assert!(
            lines[1].starts_with("Manufacturing\t-0.256\t0.421\t0.957\t0.0127\t40908\t"),
            "{}",
            lines[1]
        );
        assert!(lines[1].ends_with("\tok"));
    }

    #[test]
    fn failed_fit_row_is_blank() {
        let rows = [SectorRow {
            name: "Utilities".into(),
            fit: Err(StatsError::TooFewPoints { n: 2, required: 3 }),
            n_obs: 12,
        }];
        let text = render_sector_table(&rows);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "Utilities\t\t\t\t\t12\t\t\tinsufficient-data"
        );
    }

    #[test]
    fn jsonl_sector_rows() {
        let rows = [
            SectorRow {
                name: "a".into(),
                fit: Ok(fit(-0.25, 0.0, 0.9, 0.01)),
                n_obs: 5,
            },
            SectorRow {
                name: "b".into(),
                fit: Err(StatsError::ZeroVarianceY),
                n_obs: 1,
            },
        ];
        let mut buf = Vec::new();
        write_sector_table(&rows, OutputFormat::Jsonl, &mut buf).unwrap();
        let lines: Vec<serde_json::Value> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0]["beta"], 0.25);
        assert_eq!(lines[0]["status"], "ok");
        assert_eq!(lines[1]["status"], "insufficient-data");
        assert!(lines[1].get("slope").is_none());
    }
}
