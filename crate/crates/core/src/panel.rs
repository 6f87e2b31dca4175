//! Firm panel data model, delimited-file ingestion and record filters.
//!
//! A [`FirmPanel`] is an immutable, sorted set of firm-year records. Every
//! filter returns a new panel; nothing here mutates in place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Inclusive bounds on calendar years accepted into a panel.
pub const YEAR_MIN: i32 = 1950;
pub const YEAR_MAX: i32 = 2100;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("failed to read panel source: {0}")]
    Io(#[from] std::io::Error),
    #[error("panel source has no header row")]
    MissingHeader,
    #[error("mandatory column `{column}` (for {field}) not found in header")]
    MissingColumn { field: &'static str, column: String },
    #[error("{malformed} of {total} data rows are malformed; first offending line {first_line}: {reason}")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        first_line: u64,
        reason: String,
    },
    #[error("invalid classification code `{0}`: expected 2, 4, 6 or 8 decimal digits")]
    InvalidClassification(String),
    #[error("unknown size measure `{0}` (expected sales, employees or assets)")]
    UnknownMeasure(String),
    #[error("year range {start}..={end} is empty")]
    InvalidYearRange { start: i32, end: i32 },
    #[error("year {0} outside accepted bounds [{YEAR_MIN}, {YEAR_MAX}]")]
    YearOutOfBounds(i32),
    #[error("duplicate record for firm `{firm_id}` in {year}")]
    DuplicateKey { firm_id: String, year: i32 },
    #[error("negative {measure} for firm `{firm_id}` in {year}")]
    NegativeValue {
        firm_id: String,
        year: i32,
        measure: SizeMeasure,
    },
    #[error("bad schema line `{0}`: expected key=value with a known key")]
    BadSchema(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Which size measure a growth rate is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMeasure {
    #[default]
    Sales,
    Employees,
    Assets,
}

impl SizeMeasure {
    pub const ALL: [SizeMeasure; 3] = [
        SizeMeasure::Sales,
        SizeMeasure::Employees,
        SizeMeasure::Assets,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeMeasure::Sales => "sales",
            SizeMeasure::Employees => "employees",
            SizeMeasure::Assets => "assets",
        }
    }
}

impl fmt::Display for SizeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeMeasure {
    type Err = PanelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sales" => Ok(SizeMeasure::Sales),
            "employees" => Ok(SizeMeasure::Employees),
            "assets" => Ok(SizeMeasure::Assets),
            _ => Err(PanelError::UnknownMeasure(s.to_string())),
        }
    }
}

/// Hierarchical industry code: 2 digits for a sector, 4 for an industry
/// group, 6 for an industry, 8 for a sub-industry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ClassificationCode(String);

impl ClassificationCode {
    pub fn new(digits: &str) -> Result<Self, PanelError> {
        let digits = digits.trim();
        let ok =
            matches!(digits.len(), 2 | 4 | 6 | 8) && digits.bytes().all(|b| b.is_ascii_digit());
        if ok {
            Ok(ClassificationCode(digits.to_string()))
        } else {
            Err(PanelError::InvalidClassification(digits.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Hierarchy depth: 1 = sector, ..., 4 = sub-industry.
    pub fn level(&self) -> usize {
        self.0.len() / 2
    }

    /// True when `prefix` is this code or one of its ancestors.
    pub fn starts_with(&self, prefix: &ClassificationCode) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// The two-digit sector containing this code.
    pub fn sector(&self) -> ClassificationCode {
        ClassificationCode(self.0[..2].to_string())
    }
}

impl fmt::Display for ClassificationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ClassificationCode {
    type Err = PanelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassificationCode::new(s)
    }
}

/// One firm in one year. Absent size measures are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmRecord {
    pub firm_id: String,
    pub year: i32,
    pub classification: Option<ClassificationCode>,
    pub sales: Option<f64>,
    pub employees: Option<f64>,
    pub assets: Option<f64>,
}

impl FirmRecord {
    pub fn new(firm_id: impl Into<String>, year: i32) -> Self {
        FirmRecord {
            firm_id: firm_id.into(),
            year,
            classification: None,
            sales: None,
            employees: None,
            assets: None,
        }
    }

    pub fn with_classification(mut self, code: ClassificationCode) -> Self {
        self.classification = Some(code);
        self
    }

    pub fn with_measure(mut self, measure: SizeMeasure, value: f64) -> Self {
        *self.measure_mut(measure) = Some(value);
        self
    }

    pub fn measure(&self, measure: SizeMeasure) -> Option<f64> {
        match measure {
            SizeMeasure::Sales => self.sales,
            SizeMeasure::Employees => self.employees,
            SizeMeasure::Assets => self.assets,
        }
    }

    fn measure_mut(&mut self, measure: SizeMeasure) -> &mut Option<f64> {
        match measure {
            SizeMeasure::Sales => &mut self.sales,
            SizeMeasure::Employees => &mut self.employees,
            SizeMeasure::Assets => &mut self.assets,
        }
    }

    fn check(&self) -> Result<(), PanelError> {
        if !(YEAR_MIN..=YEAR_MAX).contains(&self.year) {
            return Err(PanelError::YearOutOfBounds(self.year));
        }
        for m in SizeMeasure::ALL {
            if let Some(v) = self.measure(m) {
                if v < 0.0 {
                    return Err(PanelError::NegativeValue {
                        firm_id: self.firm_id.clone(),
                        year: self.year,
                        measure: m,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Longitudinal firm table, sorted by `(firm_id, year)` with unique keys.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmPanel {
    records: Vec<FirmRecord>,
    provenance: String,
    size_measure_default: SizeMeasure,
}

impl FirmPanel {
    /// Builds a panel from arbitrary-order records, rejecting duplicate keys,
    /// out-of-bounds years and negative measures.
    pub fn from_records(
        mut records: Vec<FirmRecord>,
        provenance: impl Into<String>,
    ) -> Result<Self, PanelError> {
        for r in &records {
            r.check()?;
        }
        records.sort_by(|a, b| a.firm_id.cmp(&b.firm_id).then(a.year.cmp(&b.year)));
        if let Some(w) = records
            .windows(2)
            .find(|w| w[0].firm_id == w[1].firm_id && w[0].year == w[1].year)
        {
            return Err(PanelError::DuplicateKey {
                firm_id: w[1].firm_id.clone(),
                year: w[1].year,
            });
        }
        Ok(FirmPanel {
            records,
            provenance: provenance.into(),
            size_measure_default: SizeMeasure::Sales,
        })
    }

    pub fn empty(provenance: impl Into<String>) -> Self {
        FirmPanel {
            records: Vec::new(),
            provenance: provenance.into(),
            size_measure_default: SizeMeasure::Sales,
        }
    }

    pub fn with_default_measure(mut self, measure: SizeMeasure) -> Self {
        self.size_measure_default = measure;
        self
    }

    pub fn records(&self) -> &[FirmRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn default_measure(&self) -> SizeMeasure {
        self.size_measure_default
    }

    pub fn firm_count(&self) -> usize {
        // records are sorted by firm, so distinct ids are runs
        self.records
            .iter()
            .zip(
                self.records
                    .iter()
                    .skip(1)
                    .map(Some)
                    .chain(std::iter::once(None)),
            )
            .filter(|(a, b)| b.is_none_or(|b| b.firm_id != a.firm_id))
            .count()
    }

    pub fn year_span(&self) -> Option<(i32, i32)> {
        let min = self.records.iter().map(|r| r.year).min()?;
        let max = self.records.iter().map(|r| r.year).max()?;
        Some((min, max))
    }

    /// Records grouped by firm, each group in ascending year order.
    pub fn firms(&self) -> impl Iterator<Item = &[FirmRecord]> {
        self.records.chunk_by(|a, b| a.firm_id == b.firm_id)
    }

    fn derive(&self, records: Vec<FirmRecord>, note: String) -> FirmPanel {
        FirmPanel {
            records,
            provenance: if self.provenance.is_empty() {
                note
            } else {
                format!("{} | {}", self.provenance, note)
            },
            size_measure_default: self.size_measure_default,
        }
    }
}

/// Mapping from logical fields to column names in a delimited file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelSchema {
    pub firm_id: String,
    pub year: String,
    pub classification: String,
    pub sales: String,
    pub employees: String,
    pub assets: String,
}

impl Default for PanelSchema {
    fn default() -> Self {
        PanelSchema {
            firm_id: "firm_id".into(),
            year: "year".into(),
            classification: "classification".into(),
            sales: "sales".into(),
            employees: "employees".into(),
            assets: "assets".into(),
        }
    }
}

impl PanelSchema {
    pub const KEYS: [&'static str; 6] = [
        "firm_id",
        "year",
        "classification",
        "sales",
        "employees",
        "assets",
    ];

    /// Sets the column for a logical field. Returns false for unknown keys.
    pub fn set(&mut self, key: &str, column: &str) -> bool {
        let slot = match key.trim() {
            "firm_id" => &mut self.firm_id,
            "year" => &mut self.year,
            "classification" => &mut self.classification,
            "sales" => &mut self.sales,
            "employees" => &mut self.employees,
            "assets" => &mut self.assets,
            _ => return false,
        };
        *slot = column.trim().to_string();
        true
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn from_kv_str(text: &str) -> Result<Self, PanelError> {
        let mut schema = PanelSchema::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PanelError::BadSchema(line.to_string()))?;
            if !schema.set(k, v) {
                return Err(PanelError::BadSchema(line.to_string()));
            }
        }
        Ok(schema)
    }

    fn column(&self, measure: SizeMeasure) -> &str {
        match measure {
            SizeMeasure::Sales => &self.sales,
            SizeMeasure::Employees => &self.employees,
            SizeMeasure::Assets => &self.assets,
        }
    }
}

/// A row that could not be accepted, with its 1-based source line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuplicateKey {
    pub line: u64,
    pub firm_id: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeValue {
    pub line: u64,
    pub firm_id: String,
    pub year: i32,
    pub measure: SizeMeasure,
    pub value: f64,
}

/// Summary of a panel and of any rows rejected while loading it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Data rows examined; always `accepted + rejected`.
    pub record_count: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub firm_count: usize,
    pub year_span: Option<(i32, i32)>,
    pub duplicate_keys: Vec<DuplicateKey>,
    pub negative_values: Vec<NegativeValue>,
    pub malformed: Vec<RejectedRow>,
    pub missing_measure_counts: BTreeMap<SizeMeasure, usize>,
}

impl ValidationReport {
    fn for_panel(panel: &FirmPanel) -> Self {
        let missing_measure_counts = SizeMeasure::ALL
            .iter()
            .map(|&m| {
                (
                    m,
                    panel
                        .records
                        .iter()
                        .filter(|r| r.measure(m).is_none())
                        .count(),
                )
            })
            .collect();
        ValidationReport {
            record_count: panel.len(),
            accepted: panel.len(),
            rejected: 0,
            firm_count: panel.firm_count(),
            year_span: panel.year_span(),
            duplicate_keys: Vec::new(),
            negative_values: Vec::new(),
            malformed: Vec::new(),
            missing_measure_counts,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records\t{}", self.record_count)?;
        writeln!(f, "accepted\t{}", self.accepted)?;
        writeln!(f, "rejected\t{}", self.rejected)?;
        writeln!(f, "firms\t{}", self.firm_count)?;
        match self.year_span {
            Some((a, b)) => writeln!(f, "years\t{a}:{b}")?,
            None => writeln!(f, "years\t-")?,
        }
        for (m, n) in &self.missing_measure_counts {
            writeln!(f, "missing_{m}\t{n}")?;
        }
        for d in &self.duplicate_keys {
            writeln!(f, "duplicate\tline {}\t{}\t{}", d.line, d.firm_id, d.year)?;
        }
        for n in &self.negative_values {
            writeln!(
                f,
                "negative\tline {}\t{}\t{}\t{}={}",
                n.line, n.firm_id, n.year, n.measure, n.value
            )?;
        }
        for m in &self.malformed {
            writeln!(f, "malformed\tline {}\t{}", m.line, m.reason)?;
        }
        Ok(())
    }
}

/// Result of [`load_panel`]: the accepted panel plus the ingestion report.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: FirmPanel,
    pub report: ValidationReport,
}

fn detect_delimiter(bytes: &[u8]) -> u8 {
    let header = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let tabs = header.iter().filter(|&&b| b == b'\t').count();
    let commas = header.iter().filter(|&&b| b == b',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

fn parse_measure(cell: &str) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("NA") {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("unparseable number `{cell}`")),
    }
}

/// Reads a delimited panel (comma or tab, chosen from the header line).
///
/// Malformed rows are skipped and reported unless they make up more than
/// half of the data rows. Duplicate `(firm_id, year)` keys keep the first
/// occurrence; rows with a negative measure are rejected.
pub fn load_panel<R: Read>(
    mut source: R,
    schema: &PanelSchema,
    provenance: &str,
) -> Result<LoadedPanel, PanelError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(PanelError::MissingHeader);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(&bytes))
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);

    let id_col = find(&schema.firm_id).ok_or_else(|| PanelError::MissingColumn {
        field: "firm_id",
        column: schema.firm_id.clone(),
    })?;
    let year_col = find(&schema.year).ok_or_else(|| PanelError::MissingColumn {
        field: "year",
        column: schema.year.clone(),
    })?;
    let class_col = find(&schema.classification);
    let measure_cols: Vec<(SizeMeasure, usize)> = SizeMeasure::ALL
        .iter()
        .filter_map(|&m| find(schema.column(m)).map(|c| (m, c)))
        .collect();

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let mut duplicate_keys = Vec::new();
    let mut negative_values = Vec::new();
    let mut malformed = Vec::new();
    let mut total = 0usize;

    for row in reader.records() {
        total += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                malformed.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<FirmRecord, String> {
            let cell = |i: usize| {
                row.get(i)
                    .ok_or_else(|| format!("row has {} fields, expected > {i}", row.len()))
            };
            let firm_id = cell(id_col)?.trim();
            if firm_id.is_empty() {
                return Err("empty firm id".into());
            }
            let year_txt = cell(year_col)?.trim();
            let year: i32 = year_txt
                .parse()
                .map_err(|_| format!("unparseable year `{year_txt}`"))?;
            if !(YEAR_MIN..=YEAR_MAX).contains(&year) {
                return Err(format!("year {year} outside [{YEAR_MIN}, {YEAR_MAX}]"));
            }
            let mut rec = FirmRecord::new(firm_id, year);
            if let Some(c) = class_col {
                let txt = cell(c)?.trim();
                if !txt.is_empty() && !txt.eq_ignore_ascii_case("NA") {
                    rec.classification =
                        Some(ClassificationCode::new(txt).map_err(|e| e.to_string())?);
                }
            }
            for &(m, c) in &measure_cols {
                *rec.measure_mut(m) = parse_measure(cell(c)?)?;
            }
            Ok(rec)
        })();

        let rec = match parsed {
            Ok(rec) => rec,
            Err(reason) => {
                malformed.push(RejectedRow { line, reason });
                continue;
            }
        };
        if let Some((m, v)) = SizeMeasure::ALL
            .iter()
            .find_map(|&m| rec.measure(m).filter(|v| *v < 0.0).map(|v| (m, v)))
        {
            negative_values.push(NegativeValue {
                line,
                firm_id: rec.firm_id,
                year: rec.year,
                measure: m,
                value: v,
            });
            continue;
        }
        if !seen.insert((rec.firm_id.clone(), rec.year)) {
            duplicate_keys.push(DuplicateKey {
                line,
                firm_id: rec.firm_id,
                year: rec.year,
            });
            continue;
        }
        records.push(rec);
    }

    if malformed.len() * 2 > total {
        let first = &malformed[0];
        return Err(PanelError::TooManyMalformed {
            malformed: malformed.len(),
            total,
            first_line: first.line,
            reason: first.reason.clone(),
        });
    }

    let panel = FirmPanel::from_records(records, provenance)?;
    let mut report = ValidationReport::for_panel(&panel);
    report.record_count = total;
    report.rejected = total - panel.len();
    report.duplicate_keys = duplicate_keys;
    report.negative_values = negative_values;
    report.malformed = malformed;
    Ok(LoadedPanel { panel, report })
}

/// Summarises an in-memory panel. Panels cannot hold rejected rows, so the
/// rejection lists are always empty.
pub fn validate_panel(panel: &FirmPanel) -> ValidationReport {
    ValidationReport::for_panel(panel)
}

/// Keeps records whose classification starts with `prefix`. Records without
/// a classification never match.
pub fn filter_classification(panel: &FirmPanel, prefix: &ClassificationCode) -> FirmPanel {
    let records = panel
        .records
        .iter()
        .filter(|r| {
            r.classification
                .as_ref()
                .is_some_and(|c| c.starts_with(prefix))
        })
        .cloned()
        .collect();
    panel.derive(records, format!("prefix={prefix}"))
}

/// Keeps records with `start <= year <= end`.
pub fn filter_years(panel: &FirmPanel, start: i32, end: i32) -> Result<FirmPanel, PanelError> {
    if start > end {
        return Err(PanelError::InvalidYearRange { start, end });
    }
    let records = panel
        .records
        .iter()
        .filter(|r| (start..=end).contains(&r.year))
        .cloned()
        .collect();
    Ok(panel.derive(records, format!("years={start}:{end}")))
}

fn fmt_opt(v: Option<f64>) -> String {
    // `{}` on f64 prints the shortest string that parses back exactly
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the panel as tab-separated text in the default schema.
pub fn write_panel<W: Write>(panel: &FirmPanel, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "firm_id\tyear\tclassification\tsales\temployees\tassets"
    )?;
    for r in &panel.records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.firm_id,
            r.year,
            r.classification.as_ref().map(|c| c.as_str()).unwrap_or(""),
            fmt_opt(r.sales),
            fmt_opt(r.employees),
            fmt_opt(r.assets),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> ClassificationCode {
        ClassificationCode::new(s).unwrap()
    }

    fn load(text: &str) -> Result<LoadedPanel, PanelError> {
        load_panel(text.as_bytes(), &PanelSchema::default(), "test")
    }

    #[test]
    fn classification_code_lengths() {
        for ok in ["35", "3520", "352010", "35201010"] {
            assert!(ClassificationCode::new(ok).is_ok(), "{ok}");
        }
        for bad in ["3", "352", "3x", "", "3520101010", "35 20"] {
            assert!(ClassificationCode::new(bad).is_err(), "{bad}");
        }
        assert_eq!(code("35201010").level(), 4);
        assert_eq!(code("352010").sector(), code("35"));
    }

    #[test]
    fn loads_with_custom_schema() {
        let schema =
            PanelSchema::from_kv_str("firm_id=id\nclassification = gics\n# comment\n").unwrap();
        let text = "id,year,gics,sales\nA,1990,352010,100\nA,1991,352010,120\nB,1990,452020,50\n";
        let loaded = load_panel(text.as_bytes(), &schema, "x").unwrap();
        assert_eq!(loaded.panel.len(), 3);
        assert_eq!(loaded.report.firm_count, 2);
        assert_eq!(loaded.report.record_count, 3);
        assert_eq!(loaded.panel.records()[0].sales, Some(100.0));
        assert_eq!(
            loaded.panel.records()[2].classification,
            Some(code("452020"))
        );
    }

    #[test]
    fn detects_tab_delimiter_and_na() {
        let text = "firm_id\tyear\tsales\tassets\nA\t1990\tNA\t3\nA\t1991\t\t4\n";
        let loaded = load(text).unwrap();
        assert_eq!(loaded.panel.len(), 2);
        assert!(loaded.panel.records().iter().all(|r| r.sales.is_none()));
        assert_eq!(loaded.report.missing_measure_counts[&SizeMeasure::Sales], 2);
        assert_eq!(
            loaded.report.missing_measure_counts[&SizeMeasure::Employees],
            2
        );
        assert_eq!(
            loaded.report.missing_measure_counts[&SizeMeasure::Assets],
            0
        );
    }

    #[test]
    fn duplicate_key_first_wins() {
        let text = "firm_id,year,sales\nA,1990,1\nA,1990,2\nA,1991,3\n";
        let loaded = load(text).unwrap();
        assert_eq!(loaded.panel.len(), 2);
        assert_eq!(loaded.panel.records()[0].sales, Some(1.0));
        assert_eq!(loaded.report.duplicate_keys.len(), 1);
        assert_eq!(loaded.report.duplicate_keys[0].line, 3);
        assert_eq!(
            loaded.report.record_count,
            loaded.report.accepted + loaded.report.rejected
        );
    }

    #[test]
    fn negative_value_rejected() {
        let text = "firm_id,year,sales\nA,1990,-5\nA,1991,3\n";
        let loaded = load(text).unwrap();
        assert_eq!(loaded.panel.len(), 1);
        assert_eq!(loaded.report.negative_values.len(), 1);
        assert_eq!(loaded.report.negative_values[0].value, -5.0);
        assert_eq!(loaded.report.rejected, 1);
    }

    #[test]
    fn missing_mandatory_column() {
        let err = load("id,year\nA,1990\n").unwrap_err();
        assert!(matches!(
            err,
            PanelError::MissingColumn {
                field: "firm_id",
                ..
            }
        ));
        let err = load("firm_id,yr\nA,1990\n").unwrap_err();
        assert!(matches!(
            err,
            PanelError::MissingColumn { field: "year", .. }
        ));
        assert!(matches!(load("").unwrap_err(), PanelError::MissingHeader));
    }

    #[test]
    fn malformed_rows_tolerated_up_to_half() {
        let text = "firm_id,year,sales\nA,1990,1\nA,19x1,2\nA,1992,3\nA,1993,abc\n";
        let loaded = load(text).unwrap();
        assert_eq!(loaded.panel.len(), 2);
        assert_eq!(loaded.report.malformed.len(), 2);

        let text = "firm_id,year,sales\nA,1990,1\nA,19x1,2\nA,1992,oops\n";
        match load(text).unwrap_err() {
            PanelError::TooManyMalformed {
                first_line,
                malformed,
                total,
                ..
            } => {
                assert_eq!((first_line, malformed, total), (3, 2, 3));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn year_out_of_bounds_is_malformed() {
        let text = "firm_id,year\nA,1949\nA,1950\nA,2100\n";
        let loaded = load(text).unwrap();
        assert_eq!(loaded.panel.len(), 2);
        assert_eq!(loaded.report.malformed.len(), 1);
    }

    #[test]
    fn validate_empty_and_complete() {
        let r = validate_panel(&FirmPanel::empty("e"));
        assert_eq!((r.record_count, r.firm_count, r.year_span), (0, 0, None));

        let mut recs = Vec::new();
        for f in ["A", "B"] {
            for y in 2000..2003 {
                recs.push(FirmRecord::new(f, y).with_measure(SizeMeasure::Sales, 1.0));
            }
        }
        recs[4].sales = None;
        let p = FirmPanel::from_records(recs, "p").unwrap();
        let r = validate_panel(&p);
        assert_eq!(
            (r.record_count, r.firm_count, r.year_span),
            (6, 2, Some((2000, 2002)))
        );
        assert_eq!(r.missing_measure_counts[&SizeMeasure::Sales], 1);
    }

    #[test]
    fn from_records_rejects_duplicates() {
        let recs = vec![FirmRecord::new("A", 2000), FirmRecord::new("A", 2000)];
        assert!(matches!(
            FirmPanel::from_records(recs, "").unwrap_err(),
            PanelError::DuplicateKey { .. }
        ));
    }

    fn coded_panel() -> FirmPanel {
        let recs = vec![
            FirmRecord::new("A", 1990).with_classification(code("352010")),
            FirmRecord::new("B", 1990).with_classification(code("452020")),
            FirmRecord::new("C", 1990).with_classification(code("35201010")),
            FirmRecord::new("D", 1990),
        ];
        FirmPanel::from_records(recs, "src").unwrap()
    }

    #[test]
    fn prefix_filter() {
        let p = coded_panel();
        let f = filter_classification(&p, &code("35"));
        let ids: Vec<_> = f.records().iter().map(|r| r.firm_id.as_str()).collect();
        assert_eq!(ids, ["A", "C"]);
        assert!(f.provenance().contains("prefix=35"));

        let f = filter_classification(&p, &code("35201010"));
        assert_eq!(f.len(), 1);
        assert_eq!(f.records()[0].firm_id, "C");

        assert!(filter_classification(&p, &code("10")).is_empty());
    }

    #[test]
    fn year_filter() {
        let recs = (1950..=2015).map(|y| FirmRecord::new("A", y)).collect();
        let p = FirmPanel::from_records(recs, "").unwrap();
        let f = filter_years(&p, 1974, 1993).unwrap();
        assert_eq!(f.year_span(), Some((1974, 1993)));
        assert_eq!(f.len(), 20);
        assert_eq!(filter_years(&p, 1980, 1980).unwrap().len(), 1);
        assert!(filter_years(&p, 2050, 2060).unwrap().is_empty());
        assert!(filter_years(&p, 1990, 1980).is_err());
    }

    #[test]
    fn firms_groups_by_id() {
        let recs = vec![
            FirmRecord::new("B", 2001),
            FirmRecord::new("A", 2001),
            FirmRecord::new("B", 2000),
        ];
        let p = FirmPanel::from_records(recs, "").unwrap();
        let groups: Vec<Vec<i32>> = p
            .firms()
            .map(|g| g.iter().map(|r| r.year).collect())
            .collect();
        assert_eq!(groups, vec![vec![2001], vec![2000, 2001]]);
        assert_eq!(p.firm_count(), 2);
    }
}
