use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{
    Catalog, CatalogError, CoverageRegion, PlanRecord, RatingRecord, Ratings, ServiceFeature, WardType,
    MAX_EYE_CARE_LEVEL, MAX_TIER, MIN_TIER,
};

pub const CATALOG_COLUMNS: [&str; 16] = [
    "plan_id",
    "hmo_id",
    "hmo_name",
    "plan_name",
    "premium_tier",
    "coverage_region",
    "family_planning",
    "mental_health",
    "dental_care",
    "telemedicine",
    "cashback_benefit",
    "anc_delivery",
    "gym_membership",
    "annual_screening",
    "ward_type",
    "eye_care_limit_level",
];

pub const RATINGS_COLUMNS: [&str; 3] = ["hmo_id", "mean_rating", "rating_count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Json,
}

impl FileFormat {
    /// `.json` files are JSON arrays; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => FileFormat::Json,
            _ => FileFormat::Csv,
        }
    }
}

/// A row-level problem. `line` is the physical line for CSV input and the
/// 1-based record index for JSON input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub line: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.plan_id {
            Some(id) => write!(f, "line {} ({}): {}", self.line, id, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

/// Boolean cells that were blank and defaulted to `false`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowWarning {
    pub line: u64,
    pub plan_id: String,
    pub missing_fields: Vec<&'static str>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows: usize,
    /// Per-column count of blank boolean cells.
    pub missing_values: BTreeMap<&'static str, usize>,
    pub row_warnings: Vec<RowWarning>,
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_catalog(&text, FileFormat::from_path(path))
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<Ratings, CatalogError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_ratings(&text, FileFormat::from_path(path))
}

fn read_text(path: &Path) -> Result<String, CatalogError> {
    let bytes = fs::read(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        CatalogError::MalformedFile {
            line: 1 + valid.iter().filter(|&&b| b == b'\n').count() as u64,
            message: "file is not valid UTF-8".into(),
        }
    })
}

/// Writes plans in the format implied by the path's extension.
pub fn write_catalog(path: impl AsRef<Path>, plans: &[PlanRecord]) -> Result<(), CatalogError> {
    let path = path.as_ref();
    let io_err = |source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = match FileFormat::from_path(path) {
        FileFormat::Json => {
            let mut s = serde_json::to_string_pretty(plans).expect("plan records serialize");
            s.push('\n');
            s
        }
        FileFormat::Csv => catalog_to_csv(plans),
    };
    fs::write(path, text).map_err(io_err)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn catalog_to_csv(plans: &[PlanRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CATALOG_COLUMNS).expect("in-memory write");
    for p in plans {
        let tier = p.premium_tier.to_string();
        let eye = p.eye_care_limit_level.to_string();
        let mut row: Vec<&str> = vec![
            &p.plan_id,
            &p.hmo_id,
            &p.hmo_name,
            &p.plan_name,
            &tier,
            p.coverage_region.as_str(),
        ];
        row.extend(ServiceFeature::ALL.iter().map(|&f| yes_no(p.has(f))));
        row.push(p.ward_type.as_str());
        row.push(&eye);
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// One raw cell before validation, from either CSV or JSON.
#[derive(Debug, Clone)]
enum Cell {
    Missing,
    Text(String),
    Bool(bool),
    Number(serde_json::Number),
    Other(String),
}

impl Cell {
    fn from_csv(s: &str) -> Cell {
        if s.is_empty() {
            Cell::Missing
        } else {
            Cell::Text(s.to_string())
        }
    }

    fn from_json(v: Option<&Value>) -> Cell {
        match v {
            None | Some(Value::Null) => Cell::Missing,
            Some(Value::String(s)) if s.trim().is_empty() => Cell::Missing,
            Some(Value::String(s)) => Cell::Text(s.trim().to_string()),
            Some(Value::Bool(b)) => Cell::Bool(*b),
            Some(Value::Number(n)) => Cell::Number(n.clone()),
            Some(other) => Cell::Other(other.to_string()),
        }
    }

    fn describe(&self) -> String {
        match self {
            Cell::Missing => "nothing".into(),
            Cell::Text(s) => format!("{s:?}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Number(n) => n.to_string(),
            Cell::Other(s) => s.clone(),
        }
    }
}

type Row = BTreeMap<&'static str, Cell>;

struct RowIssues {
    issues: Vec<String>,
    missing: Vec<&'static str>,
}

impl RowIssues {
    fn new() -> Self {
        RowIssues {
            issues: Vec::new(),
            missing: Vec::new(),
        }
    }

    fn text(&mut self, row: &Row, col: &'static str) -> String {
        match &row[col] {
            Cell::Text(s) => s.clone(),
            Cell::Missing => {
                self.issues.push(format!("{col} is required"));
                String::new()
            }
            other => {
                self.issues
                    .push(format!("{col} must be a string, got {}", other.describe()));
                String::new()
            }
        }
    }

    fn int_in(&mut self, row: &Row, col: &'static str, lo: u8, hi: u8) -> u8 {
        let parsed = match &row[col] {
            Cell::Text(s) => s.parse::<i64>().ok(),
            Cell::Number(n) => n.as_i64(),
            _ => None,
        };
        match parsed {
            Some(v) if (lo as i64..=hi as i64).contains(&v) => v as u8,
            _ => {
                self.issues.push(format!(
                    "{col} must be an integer in [{lo}, {hi}], got {}",
                    row[col].describe()
                ));
                lo
            }
        }
    }

    fn boolean(&mut self, row: &Row, col: &'static str) -> bool {
        match &row[col] {
            Cell::Missing => {
                self.missing.push(col);
                false
            }
            Cell::Bool(b) => *b,
            Cell::Text(s) if s.eq_ignore_ascii_case("yes") => true,
            Cell::Text(s) if s.eq_ignore_ascii_case("no") => false,
            other => {
                self.issues
                    .push(format!("{col} must be yes/no, got {}", other.describe()));
                false
            }
        }
    }

    fn enumerated<T>(
        &mut self,
        row: &Row,
        col: &'static str,
        allowed: &str,
        parse: fn(&str) -> Option<T>,
    ) -> Option<T> {
        let parsed = match &row[col] {
            Cell::Text(s) => parse(s),
            _ => None,
        };
        if parsed.is_none() {
            self.issues
                .push(format!("{col} must be one of {allowed}, got {}", row[col].describe()));
        }
        parsed
    }
}

fn plan_from_row(row: &Row) -> (Option<PlanRecord>, RowIssues) {
    let mut r = RowIssues::new();
    let plan_id = r.text(row, "plan_id");
    let hmo_id = r.text(row, "hmo_id");
    let hmo_name = r.text(row, "hmo_name");
    let plan_name = r.text(row, "plan_name");
    let premium_tier = r.int_in(row, "premium_tier", MIN_TIER, MAX_TIER);
    let region = r.enumerated(row, "coverage_region", "lagos|nationwide", CoverageRegion::parse);
    let mut flags = [false; 8];
    for (slot, f) in flags.iter_mut().zip(ServiceFeature::ALL) {
        *slot = r.boolean(row, f.name());
    }
    let ward = r.enumerated(row, "ward_type", "general|semi_private|private", WardType::parse);
    let eye = r.int_in(row, "eye_care_limit_level", 0, MAX_EYE_CARE_LEVEL);

    let plan = match (region, ward) {
        (Some(coverage_region), Some(ward_type)) if r.issues.is_empty() => {
            let mut plan = PlanRecord {
                plan_id,
                hmo_id,
                hmo_name,
                plan_name,
                premium_tier,
                coverage_region,
                family_planning: false,
                mental_health: false,
                dental_care: false,
                telemedicine: false,
                cashback_benefit: false,
                anc_delivery: false,
                gym_membership: false,
                annual_screening: false,
                ward_type,
                eye_care_limit_level: eye,
            };
            for (value, f) in flags.into_iter().zip(ServiceFeature::ALL) {
                plan.set(f, value);
            }
            Some(plan)
        }
        _ => None,
    };
    (plan, r)
}

/// Range and presence checks for a record built in code rather than parsed.
pub(crate) fn record_issues(plan: &PlanRecord) -> Vec<String> {
    let mut issues = Vec::new();
    for (name, value) in [
        ("plan_id", &plan.plan_id),
        ("hmo_id", &plan.hmo_id),
        ("hmo_name", &plan.hmo_name),
        ("plan_name", &plan.plan_name),
    ] {
        if value.trim().is_empty() {
            issues.push(format!("{name} is required"));
        }
    }
    if !(MIN_TIER..=MAX_TIER).contains(&plan.premium_tier) {
        issues.push(format!(
            "premium_tier must be an integer in [{MIN_TIER}, {MAX_TIER}], got {}",
            plan.premium_tier
        ));
    }
    if plan.eye_care_limit_level > MAX_EYE_CARE_LEVEL {
        issues.push(format!(
            "eye_care_limit_level must be an integer in [0, {MAX_EYE_CARE_LEVEL}], got {}",
            plan.eye_care_limit_level
        ));
    }
    issues
}

type RawRows = (Vec<(u64, Row)>, Vec<Violation>);

/// Numbered raw rows from either format, plus records too broken to read.
fn raw_rows(text: &str, format: FileFormat, columns: &[&'static str]) -> Result<RawRows, CatalogError> {
    match format {
        FileFormat::Csv => csv_rows(text, columns).map(|rows| (rows, Vec::new())),
        FileFormat::Json => json_rows(text, columns),
    }
}

fn csv_rows(text: &str, columns: &[&'static str]) -> Result<Vec<(u64, Row)>, CatalogError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(columns.iter().copied()) {
        return Err(CatalogError::MalformedFile {
            line: 1,
            message: format!(
                "header must be exactly `{}`, got `{}`",
                columns.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = columns
            .iter()
            .zip(record.iter())
            .map(|(&col, cell)| (col, Cell::from_csv(cell)))
            .collect();
        rows.push((line, row));
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> CatalogError {
    let line = e.position().map_or(1, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    CatalogError::MalformedFile { line, message }
}

fn json_rows(text: &str, columns: &[&'static str]) -> Result<RawRows, CatalogError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CatalogError::MalformedFile {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let Value::Array(items) = value else {
        return Err(CatalogError::MalformedFile {
            line: 1,
            message: "expected a JSON array of records".into(),
        });
    };
    let mut rows = Vec::with_capacity(items.len());
    let mut violations = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let line = i as u64 + 1;
        let Value::Object(obj) = item else {
            violations.push(Violation {
                line,
                plan_id: None,
                message: "record is not a JSON object".into(),
            });
            continue;
        };
        let unknown: Vec<&str> = obj
            .keys()
            .map(String::as_str)
            .filter(|k| !columns.contains(k))
            .collect();
        if !unknown.is_empty() {
            violations.push(Violation {
                line,
                plan_id: obj.get("plan_id").and_then(Value::as_str).map(str::to_string),
                message: format!("unknown field(s): {}", unknown.join(", ")),
            });
            continue;
        }
        let row = columns
            .iter()
            .map(|&col| (col, Cell::from_json(obj.get(col))))
            .collect();
        rows.push((line, row));
    }
    Ok((rows, violations))
}

/// Every valid plan and every violation found in a catalog file.
#[derive(Debug, Clone, Default)]
pub struct CatalogScan {
    pub plans: Vec<PlanRecord>,
    pub report: LoadReport,
    pub violations: Vec<Violation>,
}

impl CatalogScan {
    pub fn into_catalog(self) -> Result<Catalog, CatalogError> {
        if !self.violations.is_empty() {
            return Err(CatalogError::SchemaViolation {
                violations: self.violations,
            });
        }
        Catalog::assemble(self.plans, self.report)
    }
}

/// Validates every row without stopping at the first bad one. Only
/// structural problems (bad header, broken CSV/JSON syntax) are errors.
pub fn scan_catalog(text: &str, format: FileFormat) -> Result<CatalogScan, CatalogError> {
    let (rows, mut violations) = raw_rows(text, format, &CATALOG_COLUMNS)?;
    let mut plans = Vec::with_capacity(rows.len());
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();

    for (line, row) in &rows {
        let (plan, r) = plan_from_row(row);
        let plan_id = match &row["plan_id"] {
            Cell::Text(s) => Some(s.clone()),
            _ => None,
        };
        let mut issues = r.issues;
        if let Some(id) = &plan_id {
            if !seen.insert(id.clone()) {
                issues.push(format!("duplicate plan_id {id:?}"));
            }
        }
        if !issues.is_empty() {
            violations.push(Violation {
                line: *line,
                plan_id,
                message: issues.join("; "),
            });
            continue;
        }
        let plan = plan.expect("no issues implies a record");
        for &col in &r.missing {
            *report.missing_values.entry(col).or_default() += 1;
        }
        if !r.missing.is_empty() {
            report.row_warnings.push(RowWarning {
                line: *line,
                plan_id: plan.plan_id.clone(),
                missing_fields: r.missing,
            });
        }
        plans.push(plan);
    }
    violations.sort_by_key(|v| v.line);
    report.rows = plans.len();
    Ok(CatalogScan {
        plans,
        report,
        violations,
    })
}

pub fn scan_catalog_file(path: impl AsRef<Path>) -> Result<CatalogScan, CatalogError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    scan_catalog(&text, FileFormat::from_path(path))
}

/// Parses and validates catalog text. Every bad row is reported, not just the first.
pub fn parse_catalog(text: &str, format: FileFormat) -> Result<Catalog, CatalogError> {
    scan_catalog(text, format)?.into_catalog()
}

pub fn parse_ratings(text: &str, format: FileFormat) -> Result<Ratings, CatalogError> {
    let (rows, mut violations) = raw_rows(text, format, &RATINGS_COLUMNS)?;
    let mut records = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();

    for (line, row) in &rows {
        let mut issues = Vec::new();
        let hmo_id = match &row["hmo_id"] {
            Cell::Text(s) => Some(s.clone()),
            other => {
                issues.push(format!("hmo_id must be a non-empty string, got {}", other.describe()));
                None
            }
        };
        let mean = match &row["mean_rating"] {
            Cell::Text(s) => s.parse::<f64>().ok(),
            Cell::Number(n) => n.as_f64(),
            _ => None,
        };
        let mean = match mean {
            Some(m) if (0.0..=5.0).contains(&m) => m,
            _ => {
                issues.push(format!(
                    "mean_rating must be a number in [0, 5], got {}",
                    row["mean_rating"].describe()
                ));
                0.0
            }
        };
        let count = match &row["rating_count"] {
            Cell::Text(s) => s.parse::<u64>().ok(),
            Cell::Number(n) => n.as_u64(),
            _ => None,
        };
        let count = count.unwrap_or_else(|| {
            issues.push(format!(
                "rating_count must be a non-negative integer, got {}",
                row["rating_count"].describe()
            ));
            0
        });
        if let Some(id) = &hmo_id {
            if !seen.insert(id.clone()) {
                issues.push(format!("duplicate hmo_id {id:?}"));
            }
        }
        match hmo_id {
            Some(hmo_id) if issues.is_empty() => records.push(RatingRecord {
                hmo_id,
                mean_rating: mean,
                rating_count: count,
            }),
            hmo_id => violations.push(Violation {
                line: *line,
                plan_id: hmo_id,
                message: issues.join("; "),
            }),
        }
    }
    if !violations.is_empty() {
        violations.sort_by_key(|v| v.line);
        return Err(CatalogError::SchemaViolation { violations });
    }
    Ok(Ratings::new(records))
}
