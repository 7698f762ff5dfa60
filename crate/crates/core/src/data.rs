//! Dataset ingest, covariate encoding, standardization, and validation.
//!
//! Input is UTF-8 CSV with a header row plus a sidecar schema document (JSON)
//! declaring column kinds, categorical reference levels, the cause labels and
//! the time unit. Categorical covariates expand to level-count-minus-one
//! indicator columns against the reference level; continuous covariates may be
//! standardized on ingest, with the applied (mean, sd) recorded so profile
//! predictions can be entered on the natural scale. All times are converted to
//! years internally. Missing values are a hard error; nothing is imputed.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{0}` not found in csv header")]
    MissingColumn(String),
    #[error("nonpositive time at row {row}")]
    NonPositiveTime { row: usize },
    #[error("unknown cause code {code} at row {row} (expected 0..={max})")]
    UnknownCauseCode { row: usize, code: i64, max: usize },
    #[error("unknown level `{level}` for covariate `{column}` at row {row}")]
    UnknownLevel { row: usize, column: String, level: String },
    #[error("missing cell for `{column}` at row {row}")]
    MissingCell { row: usize, column: String },
    #[error("cannot parse `{value}` as a number for `{column}` at row {row}")]
    BadNumber { row: usize, column: String, value: String },
    #[error("covariate `{0}` has zero sample standard deviation")]
    ZeroSd(String),
    #[error("invalid schema: {0}")]
    BadSchema(String),
    #[error("covariate `{0}` is not continuous")]
    NotContinuous(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid schema document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Event indicator: censored (δ = 0) or death from a cause (δ = k maps to
/// `Event(k − 1)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventStatus {
    Censored,
    Event(usize),
}

impl EventStatus {
    /// The integer code used on disk: 0 for censored, 1-based cause otherwise.
    pub fn code(&self) -> usize {
        match self {
            EventStatus::Censored => 0,
            EventStatus::Event(k) => k + 1,
        }
    }

    pub fn is_event_of(&self, cause: usize) -> bool {
        matches!(self, EventStatus::Event(k) if *k == cause)
    }
}

/// One subject: observation time (years), event indicator, and the encoded
/// covariate vector matching the schema's column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub time: f64,
    pub status: EventStatus,
    pub covariates: Vec<f64>,
}

/// Standardization applied to a stored column: stored = (natural − mean)/sd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateKind {
    Continuous {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        standardization: Option<Standardization>,
    },
    Binary,
    Categorical { levels: Vec<String>, reference: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    #[serde(flatten)]
    pub kind: CovariateKind,
}

impl SchemaEntry {
    fn encoded_width(&self) -> usize {
        match &self.kind {
            CovariateKind::Continuous { .. } | CovariateKind::Binary => 1,
            CovariateKind::Categorical { levels, .. } => levels.len() - 1,
        }
    }

    fn non_reference_levels(&self) -> Vec<&String> {
        match &self.kind {
            CovariateKind::Categorical { levels, reference } => {
                levels.iter().filter(|l| *l != reference).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Declared covariates and their encoding into numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSchema {
    pub entries: Vec<SchemaEntry>,
}

impl CovariateSchema {
    pub fn new(entries: Vec<SchemaEntry>) -> Result<Self, DataError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.clone()) {
                return Err(DataError::BadSchema(format!("duplicate covariate name `{}`", e.name)));
            }
            if let CovariateKind::Categorical { levels, reference } = &e.kind {
                if levels.len() < 2 {
                    return Err(DataError::BadSchema(format!(
                        "categorical `{}` needs at least two levels",
                        e.name
                    )));
                }
                if !levels.contains(reference) {
                    return Err(DataError::BadSchema(format!(
                        "reference level `{reference}` of `{}` is not among its levels",
                        e.name
                    )));
                }
                let mut lv = std::collections::HashSet::new();
                if levels.iter().any(|l| !lv.insert(l.clone())) {
                    return Err(DataError::BadSchema(format!(
                        "categorical `{}` has duplicate levels",
                        e.name
                    )));
                }
            }
            if let CovariateKind::Continuous { standardization: Some(s) } = &e.kind {
                if !(s.sd > 0.0) {
                    return Err(DataError::BadSchema(format!(
                        "standardization sd for `{}` must be positive",
                        e.name
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Total number of encoded columns.
    pub fn encoded_len(&self) -> usize {
        self.entries.iter().map(|e| e.encoded_width()).sum()
    }

    /// Encoded column names: plain names for continuous/binary, `name=level`
    /// for categorical indicators.
    pub fn encoded_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.encoded_len());
        for e in &self.entries {
            match &e.kind {
                CovariateKind::Continuous { .. } | CovariateKind::Binary => out.push(e.name.clone()),
                CovariateKind::Categorical { .. } => {
                    for l in e.non_reference_levels() {
                        out.push(format!("{}={}", e.name, l));
                    }
                }
            }
        }
        out
    }

    /// Index of the first encoded column of entry `idx`.
    fn encoded_offset(&self, idx: usize) -> usize {
        self.entries[..idx].iter().map(|e| e.encoded_width()).sum()
    }

    /// Map natural-scale profile values to the encoded covariate vector
    /// (standardization applied, categoricals expanded).
    pub fn encode_profile(&self, values: &BTreeMap<String, ProfileValue>) -> Result<Vec<f64>, DataError> {
        let mut out = Vec::with_capacity(self.encoded_len());
        for e in &self.entries {
            let v = values
                .get(&e.name)
                .ok_or_else(|| DataError::MissingCell { row: 0, column: e.name.clone() })?;
            match &e.kind {
                CovariateKind::Continuous { standardization } => {
                    let raw = v.as_number().ok_or_else(|| DataError::BadNumber {
                        row: 0,
                        column: e.name.clone(),
                        value: v.display(),
                    })?;
                    out.push(match standardization {
                        Some(s) => (raw - s.mean) / s.sd,
                        None => raw,
                    });
                }
                CovariateKind::Binary => {
                    let raw = v.as_number().ok_or_else(|| DataError::BadNumber {
                        row: 0,
                        column: e.name.clone(),
                        value: v.display(),
                    })?;
                    out.push(raw);
                }
                CovariateKind::Categorical { levels, reference } => {
                    let level = v.as_level().ok_or_else(|| DataError::UnknownLevel {
                        row: 0,
                        column: e.name.clone(),
                        level: v.display(),
                    })?;
                    if !levels.contains(&level) {
                        return Err(DataError::UnknownLevel {
                            row: 0,
                            column: e.name.clone(),
                            level,
                        });
                    }
                    for l in e.non_reference_levels() {
                        out.push(if *l == level { 1.0 } else { 0.0 });
                    }
                    let _ = reference;
                }
            }
        }
        Ok(out)
    }
}

/// A natural-scale profile value: number for continuous/binary covariates,
/// level name for categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileValue {
    Number(f64),
    Flag(bool),
    Level(String),
}

impl ProfileValue {
    fn as_number(&self) -> Option<f64> {
        match self {
            ProfileValue::Number(v) => Some(*v),
            ProfileValue::Flag(b) => Some(if *b { 1.0 } else { 0.0 }),
            ProfileValue::Level(_) => None,
        }
    }

    fn as_level(&self) -> Option<String> {
        match self {
            ProfileValue::Level(s) => Some(s.clone()),
            _ => None,
        }
    }

    fn display(&self) -> String {
        match self {
            ProfileValue::Number(v) => v.to_string(),
            ProfileValue::Flag(b) => b.to_string(),
            ProfileValue::Level(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Years,
    Months,
    Days,
}

impl TimeUnit {
    pub fn to_years(&self, t: f64) -> f64 {
        match self {
            TimeUnit::Years => t,
            TimeUnit::Months => t / 12.0,
            TimeUnit::Days => t / 365.25,
        }
    }
}

/// Column mapping and ingest options accompanying a [`CovariateSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub time_column: String,
    pub cause_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[serde(default)]
    pub time_unit: TimeUnit,
    pub cause_labels: Vec<String>,
}

/// Standardization request in the sidecar document: `true` to estimate the
/// transform from the data, or explicit `{mean, sd}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StandardizeRequest {
    Flag(bool),
    Fixed { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DocCovariate {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standardize: Option<StandardizeRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    levels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
}

/// The sidecar schema document: column mapping plus covariate declarations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDocument {
    #[serde(flatten)]
    pub columns: ColumnMap,
    covariates: Vec<DocCovariate>,
}

impl SchemaDocument {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let doc: SchemaDocument = serde_json::from_str(text)?;
        doc.schema()?; // validate eagerly
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema document serializes")
    }

    /// The covariate schema before any data-estimated standardization.
    pub fn schema(&self) -> Result<CovariateSchema, DataError> {
        let entries = self
            .covariates
            .iter()
            .map(|c| {
                let kind = match c.kind.as_str() {
                    "continuous" => CovariateKind::Continuous {
                        standardization: match &c.standardize {
                            Some(StandardizeRequest::Fixed { mean, sd }) => {
                                Some(Standardization { mean: *mean, sd: *sd })
                            }
                            _ => None,
                        },
                    },
                    "binary" => CovariateKind::Binary,
                    "categorical" => CovariateKind::Categorical {
                        levels: c.levels.clone(),
                        reference: c.reference.clone().ok_or_else(|| {
                            DataError::BadSchema(format!(
                                "categorical `{}` needs a reference level",
                                c.name
                            ))
                        })?,
                    },
                    other => {
                        return Err(DataError::BadSchema(format!(
                            "unknown covariate kind `{other}` for `{}`",
                            c.name
                        )))
                    }
                };
                Ok(SchemaEntry { name: c.name.clone(), kind })
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        CovariateSchema::new(entries)
    }

    /// Names of continuous covariates whose standardization should be
    /// estimated from the data.
    fn estimate_standardization(&self) -> Vec<String> {
        self.covariates
            .iter()
            .filter(|c| {
                c.kind == "continuous" && matches!(c.standardize, Some(StandardizeRequest::Flag(true)))
            })
            .map(|c| c.name.clone())
            .collect()
    }
}

/// Validated competing-risks dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<SubjectRecord>,
    pub schema: CovariateSchema,
    pub cause_labels: Vec<String>,
}

impl Dataset {
    pub fn new(
        records: Vec<SubjectRecord>,
        schema: CovariateSchema,
        cause_labels: Vec<String>,
    ) -> Result<Self, DataError> {
        let width = schema.encoded_len();
        let k = cause_labels.len();
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0) {
                return Err(DataError::NonPositiveTime { row: i + 1 });
            }
            if let EventStatus::Event(c) = r.status {
                if c >= k {
                    return Err(DataError::UnknownCauseCode {
                        row: i + 1,
                        code: (c + 1) as i64,
                        max: k,
                    });
                }
            }
            if r.covariates.len() != width {
                return Err(DataError::BadSchema(format!(
                    "record {} has {} covariates, schema expects {width}",
                    i + 1,
                    r.covariates.len()
                )));
            }
        }
        Ok(Self { records, schema, cause_labels })
    }

    pub fn n_causes(&self) -> usize {
        self.cause_labels.len()
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    /// One encoded covariate column as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.covariates[j]).collect()
    }

    pub fn events_of(&self, cause: usize) -> usize {
        self.records.iter().filter(|r| r.status.is_event_of(cause)).count()
    }
}

/// Parse a CSV text against a schema and column map.
///
/// Categorical covariates expand to indicator columns against the declared
/// reference level; times are converted to years; every malformed cell is
/// reported with its 1-based data row.
pub fn parse_dataset(
    csv_text: &str,
    schema: &CovariateSchema,
    map: &ColumnMap,
) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };

    let time_idx = col_index(&map.time_column)?;
    let cause_idx = col_index(&map.cause_column)?;
    let id_idx = match &map.id_column {
        Some(c) => Some(col_index(c)?),
        None => None,
    };
    let cov_idx: Vec<usize> = schema
        .entries
        .iter()
        .map(|e| col_index(&e.name))
        .collect::<Result<_, _>>()?;

    let k = map.cause_labels.len();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let rownum = i + 1;
        let cell = |idx: usize, column: &str| -> Result<&str, DataError> {
            let v = row.get(idx).unwrap_or("");
            if v.is_empty() {
                Err(DataError::MissingCell { row: rownum, column: column.to_string() })
            } else {
                Ok(v)
            }
        };

        let time_raw: f64 = cell(time_idx, &map.time_column)?.parse().map_err(|_| {
            DataError::BadNumber {
                row: rownum,
                column: map.time_column.clone(),
                value: row.get(time_idx).unwrap_or("").to_string(),
            }
        })?;
        if !(time_raw > 0.0) || !time_raw.is_finite() {
            return Err(DataError::NonPositiveTime { row: rownum });
        }
        let time = map.time_unit.to_years(time_raw);

        let code: i64 = cell(cause_idx, &map.cause_column)?.parse().map_err(|_| {
            DataError::BadNumber {
                row: rownum,
                column: map.cause_column.clone(),
                value: row.get(cause_idx).unwrap_or("").to_string(),
            }
        })?;
        if code < 0 || code as usize > k {
            return Err(DataError::UnknownCauseCode { row: rownum, code, max: k });
        }
        let status = if code == 0 {
            EventStatus::Censored
        } else {
            EventStatus::Event(code as usize - 1)
        };

        let id = match id_idx {
            Some(idx) => row.get(idx).unwrap_or("").to_string(),
            None => rownum.to_string(),
        };

        let mut covariates = Vec::with_capacity(schema.encoded_len());
        for (e, &idx) in schema.entries.iter().zip(&cov_idx) {
            let raw = cell(idx, &e.name)?;
            match &e.kind {
                CovariateKind::Continuous { standardization } => {
                    let v: f64 = raw.parse().map_err(|_| DataError::BadNumber {
                        row: rownum,
                        column: e.name.clone(),
                        value: raw.to_string(),
                    })?;
                    covariates.push(match standardization {
                        Some(s) => (v - s.mean) / s.sd,
                        None => v,
                    });
                }
                CovariateKind::Binary => {
                    let v = match raw {
                        "0" | "false" => 0.0,
                        "1" | "true" => 1.0,
                        other => other.parse().map_err(|_| DataError::BadNumber {
                            row: rownum,
                            column: e.name.clone(),
                            value: raw.to_string(),
                        })?,
                    };
                    covariates.push(v);
                }
                CovariateKind::Categorical { levels, .. } => {
                    if !levels.iter().any(|l| l == raw) {
                        return Err(DataError::UnknownLevel {
                            row: rownum,
                            column: e.name.clone(),
                            level: raw.to_string(),
                        });
                    }
                    for l in e.non_reference_levels() {
                        covariates.push(if l == raw { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        records.push(SubjectRecord { id, time, status, covariates });
    }

    Dataset::new(records, schema.clone(), map.cause_labels.clone())
}

/// Parse CSV plus its sidecar schema document, applying any data-estimated
/// standardization the document requests.
pub fn ingest(csv_text: &str, doc: &SchemaDocument) -> Result<Dataset, DataError> {
    let schema = doc.schema()?;
    let d = parse_dataset(csv_text, &schema, &doc.columns)?;
    let to_standardize = doc.estimate_standardization();
    if to_standardize.is_empty() {
        return Ok(d);
    }
    let names: Vec<&str> = to_standardize.iter().map(|s| s.as_str()).collect();
    let (d, _) = standardize(&d, &names)?;
    Ok(d)
}

/// Standardize the named continuous covariates to mean 0, sd 1 (n−1
/// denominator), recording the applied transform in the schema. Composes with
/// any previously recorded standardization so the stored (mean, sd) always
/// map from the natural scale.
pub fn standardize(d: &Dataset, which: &[&str]) -> Result<(Dataset, CovariateSchema), DataError> {
    let mut out = d.clone();
    for name in which {
        let idx = out
            .schema
            .entries
            .iter()
            .position(|e| e.name == *name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
        let col = out.schema.encoded_offset(idx);
        let prev = match &out.schema.entries[idx].kind {
            CovariateKind::Continuous { standardization } => *standardization,
            _ => return Err(DataError::NotContinuous(name.to_string())),
        };
        let values: Vec<f64> = out.records.iter().map(|r| r.covariates[col]).collect();
        let mean = crate::stats::mean(&values);
        let sd = crate::stats::sample_sd(&values);
        if !(sd > 0.0) {
            return Err(DataError::ZeroSd(name.to_string()));
        }
        for r in &mut out.records {
            r.covariates[col] = (r.covariates[col] - mean) / sd;
        }
        let combined = match prev {
            Some(p) => Standardization { mean: p.mean + mean * p.sd, sd: p.sd * sd },
            None => Standardization { mean, sd },
        };
        out.schema.entries[idx].kind =
            CovariateKind::Continuous { standardization: Some(combined) };
    }
    let schema = out.schema.clone();
    Ok((out, schema))
}

/// Per-covariate descriptive summary.
#[derive(Debug, Clone, Serialize)]
pub enum CovariateSummary {
    Continuous { name: String, mean: f64, sd: f64 },
    Binary { name: String, count: usize, pct: f64 },
    Categorical { name: String, levels: Vec<(String, usize, f64)> },
}

/// Report-only dataset description: event counts per cause, censoring
/// fraction, covariate summaries, and warnings for degenerate shapes.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub censored: usize,
    pub censoring_fraction: f64,
    pub per_cause_events: Vec<(String, usize)>,
    pub covariates: Vec<CovariateSummary>,
    pub warnings: Vec<String>,
}

/// Summarize a dataset; never fails.
pub fn validate(d: &Dataset) -> ValidationReport {
    let n = d.records.len();
    let censored = d.records.iter().filter(|r| r.status == EventStatus::Censored).count();
    let per_cause_events: Vec<(String, usize)> = d
        .cause_labels
        .iter()
        .enumerate()
        .map(|(k, label)| (label.clone(), d.events_of(k)))
        .collect();
    let mut warnings = Vec::new();
    if n == 0 {
        warnings.push("dataset is empty".to_string());
    }
    for (label, count) in &per_cause_events {
        if *count == 0 && n > 0 {
            warnings.push(format!("cause {label} unobserved"));
        }
    }

    let mut covariates = Vec::new();
    let mut col = 0usize;
    for e in &d.schema.entries {
        match &e.kind {
            CovariateKind::Continuous { .. } => {
                let values: Vec<f64> = d.records.iter().map(|r| r.covariates[col]).collect();
                covariates.push(CovariateSummary::Continuous {
                    name: e.name.clone(),
                    mean: crate::stats::mean(&values),
                    sd: crate::stats::sample_sd(&values),
                });
                col += 1;
            }
            CovariateKind::Binary => {
                let count = d.records.iter().filter(|r| r.covariates[col] != 0.0).count();
                covariates.push(CovariateSummary::Binary {
                    name: e.name.clone(),
                    count,
                    pct: if n > 0 { 100.0 * count as f64 / n as f64 } else { 0.0 },
                });
                col += 1;
            }
            CovariateKind::Categorical { levels, reference } => {
                let width = levels.len() - 1;
                let mut counts: Vec<(String, usize, f64)> = Vec::new();
                let mut non_ref_total = 0usize;
                for (j, l) in e.non_reference_levels().iter().enumerate() {
                    let c = d.records.iter().filter(|r| r.covariates[col + j] != 0.0).count();
                    non_ref_total += c;
                    counts.push((
                        (*l).clone(),
                        c,
                        if n > 0 { 100.0 * c as f64 / n as f64 } else { 0.0 },
                    ));
                }
                let ref_count = n - non_ref_total;
                counts.insert(
                    0,
                    (
                        reference.clone(),
                        ref_count,
                        if n > 0 { 100.0 * ref_count as f64 / n as f64 } else { 0.0 },
                    ),
                );
                covariates.push(CovariateSummary::Categorical { name: e.name.clone(), levels: counts });
                col += width;
            }
        }
    }

    ValidationReport {
        n,
        censored,
        censoring_fraction: if n > 0 { censored as f64 / n as f64 } else { 0.0 },
        per_cause_events,
        covariates,
        warnings,
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(
            f,
            "censored = {} ({:.1}%)",
            self.censored,
            100.0 * self.censoring_fraction
        )?;
        for (label, count) in &self.per_cause_events {
            writeln!(f, "events[{label}] = {count}")?;
        }
        for c in &self.covariates {
            match c {
                CovariateSummary::Continuous { name, mean, sd } => {
                    writeln!(f, "{name}: mean {mean:.3} sd {sd:.3}")?
                }
                CovariateSummary::Binary { name, count, pct } => {
                    writeln!(f, "{name}: {count} ({pct:.1}%)")?
                }
                CovariateSummary::Categorical { name, levels } => {
                    writeln!(f, "{name}:")?;
                    for (l, c, p) in levels {
                        writeln!(f, "  {l}: {c} ({p:.1}%)")?;
                    }
                }
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Serialize a dataset to CSV (encoded columns, times in years). Values use
/// shortest-round-trip formatting, so `parse(write(d))` reproduces the
/// records exactly.
pub fn write_csv(d: &Dataset) -> String {
    let mut out = String::from("id,time,cause");
    for name in d.schema.encoded_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for r in &d.records {
        out.push_str(&r.id);
        out.push(',');
        out.push_str(&r.time.to_string());
        out.push(',');
        out.push_str(&r.status.code().to_string());
        for v in &r.covariates {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// The schema document matching [`write_csv`] output: all covariates exported
/// as plain numeric columns (indicator columns become binary entries).
pub fn encoded_document(d: &Dataset) -> SchemaDocument {
    let mut covariates = Vec::new();
    for e in &d.schema.entries {
        match &e.kind {
            CovariateKind::Continuous { .. } => covariates.push(DocCovariate {
                name: e.name.clone(),
                kind: "continuous".into(),
                standardize: None,
                levels: Vec::new(),
                reference: None,
            }),
            CovariateKind::Binary => covariates.push(DocCovariate {
                name: e.name.clone(),
                kind: "binary".into(),
                standardize: None,
                levels: Vec::new(),
                reference: None,
            }),
            CovariateKind::Categorical { .. } => {
                for l in e.non_reference_levels() {
                    covariates.push(DocCovariate {
                        name: format!("{}={}", e.name, l),
                        kind: "binary".into(),
                        standardize: None,
                        levels: Vec::new(),
                        reference: None,
                    });
                }
            }
        }
    }
    SchemaDocument {
        columns: ColumnMap {
            time_column: "time".into(),
            cause_column: "cause".into(),
            id_column: Some("id".into()),
            time_unit: TimeUnit::Years,
            cause_labels: d.cause_labels.clone(),
        },
        covariates,
    }
}
