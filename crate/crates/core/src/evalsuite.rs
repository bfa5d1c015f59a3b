//! Accuracy of catalog predictions against labelled ground truth.
//!
//! Every ground-truth video counts toward every attribute. A prediction is
//! correct when both sides are absent or both are present and agree under
//! the scoring mode.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::VideoRecord;
use crate::extraction::AttributeName;
use crate::keyframe::Strategy;
use crate::matching::{fold, normalize_text, ratio};

pub const GROUND_TRUTH_HEADER: [&str; 5] = ["video_id", "publisher", "institute", "department", "professor"];
pub const DEFAULT_FUZZY_THRESHOLD: f64 = 90.0;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ground truth header must be `video_id,publisher,institute,department,professor`, found `{0}`")]
    BadHeader(String),
    #[error("ground truth is empty; expected a header row")]
    MissingHeader,
    #[error("ground truth row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("ground truth row {row}: duplicate video_id {video_id:?}")]
    DuplicateVideo { row: usize, video_id: String },
    #[error("no prediction for ground-truth video {video_id:?} under {config}")]
    UnknownVideo { video_id: String, config: String },
    #[error("fuzzy threshold must lie in [0, 100], got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub video_id: String,
    pub publisher: Option<String>,
    pub institute: Option<String>,
    pub department: Option<String>,
    pub professor: Option<String>,
}

impl GroundTruthRecord {
    pub fn get(&self, name: AttributeName) -> Option<&str> {
        match name {
            AttributeName::Publisher => self.publisher.as_deref(),
            AttributeName::Institute => self.institute.as_deref(),
            AttributeName::Department => self.department.as_deref(),
            AttributeName::Professor => self.professor.as_deref(),
        }
    }
}

/// Parses ground-truth CSV. Blank cells mean the attribute is absent.
pub fn parse_ground_truth(csv_text: &str) -> Result<Vec<GroundTruthRecord>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(EvalError::MissingHeader),
        Some(Err(e)) => return Err(EvalError::BadHeader(e.to_string())),
        Some(Ok(h)) => h,
    };
    let fields: Vec<String> = header
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let f = if i == 0 { f.trim_start_matches('\u{feff}') } else { f };
            f.trim().to_ascii_lowercase()
        })
        .collect();
    if fields != GROUND_TRUTH_HEADER {
        return Err(EvalError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rows.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| EvalError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != GROUND_TRUTH_HEADER.len() {
            return Err(EvalError::Malformed {
                row,
                message: format!("expected {} fields, found {}", GROUND_TRUTH_HEADER.len(), record.len()),
            });
        }
        let video_id = record[0].trim().to_string();
        if video_id.is_empty() {
            return Err(EvalError::Malformed {
                row,
                message: "empty video_id".into(),
            });
        }
        if !seen.insert(video_id.clone()) {
            return Err(EvalError::DuplicateVideo { row, video_id });
        }
        let cell = |i: usize| Some(record[i].trim().to_string()).filter(|s| !s.is_empty());
        out.push(GroundTruthRecord {
            video_id,
            publisher: cell(1),
            institute: cell(2),
            department: cell(3),
            professor: cell(4),
        });
    }
    Ok(out)
}

pub fn write_ground_truth(records: &[GroundTruthRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(GROUND_TRUTH_HEADER).expect("write to Vec");
    for r in records {
        let mut row = vec![r.video_id.as_str()];
        row.extend(AttributeName::ALL.map(|n| r.get(n).unwrap_or("")));
        w.write_record(row).expect("write to Vec");
    }
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScoringMode {
    /// Case-folded equality after collapsing whitespace.
    Exact,
    /// Ratio of the punctuation-normalised strings at or above `threshold`.
    Fuzzy { threshold: f64 },
}

impl ScoringMode {
    pub fn fuzzy_default() -> Self {
        ScoringMode::Fuzzy {
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }

    pub fn agrees(&self, predicted: &str, truth: &str) -> bool {
        let exact = collapse(&fold(predicted)) == collapse(&fold(truth));
        match *self {
            ScoringMode::Exact => exact,
            ScoringMode::Fuzzy { threshold } => {
                exact || ratio(&normalize_text(predicted), &normalize_text(truth)) >= threshold
            }
        }
    }
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringMode::Exact => f.write_str("exact"),
            ScoringMode::Fuzzy { threshold } => write!(f, "fuzzy({threshold})"),
        }
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A (keyframe strategy, OCR engine) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfigKey {
    pub strategy: Strategy,
    pub engine_id: String,
}

impl ConfigKey {
    fn sort_key(&self) -> (&str, &str) {
        (self.strategy.as_str(), &self.engine_id)
    }
}

impl fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.engine_id, self.strategy)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub correct: usize,
    pub total: usize,
}

impl Cell {
    /// Percentage correct; an empty cell reports 0.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub config: ConfigKey,
    pub cells: BTreeMap<AttributeName, Cell>,
}

impl ConfigResult {
    pub fn cell(&self, name: AttributeName) -> Cell {
        self.cells.get(&name).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub config: ConfigKey,
    pub video_id: String,
    pub attribute: AttributeName,
    pub predicted: Option<String>,
    pub expected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: ScoringMode,
    pub configs: Vec<ConfigResult>,
    pub mismatches: Vec<Mismatch>,
}

/// Scores predictions grouped by configuration. Each configuration must
/// hold a record for every ground-truth video; extra predictions are ignored.
pub fn score<'a>(
    predictions: impl IntoIterator<Item = &'a VideoRecord>,
    truth: &[GroundTruthRecord],
    mode: ScoringMode,
) -> Result<EvalReport, EvalError> {
    if let ScoringMode::Fuzzy { threshold } = mode {
        if !(0.0..=100.0).contains(&threshold) {
            return Err(EvalError::InvalidThreshold(threshold));
        }
    }
    let mut groups: HashMap<ConfigKey, HashMap<&str, &VideoRecord>> = HashMap::new();
    for r in predictions {
        let key = ConfigKey {
            strategy: r.keyframe_strategy,
            engine_id: r.engine_id.clone(),
        };
        groups.entry(key).or_default().insert(r.video_id.as_str(), r);
    }
    let mut keys: Vec<ConfigKey> = groups.keys().cloned().collect();
    keys.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut truth_sorted: Vec<&GroundTruthRecord> = truth.iter().collect();
    truth_sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));

    let mut configs = Vec::new();
    let mut mismatches = Vec::new();
    for key in keys {
        let by_id = &groups[&key];
        let mut cells: BTreeMap<AttributeName, Cell> =
            AttributeName::ALL.iter().map(|&n| (n, Cell::default())).collect();
        for t in &truth_sorted {
            let record = by_id.get(t.video_id.as_str()).ok_or_else(|| EvalError::UnknownVideo {
                video_id: t.video_id.clone(),
                config: key.to_string(),
            })?;
            for name in AttributeName::ALL {
                let predicted = record.attributes.get(name).map(|v| v.value.as_str());
                let expected = t.get(name);
                let ok = match (predicted, expected) {
                    (None, None) => true,
                    (Some(p), Some(e)) => mode.agrees(p, e),
                    _ => false,
                };
                let cell = cells.get_mut(&name).expect("all attributes present");
                cell.total += 1;
                if ok {
                    cell.correct += 1;
                } else {
                    mismatches.push(Mismatch {
                        config: key.clone(),
                        video_id: t.video_id.clone(),
                        attribute: name,
                        predicted: predicted.map(str::to_string),
                        expected: expected.map(str::to_string),
                    });
                }
            }
        }
        configs.push(ConfigResult { config: key, cells });
    }
    Ok(EvalReport {
        mode,
        configs,
        mismatches,
    })
}

/// Table with one row per attribute and one column per configuration.
/// An empty report renders only the header.
pub fn render_text(report: &EvalReport) -> String {
    let mut header = vec!["Category".to_string()];
    header.extend(report.configs.iter().map(|c| c.config.to_string()));
    let mut rows = vec![header];
    if !report.configs.is_empty() {
        for name in AttributeName::ALL {
            let mut row = vec![name.label().to_string()];
            row.extend(report.configs.iter().map(|c| format!("{:.2}", c.cell(name).accuracy())));
            rows.push(row);
        }
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str(" | ");
            }
            if i == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[i]);
            } else {
                let _ = write!(line, "{cell:>w$}", w = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn render_csv(report: &EvalReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["Category".to_string()];
    header.extend(report.configs.iter().map(|c| c.config.to_string()));
    w.write_record(&header).expect("write to Vec");
    if !report.configs.is_empty() {
        for name in AttributeName::ALL {
            let mut row = vec![name.label().to_string()];
            row.extend(report.configs.iter().map(|c| format!("{:.2}", c.cell(name).accuracy())));
            w.write_record(&row).expect("write to Vec");
        }
    }
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
}
