//! Persistent catalog of processed videos.
//!
//! Stored as JSON lines, one [`VideoRecord`] per line, ordered by
//! `video_id`. Every upsert rewrites the file through a temporary sibling
//! and an atomic rename, so a failed write leaves the previous catalog in
//! place.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{AttributeName, AttributeSet};
use crate::keyframe::Strategy;
use crate::matching::{fold, normalize_text, ratio};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid record: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unsupported catalog schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("invalid record {video_id:?}: {message}")]
    InvalidRecord { video_id: String, message: String },
    #[error("invalid catalog document: {0}")]
    Import(#[from] serde_json::Error),
    #[error("CSV export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// One catalog row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub schema_version: u32,
    pub video_id: String,
    pub source: String,
    pub duration_s: f64,
    pub processed_at: DateTime<Utc>,
    pub attributes: AttributeSet,
    pub keyframe_strategy: Strategy,
    pub engine_id: String,
    pub keyframes_used: Vec<u64>,
}

impl VideoRecord {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |message: &str| {
            Err(CatalogError::InvalidRecord {
                video_id: self.video_id.clone(),
                message: message.to_string(),
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(CatalogError::SchemaVersion {
                found: self.schema_version,
            });
        }
        if self.video_id.trim().is_empty() {
            return fail("empty video_id");
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return fail("duration must be finite and non-negative");
        }
        let any_present = self.attributes.present_count() > 0;
        if any_present == self.keyframes_used.is_empty() {
            return fail("keyframes_used must be non-empty exactly when an attribute is present");
        }
        for name in AttributeName::ALL {
            if let Some(v) = self.attributes.get(name) {
                if v.value.trim().is_empty() {
                    return fail("present attribute with empty value");
                }
                if !self.keyframes_used.contains(&v.source_frame) {
                    return fail("attribute source frame not listed in keyframes_used");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        })
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "video_id",
    "source",
    "publisher",
    "institute",
    "department",
    "professor",
    "publisher_score",
    "institute_score",
    "department_score",
    "professor_score",
    "strategy",
    "engine",
];

/// Records keyed by `video_id`, optionally backed by a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    path: Option<PathBuf>,
    records: BTreeMap<String, VideoRecord>,
}

impl Catalog {
    /// An unpersisted catalog.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the catalog at `path`; a missing file is an empty catalog.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let path = path.into();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(source) => return Err(CatalogError::Io { path, source }),
        };
        let mut records = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: VideoRecord = serde_json::from_str(line).map_err(|e| CatalogError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            record.validate()?;
            records.insert(record.video_id.clone(), record);
        }
        Ok(Self {
            path: Some(path),
            records,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoRecord> {
        self.records.get(video_id)
    }

    /// Records in `video_id` order.
    pub fn records(&self) -> impl Iterator<Item = &VideoRecord> {
        self.records.values()
    }

    /// Inserts or replaces by `video_id`, persisting before returning. On a
    /// failed write both the file and the in-memory state are unchanged.
    pub fn upsert(&mut self, record: VideoRecord) -> Result<(), CatalogError> {
        record.validate()?;
        let id = record.video_id.clone();
        let previous = self.records.insert(id.clone(), record);
        if let Err(e) = self.persist() {
            log::warn!("catalog write failed, keeping previous state: {e}");
            match previous {
                Some(old) => self.records.insert(id, old),
                None => self.records.remove(&id),
            };
            return Err(e);
        }
        log::debug!("upserted {id}");
        Ok(())
    }

    /// The JSON-lines document as written to disk.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in self.records.values() {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    fn persist(&self) -> Result<(), CatalogError> {
        let Some(path) = &self.path else { return Ok(()) };
        let io = |source| CatalogError::Io {
            path: path.clone(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut tmp = tempfile::Builder::new()
            .prefix(".catalog")
            .suffix(".tmp")
            .tempfile_in(dir)
            .map_err(io)?;
        tmp.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    /// Records whose `attribute` equals `value` case-insensitively, or, with
    /// a fuzzy threshold, whose normalised value has a ratio of at least
    /// that threshold. Ordered by `video_id`.
    pub fn query(&self, attribute: AttributeName, value: &str, fuzzy_threshold: Option<f64>) -> Vec<&VideoRecord> {
        let wanted = fold(value);
        let wanted_norm = normalize_text(value);
        self.records
            .values()
            .filter(|r| {
                r.attributes.get(attribute).is_some_and(|v| match fuzzy_threshold {
                    None => fold(&v.value) == wanted,
                    Some(t) => fold(&v.value) == wanted || ratio(&normalize_text(&v.value), &wanted_norm) >= t,
                })
            })
            .collect()
    }

    pub fn export(&self, format: ExportFormat) -> Result<String, CatalogError> {
        match format {
            ExportFormat::Json => {
                let records: Vec<&VideoRecord> = self.records.values().collect();
                let mut text = serde_json::to_string_pretty(&records)?;
                text.push('\n');
                Ok(text)
            }
            ExportFormat::Csv => self.export_csv(),
        }
    }

    fn export_csv(&self) -> Result<String, CatalogError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in self.records.values() {
            let value = |n| r.attributes.get(n).map(|v| v.value.clone()).unwrap_or_default();
            let score = |n| {
                r.attributes
                    .get(n)
                    .map(|v| format!("{:.2}", v.score))
                    .unwrap_or_default()
            };
            let mut row = vec![r.video_id.clone(), r.source.clone()];
            row.extend(AttributeName::ALL.map(value));
            row.extend(AttributeName::ALL.map(score));
            row.push(r.keyframe_strategy.to_string());
            row.push(r.engine_id.clone());
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Rebuilds an in-memory catalog from a JSON export.
    pub fn import_json(text: &str) -> Result<Self, CatalogError> {
        let records: Vec<VideoRecord> = serde_json::from_str(text)?;
        let mut catalog = Self::in_memory();
        for r in records {
            r.validate()?;
            catalog.records.insert(r.video_id.clone(), r);
        }
        Ok(catalog)
    }

    /// Attaches a backing file and writes the current contents to it.
    pub fn save_as(&mut self, path: impl Into<PathBuf>) -> Result<(), CatalogError> {
        self.path = Some(path.into());
        self.persist()
    }
}
