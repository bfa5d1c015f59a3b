//! Clip manifests and trim commands.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST_HEADER: [&str; 5] = ["id", "url", "title", "start", "end"];

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("manifest header must be `id,url,title,start,end`, found `{0}`")]
    BadHeader(String),
    #[error("manifest is empty; expected a header row")]
    MissingHeader,
    #[error("row {row}: duplicate id {id:?}")]
    DuplicateId { row: usize, id: String },
    #[error("row {row}: end {end} is not after start {start}")]
    EndNotAfterStart { row: usize, start: String, end: String },
    #[error("row {row}: malformed {field} time {value:?}")]
    MalformedTime {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
}

impl ManifestError {
    /// 1-based data row (the header is row 0), when the error concerns one.
    pub fn row(&self) -> Option<usize> {
        match self {
            ManifestError::DuplicateId { row, .. }
            | ManifestError::EndNotAfterStart { row, .. }
            | ManifestError::MalformedTime { row, .. }
            | ManifestError::Malformed { row, .. } => Some(*row),
            ManifestError::BadHeader(_) | ManifestError::MissingHeader => None,
        }
    }
}

/// A clip time as written in the manifest, kept verbatim for the trim
/// command, together with its value in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub raw: String,
    pub seconds: u64,
}

impl TimeSpec {
    /// Accepts integer seconds or `HH:MM:SS` (minutes and seconds below 60).
    pub fn parse(text: &str) -> Option<Self> {
        let raw = text.trim();
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        let seconds = if digits(raw) {
            raw.parse().ok()?
        } else {
            let parts: Vec<&str> = raw.split(':').collect();
            let [h, m, s] = parts.as_slice() else { return None };
            if !(digits(h) && digits(m) && digits(s)) || m.len() != 2 || s.len() != 2 {
                return None;
            }
            let (h, m, s): (u64, u64, u64) = (h.parse().ok()?, m.parse().ok()?, s.parse().ok()?);
            if m >= 60 || s >= 60 {
                return None;
            }
            h.checked_mul(3600)?.checked_add(m * 60 + s)?
        };
        Some(Self {
            raw: raw.to_string(),
            seconds,
        })
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub url_or_path: String,
    pub title: String,
    pub start_time: TimeSpec,
    pub end_time: TimeSpec,
}

impl ManifestEntry {
    pub fn duration_s(&self) -> u64 {
        self.end_time.seconds - self.start_time.seconds
    }

    pub fn is_remote(&self) -> bool {
        is_remote(&self.url_or_path)
    }
}

pub fn is_remote(location: &str) -> bool {
    let lower = location.trim().to_ascii_lowercase();
    ["http://", "https://", "ftp://"].iter().any(|p| lower.starts_with(p))
}

/// Parses and validates a manifest. The first failing row is reported.
pub fn parse_manifest(csv_text: &str) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(ManifestError::MissingHeader),
        Some(Err(e)) => return Err(ManifestError::BadHeader(e.to_string())),
        Some(Ok(h)) => h,
    };
    let header_fields: Vec<String> = header
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let f = if i == 0 { f.trim_start_matches('\u{feff}') } else { f };
            f.trim().to_ascii_lowercase()
        })
        .collect();
    if header_fields != MANIFEST_HEADER {
        return Err(ManifestError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in rows.enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ManifestError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != MANIFEST_HEADER.len() {
            return Err(ManifestError::Malformed {
                row,
                message: format!("expected {} fields, found {}", MANIFEST_HEADER.len(), record.len()),
            });
        }
        let id = record[0].trim().to_string();
        if id.is_empty() {
            return Err(ManifestError::Malformed {
                row,
                message: "empty id".into(),
            });
        }
        let url = record[1].trim().to_string();
        if url.is_empty() {
            return Err(ManifestError::Malformed {
                row,
                message: "empty url".into(),
            });
        }
        let time = |field: &'static str, value: &str| {
            TimeSpec::parse(value).ok_or_else(|| ManifestError::MalformedTime {
                row,
                field,
                value: value.to_string(),
            })
        };
        let start_time = time("start", &record[3])?;
        let end_time = time("end", &record[4])?;
        if end_time.seconds <= start_time.seconds {
            return Err(ManifestError::EndNotAfterStart {
                row,
                start: start_time.raw,
                end: end_time.raw,
            });
        }
        if !seen.insert(id.clone()) {
            return Err(ManifestError::DuplicateId { row, id });
        }
        entries.push(ManifestEntry {
            id,
            url_or_path: url,
            title: record[2].trim().to_string(),
            start_time,
            end_time,
        });
    }
    Ok(entries)
}

#[derive(Debug, Error)]
pub enum TrimError {
    #[error("trim input {0} does not exist")]
    MissingInput(PathBuf),
}

/// Output path of a trimmed clip: `<output_dir>/<id>-TRIM.<ext>`, the
/// extension taken from the input (default `mp4`).
pub fn trim_output_path(entry: &ManifestEntry, input_path: &Path, output_dir: &Path) -> PathBuf {
    let ext = input_path
        .extension()
        .and_then(|e| e.to_str())
        .filter(|e| !e.is_empty())
        .unwrap_or("mp4");
    output_dir.join(format!("{}-TRIM.{}", entry.id, ext))
}

/// Arguments for the media tool that cut a clip without re-encoding.
/// Times are passed through exactly as written in the manifest.
pub fn trim_args(entry: &ManifestEntry, input_path: &Path, output_dir: &Path) -> Result<Vec<String>, TrimError> {
    if !input_path.exists() {
        return Err(TrimError::MissingInput(input_path.to_path_buf()));
    }
    Ok(vec![
        "-i".into(),
        input_path.to_string_lossy().into_owned(),
        "-ss".into(),
        entry.start_time.raw.clone(),
        "-to".into(),
        entry.end_time.raw.clone(),
        "-c".into(),
        "copy".into(),
        trim_output_path(entry, input_path, output_dir)
            .to_string_lossy()
            .into_owned(),
    ])
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("no fetcher configured for remote source {0}")]
    NotConfigured(String),
    #[error("fetching {url} failed: {message}")]
    Failed { url: String, message: String },
    #[error("local source {0} does not exist")]
    MissingLocal(PathBuf),
}

/// Turns a remote URL into a local file.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<PathBuf, FetchError>;

    /// Concurrent fetches this implementation tolerates.
    fn max_concurrency(&self) -> usize {
        1
    }
}

/// Refuses every remote source.
#[derive(Debug, Default, Clone, Copy)]
pub struct UnconfiguredFetcher;

impl Fetcher for UnconfiguredFetcher {
    fn fetch(&self, url: &str) -> Result<PathBuf, FetchError> {
        Err(FetchError::NotConfigured(url.to_string()))
    }
}

/// Serves URLs from a fixed URL-to-file table.
#[derive(Debug, Default, Clone)]
pub struct MapFetcher {
    files: BTreeMap<String, PathBuf>,
}

impl MapFetcher {
    pub fn new(files: impl IntoIterator<Item = (String, PathBuf)>) -> Self {
        Self {
            files: files.into_iter().collect(),
        }
    }
}

impl Fetcher for MapFetcher {
    fn fetch(&self, url: &str) -> Result<PathBuf, FetchError> {
        self.files.get(url).cloned().ok_or_else(|| FetchError::Failed {
            url: url.to_string(),
            message: "no file mapped for this URL".into(),
        })
    }

    fn max_concurrency(&self) -> usize {
        usize::MAX
    }
}

/// Local paths are returned as-is (relative ones joined to `base_dir`);
/// remote URLs go to `fetcher`.
pub fn resolve_source(entry: &ManifestEntry, base_dir: &Path, fetcher: &dyn Fetcher) -> Result<PathBuf, FetchError> {
    if entry.is_remote() {
        return fetcher.fetch(&entry.url_or_path);
    }
    let raw = entry.url_or_path.strip_prefix("file://").unwrap_or(&entry.url_or_path);
    let path = Path::new(raw);
    let path = if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    };
    if path.exists() {
        Ok(path)
    } else {
        Err(FetchError::MissingLocal(path))
    }
}
