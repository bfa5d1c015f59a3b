//! Pipeline configuration: defaults, an optional JSON file, then flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use slidemeta_core::keyframe::{
    ClusterParams, Strategy, DEFAULT_BRIGHTNESS_FLOOR, DEFAULT_DIFF_THRESHOLD, DEFAULT_HASH_THRESHOLD,
    DEFAULT_INTERVAL_S, DEFAULT_WINDOW,
};
use slidemeta_core::matching::{Category, Lexicon, DEFAULT_MATCH_THRESHOLD};
use slidemeta_core::ocr::{PreprocessStep, DEFAULT_MAX_INFLIGHT};

use crate::CliError;

pub const DEFAULT_CATALOG: &str = "catalog.jsonl";
pub const DEFAULT_DECODE_FPS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// The tesseract binary.
    Tesseract,
    /// Scripted text from a JSON fixture next to each video.
    Fixture,
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tesseract" => Ok(EngineKind::Tesseract),
            "fixture" => Ok(EngineKind::Fixture),
            other => Err(format!("unknown OCR engine {other:?} (expected tesseract or fixture)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecognizerKind {
    /// Capitalised-name heuristic seeded with the lexicon vocabulary.
    Rules,
    /// Professor names only from the prefix and "by" rules.
    None,
}

impl FromStr for RecognizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rules" => Ok(RecognizerKind::Rules),
            "none" => Ok(RecognizerKind::None),
            other => Err(format!("unknown recognizer {other:?} (expected rules or none)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    pub publisher: Option<PathBuf>,
    pub institute: Option<PathBuf>,
    pub department: Option<PathBuf>,
}

impl LexiconPaths {
    fn get(&self, category: Category) -> Option<&Path> {
        match category {
            Category::Publisher => self.publisher.as_deref(),
            Category::Institute => self.institute.as_deref(),
            Category::Department => self.department.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolPaths {
    pub ffmpeg: Option<PathBuf>,
    pub ffprobe: Option<PathBuf>,
    pub tesseract: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub interval_s: f64,
    pub diff_threshold: f64,
    pub window: usize,
    pub hash_threshold: u32,
    pub brightness_floor: f64,
    pub decode_fps: f64,
    pub engine: EngineKind,
    pub ocr_max_inflight: usize,
    pub preprocessing: Vec<String>,
    pub recognizer: RecognizerKind,
    pub lexicons: LexiconPaths,
    pub match_threshold: f64,
    pub catalog: PathBuf,
    pub workers: Option<usize>,
    /// Fixed `processed_at` stamp, for reproducible catalogs.
    pub processed_at: Option<DateTime<Utc>>,
    pub tools: ToolPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::PixelDiff,
            interval_s: DEFAULT_INTERVAL_S,
            diff_threshold: DEFAULT_DIFF_THRESHOLD,
            window: DEFAULT_WINDOW,
            hash_threshold: DEFAULT_HASH_THRESHOLD,
            brightness_floor: DEFAULT_BRIGHTNESS_FLOOR,
            decode_fps: DEFAULT_DECODE_FPS,
            engine: EngineKind::Tesseract,
            ocr_max_inflight: DEFAULT_MAX_INFLIGHT,
            preprocessing: Vec::new(),
            recognizer: RecognizerKind::Rules,
            lexicons: LexiconPaths::default(),
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            catalog: PathBuf::from(DEFAULT_CATALOG),
            workers: None,
            processed_at: None,
            tools: ToolPaths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.interval_s.is_finite() && self.interval_s > 0.0) {
            return bad(format!("interval_s must be positive, got {}", self.interval_s));
        }
        if !(self.diff_threshold.is_finite() && self.diff_threshold > 0.0) {
            return bad(format!("diff_threshold must be positive, got {}", self.diff_threshold));
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.hash_threshold > 64 {
            return bad(format!(
                "hash_threshold must lie in 0..=64, got {}",
                self.hash_threshold
            ));
        }
        if !(0.0..=255.0).contains(&self.brightness_floor) {
            return bad(format!(
                "brightness_floor must lie in [0, 255], got {}",
                self.brightness_floor
            ));
        }
        if !(self.decode_fps.is_finite() && self.decode_fps > 0.0 && self.decode_fps <= 120.0) {
            return bad(format!("decode_fps must lie in (0, 120], got {}", self.decode_fps));
        }
        if self.ocr_max_inflight == 0 {
            return bad("ocr_max_inflight must be at least 1".into());
        }
        if !(0.0..=100.0).contains(&self.match_threshold) {
            return bad(format!(
                "match_threshold must lie in [0, 100], got {}",
                self.match_threshold
            ));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        self.preprocess_steps()?;
        Ok(())
    }

    pub fn preprocess_steps(&self) -> Result<Vec<PreprocessStep>, CliError> {
        self.preprocessing
            .iter()
            .map(|s| s.parse::<PreprocessStep>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            window: self.window,
            hash_threshold: self.hash_threshold,
            brightness_floor: self.brightness_floor,
        }
    }

    pub fn load_lexicons(&self) -> Result<Vec<Lexicon>, CliError> {
        Category::ALL
            .iter()
            .map(|&c| match self.lexicons.get(c) {
                None => Ok(Lexicon::builtin(c)),
                Some(path) => {
                    let lex = Lexicon::load(path).map_err(|e| CliError::Config(e.to_string()))?;
                    if lex.category() != c {
                        return Err(CliError::Config(format!(
                            "{} holds a {} lexicon, expected {c}",
                            path.display(),
                            lex.category()
                        )));
                    }
                    Ok(lex)
                }
            })
            .collect()
    }

    /// The configured stamp, else `SOURCE_DATE_EPOCH`, else now (whole
    /// seconds).
    pub fn resolve_processed_at(&self) -> Result<DateTime<Utc>, CliError> {
        if let Some(t) = self.processed_at {
            return Ok(t);
        }
        if let Ok(raw) = std::env::var("SOURCE_DATE_EPOCH") {
            let secs: i64 = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("SOURCE_DATE_EPOCH is not an integer: {raw:?}")))?;
            return Utc
                .timestamp_opt(secs, 0)
                .single()
                .ok_or_else(|| CliError::Config(format!("SOURCE_DATE_EPOCH out of range: {secs}")));
        }
        let now = Utc::now();
        Ok(Utc.timestamp_opt(now.timestamp(), 0).single().unwrap_or(now))
    }
}
