//! Text recognition boundary.
//!
//! An [`OcrEngine`] turns a frame into positioned words; [`recognize`] runs
//! the optional preprocessing chain, calls the engine and groups the words
//! into top-to-bottom [`OcrLine`]s. Two engines ship here: a deterministic
//! [`FixtureEngine`] and [`TesseractEngine`], which shells out to the
//! `tesseract` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{self, FrameBuffer, FrameError};

pub const DEFAULT_MAX_INFLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum OcrError {
    /// The engine cannot run at all (binary missing, fixture unreadable).
    #[error("OCR engine unavailable: {0}")]
    Unavailable(String),
    /// The engine ran but failed on this frame.
    #[error("OCR engine failed: {0}")]
    Failed(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

impl OcrError {
    pub fn is_unavailable(&self) -> bool {
        matches!(self, OcrError::Unavailable(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub left: u32,
    pub top: u32,
    pub width: u32,
    pub height: u32,
}

impl BBox {
    pub fn right(&self) -> u32 {
        self.left + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.top + self.height
    }

    /// Twice the vertical centre, kept integral.
    fn center2(&self) -> u64 {
        2 * self.top as u64 + self.height as u64
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let left = self.left.min(other.left);
        let top = self.top.min(other.top);
        BBox {
            left,
            top,
            width: self.right().max(other.right()) - left,
            height: self.bottom().max(other.bottom()) - top,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrWord {
    pub text: String,
    pub bbox: BBox,
    /// Normalised to `[0, 100]`.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrLine {
    pub words: Vec<OcrWord>,
    pub text: String,
    pub bbox: BBox,
    pub line_number: usize,
}

impl OcrLine {
    fn from_words(words: Vec<OcrWord>, line_number: usize) -> Self {
        let text = words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
        let bbox = words.iter().skip(1).fold(words[0].bbox, |acc, w| acc.union(&w.bbox));
        Self {
            words,
            text,
            bbox,
            line_number,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub lines: Vec<OcrLine>,
    pub engine_id: String,
    pub frame_index: u64,
    pub preprocessing: Vec<String>,
}

impl OcrResult {
    pub fn empty(engine_id: &str, frame_index: u64) -> Self {
        Self {
            lines: Vec::new(),
            engine_id: engine_id.to_string(),
            frame_index,
            preprocessing: Vec::new(),
        }
    }

    /// Builds a result directly from line texts, one word per
    /// whitespace-separated token. Boxes are laid out on a simple grid.
    pub fn from_texts<S: AsRef<str>>(engine_id: &str, frame_index: u64, lines: &[S]) -> Self {
        let words = layout_lines(lines, 1280, 720);
        Self {
            lines: group_lines(&words),
            engine_id: engine_id.to_string(),
            frame_index,
            preprocessing: Vec::new(),
        }
    }

    pub fn line_texts(&self) -> Vec<&str> {
        self.lines.iter().map(|l| l.text.as_str()).collect()
    }
}

/// One preprocessing transform applied before recognition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PreprocessStep {
    Binarize,
    GaussianBlur { sigma: f64 },
    EdgeMap,
}

impl fmt::Display for PreprocessStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessStep::Binarize => f.write_str("binarize"),
            PreprocessStep::GaussianBlur { sigma } => write!(f, "gaussian_blur:{sigma}"),
            PreprocessStep::EdgeMap => f.write_str("edge_map"),
        }
    }
}

impl FromStr for PreprocessStep {
    type Err = String;

    /// Accepts `binarize`, `edge_map` and `gaussian_blur:<sigma>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.split_once(':') {
            None if norm == "binarize" => Ok(PreprocessStep::Binarize),
            None if norm == "edge_map" => Ok(PreprocessStep::EdgeMap),
            None if norm == "gaussian_blur" => Err("gaussian_blur needs a sigma, e.g. gaussian_blur:2.0".into()),
            Some(("gaussian_blur", sigma)) => {
                let sigma: f64 = sigma.parse().map_err(|_| format!("invalid gaussian sigma {sigma:?}"))?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(format!("gaussian sigma must be positive (got {sigma})"));
                }
                Ok(PreprocessStep::GaussianBlur { sigma })
            }
            _ => Err(format!(
                "unknown preprocessing step {s:?} (expected binarize, gaussian_blur:<sigma> or edge_map)"
            )),
        }
    }
}

/// Applies `steps` in order. An empty chain returns the input unchanged.
pub fn preprocess(f: &FrameBuffer, steps: &[PreprocessStep]) -> Result<FrameBuffer, FrameError> {
    let mut out = f.clone();
    for step in steps {
        out = match step {
            PreprocessStep::Binarize => frames::binarize(&out),
            PreprocessStep::GaussianBlur { sigma } => frames::gaussian_blur(&out, *sigma)?,
            PreprocessStep::EdgeMap => frames::edge_map(&out),
        };
    }
    Ok(out)
}

/// A text recognizer producing positioned words for one frame.
pub trait OcrEngine: Send + Sync {
    fn id(&self) -> &str;

    fn recognize_words(&self, frame: &FrameBuffer) -> Result<Vec<OcrWord>, OcrError>;

    /// Upper bound on concurrent calls worth issuing, if the engine has one.
    fn max_inflight(&self) -> Option<usize> {
        None
    }
}

/// Preprocesses `f`, runs `engine` and groups the words into lines.
pub fn recognize(engine: &dyn OcrEngine, f: &FrameBuffer, steps: &[PreprocessStep]) -> Result<OcrResult, OcrError> {
    let prepared = preprocess(f, steps)?;
    let words = engine.recognize_words(&prepared)?;
    Ok(OcrResult {
        lines: group_lines(&words),
        engine_id: engine.id().to_string(),
        frame_index: f.frame_index,
        preprocessing: steps.iter().map(ToString::to_string).collect(),
    })
}

const TSV_COLUMNS: usize = 12;
const TSV_HEADER: &str =
    "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext";
const WORD_LEVEL: &str = "5";

/// Parses tesseract's TSV output. Word-level rows (level 5) with a
/// non-negative confidence and non-blank text become words; everything else
/// is structural and dropped.
pub fn parse_engine_tsv(raw: &str) -> Result<Vec<OcrWord>, OcrError> {
    let mut words = Vec::new();
    for (i, row) in raw.lines().enumerate() {
        let line = i + 1;
        let row = row.strip_suffix('\r').unwrap_or(row);
        if row.is_empty() || (i == 0 && row.starts_with("level")) {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != TSV_COLUMNS {
            return Err(OcrError::Parse {
                line,
                message: format!("expected {TSV_COLUMNS} columns, found {}", cols.len()),
            });
        }
        if cols[0] != WORD_LEVEL {
            continue;
        }
        let num = |idx: usize, name: &str| -> Result<u32, OcrError> {
            cols[idx].trim().parse::<u32>().map_err(|_| OcrError::Parse {
                line,
                message: format!("invalid {name} {:?}", cols[idx]),
            })
        };
        let conf: f64 = cols[10].trim().parse().map_err(|_| OcrError::Parse {
            line,
            message: format!("invalid conf {:?}", cols[10]),
        })?;
        let text = cols[11].trim();
        if conf < 0.0 || text.is_empty() {
            continue;
        }
        let (width, height) = (num(8, "width")?, num(9, "height")?);
        if width == 0 || height == 0 {
            continue;
        }
        words.push(OcrWord {
            text: text.to_string(),
            bbox: BBox {
                left: num(6, "left")?,
                top: num(7, "top")?,
                width,
                height,
            },
            confidence: conf.min(100.0),
        });
    }
    Ok(words)
}

/// Writes words in the same TSV dialect, one line per word, so that
/// [`parse_engine_tsv`] reads them back unchanged.
pub fn serialize_engine_tsv(words: &[OcrWord]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for (i, w) in words.iter().enumerate() {
        out.push_str(&format!(
            "{WORD_LEVEL}\t1\t1\t1\t{}\t1\t{}\t{}\t{}\t{}\t{}\t{}\n",
            i + 1,
            w.bbox.left,
            w.bbox.top,
            w.bbox.width,
            w.bbox.height,
            w.confidence,
            w.text
        ));
    }
    out
}

fn median_height(words: &[OcrWord]) -> f64 {
    let mut hs: Vec<u32> = words.iter().map(|w| w.bbox.height).collect();
    hs.sort_unstable();
    let n = hs.len();
    if n % 2 == 1 {
        hs[n / 2] as f64
    } else {
        (hs[n / 2 - 1] as f64 + hs[n / 2] as f64) / 2.0
    }
}

fn word_order(a: &OcrWord, b: &OcrWord) -> std::cmp::Ordering {
    (
        a.bbox.center2(),
        a.bbox.left,
        a.bbox.top,
        a.bbox.width,
        a.bbox.height,
        &a.text,
    )
        .cmp(&(
            b.bbox.center2(),
            b.bbox.left,
            b.bbox.top,
            b.bbox.width,
            b.bbox.height,
            &b.text,
        ))
        .then(a.confidence.total_cmp(&b.confidence))
}

/// Groups words into lines: a word joins a line when its vertical centre is
/// less than half the median word height from the line's first word. Words
/// are ordered left to right, lines top to bottom. The result does not
/// depend on input order.
pub fn group_lines(words: &[OcrWord]) -> Vec<OcrLine> {
    if words.is_empty() {
        return Vec::new();
    }
    // Comparing doubled centres against the full median keeps this exact.
    let limit = median_height(words);
    let mut sorted: Vec<&OcrWord> = words.iter().collect();
    sorted.sort_by(|a, b| word_order(a, b));

    let mut groups: Vec<Vec<OcrWord>> = Vec::new();
    let mut anchor = 0u64;
    for w in sorted {
        let c = w.bbox.center2();
        match groups.last_mut() {
            Some(group) if ((c - anchor) as f64) < limit => group.push(w.clone()),
            _ => {
                anchor = c;
                groups.push(vec![w.clone()]);
            }
        }
    }
    for group in &mut groups {
        group.sort_by(|a, b| a.bbox.left.cmp(&b.bbox.left).then_with(|| word_order(a, b)));
    }
    let mut lines: Vec<OcrLine> = groups.into_iter().map(|g| OcrLine::from_words(g, 0)).collect();
    lines.sort_by(|a, b| (a.bbox.top, a.bbox.left, &a.text).cmp(&(b.bbox.top, b.bbox.left, &b.text)));
    for (i, line) in lines.iter_mut().enumerate() {
        line.line_number = i;
    }
    lines
}

/// Places text lines on a grid that fits inside a `width`x`height` frame.
fn layout_lines<S: AsRef<str>>(lines: &[S], width: u32, height: u32) -> Vec<OcrWord> {
    let rows = lines.len() as u32 + 1;
    let longest = lines
        .iter()
        .map(|l| l.as_ref().chars().count() as u32)
        .max()
        .unwrap_or(0);
    let line_h = (height / rows.max(1)).max(2);
    let char_w = (width / (longest + 2).max(1)).max(1);
    let word_h = (line_h * 2 / 3).max(1);
    let mut words = Vec::new();
    for (row, line) in lines.iter().enumerate() {
        let top = (line_h / 2 + row as u32 * line_h).min(height.saturating_sub(word_h));
        let mut col = 1u32;
        for token in line.as_ref().split_whitespace() {
            let len = token.chars().count() as u32;
            let left = (col * char_w).min(width - 1);
            let w = (len * char_w).min(width - left).max(1);
            words.push(OcrWord {
                text: token.to_string(),
                bbox: BBox {
                    left,
                    top,
                    width: w,
                    height: word_h.min(height - top).max(1),
                },
                confidence: 95.0,
            });
            col += len + 1;
        }
    }
    words
}

/// Scripted engine: a lookup from frame index to the lines on that frame.
/// Frames without an entry read as blank.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureEngine {
    #[serde(default = "FixtureEngine::default_id")]
    pub engine_id: String,
    pub frames: BTreeMap<u64, Vec<String>>,
}

impl FixtureEngine {
    fn default_id() -> String {
        "fixture".to_string()
    }

    pub fn new(frames: BTreeMap<u64, Vec<String>>) -> Self {
        Self {
            engine_id: Self::default_id(),
            frames,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, OcrError> {
        serde_json::from_str(text).map_err(|e| OcrError::Unavailable(format!("invalid OCR fixture: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, OcrError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OcrError::Unavailable(format!("cannot read OCR fixture {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }
}

impl OcrEngine for FixtureEngine {
    fn id(&self) -> &str {
        &self.engine_id
    }

    fn recognize_words(&self, frame: &FrameBuffer) -> Result<Vec<OcrWord>, OcrError> {
        Ok(self
            .frames
            .get(&frame.frame_index)
            .map(|lines| layout_lines(lines, frame.width(), frame.height()))
            .unwrap_or_default())
    }
}

/// Counting semaphore bounding concurrent subprocesses.
#[derive(Debug)]
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            available: Mutex::new(permits.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

/// Adapter for the `tesseract` command-line engine.
///
/// Each call writes the frame to a temporary PNG and runs
/// `tesseract <image.png> stdout --psm 3 tsv`.
#[derive(Debug)]
pub struct TesseractEngine {
    binary: PathBuf,
    version: String,
    max_inflight: usize,
    slots: Semaphore,
}

impl TesseractEngine {
    /// Probes `<binary> --version`; a missing or broken binary is reported
    /// as [`OcrError::Unavailable`].
    pub fn new(binary: impl Into<PathBuf>, max_inflight: usize) -> Result<Self, OcrError> {
        let binary = binary.into();
        let output = Command::new(&binary)
            .arg("--version")
            .output()
            .map_err(|e| OcrError::Unavailable(format!("cannot run {}: {e}", binary.display())))?;
        if !output.status.success() {
            return Err(OcrError::Unavailable(format!(
                "{} --version exited with {}",
                binary.display(),
                output.status
            )));
        }
        // Older releases print the banner on stderr.
        let banner = if output.stdout.is_empty() {
            output.stderr
        } else {
            output.stdout
        };
        let version = String::from_utf8_lossy(&banner)
            .lines()
            .next()
            .unwrap_or("tesseract")
            .trim()
            .to_string();
        let max_inflight = max_inflight.max(1);
        Ok(Self {
            binary,
            version,
            max_inflight,
            slots: Semaphore::new(max_inflight),
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }
}

impl OcrEngine for TesseractEngine {
    fn id(&self) -> &str {
        "tesseract"
    }

    fn max_inflight(&self) -> Option<usize> {
        Some(self.max_inflight)
    }

    fn recognize_words(&self, frame: &FrameBuffer) -> Result<Vec<OcrWord>, OcrError> {
        let _permit = self.slots.acquire();
        let dir = tempfile::Builder::new()
            .prefix("slidemeta-ocr")
            .tempdir()
            .map_err(|e| OcrError::Failed(format!("cannot create temp dir: {e}")))?;
        let image_path = dir.path().join("frame.png");
        let color = if frame.channels() == 1 {
            image::ExtendedColorType::L8
        } else {
            image::ExtendedColorType::Rgb8
        };
        image::save_buffer(&image_path, frame.data(), frame.width(), frame.height(), color)
            .map_err(|e| OcrError::Failed(format!("cannot write {}: {e}", image_path.display())))?;

        log::debug!("running {} on {}", self.binary.display(), image_path.display());
        let output = Command::new(&self.binary)
            .arg(&image_path)
            .args(["stdout", "--psm", "3", "tsv"])
            .output()
            .map_err(|e| OcrError::Unavailable(format!("cannot run {}: {e}", self.binary.display())))?;
        if !output.status.success() {
            return Err(OcrError::Failed(format!(
                "tesseract exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8(output.stdout)
            .map_err(|_| OcrError::Failed("tesseract produced non-UTF-8 output".into()))?;
        parse_engine_tsv(&stdout).map_err(|e| OcrError::Failed(format!("malformed tesseract TSV: {e}")))
    }
}
