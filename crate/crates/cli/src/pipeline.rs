//! Per-video processing: decode, select keyframes, recognise, extract.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use slidemeta_core::catalog::{VideoRecord, SCHEMA_VERSION};
use slidemeta_core::extraction::{merge_frames, Extractor, NameRecognizer, NoRecognizer, RuleBasedRecognizer};
use slidemeta_core::frames::FrameBuffer;
use slidemeta_core::keyframe::{
    cluster_keyframes, pixel_diff_keyframes, sample_every, select_iframes, KeyframeError, KeyframeSet, Strategy,
};
use slidemeta_core::ocr::{recognize, FixtureEngine, OcrEngine, OcrError, PreprocessStep, TesseractEngine};
use thiserror::Error;

use crate::config::{EngineKind, PipelineConfig, RecognizerKind};
use crate::decode::{content_id, source_kind, DecodeError, DecodedVideo, Decoder, SourceKind};
use crate::tools::{find_tool, TESSERACT};
use crate::CliError;

#[derive(Debug, Error)]
pub enum VideoError {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("keyframe selection failed: {0}")]
    Keyframe(#[from] KeyframeError),
    #[error("OCR failed on frame {frame}: {source}")]
    Ocr {
        frame: u64,
        #[source]
        source: OcrError,
    },
    #[error("{0}")]
    Fixture(String),
    #[error("{0}")]
    Source(String),
}

/// Where OCR text comes from.
#[derive(Clone)]
pub enum EngineSource {
    Live(Arc<dyn OcrEngine>),
    /// Per-video JSON fixture: `explicit`, else the `<video>.ocr.json`
    /// sidecar.
    Fixture {
        explicit: Option<PathBuf>,
    },
}

impl std::fmt::Debug for EngineSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EngineSource::Live(e) => f.debug_tuple("Live").field(&e.id()).finish(),
            EngineSource::Fixture { explicit } => f.debug_struct("Fixture").field("explicit", explicit).finish(),
        }
    }
}

/// The fixture file read for `video` when none is given explicitly.
pub fn sidecar_path(video: &Path) -> PathBuf {
    let normalized: PathBuf = video.components().collect();
    let mut name = OsString::from(normalized.as_os_str());
    name.push(".ocr.json");
    PathBuf::from(name)
}

/// One video to process.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoJob {
    pub path: PathBuf,
    /// Overrides the content hash.
    pub id: Option<String>,
    /// Recorded as the catalog `source`.
    pub source: String,
}

impl VideoJob {
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        Self {
            source: path.display().to_string(),
            path,
            id: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VideoOutcome {
    pub record: VideoRecord,
    pub frames_decoded: usize,
    pub keyframes: KeyframeSet,
    pub lines_seen: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub decoder: Decoder,
    steps: Vec<PreprocessStep>,
    extractor: Extractor,
    engine: EngineSource,
    processed_at: DateTime<Utc>,
}

impl Pipeline {
    /// Validates the config and resolves lexicons, tools and the OCR engine.
    /// A configured live engine that cannot run is an environment error.
    pub fn new(config: PipelineConfig, ocr_fixture: Option<PathBuf>) -> Result<Self, CliError> {
        config.validate()?;
        let steps = config.preprocess_steps()?;
        let lexicons = config.load_lexicons()?;
        let recognizer: Arc<dyn NameRecognizer> = match config.recognizer {
            RecognizerKind::Rules => Arc::new(RuleBasedRecognizer::with_lexicons(&lexicons)),
            RecognizerKind::None => Arc::new(NoRecognizer),
        };
        let extractor = Extractor::new(lexicons, config.match_threshold, recognizer);
        let engine = match config.engine {
            EngineKind::Fixture => EngineSource::Fixture { explicit: ocr_fixture },
            EngineKind::Tesseract => {
                if ocr_fixture.is_some() {
                    return Err(CliError::Config("--ocr-fixture requires the fixture engine".into()));
                }
                let binary = find_tool(config.tools.tesseract.as_deref(), TESSERACT).ok_or_else(|| {
                    CliError::Environment("tesseract not found; install it or pass --tesseract".into())
                })?;
                let engine = TesseractEngine::new(binary, config.ocr_max_inflight)
                    .map_err(|e| CliError::Environment(e.to_string()))?;
                EngineSource::Live(Arc::new(engine))
            }
        };
        let decoder = Decoder {
            ffmpeg: find_tool(config.tools.ffmpeg.as_deref(), crate::tools::FFMPEG),
            ffprobe: find_tool(config.tools.ffprobe.as_deref(), crate::tools::FFPROBE),
            fps: config.decode_fps,
        };
        let processed_at = config.resolve_processed_at()?;
        Ok(Self {
            config,
            decoder,
            steps,
            extractor,
            engine,
            processed_at,
        })
    }

    /// Concurrency hint from the engine, if it has one.
    pub fn engine_max_inflight(&self) -> Option<usize> {
        match &self.engine {
            EngineSource::Live(e) => e.max_inflight(),
            EngineSource::Fixture { .. } => None,
        }
    }

    /// Fails early when a needed decoding tool is missing for `path`.
    pub fn check_tools_for(&self, path: &Path) -> Result<(), CliError> {
        if let Ok(SourceKind::File) = source_kind(path) {
            if self.decoder.ffmpeg.is_none() {
                return Err(CliError::Environment(
                    DecodeError::ToolMissing {
                        tool: crate::tools::FFMPEG,
                    }
                    .to_string(),
                ));
            }
            if self.config.strategy == Strategy::Iframe && self.decoder.ffprobe.is_none() {
                return Err(CliError::Environment(
                    DecodeError::ToolMissing {
                        tool: crate::tools::FFPROBE,
                    }
                    .to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Runs the configured strategy and returns the chosen frames, labelled
    /// with their keyframe index and time.
    ///
    /// For the I-frame strategy on a video file the probe indices refer to
    /// the native stream, so each I-frame is represented by the decoded
    /// frame nearest its timestamp.
    pub fn select_keyframes(
        &self,
        path: &Path,
        video: &DecodedVideo,
    ) -> Result<(KeyframeSet, Vec<FrameBuffer>), VideoError> {
        let frames = &video.frames;
        let set = match self.config.strategy {
            Strategy::Interval => sample_every(frames, self.config.interval_s)?,
            Strategy::PixelDiff => pixel_diff_keyframes(frames, self.config.diff_threshold)?,
            Strategy::Cluster => cluster_keyframes(frames, self.config.cluster_params())?,
            Strategy::Iframe => {
                let report = self.decoder.probe(path)?;
                let set = select_iframes(&report);
                let by_time = source_kind(path)? == SourceKind::File;
                let mut chosen = Vec::with_capacity(set.len());
                for entry in &set.entries {
                    let decoded = if by_time {
                        let k = (entry.timestamp_s * self.decoder.fps).round().max(0.0) as usize;
                        frames.get(k.min(frames.len() - 1))
                    } else {
                        frames.get(entry.frame_index as usize)
                    };
                    let decoded = decoded.ok_or_else(|| {
                        VideoError::Source(format!(
                            "probe lists frame {} but only {} frames were decoded",
                            entry.frame_index,
                            frames.len()
                        ))
                    })?;
                    chosen.push(decoded.clone().with_position(entry.frame_index, entry.timestamp_s));
                }
                return Ok((set, chosen));
            }
        };
        let chosen = set
            .entries
            .iter()
            .map(|e| frames[e.frame_index as usize].clone())
            .collect();
        Ok((set, chosen))
    }

    fn engine_for(&self, path: &Path) -> Result<Arc<dyn OcrEngine>, VideoError> {
        match &self.engine {
            EngineSource::Live(e) => Ok(Arc::clone(e)),
            EngineSource::Fixture { explicit } => {
                let fixture = explicit.clone().unwrap_or_else(|| sidecar_path(path));
                if !fixture.is_file() {
                    return Err(VideoError::Fixture(format!(
                        "OCR fixture {} not found",
                        fixture.display()
                    )));
                }
                let engine = FixtureEngine::load(&fixture).map_err(|e| VideoError::Fixture(e.to_string()))?;
                Ok(Arc::new(engine))
            }
        }
    }

    pub fn process(&self, job: &VideoJob) -> Result<VideoOutcome, VideoError> {
        let video = self.decoder.decode(&job.path)?;
        let video_id = match &job.id {
            Some(id) => id.clone(),
            None => content_id(&job.path)?,
        };
        let engine = self.engine_for(&job.path)?;
        let (keyframes, chosen) = self.select_keyframes(&job.path, &video)?;
        log::info!(
            "{}: {} frames decoded, {} keyframes",
            job.path.display(),
            video.frames.len(),
            keyframes.len()
        );

        let mut per_frame = Vec::with_capacity(chosen.len());
        let mut notes = Vec::new();
        let mut lines_seen = 0;
        for frame in &chosen {
            let ocr = recognize(engine.as_ref(), frame, &self.steps).map_err(|source| VideoError::Ocr {
                frame: frame.frame_index,
                source,
            })?;
            lines_seen += ocr.lines.len();
            let extraction = self.extractor.extract(&ocr);
            notes.extend(
                extraction
                    .diagnostics
                    .into_iter()
                    .map(|d| format!("frame {}: {d}", frame.frame_index)),
            );
            per_frame.push(extraction.attributes);
        }
        let attributes = merge_frames(&per_frame);
        let keyframes_used = attributes.source_frames();
        let record = VideoRecord {
            schema_version: SCHEMA_VERSION,
            video_id,
            source: job.source.clone(),
            duration_s: video.duration_s,
            processed_at: self.processed_at,
            attributes,
            keyframe_strategy: self.config.strategy,
            engine_id: engine.id().to_string(),
            keyframes_used,
        };
        Ok(VideoOutcome {
            record,
            frames_decoded: video.frames.len(),
            keyframes,
            lines_seen,
            notes,
        })
    }
}
