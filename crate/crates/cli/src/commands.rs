//! Subcommand implementations. Each returns data for the caller to print;
//! none of them writes to stdout.

use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use slidemeta_core::catalog::{Catalog, ExportFormat, VideoRecord};
use slidemeta_core::evalsuite::{parse_ground_truth, score, EvalReport, ScoringMode};
use slidemeta_core::extraction::AttributeName;
use slidemeta_core::ingest::{parse_manifest, resolve_source, trim_args, Fetcher, ManifestEntry};
use slidemeta_core::keyframe::KeyframeSet;

use crate::config::PipelineConfig;
use crate::decode::content_id;
use crate::diag::Diagnostics;
use crate::imageio;
use crate::pipeline::{Pipeline, VideoJob};
use crate::tools::{find_tool, FFMPEG};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct KeyframesSummary {
    pub video_id: String,
    pub frames_decoded: usize,
    pub keyframes: KeyframeSet,
    pub files: Vec<PathBuf>,
}

/// Writes the selected keyframes of one video as
/// `<out_dir>/<video_id>_<frame_index>.png`.
pub fn cmd_keyframes(video: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<KeyframesSummary, CliError> {
    config.validate()?;
    let pipeline = Pipeline::new(fixture_free(config), None)?;
    pipeline.check_tools_for(video)?;
    let decoded = pipeline.decoder.decode(video).map_err(|e| {
        if e.is_environment() {
            CliError::Environment(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    })?;
    let video_id = content_id(video).map_err(|e| CliError::Runtime(e.to_string()))?;
    let (keyframes, frames) = pipeline
        .select_keyframes(video, &decoded)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut files = Vec::with_capacity(frames.len());
    for frame in &frames {
        let path = out_dir.join(format!("{video_id}_{}.png", frame.frame_index));
        imageio::save_png(frame, &path).map_err(|e| CliError::Runtime(e.to_string()))?;
        files.push(path);
    }
    Ok(KeyframesSummary {
        video_id,
        frames_decoded: decoded.frames.len(),
        keyframes,
        files,
    })
}

/// Keyframe extraction needs no OCR, so the engine is irrelevant; use the
/// fixture kind to avoid probing for tesseract.
fn fixture_free(config: &PipelineConfig) -> PipelineConfig {
    let mut cfg = config.clone();
    cfg.engine = crate::config::EngineKind::Fixture;
    cfg
}

#[derive(Debug, Clone, Default)]
pub struct ExtractInputs {
    pub videos: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// Explicit OCR fixture for the fixture engine.
    pub ocr_fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractFailure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractSummary {
    pub catalog: PathBuf,
    pub processed: Vec<String>,
    pub failures: Vec<ExtractFailure>,
}

impl ExtractSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            crate::exit::OK
        } else {
            crate::exit::FAILURE
        }
    }
}

/// Runs the full pipeline over every input on a worker pool and upserts
/// the results in input order. Per-video failures are collected, not
/// raised.
pub fn cmd_extract(
    inputs: &ExtractInputs,
    config: &PipelineConfig,
    fetcher: &dyn Fetcher,
    diag: &Diagnostics,
) -> Result<ExtractSummary, CliError> {
    let pipeline = Pipeline::new(config.clone(), inputs.ocr_fixture.clone())?;

    let mut jobs: Vec<Result<VideoJob, ExtractFailure>> =
        inputs.videos.iter().map(|p| Ok(VideoJob::from_path(p))).collect();
    if let Some(manifest) = &inputs.manifest {
        let text = std::fs::read_to_string(manifest)
            .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", manifest.display())))?;
        let entries = parse_manifest(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        jobs.extend(entries.iter().map(|entry| manifest_job(entry, base, fetcher)));
    }
    if jobs.is_empty() {
        return Err(CliError::Config(
            "nothing to extract: pass video paths or --manifest".into(),
        ));
    }
    for job in jobs.iter().flatten() {
        pipeline.check_tools_for(&job.path)?;
    }

    let mut workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if let Some(cap) = pipeline.engine_max_inflight() {
        workers = workers.min(cap);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|job| match job {
                Err(f) => Err(f.clone()),
                Ok(job) => pipeline.process(job).map_err(|e| ExtractFailure {
                    source: job.source.clone(),
                    error: e.to_string(),
                }),
            })
            .collect()
    });

    let mut catalog = Catalog::open(&config.catalog).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut summary = ExtractSummary {
        catalog: config.catalog.clone(),
        processed: Vec::new(),
        failures: Vec::new(),
    };
    for result in results {
        match result {
            Ok(outcome) => {
                let record = &outcome.record;
                let attributes: serde_json::Map<String, serde_json::Value> = AttributeName::ALL
                    .iter()
                    .map(|&n| {
                        let v = record
                            .attributes
                            .get(n)
                            .map(|v| json!({"value": v.value, "score": v.score, "frame": v.source_frame}));
                        (n.as_str().to_string(), v.unwrap_or(serde_json::Value::Null))
                    })
                    .collect();
                diag.emit(
                    "video_done",
                    json!({
                        "video_id": record.video_id,
                        "source": record.source,
                        "frames_decoded": outcome.frames_decoded,
                        "keyframes": outcome.keyframes.indices(),
                        "lines_seen": outcome.lines_seen,
                        "attributes": attributes,
                        "notes": outcome.notes,
                    }),
                );
                let id = record.video_id.clone();
                let source = record.source.clone();
                match catalog.upsert(outcome.record) {
                    Ok(()) => summary.processed.push(id),
                    Err(e) => {
                        diag.emit("video_failed", json!({"source": source, "error": e.to_string()}));
                        summary.failures.push(ExtractFailure {
                            source,
                            error: e.to_string(),
                        });
                    }
                }
            }
            Err(failure) => {
                diag.emit(
                    "video_failed",
                    json!({"source": failure.source, "error": failure.error}),
                );
                summary.failures.push(failure);
            }
        }
    }
    diag.emit(
        "batch_done",
        json!({"processed": summary.processed.len(), "failed": summary.failures.len()}),
    );
    Ok(summary)
}

fn manifest_job(entry: &ManifestEntry, base: &Path, fetcher: &dyn Fetcher) -> Result<VideoJob, ExtractFailure> {
    let path = resolve_source(entry, base, fetcher).map_err(|e| ExtractFailure {
        source: entry.url_or_path.clone(),
        error: e.to_string(),
    })?;
    Ok(VideoJob {
        path,
        id: Some(entry.id.clone()),
        source: entry.url_or_path.clone(),
    })
}

fn open_existing(path: &Path) -> Result<Catalog, CliError> {
    Catalog::open(path).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_query(
    catalog: &Path,
    attribute: AttributeName,
    value: &str,
    fuzzy_threshold: Option<f64>,
) -> Result<Vec<VideoRecord>, CliError> {
    if let Some(t) = fuzzy_threshold {
        if !(0.0..=100.0).contains(&t) {
            return Err(CliError::Config(format!(
                "fuzzy threshold must lie in [0, 100], got {t}"
            )));
        }
    }
    let catalog = open_existing(catalog)?;
    Ok(catalog
        .query(attribute, value, fuzzy_threshold)
        .into_iter()
        .cloned()
        .collect())
}

/// Tab-separated rows: video id, the queried value, its score, source.
pub fn render_query(attribute: AttributeName, records: &[VideoRecord]) -> String {
    let mut out = format!("video_id\t{attribute}\tscore\tsource\n");
    for r in records {
        let v = r.attributes.get(attribute);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.video_id,
            v.map(|v| v.value.as_str()).unwrap_or(""),
            v.map(|v| format!("{:.2}", v.score)).unwrap_or_default(),
            r.source
        ));
    }
    out
}

pub fn cmd_export(catalog: &Path, format: ExportFormat) -> Result<String, CliError> {
    open_existing(catalog)?
        .export(format)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Scores one or more prediction catalogs (typically one per keyframe
/// strategy and engine) against ground truth.
pub fn cmd_eval(catalogs: &[PathBuf], truth: &Path, mode: ScoringMode) -> Result<EvalReport, CliError> {
    let text = std::fs::read_to_string(truth)
        .map_err(|e| CliError::Config(format!("cannot read ground truth {}: {e}", truth.display())))?;
    let truth = parse_ground_truth(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut records = Vec::new();
    for path in catalogs {
        records.extend(open_existing(path)?.records().cloned());
    }
    score(&records, &truth, mode).map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrimOutcome {
    pub id: String,
    pub command: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub clips: Vec<TrimOutcome>,
    pub executed: bool,
}

impl IngestSummary {
    pub fn exit_code(&self) -> i32 {
        if self.clips.iter().any(|c| c.error.is_some()) {
            crate::exit::FAILURE
        } else {
            crate::exit::OK
        }
    }
}

/// Resolves every manifest clip and builds its trim command; with
/// `execute`, also runs them.
pub fn cmd_ingest(
    manifest: &Path,
    out_dir: &Path,
    execute: bool,
    config: &PipelineConfig,
    fetcher: &dyn Fetcher,
    diag: &Diagnostics,
) -> Result<IngestSummary, CliError> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", manifest.display())))?;
    let entries = parse_manifest(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
    let ffmpeg = if execute {
        let tool = find_tool(config.tools.ffmpeg.as_deref(), FFMPEG)
            .ok_or_else(|| CliError::Environment("ffmpeg not found; install it or pass --ffmpeg".into()))?;
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
        Some(tool)
    } else {
        None
    };
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut clips = Vec::with_capacity(entries.len());
    for entry in &entries {
        let outcome = trim_one(entry, base, out_dir, ffmpeg.as_deref(), fetcher);
        match &outcome.error {
            None => diag.emit("clip_ready", json!({"id": outcome.id, "command": outcome.command})),
            Some(e) => diag.emit("clip_failed", json!({"id": outcome.id, "error": e})),
        }
        clips.push(outcome);
    }
    Ok(IngestSummary {
        clips,
        executed: execute,
    })
}

fn trim_one(
    entry: &ManifestEntry,
    base: &Path,
    out_dir: &Path,
    ffmpeg: Option<&Path>,
    fetcher: &dyn Fetcher,
) -> TrimOutcome {
    let mut outcome = TrimOutcome {
        id: entry.id.clone(),
        command: Vec::new(),
        error: None,
    };
    let input = match resolve_source(entry, base, fetcher) {
        Ok(p) => p,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    match trim_args(entry, &input, out_dir) {
        Ok(args) => outcome.command = args,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    }
    if let Some(ffmpeg) = ffmpeg {
        let result = Command::new(ffmpeg)
            .args(["-nostdin", "-y", "-loglevel", "error"])
            .args(&outcome.command)
            .output();
        outcome.error = match result {
            Ok(out) if out.status.success() => None,
            Ok(out) => Some(format!(
                "ffmpeg exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )),
            Err(e) => Some(format!("cannot run {}: {e}", ffmpeg.display())),
        };
    }
    outcome
}
