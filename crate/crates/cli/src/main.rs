use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use slidemeta_cli::commands::{render_query, ExtractInputs};
use slidemeta_cli::config::{EngineKind, PipelineConfig, RecognizerKind};
use slidemeta_cli::diag::Diagnostics;
use slidemeta_cli::{cmd_eval, cmd_export, cmd_extract, cmd_ingest, cmd_keyframes, cmd_query, exit, CliError};
use slidemeta_core::catalog::ExportFormat;
use slidemeta_core::evalsuite::{render_csv, render_text, ScoringMode, DEFAULT_FUZZY_THRESHOLD};
use slidemeta_core::extraction::AttributeName;
use slidemeta_core::ingest::UnconfiguredFetcher;
use slidemeta_core::keyframe::Strategy;

#[derive(Parser, Debug)]
#[command(
    name = "slidemeta",
    version,
    about = "Extract and catalogue lecture-video metadata from intro slides"
)]
struct Cli {
    /// JSON pipeline config; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Catalog file (JSON lines).
    #[arg(long, global = true, env = "SLIDEMETA_CATALOG", value_name = "FILE")]
    catalog: Option<PathBuf>,

    #[arg(long, global = true, env = "SLIDEMETA_FFMPEG", value_name = "PATH")]
    ffmpeg: Option<PathBuf>,

    #[arg(long, global = true, env = "SLIDEMETA_FFPROBE", value_name = "PATH")]
    ffprobe: Option<PathBuf>,

    #[arg(long, global = true, env = "SLIDEMETA_TESSERACT", value_name = "PATH")]
    tesseract: Option<PathBuf>,

    /// Append diagnostics (JSON lines) to this file instead of stderr.
    #[arg(long, global = true, value_name = "FILE")]
    log: Option<PathBuf>,

    /// Suppress diagnostics.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand, Debug)]
enum Commands {
    /// Select keyframes from one video and write them as PNG files.
    Keyframes {
        video: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Run the full pipeline and upsert results into the catalog.
    Extract {
        videos: Vec<PathBuf>,
        /// Clip manifest (id,url,title,start,end); ids override content hashes.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
        /// OCR fixture used instead of each video's `.ocr.json` sidecar.
        #[arg(long, value_name = "FILE")]
        ocr_fixture: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// List catalog records whose attribute matches a value.
    Query {
        attribute: AttributeName,
        value: String,
        /// Fuzzy match at this ratio threshold (default 90 when given bare).
        #[arg(long, value_name = "THRESHOLD", num_args = 0..=1, default_missing_value = "90")]
        fuzzy: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Export the catalog as CSV or JSON.
    Export {
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score catalog predictions against ground truth.
    Eval {
        /// Ground-truth CSV (video_id,publisher,institute,department,professor).
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        /// Prediction catalogs, one per configuration; defaults to --catalog.
        #[arg(long = "predictions", value_name = "FILE")]
        predictions: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_FUZZY_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Build (and optionally run) trim commands for a clip manifest.
    Ingest {
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Run the trim commands instead of only printing them.
        #[arg(long)]
        execute: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Args, Debug, Default)]
struct PipelineArgs {
    /// interval, pixel-diff, iframe or cluster.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, value_name = "SECONDS")]
    interval: Option<f64>,
    #[arg(long)]
    diff_threshold: Option<f64>,
    /// Candidate window in frames for the cluster strategy.
    #[arg(long)]
    window: Option<usize>,
    /// Hamming distance (0-64) for the cluster strategy.
    #[arg(long)]
    hash_threshold: Option<u32>,
    #[arg(long)]
    brightness_floor: Option<f64>,
    /// Frames per second decoded from video files.
    #[arg(long)]
    fps: Option<f64>,
    /// tesseract or fixture.
    #[arg(long)]
    engine: Option<EngineKind>,
    /// binarize, gaussian_blur:<sigma> or edge_map; repeatable.
    #[arg(long = "preprocess", value_name = "STEP")]
    preprocess: Vec<String>,
    /// rules or none.
    #[arg(long)]
    recognizer: Option<RecognizerKind>,
    #[arg(long)]
    match_threshold: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Fixed RFC 3339 processing time for reproducible catalogs.
    #[arg(long, value_name = "TIME")]
    processed_at: Option<DateTime<Utc>>,
    #[arg(long, value_name = "FILE")]
    publisher_lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    institute_lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    department_lexicon: Option<PathBuf>,
}

impl PipelineArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    cfg.$field = v;
                }
            };
        }
        set!(strategy, self.strategy);
        set!(interval_s, self.interval);
        set!(diff_threshold, self.diff_threshold);
        set!(window, self.window);
        set!(hash_threshold, self.hash_threshold);
        set!(brightness_floor, self.brightness_floor);
        set!(decode_fps, self.fps);
        set!(engine, self.engine);
        set!(recognizer, self.recognizer);
        set!(match_threshold, self.match_threshold);
        if !self.preprocess.is_empty() {
            cfg.preprocessing.clone_from(&self.preprocess);
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.processed_at.is_some() {
            cfg.processed_at = self.processed_at;
        }
        if let Some(p) = &self.publisher_lexicon {
            cfg.lexicons.publisher = Some(p.clone());
        }
        if let Some(p) = &self.institute_lexicon {
            cfg.lexicons.institute = Some(p.clone());
        }
        if let Some(p) = &self.department_lexicon {
            cfg.lexicons.department = Some(p.clone());
        }
    }
}

impl Cli {
    fn base_config(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(c) = &self.catalog {
            cfg.catalog = c.clone();
        }
        if self.ffmpeg.is_some() {
            cfg.tools.ffmpeg = self.ffmpeg.clone();
        }
        if self.ffprobe.is_some() {
            cfg.tools.ffprobe = self.ffprobe.clone();
        }
        if self.tesseract.is_some() {
            cfg.tools.tesseract = self.tesseract.clone();
        }
        Ok(cfg)
    }

    fn diagnostics(&self) -> Result<Diagnostics, CliError> {
        if self.quiet {
            return Ok(Diagnostics::silent());
        }
        match &self.log {
            Some(path) => Diagnostics::to_file(path)
                .map_err(|e| CliError::Config(format!("cannot open log {}: {e}", path.display()))),
            None => Ok(Diagnostics::stderr()),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("cannot write to stdout")?;
            stdout.flush().context("cannot write to stdout")
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let mut cfg = cli.base_config()?;
    let diag = cli.diagnostics()?;
    let output = |out: Option<&Path>, text: &str| emit(out, text).map_err(|e| CliError::Runtime(format!("{e:#}")));
    match &cli.command {
        Commands::Keyframes { video, out, pipeline } => {
            pipeline.apply(&mut cfg);
            let summary = cmd_keyframes(video, out, &cfg)?;
            output(None, &to_json(&summary))?;
            Ok(exit::OK)
        }
        Commands::Extract {
            videos,
            manifest,
            ocr_fixture,
            pipeline,
        } => {
            pipeline.apply(&mut cfg);
            let inputs = ExtractInputs {
                videos: videos.clone(),
                manifest: manifest.clone(),
                ocr_fixture: ocr_fixture.clone(),
            };
            let summary = cmd_extract(&inputs, &cfg, &UnconfiguredFetcher, &diag)?;
            output(None, &to_json(&summary))?;
            Ok(summary.exit_code())
        }
        Commands::Query {
            attribute,
            value,
            fuzzy,
            out,
        } => {
            let records = cmd_query(&cfg.catalog, *attribute, value, *fuzzy)?;
            output(out.as_deref(), &render_query(*attribute, &records))?;
            Ok(exit::OK)
        }
        Commands::Export { format, out } => {
            let text = cmd_export(&cfg.catalog, *format)?;
            output(out.as_deref(), &text)?;
            Ok(exit::OK)
        }
        Commands::Eval {
            truth,
            predictions,
            mode,
            threshold,
            format,
            out,
        } => {
            let catalogs = if predictions.is_empty() {
                vec![cfg.catalog.clone()]
            } else {
                predictions.clone()
            };
            let mode = match mode {
                Mode::Exact => ScoringMode::Exact,
                Mode::Fuzzy => ScoringMode::Fuzzy { threshold: *threshold },
            };
            let report = cmd_eval(&catalogs, truth, mode)?;
            let text = match format {
                TableFormat::Text => render_text(&report),
                TableFormat::Csv => render_csv(&report),
            };
            for m in &report.mismatches {
                diag.emit("mismatch", serde_json::to_value(m).unwrap_or_default());
            }
            output(out.as_deref(), &text)?;
            Ok(exit::OK)
        }
        Commands::Ingest { manifest, out, execute } => {
            let summary = cmd_ingest(manifest, out, *execute, &cfg, &UnconfiguredFetcher, &diag)?;
            output(None, &to_json(&summary))?;
            Ok(summary.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE as u8
            } else {
                exit::OK as u8
            });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("slidemeta: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
