//! Turning a video source into in-memory frames.
//!
//! A source is either a video file, decoded by ffmpeg into raw RGB frames
//! on a pipe at a fixed rate, or a directory of PNG frames taken in file
//! name order at the same rate.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};
use slidemeta_core::frames::FrameBuffer;
use slidemeta_core::keyframe::ProbeReport;
use thiserror::Error;

use crate::imageio;
use crate::tools::{FFMPEG, FFPROBE};

/// Name of the probe listing read from frame directories.
pub const FRAME_DIR_PROBE: &str = "probe.csv";

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("{tool} not found; install it or pass its path explicitly")]
    ToolMissing { tool: &'static str },
    #[error("video source {0} does not exist")]
    NotFound(PathBuf),
    #[error("cannot decode {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DecodeError {
    pub fn is_environment(&self) -> bool {
        matches!(self, DecodeError::ToolMissing { .. })
    }
}

#[derive(Debug, Clone)]
pub struct DecodedVideo {
    pub frames: Vec<FrameBuffer>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    File,
    FrameDir,
}

pub fn source_kind(path: &Path) -> Result<SourceKind, DecodeError> {
    match std::fs::metadata(path) {
        Ok(m) if m.is_dir() => Ok(SourceKind::FrameDir),
        Ok(_) => Ok(SourceKind::File),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(DecodeError::NotFound(path.to_path_buf())),
        Err(source) => Err(DecodeError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

#[derive(Debug, Clone)]
pub struct Decoder {
    pub ffmpeg: Option<PathBuf>,
    pub ffprobe: Option<PathBuf>,
    pub fps: f64,
}

impl Decoder {
    pub fn decode(&self, path: &Path) -> Result<DecodedVideo, DecodeError> {
        match source_kind(path)? {
            SourceKind::FrameDir => decode_frame_dir(path, self.fps),
            SourceKind::File => {
                let ffmpeg = self
                    .ffmpeg
                    .as_deref()
                    .ok_or(DecodeError::ToolMissing { tool: FFMPEG })?;
                decode_with_ffmpeg(ffmpeg, path, self.fps)
            }
        }
    }

    /// Picture types of every frame of the source's first video stream.
    pub fn probe(&self, path: &Path) -> Result<ProbeReport, DecodeError> {
        match source_kind(path)? {
            SourceKind::FrameDir => {
                let listing = path.join(FRAME_DIR_PROBE);
                let text = std::fs::read_to_string(&listing).map_err(|e| DecodeError::Corrupt {
                    path: path.to_path_buf(),
                    message: format!("cannot read {}: {e}", listing.display()),
                })?;
                parse_probe(path, &text)
            }
            SourceKind::File => {
                let ffprobe = self
                    .ffprobe
                    .as_deref()
                    .ok_or(DecodeError::ToolMissing { tool: FFPROBE })?;
                let output = Command::new(ffprobe)
                    .args([
                        "-v",
                        "error",
                        "-select_streams",
                        "v:0",
                        "-show_entries",
                        "frame=pict_type,pts_time",
                        "-of",
                        "csv",
                    ])
                    .arg(path)
                    .output()
                    .map_err(|e| spawn_error(e, FFPROBE, ffprobe))?;
                if !output.status.success() {
                    return Err(DecodeError::Corrupt {
                        path: path.to_path_buf(),
                        message: last_line(&output.stderr),
                    });
                }
                parse_probe(path, &String::from_utf8_lossy(&output.stdout))
            }
        }
    }
}

fn parse_probe(path: &Path, text: &str) -> Result<ProbeReport, DecodeError> {
    ProbeReport::parse_csv(text).map_err(|e| DecodeError::Corrupt {
        path: path.to_path_buf(),
        message: format!("malformed probe listing: {e}"),
    })
}

fn spawn_error(e: std::io::Error, tool: &'static str, binary: &Path) -> DecodeError {
    if e.kind() == std::io::ErrorKind::NotFound {
        DecodeError::ToolMissing { tool }
    } else {
        DecodeError::Io {
            path: binary.to_path_buf(),
            source: e,
        }
    }
}

fn last_line(stderr: &[u8]) -> String {
    String::from_utf8_lossy(stderr)
        .lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .unwrap_or("decoder exited with an error")
        .to_string()
}

/// PNG files of `dir` in name order.
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>, DecodeError> {
    let entries = std::fs::read_dir(dir).map_err(|source| DecodeError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| DecodeError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        let is_png = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn decode_frame_dir(dir: &Path, fps: f64) -> Result<DecodedVideo, DecodeError> {
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(DecodeError::Corrupt {
            path: dir.to_path_buf(),
            message: "directory holds no PNG frames".into(),
        });
    }
    let mut frames = Vec::with_capacity(files.len());
    for (i, file) in files.iter().enumerate() {
        let frame = imageio::load_rgb(file).map_err(|e| DecodeError::Corrupt {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(first) = frames.first() {
            let first: &FrameBuffer = first;
            if (first.width(), first.height()) != (frame.width(), frame.height()) {
                return Err(DecodeError::Corrupt {
                    path: dir.to_path_buf(),
                    message: format!("{} has a different size from the first frame", file.display()),
                });
            }
        }
        frames.push(frame.with_position(i as u64, i as f64 / fps));
    }
    let duration_s = frames.len() as f64 / fps;
    Ok(DecodedVideo { frames, duration_s })
}

fn decode_with_ffmpeg(ffmpeg: &Path, path: &Path, fps: f64) -> Result<DecodedVideo, DecodeError> {
    // Opening the file first turns permission problems into a clear error
    // instead of an ffmpeg message.
    let mut probe = [0u8; 1];
    std::fs::File::open(path)
        .and_then(|mut f| f.read(&mut probe))
        .map_err(|source| DecodeError::Io {
            path: path.to_path_buf(),
            source,
        })?;

    log::debug!("decoding {} at {fps} fps with {}", path.display(), ffmpeg.display());
    let output = Command::new(ffmpeg)
        .args(["-nostdin", "-hide_banner", "-i"])
        .arg(path)
        .args(["-map", "0:v:0", "-vf"])
        .arg(format!("fps={fps}"))
        .args(["-f", "rawvideo", "-pix_fmt", "rgb24", "pipe:1"])
        .output()
        .map_err(|e| spawn_error(e, FFMPEG, ffmpeg))?;
    let stderr = String::from_utf8_lossy(&output.stderr);
    if !output.status.success() {
        return Err(DecodeError::Corrupt {
            path: path.to_path_buf(),
            message: last_line(&output.stderr),
        });
    }
    let (w, h) = output_dimensions(&stderr).ok_or_else(|| DecodeError::Corrupt {
        path: path.to_path_buf(),
        message: "could not determine the decoded frame size".into(),
    })?;
    let frame_len = (w as usize) * (h as usize) * 3;
    let frames: Vec<FrameBuffer> = output
        .stdout
        .chunks_exact(frame_len)
        .enumerate()
        .map(|(i, chunk)| {
            FrameBuffer::rgb(w, h, chunk.to_vec())
                .expect("chunk matches frame size")
                .with_position(i as u64, i as f64 / fps)
        })
        .collect();
    if frames.is_empty() {
        return Err(DecodeError::Corrupt {
            path: path.to_path_buf(),
            message: "no video frames decoded".into(),
        });
    }
    let duration_s = input_duration(&stderr).unwrap_or(frames.len() as f64 / fps);
    Ok(DecodedVideo { frames, duration_s })
}

/// Frame size of the first video stream of ffmpeg's output section.
pub fn output_dimensions(stderr: &str) -> Option<(u32, u32)> {
    let output_section = &stderr[stderr.find("Output #0")?..];
    let stream = output_section.lines().find(|l| l.contains("Video:"))?;
    stream.split(", ").find_map(|part| {
        let token = part.split_whitespace().next()?;
        let (w, h) = token.split_once('x')?;
        Some((w.parse().ok()?, h.parse().ok()?)).filter(|&(w, h): &(u32, u32)| w > 0 && h > 0)
    })
}

/// `Duration: HH:MM:SS.ss` of the input, when known.
pub fn input_duration(stderr: &str) -> Option<f64> {
    let rest = &stderr[stderr.find("Duration: ")? + "Duration: ".len()..];
    let stamp = rest.split(',').next()?.trim();
    let mut parts = stamp.split(':');
    let h: f64 = parts.next()?.parse().ok()?;
    let m: f64 = parts.next()?.parse().ok()?;
    let s: f64 = parts.next()?.parse().ok()?;
    Some(h * 3600.0 + m * 60.0 + s)
}

/// First 16 hex digits of the SHA-256 of the source: the file bytes, or for
/// a frame directory each frame's name and bytes in order.
pub fn content_id(path: &Path) -> Result<String, DecodeError> {
    let io = |source| DecodeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut hasher = Sha256::new();
    match source_kind(path)? {
        SourceKind::File => {
            let mut file = std::fs::File::open(path).map_err(io)?;
            std::io::copy(&mut file, &mut hasher).map_err(io)?;
        }
        SourceKind::FrameDir => {
            for file in frame_files(path)? {
                let name = file
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                hasher.update((name.len() as u64).to_le_bytes());
                hasher.update(name.as_bytes());
                let bytes = std::fs::read(&file).map_err(io)?;
                hasher.update((bytes.len() as u64).to_le_bytes());
                hasher.update(&bytes);
            }
        }
    }
    Ok(hex::encode(hasher.finalize())[..16].to_string())
}
