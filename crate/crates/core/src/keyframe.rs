//! Keyframe selection strategies.
//!
//! Four strategies map an ordered frame stream (or a probe report) onto a
//! [`KeyframeSet`]:
//!
//! * fixed-interval sampling ([`sample_every`]),
//! * pixel differencing against the last kept frame ([`pixel_diff_keyframes`]),
//! * intra-coded picture selection from a probe report ([`select_iframes`]),
//! * the candidate → cluster → best-frame pipeline ([`cluster_keyframes`]).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{self, average_hash, blur_index, brightness, hamming, FrameBuffer, FrameError};

pub const DEFAULT_DIFF_THRESHOLD: f64 = 12.0;
pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_HASH_THRESHOLD: u32 = 10;
pub const DEFAULT_BRIGHTNESS_FLOOR: f64 = 10.0;
pub const DEFAULT_INTERVAL_S: f64 = 2.0;

/// Slack for float timestamps landing a hair under an interval boundary.
const TIME_EPSILON: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum KeyframeError {
    #[error("sampling interval must be positive (got {0})")]
    InvalidInterval(f64),
    #[error("difference threshold must be positive (got {0})")]
    InvalidThreshold(f64),
    #[error("candidate window must be at least 2 (got {0})")]
    InvalidWindow(usize),
    #[error("hash threshold must be within 0..=64 (got {0})")]
    InvalidHashThreshold(u32),
    #[error("frame {index} changes dimensions mid-stream")]
    DimensionChange { index: u64 },
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("frame {0} referenced by a cluster was not supplied")]
    MissingFrame(u64),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Interval,
    PixelDiff,
    Iframe,
    Cluster,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Interval,
        Strategy::PixelDiff,
        Strategy::Iframe,
        Strategy::Cluster,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Interval => "interval",
            Strategy::PixelDiff => "pixel_diff",
            Strategy::Iframe => "iframe",
            Strategy::Cluster => "cluster",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "interval" => Ok(Strategy::Interval),
            "pixel_diff" => Ok(Strategy::PixelDiff),
            "iframe" => Ok(Strategy::Iframe),
            "cluster" => Ok(Strategy::Cluster),
            other => Err(format!(
                "unknown keyframe strategy {other:?} (expected interval, pixel-diff, iframe or cluster)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionReason {
    Interval,
    DiffThreshold,
    Iframe,
    ClusterBest,
    Unclustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeEntry {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub reason: SelectionReason,
}

/// Selected frames, sorted by strictly increasing `frame_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeSet {
    pub strategy: Strategy,
    pub entries: Vec<KeyframeEntry>,
}

impl KeyframeSet {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            entries: Vec::new(),
        }
    }

    pub fn indices(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.frame_index).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, frame_index: u64) -> bool {
        self.entries
            .binary_search_by_key(&frame_index, |e| e.frame_index)
            .is_ok()
    }

    fn push(&mut self, frame: &FrameBuffer, reason: SelectionReason) {
        self.push_at(frame.frame_index, frame.timestamp_s, reason);
    }

    fn push_at(&mut self, frame_index: u64, timestamp_s: f64, reason: SelectionReason) {
        if self.entries.last().is_none_or(|e| e.frame_index < frame_index) {
            self.entries.push(KeyframeEntry {
                frame_index,
                timestamp_s,
                reason,
            });
        }
    }
}

/// Keeps the first frame at or after each multiple of `interval_s`.
pub fn sample_every<'a, I>(frames: I, interval_s: f64) -> Result<KeyframeSet, KeyframeError>
where
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    if !(interval_s.is_finite() && interval_s > 0.0) {
        return Err(KeyframeError::InvalidInterval(interval_s));
    }
    let mut out = KeyframeSet::new(Strategy::Interval);
    let mut next_slot = 0.0f64;
    for frame in frames {
        if frame.timestamp_s + TIME_EPSILON >= next_slot * interval_s {
            out.push(frame, SelectionReason::Interval);
            next_slot = ((frame.timestamp_s + TIME_EPSILON) / interval_s).floor() + 1.0;
        }
    }
    Ok(out)
}

/// Streaming form of [`pixel_diff_keyframes`]: feed frames in order.
#[derive(Debug)]
pub struct DiffSelector {
    threshold: f64,
    last_kept: Option<FrameBuffer>,
}

impl DiffSelector {
    pub fn new(threshold: f64) -> Result<Self, KeyframeError> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(KeyframeError::InvalidThreshold(threshold));
        }
        Ok(Self {
            threshold,
            last_kept: None,
        })
    }

    /// Returns whether `frame` is a keyframe.
    pub fn push(&mut self, frame: &FrameBuffer) -> Result<bool, KeyframeError> {
        let keep = match &self.last_kept {
            None => true,
            Some(last) => {
                let diff = frames::mean_abs_diff(frame, last).map_err(|err| match err {
                    FrameError::DimensionMismatch { .. } => KeyframeError::DimensionChange {
                        index: frame.frame_index,
                    },
                    other => other.into(),
                })?;
                diff > self.threshold
            }
        };
        if keep {
            self.last_kept = Some(frame.clone());
        }
        Ok(keep)
    }
}

/// First frame, then every frame whose mean absolute difference from the
/// last *selected* frame exceeds `threshold`.
pub fn pixel_diff_keyframes<'a, I>(frames: I, threshold: f64) -> Result<KeyframeSet, KeyframeError>
where
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    let mut selector = DiffSelector::new(threshold)?;
    let mut out = KeyframeSet::new(Strategy::PixelDiff);
    for frame in frames {
        if selector.push(frame)? {
            out.push(frame, SelectionReason::DiffThreshold);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PictureType {
    I,
    P,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFrame {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub picture_type: PictureType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub frames: Vec<ProbeFrame>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProbeParseError {
    #[error("line {line}: expected a `frame,...` row, got {row:?}")]
    NotAFrameRow { line: usize, row: String },
    #[error("line {line}: unknown picture type {value:?}")]
    UnknownPictureType { line: usize, value: String },
    #[error("line {line}: expected one picture type and one timestamp, got {row:?}")]
    Malformed { line: usize, row: String },
}

fn parse_picture_type(field: &str) -> Option<PictureType> {
    match field {
        "I" => Some(PictureType::I),
        "P" => Some(PictureType::P),
        "B" => Some(PictureType::B),
        _ => None,
    }
}

impl ProbeReport {
    /// Parses the CSV frame listing produced by
    /// `ffprobe -select_streams v -show_frames -show_entries frame=pict_type,pts_time -of csv`.
    ///
    /// Rows look like `frame,<pict_type>,<pts_time>`; the two value columns
    /// are accepted in either order because ffprobe emits its own field
    /// order regardless of the order requested. A `N/A` timestamp inherits
    /// the previous frame's time.
    pub fn parse_csv(text: &str) -> Result<Self, ProbeParseError> {
        let mut frames = Vec::new();
        let mut last_ts = 0.0f64;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            let mut fields = row.split(',');
            if fields.next() != Some("frame") {
                return Err(ProbeParseError::NotAFrameRow {
                    line,
                    row: row.to_string(),
                });
            }
            let values: Vec<&str> = fields.map(str::trim).filter(|f| !f.is_empty()).collect();
            if values.len() != 2 {
                return Err(ProbeParseError::Malformed {
                    line,
                    row: row.to_string(),
                });
            }
            let is_time = |f: &str| f == "N/A" || f.parse::<f64>().is_ok();
            let (kind, time) = match (is_time(values[0]), is_time(values[1])) {
                (false, true) => (values[0], values[1]),
                (true, false) => (values[1], values[0]),
                _ => {
                    return Err(ProbeParseError::Malformed {
                        line,
                        row: row.to_string(),
                    })
                }
            };
            let picture_type = parse_picture_type(kind).ok_or_else(|| ProbeParseError::UnknownPictureType {
                line,
                value: kind.to_string(),
            })?;
            let timestamp_s = match time {
                "N/A" => last_ts,
                t => t.parse::<f64>().expect("checked above").max(0.0),
            };
            last_ts = timestamp_s;
            frames.push(ProbeFrame {
                frame_index: frames.len() as u64,
                timestamp_s,
                picture_type,
            });
        }
        Ok(Self { frames })
    }
}

/// Exactly the intra-coded frames, in report order.
pub fn select_iframes(report: &ProbeReport) -> KeyframeSet {
    let mut out = KeyframeSet::new(Strategy::Iframe);
    for f in report.frames.iter().filter(|f| f.picture_type == PictureType::I) {
        out.push_at(f.frame_index, f.timestamp_s, SelectionReason::Iframe);
    }
    out
}

/// Candidate frames: the frame with the largest difference from its
/// predecessor in each consecutive window of `window` differences. Ties go
/// to the earlier frame.
pub fn candidate_frames<'a, I>(frames: I, window: usize) -> Result<Vec<u64>, KeyframeError>
where
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    if window < 2 {
        return Err(KeyframeError::InvalidWindow(window));
    }
    let mut out = Vec::new();
    let mut prev: Option<&FrameBuffer> = None;
    let mut in_window = 0usize;
    let mut best: Option<(u64, f64)> = None;
    for frame in frames {
        if let Some(p) = prev {
            let d = frames::mean_abs_diff(frame, p).map_err(|err| match err {
                FrameError::DimensionMismatch { .. } => KeyframeError::DimensionChange {
                    index: frame.frame_index,
                },
                other => other.into(),
            })?;
            if best.is_none_or(|(_, b)| d > b) {
                best = Some((frame.frame_index, d));
            }
            in_window += 1;
            if in_window == window {
                out.extend(best.take().map(|(i, _)| i));
                in_window = 0;
            }
        }
        prev = Some(frame);
    }
    out.extend(best.map(|(i, _)| i));
    Ok(out)
}

/// Temporally contiguous group of visually similar candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCluster {
    pub members: Vec<u64>,
    /// Average hash of the first member; later members are compared to it.
    pub signature: u64,
}

/// Single-pass sequential clustering on 64-bit average hashes. A frame joins
/// the open cluster when its Hamming distance to that cluster's first member
/// is within `hash_threshold`; otherwise it opens a new cluster.
pub fn cluster_candidates<'a, I>(candidates: I, hash_threshold: u32) -> Result<Vec<CandidateCluster>, KeyframeError>
where
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    if hash_threshold > 64 {
        return Err(KeyframeError::InvalidHashThreshold(hash_threshold));
    }
    let mut clusters: Vec<CandidateCluster> = Vec::new();
    for frame in candidates {
        let sig = average_hash(frame);
        match clusters.last_mut() {
            Some(open) if hamming(open.signature, sig) <= hash_threshold => open.members.push(frame.frame_index),
            _ => clusters.push(CandidateCluster {
                members: vec![frame.frame_index],
                signature: sig,
            }),
        }
    }
    Ok(clusters)
}

/// Picks the sharpest frame (highest blur index) of each cluster, skipping
/// frames darker than `brightness_floor` unless every member is that dark.
/// Singleton clusters pass through as unclustered keyframes.
pub fn best_per_cluster(
    clusters: &[CandidateCluster],
    frames: &[FrameBuffer],
    brightness_floor: f64,
) -> Result<KeyframeSet, KeyframeError> {
    let by_index: HashMap<u64, &FrameBuffer> = frames.iter().map(|f| (f.frame_index, f)).collect();
    let mut picked: Vec<(&FrameBuffer, SelectionReason)> = Vec::with_capacity(clusters.len());
    for (ci, cluster) in clusters.iter().enumerate() {
        let members = cluster
            .members
            .iter()
            .map(|i| by_index.get(i).copied().ok_or(KeyframeError::MissingFrame(*i)))
            .collect::<Result<Vec<_>, _>>()?;
        match members.as_slice() {
            [] => return Err(KeyframeError::EmptyCluster(ci)),
            [only] => picked.push((only, SelectionReason::Unclustered)),
            _ => {
                let lit: Vec<&FrameBuffer> = members
                    .iter()
                    .copied()
                    .filter(|f| brightness(f) >= brightness_floor)
                    .collect();
                let pool = if lit.is_empty() { &members } else { &lit };
                let best = pool
                    .iter()
                    .map(|f| (*f, blur_index(f)))
                    .fold(None::<(&FrameBuffer, f64)>, |acc, (f, score)| match acc {
                        Some((bf, bs)) if bs > score || (bs == score && bf.frame_index < f.frame_index) => {
                            Some((bf, bs))
                        }
                        _ => Some((f, score)),
                    })
                    .expect("pool is non-empty")
                    .0;
                picked.push((best, SelectionReason::ClusterBest));
            }
        }
    }
    picked.sort_by_key(|(f, _)| f.frame_index);
    let mut out = KeyframeSet::new(Strategy::Cluster);
    for (f, reason) in picked {
        out.push(f, reason);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub window: usize,
    pub hash_threshold: u32,
    pub brightness_floor: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            hash_threshold: DEFAULT_HASH_THRESHOLD,
            brightness_floor: DEFAULT_BRIGHTNESS_FLOOR,
        }
    }
}

/// Intermediate counts from [`cluster_keyframes_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub candidates: Vec<u64>,
    pub clusters: Vec<CandidateCluster>,
    pub keyframes: KeyframeSet,
}

/// Full candidate → cluster → best pipeline over an in-memory stream.
pub fn cluster_keyframes(frames: &[FrameBuffer], params: ClusterParams) -> Result<KeyframeSet, KeyframeError> {
    cluster_keyframes_detailed(frames, params).map(|run| run.keyframes)
}

pub fn cluster_keyframes_detailed(frames: &[FrameBuffer], params: ClusterParams) -> Result<ClusterRun, KeyframeError> {
    let candidates = candidate_frames(frames, params.window)?;
    let by_index: HashMap<u64, &FrameBuffer> = frames.iter().map(|f| (f.frame_index, f)).collect();
    let candidate_frames: Vec<&FrameBuffer> = candidates.iter().map(|i| by_index[i]).collect();
    let clusters = cluster_candidates(candidate_frames.iter().copied(), params.hash_threshold)?;
    let keyframes = best_per_cluster(&clusters, frames, params.brightness_floor)?;
    log::debug!(
        "cluster selection: {} frames, {} candidates, {} clusters, {} keyframes",
        frames.len(),
        candidates.len(),
        clusters.len(),
        keyframes.len()
    );
    Ok(ClusterRun {
        candidates,
        clusters,
        keyframes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::gaussian_blur;
    use crate::synth::{render_slide, SlideStyle};

    fn constant(value: u8, index: u64, ts: f64) -> FrameBuffer {
        FrameBuffer::filled(8, 8, value).unwrap().with_position(index, ts)
    }

    fn stream(values: &[u8], fps: f64) -> Vec<FrameBuffer> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| constant(v, i as u64, i as f64 / fps))
            .collect()
    }

    #[test]
    fn sample_every_examples() {
        let s = stream(&[0; 10], 1.0);
        assert_eq!(sample_every(&s, 2.0).unwrap().indices(), vec![0, 2, 4, 6, 8]);
        assert_eq!(sample_every(&s, 100.0).unwrap().indices(), vec![0]);
        assert_eq!(sample_every(&s, 1.0).unwrap().indices(), (0..10).collect::<Vec<_>>());
        assert!(sample_every(&s, 0.0).is_err());
        assert!(sample_every(std::iter::empty(), 1.0).unwrap().is_empty());
    }

    #[test]
    fn sample_every_late_start_does_not_duplicate() {
        // Stream starting at t=5 with interval 2: slots 0..2 all land on t=5.
        let s: Vec<_> = (0..6).map(|i| constant(0, i, 5.0 + i as f64)).collect();
        let ts: Vec<f64> = sample_every(&s, 2.0)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.timestamp_s)
            .collect();
        assert_eq!(ts, vec![5.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn pixel_diff_examples() {
        let same = stream(&[50; 6], 1.0);
        assert_eq!(pixel_diff_keyframes(&same, 12.0).unwrap().indices(), vec![0]);
        let alternating = stream(&[0, 255, 0, 255, 0], 1.0);
        assert_eq!(
            pixel_diff_keyframes(&alternating, 100.0).unwrap().indices(),
            vec![0, 1, 2, 3, 4]
        );
        assert_eq!(pixel_diff_keyframes(&alternating, 255.0).unwrap().len(), 1);
        assert!(pixel_diff_keyframes(&alternating, 0.0).is_err());
    }

    #[test]
    fn pixel_diff_compares_against_last_selected() {
        // A slow fade of +5 per frame: per-frame diffs never exceed 12, but
        // the accumulated drift from the last keyframe does.
        let fade: Vec<u8> = (0..10).map(|i| i * 5).collect();
        let s = stream(&fade, 1.0);
        assert_eq!(pixel_diff_keyframes(&s, 12.0).unwrap().indices(), vec![0, 3, 6, 9]);
    }

    #[test]
    fn pixel_diff_rejects_dimension_change() {
        let s = vec![
            constant(0, 0, 0.0),
            FrameBuffer::filled(4, 4, 0).unwrap().with_position(1, 1.0),
        ];
        assert!(matches!(
            pixel_diff_keyframes(&s, 10.0),
            Err(KeyframeError::DimensionChange { index: 1 })
        ));
    }

    #[test]
    fn two_slides_two_keyframes() {
        let style = SlideStyle::default();
        let a = render_slide(&["NPTEL", "Digital Image Processing"], &style);
        let b = render_slide(&["Prof. K S Rao", "Computer Science"], &style);
        let inter = frames::mean_abs_diff(&a, &b).unwrap();
        let s: Vec<_> = (0..60)
            .map(|i| if i < 30 { a.clone() } else { b.clone() }.with_position(i, i as f64))
            .collect();
        let set = pixel_diff_keyframes(&s, inter / 2.0).unwrap();
        assert_eq!(set.indices(), vec![0, 30]);
    }

    #[test]
    fn probe_parsing() {
        let text = "frame,I,0.000000\nframe,P,0.040000\nframe,B,0.080000\nframe,P,0.120000\nframe,I,0.160000\nframe,B,0.200000\n";
        let report = ProbeReport::parse_csv(text).unwrap();
        assert_eq!(report.frames.len(), 6);
        assert_eq!(select_iframes(&report).indices(), vec![0, 4]);

        // ffprobe's own field order, trailing empty column.
        let swapped = ProbeReport::parse_csv("frame,0.5,P,\nframe,N/A,I\n").unwrap();
        assert_eq!(swapped.frames[0].picture_type, PictureType::P);
        assert_eq!(swapped.frames[1].timestamp_s, 0.5);

        assert_eq!(
            ProbeReport::parse_csv("frame,I,0\nframe,?,0.1\n"),
            Err(ProbeParseError::UnknownPictureType {
                line: 2,
                value: "?".into()
            })
        );
        assert!(matches!(
            ProbeReport::parse_csv("stream,I,0\n"),
            Err(ProbeParseError::NotAFrameRow { line: 1, .. })
        ));
        assert!(matches!(
            ProbeReport::parse_csv("frame,I\n"),
            Err(ProbeParseError::Malformed { line: 1, .. })
        ));
        let no_i = ProbeReport::parse_csv("frame,P,0\nframe,B,1\n").unwrap();
        assert!(select_iframes(&no_i).is_empty());
    }

    #[test]
    fn candidate_examples() {
        let s = stream(&[9; 11], 1.0);
        // 10 diffs, all zero: each window's first frame (1 and 6).
        assert_eq!(candidate_frames(&s, 5).unwrap(), vec![1, 6]);

        let mut values = vec![0u8; 11];
        // Diff spikes at i=3 (0 -> 200) and i=7 (200 -> 0).
        for v in values.iter_mut().take(7).skip(3) {
            *v = 200;
        }
        let s = stream(&values, 1.0);
        assert_eq!(candidate_frames(&s, 5).unwrap(), vec![3, 7]);

        let mut values = vec![0u8; 8];
        values[5..].fill(100);
        assert_eq!(candidate_frames(&stream(&values, 1.0), 50).unwrap(), vec![5]);

        assert!(candidate_frames(&stream(&[0], 1.0), 3).unwrap().is_empty());
        assert!(matches!(candidate_frames(&s, 1), Err(KeyframeError::InvalidWindow(1))));
    }

    #[test]
    fn clustering_examples() {
        let style = SlideStyle::default();
        let a = render_slide(&["NPTEL", "Indian Institute of Technology"], &style);
        let b = render_slide(
            &["", "", "", "", "Prof. Madhavan Mukund", "Chennai Mathematical"],
            &style,
        );
        let ha = average_hash(&a);
        let hb = average_hash(&b);
        assert!(
            hamming(ha, hb) > 10,
            "synthetic slides too similar: {}",
            hamming(ha, hb)
        );

        let same: Vec<_> = (0..4).map(|i| a.clone().with_position(i, i as f64)).collect();
        let clusters = cluster_candidates(&same, 0).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, vec![0, 1, 2, 3]);

        let mixed = vec![
            a.clone().with_position(0, 0.0),
            a.clone().with_position(1, 1.0),
            b.clone().with_position(2, 2.0),
        ];
        assert_eq!(cluster_candidates(&mixed, 10).unwrap().len(), 2);
        assert_eq!(cluster_candidates(&mixed, 64).unwrap().len(), 1);
        assert!(cluster_candidates(&mixed, 65).is_err());
    }

    #[test]
    fn best_frame_prefers_sharp() {
        let style = SlideStyle::default();
        let sharp = render_slide(&["NPTEL", "Department of Physics"], &style).with_position(4, 4.0);
        let blurred = gaussian_blur(&sharp, 2.0).unwrap().with_position(2, 2.0);
        let cluster = CandidateCluster {
            members: vec![2, 4],
            signature: 0,
        };
        let frames = vec![blurred, sharp];
        let set = best_per_cluster(&[cluster], &frames, DEFAULT_BRIGHTNESS_FLOOR).unwrap();
        assert_eq!(set.indices(), vec![4]);
        assert_eq!(set.entries[0].reason, SelectionReason::ClusterBest);
    }

    #[test]
    fn best_frame_edge_cases() {
        let frames = vec![constant(50, 0, 0.0), constant(50, 1, 1.0), constant(50, 2, 2.0)];
        let single = CandidateCluster {
            members: vec![2],
            signature: 0,
        };
        let tie = CandidateCluster {
            members: vec![0, 1],
            signature: 0,
        };
        let set = best_per_cluster(&[single, tie], &frames, 10.0).unwrap();
        assert_eq!(set.indices(), vec![0, 2]);
        assert_eq!(set.entries[1].reason, SelectionReason::Unclustered);

        let empty = CandidateCluster {
            members: vec![],
            signature: 0,
        };
        assert!(matches!(
            best_per_cluster(&[empty], &frames, 10.0),
            Err(KeyframeError::EmptyCluster(0))
        ));
    }

    #[test]
    fn brightness_floor_excludes_dark_frames() {
        let style = SlideStyle::default();
        // A dim checkerboard is far sharper than a lit slide but too dark.
        let (w, h) = (style.width, style.height);
        let texture = (0..h)
            .flat_map(|y| (0..w).map(move |x| if (x + y) % 2 == 0 { 0 } else { 18 }))
            .collect();
        let dark = FrameBuffer::gray(w, h, texture).unwrap().with_position(0, 0.0);
        let lit = render_slide(&["a"], &style).with_position(1, 1.0);
        assert!(brightness(&dark) < DEFAULT_BRIGHTNESS_FLOOR);
        assert!(blur_index(&dark) > blur_index(&lit));
        let cluster = CandidateCluster {
            members: vec![0, 1],
            signature: 0,
        };
        let frames = vec![dark.clone(), lit];
        let set = best_per_cluster(std::slice::from_ref(&cluster), &frames, DEFAULT_BRIGHTNESS_FLOOR).unwrap();
        assert_eq!(set.indices(), vec![1]);
        // All members dark: fall back to the sharpest.
        let both_dark = vec![dark.clone(), constant(0, 1, 1.0)];
        let both_dark: Vec<_> = both_dark
            .into_iter()
            .map(|f| resize_to(&f, dark.width(), dark.height()))
            .collect();
        let set = best_per_cluster(&[cluster], &both_dark, DEFAULT_BRIGHTNESS_FLOOR).unwrap();
        assert_eq!(set.indices(), vec![0]);
    }

    fn resize_to(f: &FrameBuffer, w: u32, h: u32) -> FrameBuffer {
        frames::resize_nearest(f, w, h).unwrap()
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("pixel-diff".parse::<Strategy>().unwrap(), Strategy::PixelDiff);
        assert!("ffprobe".parse::<Strategy>().is_err());
    }
}
