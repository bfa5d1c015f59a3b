//! Raster type and the image arithmetic used by keyframe selection and OCR
//! preprocessing.
//!
//! Every operation is a pure function over an immutable [`FrameBuffer`].
//! Convolutions use replicate padding and accumulate in `f64`, clamping only
//! when storing back to 8-bit samples.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(u8),
    #[error("frame dimensions must be non-zero (got {width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error("sample buffer holds {actual} bytes, expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("frame dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (u32, u32, u8),
        right: (u32, u32, u8),
    },
    #[error("gaussian sigma must be positive and finite (got {0})")]
    InvalidSigma(f64),
    #[error("timestamp must be finite and non-negative (got {0})")]
    InvalidTimestamp(f64),
}

/// A decoded 8-bit raster with its position in the source stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
    pub frame_index: u64,
    pub timestamp_s: f64,
}

impl FrameBuffer {
    pub fn new(
        width: u32,
        height: u32,
        channels: u8,
        data: Vec<u8>,
        frame_index: u64,
        timestamp_s: f64,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroDimension { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(FrameError::UnsupportedChannels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(FrameError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        if !timestamp_s.is_finite() || timestamp_s < 0.0 {
            return Err(FrameError::InvalidTimestamp(timestamp_s));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            frame_index,
            timestamp_s,
        })
    }

    /// Single-channel frame from row-major gray samples.
    pub fn gray(width: u32, height: u32, data: Vec<u8>) -> Result<Self, FrameError> {
        Self::new(width, height, 1, data, 0, 0.0)
    }

    /// Three-channel frame from interleaved RGB samples.
    pub fn rgb(width: u32, height: u32, data: Vec<u8>) -> Result<Self, FrameError> {
        Self::new(width, height, 3, data, 0, 0.0)
    }

    /// Constant single-channel frame.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, FrameError> {
        Self::gray(width, height, vec![value; width as usize * height as usize])
    }

    pub fn with_position(mut self, frame_index: u64, timestamp_s: f64) -> Self {
        self.frame_index = frame_index;
        self.timestamp_s = timestamp_s;
        self
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    fn shape(&self) -> (u32, u32, u8) {
        (self.width, self.height, self.channels)
    }

    /// Same geometry and position, new samples. Caller guarantees length.
    fn derive(&self, channels: u8, data: Vec<u8>) -> FrameBuffer {
        debug_assert_eq!(
            data.len(),
            self.width as usize * self.height as usize * channels as usize
        );
        FrameBuffer {
            width: self.width,
            height: self.height,
            channels,
            data,
            frame_index: self.frame_index,
            timestamp_s: self.timestamp_s,
        }
    }
}

/// ITU-R 601 luma, rounded half-up. Integer form avoids float rounding drift.
#[inline]
fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn to_grayscale(f: &FrameBuffer) -> Result<FrameBuffer, FrameError> {
    match f.channels {
        1 => Ok(f.clone()),
        3 => {
            let data = f.data.chunks_exact(3).map(|px| luma(px[0], px[1], px[2])).collect();
            Ok(f.derive(1, data))
        }
        c => Err(FrameError::UnsupportedChannels(c)),
    }
}

/// Gray view of a frame, borrowing when it is already single-channel.
fn gray_samples(f: &FrameBuffer) -> std::borrow::Cow<'_, [u8]> {
    if f.channels == 1 {
        std::borrow::Cow::Borrowed(&f.data)
    } else {
        std::borrow::Cow::Owned(f.data.chunks_exact(3).map(|px| luma(px[0], px[1], px[2])).collect())
    }
}

pub fn resize_nearest(f: &FrameBuffer, width: u32, height: u32) -> Result<FrameBuffer, FrameError> {
    if width == 0 || height == 0 {
        return Err(FrameError::ZeroDimension { width, height });
    }
    let ch = f.channels as usize;
    let (sw, sh) = (f.width as u64, f.height as u64);
    let mut data = Vec::with_capacity(width as usize * height as usize * ch);
    for y in 0..height as u64 {
        let sy = (y * sh / height as u64) as usize;
        let row = sy * sw as usize;
        for x in 0..width as u64 {
            let sx = (x * sw / width as u64) as usize;
            let at = (row + sx) * ch;
            data.extend_from_slice(&f.data[at..at + ch]);
        }
    }
    Ok(FrameBuffer {
        width,
        height,
        channels: f.channels,
        data,
        frame_index: f.frame_index,
        timestamp_s: f.timestamp_s,
    })
}

/// Mean absolute per-sample deviation, in `[0, 255]`.
pub fn mean_abs_diff(a: &FrameBuffer, b: &FrameBuffer) -> Result<f64, FrameError> {
    if a.shape() != b.shape() {
        return Err(FrameError::DimensionMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let total: u64 = a.data.iter().zip(&b.data).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
    Ok(total as f64 / a.data.len() as f64)
}

/// Mean gray level.
pub fn brightness(f: &FrameBuffer) -> f64 {
    let gray = gray_samples(f);
    let total: u64 = gray.iter().map(|&v| v as u64).sum();
    total as f64 / gray.len() as f64
}

/// Replicate-padded sample lookup on a single-channel plane.
#[inline]
fn at_clamped(plane: &[u8], w: usize, h: usize, x: isize, y: isize) -> i32 {
    let cx = x.clamp(0, w as isize - 1) as usize;
    let cy = y.clamp(0, h as isize - 1) as usize;
    plane[cy * w + cx] as i32
}

/// Variance of the 4-neighbour Laplacian response. Higher means sharper.
pub fn blur_index(f: &FrameBuffer) -> f64 {
    let gray = gray_samples(f);
    let (w, h) = (f.width as usize, f.height as usize);
    let n = (w * h) as f64;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = at_clamped(&gray, w, h, x, y);
            let lap = 4 * c
                - at_clamped(&gray, w, h, x - 1, y)
                - at_clamped(&gray, w, h, x + 1, y)
                - at_clamped(&gray, w, h, x, y - 1)
                - at_clamped(&gray, w, h, x, y + 1);
            let v = lap as f64;
            sum += v;
            sum_sq += v * v;
        }
    }
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}

/// Otsu threshold over a 256-bin histogram: samples `<= t` form the dark
/// class. Returns `None` for single-valued histograms.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let mut weight_dark = 0.0f64;
    let mut sum_dark = 0.0f64;
    let mut best: Option<(u8, f64)> = None;
    for (t, &count) in hist.iter().enumerate().take(255) {
        weight_dark += count as f64;
        sum_dark += t as f64 * count as f64;
        let weight_light = total_f - weight_dark;
        if weight_dark == 0.0 || weight_light == 0.0 {
            continue;
        }
        let mean_dark = sum_dark / weight_dark;
        let mean_light = (sum_all - sum_dark) / weight_light;
        let between = weight_dark * weight_light * (mean_dark - mean_light).powi(2);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t as u8, between));
        }
    }
    best.map(|(t, _)| t)
}

/// Two-level image via Otsu's threshold on the gray histogram.
/// Single-valued inputs come out all-255.
pub fn binarize(f: &FrameBuffer) -> FrameBuffer {
    let gray = gray_samples(f);
    let mut hist = [0u64; 256];
    for &v in gray.iter() {
        hist[v as usize] += 1;
    }
    let data = match otsu_threshold(&hist) {
        Some(t) => gray.iter().map(|&v| if v > t { 255 } else { 0 }).collect(),
        None => vec![255; gray.len()],
    };
    f.derive(1, data)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let norm: f64 = raw.iter().sum();
    raw.into_iter().map(|k| k / norm).collect()
}

/// Separable Gaussian blur, radius `ceil(3σ)`, channels blurred independently.
pub fn gaussian_blur(f: &FrameBuffer, sigma: f64) -> Result<FrameBuffer, FrameError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(FrameError::InvalidSigma(sigma));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h, ch) = (f.width as isize, f.height as isize, f.channels as usize);

    let mut horizontal = vec![0.0f64; f.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (k, weight) in kernel.iter().enumerate() {
                    let sx = (x + k as isize - radius).clamp(0, w - 1);
                    acc += weight * f.data[((y * w + sx) as usize) * ch + c] as f64;
                }
                horizontal[((y * w + x) as usize) * ch + c] = acc;
            }
        }
    }

    let mut data = vec![0u8; f.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (k, weight) in kernel.iter().enumerate() {
                    let sy = (y + k as isize - radius).clamp(0, h - 1);
                    acc += weight * horizontal[((sy * w + x) as usize) * ch + c];
                }
                data[((y * w + x) as usize) * ch + c] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(f.derive(f.channels, data))
}

/// Sobel gradient magnitude on the gray plane, clamped to `[0, 255]`.
pub fn edge_map(f: &FrameBuffer) -> FrameBuffer {
    let gray = gray_samples(f);
    let (w, h) = (f.width as usize, f.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| at_clamped(&gray, w, h, x + dx, y + dy);
            let gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
            let mag = ((gx * gx + gy * gy) as f64).sqrt();
            data.push(mag.round().min(255.0) as u8);
        }
    }
    f.derive(1, data)
}

/// 64-bit average hash: gray, 64x64 nearest thumbnail, 8x8 block means,
/// one bit per block set when the block is brighter than the overall mean.
/// Bit 63 is the top-left block.
pub fn average_hash(f: &FrameBuffer) -> u64 {
    let thumb = resize_nearest(&to_grayscale(f).expect("channels validated"), 64, 64).expect("non-zero thumbnail");
    let mut blocks = [0u32; 64];
    for (i, &v) in thumb.data.iter().enumerate() {
        let (x, y) = (i % 64, i / 64);
        blocks[(y / 8) * 8 + x / 8] += v as u32;
    }
    // Compare block sums against the mean block sum; scaling both by 64
    // keeps the comparison exact in integers.
    let total: u32 = blocks.iter().sum();
    blocks
        .iter()
        .fold(0u64, |hash, &block| (hash << 1) | u64::from(block * 64 > total))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}
