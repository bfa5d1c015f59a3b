//! PNG reading and writing for frame buffers.

use std::path::Path;

use image::ExtendedColorType;
use slidemeta_core::frames::FrameBuffer;

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("cannot read image {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write image {path}: {message}")]
    Write { path: String, message: String },
}

/// Loads any supported image as an RGB frame.
pub fn load_rgb(path: &Path) -> Result<FrameBuffer, ImageIoError> {
    let err = |message: String| ImageIoError::Read {
        path: path.display().to_string(),
        message,
    };
    let img = image::open(path).map_err(|e| err(e.to_string()))?.into_rgb8();
    let (w, h) = img.dimensions();
    FrameBuffer::rgb(w, h, img.into_raw()).map_err(|e| err(e.to_string()))
}

pub fn save_png(frame: &FrameBuffer, path: &Path) -> Result<(), ImageIoError> {
    let color = match frame.channels() {
        1 => ExtendedColorType::L8,
        _ => ExtendedColorType::Rgb8,
    };
    image::save_buffer_with_format(
        path,
        frame.data(),
        frame.width(),
        frame.height(),
        color,
        image::ImageFormat::Png,
    )
    .map_err(|e| ImageIoError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
