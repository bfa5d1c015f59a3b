//! Synthetic slide rendering for fixtures and test corpora.
//!
//! Text is drawn with a built-in 5x7 bitmap font (upper-case glyphs; lower
//! case renders with the same shapes), so no font files are needed.

use crate::frames::FrameBuffer;

const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;

/// Rows of a 5x7 glyph, most significant of the low five bits is the
/// leftmost column.
fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        ',' => [0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '&' => [0x0C, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0D],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        '\'' => [0x04, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00],
        ' ' => [0; 7],
        _ => [0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F],
    }
}

/// Visual parameters for [`render_slide`].
#[derive(Debug, Clone)]
pub struct SlideStyle {
    pub width: u32,
    pub height: u32,
    pub background: [u8; 3],
    pub ink: [u8; 3],
    /// Pixel size of one font cell.
    pub scale: u32,
    pub margin: u32,
    pub line_gap: u32,
}

impl Default for SlideStyle {
    fn default() -> Self {
        Self {
            width: 320,
            height: 180,
            background: [245, 245, 240],
            ink: [20, 30, 90],
            scale: 2,
            margin: 12,
            line_gap: 8,
        }
    }
}

/// Pixel height of one rendered text line at `scale`.
pub fn line_height(scale: u32) -> u32 {
    GLYPH_H * scale
}

/// Pixel width of `text` at `scale` (one blank column between glyphs).
pub fn text_width(text: &str, scale: u32) -> u32 {
    text.chars().count() as u32 * (GLYPH_W + 1) * scale
}

/// Draws `text` into an RGB buffer of `(width, height)` with its top-left
/// corner at `(left, top)`, clipping at the frame edge.
pub fn draw_text(
    frame: &mut [u8],
    (width, height): (u32, u32),
    (left, top): (u32, u32),
    text: &str,
    scale: u32,
    ink: [u8; 3],
) {
    let mut pen = left;
    for c in text.chars() {
        let rows = glyph(c);
        for (gy, bits) in rows.iter().enumerate() {
            for gx in 0..GLYPH_W {
                if bits & (0x10 >> gx) == 0 {
                    continue;
                }
                for sy in 0..scale {
                    for sx in 0..scale {
                        let x = pen + gx * scale + sx;
                        let y = top + gy as u32 * scale + sy;
                        if x < width && y < height {
                            let at = ((y * width + x) * 3) as usize;
                            frame[at..at + 3].copy_from_slice(&ink);
                        }
                    }
                }
            }
        }
        pen += (GLYPH_W + 1) * scale;
    }
}

/// Renders lines of text top-to-bottom onto a plain RGB slide.
pub fn render_slide(lines: &[&str], style: &SlideStyle) -> FrameBuffer {
    let (w, h) = (style.width, style.height);
    let mut data: Vec<u8> = style
        .background
        .iter()
        .copied()
        .cycle()
        .take((w * h * 3) as usize)
        .collect();
    let mut top = style.margin;
    for line in lines {
        draw_text(&mut data, (w, h), (style.margin, top), line, style.scale, style.ink);
        top += line_height(style.scale) + style.line_gap;
    }
    FrameBuffer::rgb(w, h, data).expect("dimensions from style")
}

/// Uniform RGB frame.
pub fn blank_slide(style: &SlideStyle, rgb: [u8; 3]) -> FrameBuffer {
    let data = rgb
        .iter()
        .copied()
        .cycle()
        .take((style.width * style.height * 3) as usize)
        .collect();
    FrameBuffer::rgb(style.width, style.height, data).expect("dimensions from style")
}

/// Replaces exactly one character of `text` with a different lower-case
/// ASCII letter chosen by `pick` (called with the number of choices and
/// expected to return an index below it). Empty text is returned as is.
pub fn substitute_one_char(text: &str, mut pick: impl FnMut(usize) -> usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return String::new();
    }
    let pos = pick(chars.len()) % chars.len();
    let original = chars[pos].to_ascii_lowercase();
    let choices: Vec<char> = ('a'..='z').filter(|&c| c != original).collect();
    let replacement = choices[pick(choices.len()) % choices.len()];
    chars
        .iter()
        .enumerate()
        .map(|(i, &c)| if i == pos { replacement } else { c })
        .collect()
}
