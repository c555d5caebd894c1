//! Observation composition: instruction banner, cursor, mouse-down marker and the
//! recent-action strip drawn over a task frame.

pub mod font;
mod frame;

use std::io::Cursor;

use serde::{Deserialize, Serialize};

pub use frame::{Framebuffer, Rect, Rgb, BLACK, WHITE};

use crate::error::{Error, Result};
use font::{ADVANCE, GLYPH_H};

pub const BANNER_YELLOW: Rgb = [255, 221, 0];
pub const MARKER_RED: Rgb = [220, 0, 0];

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the frame bytes.
pub fn digest(frame: &Framebuffer) -> u64 {
    frame.bytes().iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Cursor glyph: 0 transparent, 1 ink, 2 outline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorSprite {
    pub cells: Vec<Vec<u8>>,
    pub hotspot: (u32, u32),
}

impl CursorSprite {
    /// 5x5 black crosshair with a one-pixel white outline; hotspot at the centre.
    pub fn crosshair() -> Self {
        let mut cells = vec![vec![0u8; 7]; 7];
        for i in 1..6 {
            cells[3][i] = 1;
            cells[i][3] = 1;
        }
        let ink = cells.clone();
        for y in 0..7i32 {
            for x in 0..7i32 {
                if ink[y as usize][x as usize] == 1 {
                    continue;
                }
                let near_ink = (-1..=1).any(|dy| {
                    (-1..=1).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        (0..7).contains(&nx) && (0..7).contains(&ny) && ink[ny as usize][nx as usize] == 1
                    })
                });
                if near_ink {
                    cells[y as usize][x as usize] = 2;
                }
            }
        }
        CursorSprite { cells, hotspot: (3, 3) }
    }

    fn draw(&self, frame: &mut Framebuffer, x: u32, y: u32) {
        for (row, line) in self.cells.iter().enumerate() {
            for (col, &cell) in line.iter().enumerate() {
                let color = match cell {
                    1 => BLACK,
                    2 => WHITE,
                    _ => continue,
                };
                let px = x as i64 + col as i64 - self.hotspot.0 as i64;
                let py = y as i64 + row as i64 - self.hotspot.1 as i64;
                frame.put(px, py, color);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayConfig {
    pub banner_height_px: u32,
    pub cursor: CursorSprite,
    /// Filled while the mouse button is held.
    pub marker: Rect,
    /// Number of most recent actions shown; 0 disables the strip.
    pub history_len: usize,
    pub history_separator: String,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        OverlayConfig {
            banner_height_px: 28,
            cursor: CursorSprite::crosshair(),
            marker: Rect::new(153, 1, 6, 6),
            history_len: 5,
            history_separator: "<s>".to_string(),
        }
    }
}

impl OverlayConfig {
    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.banner_height_px >= height {
            return Err(Error::Config("banner taller than the observation".into()));
        }
        if self.banner_height_px < 3 * (GLYPH_H + 2) {
            return Err(Error::Config("banner too short for two text lines and history".into()));
        }
        if !self.marker.inside(width, self.banner_height_px) {
            return Err(Error::Config("mouse-down marker must lie inside the banner".into()));
        }
        Ok(())
    }

    fn text_rows(&self) -> [u32; 3] {
        [2, 2 + GLYPH_H + 2, 2 + 2 * (GLYPH_H + 2)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub frame: Framebuffer,
    pub step_index: u32,
    pub digest: u64,
}

impl Observation {
    pub fn new(frame: Framebuffer, step_index: u32) -> Self {
        let digest = digest(&frame);
        Observation { frame, step_index, digest }
    }

    pub fn to_png(&self) -> Vec<u8> {
        encode_png(&self.frame)
    }
}

/// Greedy word wrap into at most `max_lines` lines of `max_chars`; the rest is dropped.
fn wrap_instruction(text: &str, max_chars: usize, max_lines: usize) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut current = String::new();
    for word in text.split_whitespace() {
        let mut word = word.to_string();
        loop {
            let needed = if current.is_empty() { word.len() } else { current.len() + 1 + word.len() };
            if needed <= max_chars {
                if !current.is_empty() {
                    current.push(' ');
                }
                current.push_str(&word);
                break;
            }
            if current.is_empty() {
                // Hard-split a word longer than a whole line.
                let tail = word.split_off(max_chars);
                lines.push(std::mem::replace(&mut word, tail));
            } else {
                lines.push(std::mem::take(&mut current));
            }
            if lines.len() >= max_lines {
                return lines;
            }
        }
    }
    if !current.is_empty() && lines.len() < max_lines {
        lines.push(current);
    }
    lines
}

/// The recent-action strip text, e.g. `"click 1 2<s>key a"`.
pub fn history_text(recent_actions: &[String], cfg: &OverlayConfig) -> String {
    let start = recent_actions.len().saturating_sub(cfg.history_len);
    recent_actions[start..].join(&cfg.history_separator)
}

/// Stacks the banner over `task_frame` and draws the cursor, the mouse-down marker
/// and the history strip. `cursor_px` is in full-observation coordinates.
pub fn compose(
    task_frame: &Framebuffer,
    instruction: &str,
    cursor_px: (u32, u32),
    mouse_down: bool,
    recent_actions: &[String],
    cfg: &OverlayConfig,
    step_index: u32,
) -> Result<Observation> {
    let width = task_frame.width();
    let height = task_frame.height() + cfg.banner_height_px;
    if cursor_px.0 >= width || cursor_px.1 >= height {
        return Err(Error::Range(format!("cursor {cursor_px:?} outside {width}x{height}")));
    }
    let mut out = Framebuffer::new(width, height, BANNER_YELLOW);
    out.blit(task_frame, 0, cfg.banner_height_px);

    let rows = cfg.text_rows();
    let text_right = if cfg.marker.y < rows[1] { cfg.marker.x.saturating_sub(2) } else { width - 2 };
    let max_chars = (text_right.saturating_sub(2) / ADVANCE) as usize;
    for (line, y) in wrap_instruction(instruction, max_chars.max(1), 2).iter().zip(rows) {
        out.draw_text(2, y, line, BLACK, text_right);
    }

    if cfg.history_len > 0 && !recent_actions.is_empty() {
        let text = history_text(recent_actions, cfg);
        let fit = ((width - 4) / ADVANCE) as usize;
        let chars: Vec<char> = text.chars().collect();
        // Keep the newest actions when the strip overflows.
        let shown: String = chars[chars.len().saturating_sub(fit)..].iter().collect();
        out.draw_text(2, rows[2], &shown, BLACK, width - 2);
    }

    if mouse_down {
        out.fill_rect(cfg.marker, MARKER_RED);
    }
    cfg.cursor.draw(&mut out, cursor_px.0, cursor_px.1);
    Ok(Observation::new(out, step_index))
}

pub fn encode_png(frame: &Framebuffer) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, frame.width(), frame.height());
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(frame.bytes()).expect("in-memory png body");
    }
    buf
}

pub fn decode_png(bytes: &[u8]) -> Result<Framebuffer> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::Format(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!("unsupported png layout {:?}/{:?}", info.color_type, info.bit_depth)));
    }
    buf.truncate(info.buffer_size());
    Framebuffer::from_raw(info.width, info.height, buf)
}
