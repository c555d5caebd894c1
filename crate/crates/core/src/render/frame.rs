use serde::{Deserialize, Serialize};

use super::font::{self, ADVANCE, GLYPH_H};
use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];

/// Axis-aligned pixel rectangle, half-open: `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn contains(&self, px: i64, py: i64) -> bool {
        px >= self.x as i64 && py >= self.y as i64 && px < self.right() as i64 && py < self.bottom() as i64
    }

    /// Integer centre, `floor((x0 + x1) / 2)` on each axis.
    pub fn center(&self) -> (u32, u32) {
        ((self.x + self.right()) / 2, (self.y + self.bottom()) / 2)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    pub fn inside(&self, width: u32, height: u32) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Rect {
        Rect {
            x: (self.x as i64 + dx).max(0) as u32,
            y: (self.y as i64 + dy).max(0) as u32,
            w: self.w,
            h: self.h,
        }
    }
}

/// Row-major RGB8 image.
#[derive(Clone, PartialEq, Eq)]
pub struct Framebuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Framebuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Framebuffer({}x{}, digest {:016x})", self.width, self.height, super::digest(self))
    }
}

impl Framebuffer {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        assert!(width > 0 && height > 0, "framebuffer dimensions must be positive");
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            pixels.extend_from_slice(&fill);
        }
        Framebuffer { width, height, pixels }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Range("framebuffer dimensions must be positive".into()));
        }
        if pixels.len() != (width as usize) * (height as usize) * 3 {
            return Err(Error::Range(format!(
                "{} bytes do not match {width}x{height} RGB",
                pixels.len()
            )));
        }
        Ok(Framebuffer { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        ((y * self.width + x) * 3) as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, c: Rgb) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&c);
    }

    /// Sets the pixel if `(x, y)` lies inside the frame.
    pub fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height {
            self.set_pixel(x as u32, y as u32, c);
        }
    }

    pub fn fill_rect(&mut self, r: Rect, c: Rgb) {
        let x1 = r.right().min(self.width);
        let y1 = r.bottom().min(self.height);
        for y in r.y.min(y1)..y1 {
            for x in r.x.min(x1)..x1 {
                self.set_pixel(x, y, c);
            }
        }
    }

    pub fn stroke_rect(&mut self, r: Rect, c: Rgb) {
        if r.w == 0 || r.h == 0 {
            return;
        }
        for x in r.x..r.right() {
            self.put(x as i64, r.y as i64, c);
            self.put(x as i64, r.bottom() as i64 - 1, c);
        }
        for y in r.y..r.bottom() {
            self.put(r.x as i64, y as i64, c);
            self.put(r.right() as i64 - 1, y as i64, c);
        }
    }

    /// Draws `text` with its top-left at `(x, y)`. Glyph columns at or past `clip_right`
    /// are dropped; returns the x just past the last drawn glyph.
    pub fn draw_text(&mut self, x: u32, y: u32, text: &str, color: Rgb, clip_right: u32) -> u32 {
        let mut cx = x;
        for ch in text.chars() {
            if cx >= clip_right {
                break;
            }
            let g = font::glyph(ch);
            for (col, bits) in g.iter().enumerate() {
                let px = cx + col as u32;
                if px >= clip_right {
                    break;
                }
                for row in 0..GLYPH_H {
                    if bits >> row & 1 == 1 {
                        self.put(px as i64, (y + row) as i64, color);
                    }
                }
            }
            cx += ADVANCE;
        }
        cx
    }

    /// Text centred inside `r`, clipped to its right edge.
    pub fn draw_text_centered(&mut self, r: Rect, text: &str, color: Rgb) {
        let tw = font::text_width(text).saturating_sub(1);
        let x = r.x + r.w.saturating_sub(tw) / 2;
        let y = r.y + r.h.saturating_sub(GLYPH_H) / 2;
        self.draw_text(x, y, text, color, r.right());
    }

    /// Copies `src` with its top-left at `(x, y)`, clipping to this frame.
    pub fn blit(&mut self, src: &Framebuffer, x: u32, y: u32) {
        let w = src.width.min(self.width.saturating_sub(x));
        let h = src.height.min(self.height.saturating_sub(y));
        for row in 0..h {
            let so = src.offset(0, row);
            let d = self.offset(x, y + row);
            let n = (w * 3) as usize;
            self.pixels[d..d + n].copy_from_slice(&src.pixels[so..so + n]);
        }
    }

    pub fn crop(&self, r: Rect) -> Framebuffer {
        let mut out = Framebuffer::new(r.w, r.h, BLACK);
        for y in 0..r.h {
            for x in 0..r.w {
                out.set_pixel(x, y, self.pixel(r.x + x, r.y + y));
            }
        }
        out
    }
}
