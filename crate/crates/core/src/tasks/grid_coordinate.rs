use crate::error::Result;
use crate::render::{Framebuffer, Rect, BLACK};
use crate::rng::SplitMix64;

use super::layout::{hits, BORDER};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

const CELL: u32 = 20;

/// An `n x n` grid with column numbers on top and row numbers on the left. The
/// instruction names a cell as `(column, row)`; clicking any other cell fails.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCoordinate {
    pub n: u32,
    pub origin: (u32, u32),
    pub target: (u32, u32),
}

impl GridCoordinate {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let n = rng.range_inclusive(3, 5) as u32;
        let extent = n * CELL;
        let ox = rng.range_inclusive(14, (size.width - 4 - extent) as i64) as u32;
        let oy = rng.range_inclusive(14, (size.height - 4 - extent) as i64) as u32;
        let target = (rng.below(n as u64) as u32, rng.below(n as u64) as u32);
        GridCoordinate { n, origin: (ox, oy), target }
    }

    pub fn cell_rect(&self, col: u32, row: u32) -> Rect {
        Rect::new(self.origin.0 + col * CELL, self.origin.1 + row * CELL, CELL, CELL)
    }

    fn cell_at(&self, p: (i64, i64)) -> Option<(u32, u32)> {
        let extent = Rect::new(self.origin.0, self.origin.1, self.n * CELL, self.n * CELL);
        if !hits(&extent, p) {
            return None;
        }
        Some((
            ((p.0 - self.origin.0 as i64) / CELL as i64) as u32,
            ((p.1 - self.origin.1 as i64) / CELL as i64) as u32,
        ))
    }
}

impl TaskLogic for GridCoordinate {
    fn instruction(&self) -> String {
        format!("click the cell ({}, {})", self.target.0, self.target.1)
    }

    fn widgets(&self) -> Vec<Widget> {
        let mut out = Vec::new();
        for row in 0..self.n {
            for col in 0..self.n {
                out.push(Widget::labeled(WidgetKind::GridCell, self.cell_rect(col, row), &format!("({col}, {row})")));
            }
        }
        out
    }

    fn render(&self, frame: &mut Framebuffer) {
        for row in 0..self.n {
            for col in 0..self.n {
                frame.stroke_rect(self.cell_rect(col, row), BORDER);
            }
        }
        for i in 0..self.n {
            let label = i.to_string();
            frame.draw_text(self.origin.0 + i * CELL + 8, self.origin.1 - 9, &label, BLACK, frame.width());
            frame.draw_text(self.origin.0 - 8, self.origin.1 + i * CELL + 6, &label, BLACK, frame.width());
        }
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        let cell = self.cell_at(p)?;
        Some(if cell == self.target { 1.0 } else { -1.0 })
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        Ok(vec![Intent::ClickRect(self.cell_rect(self.target.0, self.target.1))])
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        let mut out = Vec::new();
        for row in 0..self.n {
            for col in 0..self.n {
                if (col, row) != self.target {
                    out.push(self.cell_rect(col, row));
                }
            }
        }
        out
    }
}
