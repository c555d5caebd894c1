use crate::error::Result;
use crate::render::{Framebuffer, Rect, Rgb};
use crate::rng::SplitMix64;

use super::layout::{hits, place_disjoint, BORDER};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

pub const PALETTE: [(&str, Rgb); 10] = [
    ("red", [230, 30, 30]),
    ("green", [40, 170, 60]),
    ("blue", [40, 80, 230]),
    ("yellow", [240, 220, 40]),
    ("orange", [250, 140, 20]),
    ("purple", [140, 50, 180]),
    ("pink", [250, 150, 200]),
    ("cyan", [40, 210, 220]),
    ("brown", [130, 80, 40]),
    ("gray", [128, 128, 128]),
];

/// Four to eight coloured squares; clicking a square of the wrong colour fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickColor {
    pub squares: Vec<(Rect, usize)>,
    pub target: usize,
}

impl ClickColor {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let n = rng.range_inclusive(4, 8) as usize;
        let colors = rng.sample_indices(PALETTE.len(), n);
        let rects = place_disjoint(rng, &vec![(20, 20); n], size, 4, 4);
        let target = rng.below(n as u64) as usize;
        ClickColor { squares: rects.into_iter().zip(colors).collect(), target }
    }

    pub fn target_color(&self) -> &'static str {
        PALETTE[self.squares[self.target].1].0
    }
}

impl TaskLogic for ClickColor {
    fn instruction(&self) -> String {
        format!("Click on the {} square.", self.target_color())
    }

    fn widgets(&self) -> Vec<Widget> {
        self.squares
            .iter()
            .map(|&(r, c)| Widget {
                kind: WidgetKind::ColoredSquare,
                rect: r,
                label: Some(PALETTE[c].0.to_string()),
                color: Some(PALETTE[c].1),
            })
            .collect()
    }

    fn render(&self, frame: &mut Framebuffer) {
        for &(r, c) in &self.squares {
            frame.fill_rect(r, PALETTE[c].1);
            frame.stroke_rect(r, BORDER);
        }
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        let hit = self.squares.iter().position(|(r, _)| hits(r, p))?;
        Some(if hit == self.target { 1.0 } else { -1.0 })
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        Ok(vec![Intent::ClickRect(self.squares[self.target].0)])
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        self.squares
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.target)
            .map(|(_, (r, _))| *r)
            .collect()
    }
}
