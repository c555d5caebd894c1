use crate::error::Result;
use crate::render::{Framebuffer, Rect};
use crate::rng::SplitMix64;

use super::layout::{draw_button, hits, pick_words, place_disjoint};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

/// Three to six labelled buttons; clicking any but the named one fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickButton {
    pub buttons: Vec<(Rect, &'static str)>,
    pub target: usize,
}

impl ClickButton {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let n = rng.range_inclusive(3, 6) as usize;
        let labels = pick_words(rng, n);
        let rects = place_disjoint(rng, &vec![(44, 18); n], size, 4, 3);
        let target = rng.below(n as u64) as usize;
        ClickButton { buttons: rects.into_iter().zip(labels).collect(), target }
    }
}

impl TaskLogic for ClickButton {
    fn instruction(&self) -> String {
        format!("Click on the \"{}\" button.", self.buttons[self.target].1)
    }

    fn widgets(&self) -> Vec<Widget> {
        self.buttons.iter().map(|(r, l)| Widget::labeled(WidgetKind::Button, *r, l)).collect()
    }

    fn render(&self, frame: &mut Framebuffer) {
        for (r, l) in &self.buttons {
            draw_button(frame, *r, l);
        }
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        let hit = self.buttons.iter().position(|(r, _)| hits(r, p))?;
        Some(if hit == self.target { 1.0 } else { -1.0 })
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        Ok(vec![Intent::ClickRect(self.buttons[self.target].0)])
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        self.buttons
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.target)
            .map(|(_, (r, _))| *r)
            .collect()
    }
}
