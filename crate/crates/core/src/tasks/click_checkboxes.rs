use crate::error::Result;
use crate::render::{Framebuffer, Rect, BLACK};
use crate::rng::SplitMix64;

use super::layout::{draw_button, hits, pick_words, BORDER};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

const ROW: u32 = 22;
const BOX: u32 = 14;

/// A column of labelled checkboxes and a Submit button. Boxes toggle freely; Submit
/// succeeds iff exactly the named boxes are checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickCheckboxes {
    pub boxes: Vec<(Rect, &'static str)>,
    pub checked: Vec<bool>,
    pub wanted: Vec<bool>,
    pub submit: Rect,
}

impl ClickCheckboxes {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let n = rng.range_inclusive(3, 6) as usize;
        let labels = pick_words(rng, n);
        let x = rng.range_inclusive(8, 60) as u32;
        let column_h = n as u32 * ROW + 4 + 18;
        let y = rng.range_inclusive(6, (size.height - 4 - column_h) as i64) as u32;
        let boxes = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (Rect::new(x, y + i as u32 * ROW, BOX, BOX), l))
            .collect();
        let k = rng.range_inclusive(1, n.min(3) as i64) as usize;
        let mut wanted = vec![false; n];
        for i in rng.sample_indices(n, k) {
            wanted[i] = true;
        }
        let submit = Rect::new(x, y + n as u32 * ROW + 4, 50, 18);
        ClickCheckboxes { boxes, checked: vec![false; n], wanted, submit }
    }

    fn all_correct(&self) -> bool {
        self.checked == self.wanted
    }
}

impl TaskLogic for ClickCheckboxes {
    fn instruction(&self) -> String {
        let names: Vec<&str> = self
            .boxes
            .iter()
            .zip(&self.wanted)
            .filter(|(_, &w)| w)
            .map(|((_, l), _)| *l)
            .collect();
        format!("Select {} and click Submit.", names.join(", "))
    }

    fn widgets(&self) -> Vec<Widget> {
        let mut ws: Vec<Widget> =
            self.boxes.iter().map(|(r, l)| Widget::labeled(WidgetKind::Checkbox, *r, l)).collect();
        ws.push(Widget::labeled(WidgetKind::Button, self.submit, "Submit"));
        ws
    }

    fn render(&self, frame: &mut Framebuffer) {
        for ((r, label), &on) in self.boxes.iter().zip(&self.checked) {
            frame.stroke_rect(*r, BORDER);
            if on {
                frame.fill_rect(Rect::new(r.x + 3, r.y + 3, r.w - 6, r.h - 6), BLACK);
            }
            frame.draw_text(r.right() + 5, r.y + (r.h - 7) / 2, label, BLACK, frame.width());
        }
        draw_button(frame, self.submit, "Submit");
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        if let Some(i) = self.boxes.iter().position(|(r, _)| hits(r, p)) {
            self.checked[i] = !self.checked[i];
            return None;
        }
        if hits(&self.submit, p) {
            return Some(if self.all_correct() { 1.0 } else { -1.0 });
        }
        None
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        let mut out: Vec<Intent> = self
            .boxes
            .iter()
            .zip(self.checked.iter().zip(&self.wanted))
            .filter(|(_, (c, w))| c != w)
            .map(|((r, _), _)| Intent::ClickRect(*r))
            .collect();
        out.push(Intent::ClickRect(self.submit));
        Ok(out)
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        let mut out: Vec<Rect> = self
            .boxes
            .iter()
            .zip(self.checked.iter().zip(&self.wanted))
            .filter(|(_, (c, w))| c == w)
            .map(|((r, _), _)| *r)
            .collect();
        if !self.all_correct() {
            out.push(self.submit);
        }
        out
    }
}
