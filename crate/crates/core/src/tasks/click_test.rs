use crate::error::Result;
use crate::render::{Framebuffer, Rect};
use crate::rng::SplitMix64;

use super::layout::{draw_button, hits, place_disjoint};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

/// A single button; clicking it succeeds, clicks elsewhere do nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTest {
    pub button: Rect,
}

impl ClickTest {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let w = rng.range_inclusive(58, 72) as u32;
        let h = rng.range_inclusive(16, 24) as u32;
        let button = place_disjoint(rng, &[(w, h)], size, 4, 0)[0];
        ClickTest { button }
    }
}

impl TaskLogic for ClickTest {
    fn instruction(&self) -> String {
        "Click the button.".to_string()
    }

    fn widgets(&self) -> Vec<Widget> {
        vec![Widget::labeled(WidgetKind::Button, self.button, "Click Me!")]
    }

    fn render(&self, frame: &mut Framebuffer) {
        draw_button(frame, self.button, "Click Me!");
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        hits(&self.button, p).then_some(1.0)
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        Ok(vec![Intent::ClickRect(self.button)])
    }
}

/// Buttons `ONE` and `TWO`; the instruction names one. Any click on the other fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTest2 {
    pub one: Rect,
    pub two: Rect,
    pub target_is_one: bool,
}

impl ClickTest2 {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let rects = place_disjoint(rng, &[(40, 20), (40, 20)], size, 4, 4);
        ClickTest2 { one: rects[0], two: rects[1], target_is_one: rng.below(2) == 0 }
    }

    fn target(&self) -> Rect {
        if self.target_is_one { self.one } else { self.two }
    }

    fn other(&self) -> Rect {
        if self.target_is_one { self.two } else { self.one }
    }
}

impl TaskLogic for ClickTest2 {
    fn instruction(&self) -> String {
        format!("Click button {}.", if self.target_is_one { "ONE" } else { "TWO" })
    }

    fn widgets(&self) -> Vec<Widget> {
        vec![
            Widget::labeled(WidgetKind::Button, self.one, "ONE"),
            Widget::labeled(WidgetKind::Button, self.two, "TWO"),
        ]
    }

    fn render(&self, frame: &mut Framebuffer) {
        draw_button(frame, self.one, "ONE");
        draw_button(frame, self.two, "TWO");
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        if hits(&self.target(), p) {
            Some(1.0)
        } else if hits(&self.other(), p) {
            Some(-1.0)
        } else {
            None
        }
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        Ok(vec![Intent::ClickRect(self.target())])
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        vec![self.other()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_button_fails() {
        let mut rng = SplitMix64::new(5);
        let mut t = ClickTest2::generate(&mut rng, FrameSize { width: 160, height: 182 });
        let (ox, oy) = t.other().center();
        assert_eq!(t.on_click((ox as i64, oy as i64)), Some(-1.0));
        let (tx, ty) = t.target().center();
        assert_eq!(t.on_click((tx as i64, ty as i64)), Some(1.0));
    }
}
