use crate::action::Modifier;
use crate::error::Result;
use crate::render::{Framebuffer, Rect, Rgb, BLACK, WHITE};
use crate::rng::SplitMix64;

use super::layout::{draw_button, hits, pick_words, place_disjoint, BORDER};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

const FOCUS: Rgb = [30, 90, 220];
const MAX_LEN: usize = 12;

/// A text field and a Submit button. Submitting scores the typed text by its
/// matched prefix against the target word.
#[derive(Debug, Clone, PartialEq)]
pub struct EnterText {
    pub target: String,
    pub field: Rect,
    pub submit: Rect,
    pub typed: String,
    pub focused: bool,
}

impl EnterText {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let target = pick_words(rng, 1)[0].to_string();
        let rects = place_disjoint(rng, &[(90, 18), (50, 18)], size, 4, 4);
        EnterText { target, field: rects[0], submit: rects[1], typed: String::new(), focused: false }
    }

    fn common_prefix(&self) -> usize {
        self.typed.chars().zip(self.target.chars()).take_while(|(a, b)| a == b).count()
    }

    /// `2 * matched / max(len(target), len(typed)) - 1`.
    pub fn partial_reward(&self) -> f64 {
        let denom = self.target.chars().count().max(self.typed.chars().count());
        2.0 * self.common_prefix() as f64 / denom as f64 - 1.0
    }
}

impl TaskLogic for EnterText {
    fn instruction(&self) -> String {
        format!("Enter \"{}\" and click Submit.", self.target)
    }

    fn widgets(&self) -> Vec<Widget> {
        vec![
            Widget { kind: WidgetKind::TextField, rect: self.field, label: Some(self.typed.clone()), color: None },
            Widget::labeled(WidgetKind::Button, self.submit, "Submit"),
        ]
    }

    fn render(&self, frame: &mut Framebuffer) {
        frame.fill_rect(self.field, WHITE);
        frame.stroke_rect(self.field, if self.focused { FOCUS } else { BORDER });
        frame.draw_text(self.field.x + 3, self.field.y + 6, &self.typed, BLACK, self.field.right() - 2);
        draw_button(frame, self.submit, "Submit");
    }

    fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        if hits(&self.submit, p) {
            return Some(self.partial_reward());
        }
        self.focused = hits(&self.field, p);
        None
    }

    fn on_key(&mut self, modifier: Option<Modifier>, keys: &[String]) -> Option<f64> {
        if !self.focused || matches!(modifier, Some(Modifier::Ctrl | Modifier::Alt)) {
            return None;
        }
        for k in keys {
            match k.as_str() {
                "backspace" => {
                    self.typed.pop();
                }
                "space" => self.push(' '),
                "enter" | "tab" => {}
                single => {
                    let c = single.chars().next().expect("validated key name");
                    self.push(if modifier == Some(Modifier::Shift) { c.to_ascii_uppercase() } else { c });
                }
            }
        }
        None
    }

    fn oracle(&self, _pointer: &Pointer) -> Result<Vec<Intent>> {
        let mut out = Vec::new();
        if !self.focused {
            out.push(Intent::ClickRect(self.field));
        }
        let keep = self.common_prefix();
        for _ in keep..self.typed.chars().count() {
            out.push(Intent::Key("backspace".into()));
        }
        for c in self.target.chars().skip(keep) {
            out.push(Intent::Key(if c == ' ' { "space".into() } else { c.to_string() }));
        }
        out.push(Intent::ClickRect(self.submit));
        Ok(out)
    }

    fn decoy_rects(&self) -> Vec<Rect> {
        if self.typed == self.target { Vec::new() } else { vec![self.submit] }
    }
}

impl EnterText {
    fn push(&mut self, c: char) {
        if self.typed.chars().count() < MAX_LEN {
            self.typed.push(c);
        }
    }
}
