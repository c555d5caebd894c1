use crate::error::Result;
use crate::render::{Framebuffer, Rect, Rgb};
use crate::rng::SplitMix64;

use super::layout::{hits, place_disjoint, BORDER};
use super::{FrameSize, Intent, Pointer, TaskLogic, Widget, WidgetKind};

const BOX_FILL: Rgb = [70, 110, 230];
const TARGET_FILL: Rgb = [205, 240, 205];

/// A draggable box and a drop target. A drag that starts on the box ends the episode;
/// it succeeds iff the box centre lands inside the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DragBox {
    pub item: Rect,
    pub target: Rect,
    pub frame: FrameSize,
}

impl DragBox {
    pub(super) fn generate(rng: &mut SplitMix64, size: FrameSize) -> Self {
        let rects = place_disjoint(rng, &[(16, 16), (32, 32)], size, 4, 8);
        DragBox { item: rects[0], target: rects[1], frame: size }
    }
}

impl TaskLogic for DragBox {
    fn instruction(&self) -> String {
        "Drag the box into the target.".to_string()
    }

    fn widgets(&self) -> Vec<Widget> {
        vec![Widget::new(WidgetKind::DraggableBox, self.item), Widget::new(WidgetKind::DropTarget, self.target)]
    }

    fn render(&self, frame: &mut Framebuffer) {
        frame.fill_rect(self.target, TARGET_FILL);
        frame.stroke_rect(self.target, BORDER);
        frame.fill_rect(self.item, BOX_FILL);
        frame.stroke_rect(self.item, BORDER);
    }

    fn on_click(&mut self, _p: (i64, i64)) -> Option<f64> {
        None
    }

    fn on_drop(&mut self, from: (i64, i64), to: (i64, i64)) -> Option<f64> {
        if !hits(&self.item, from) {
            return None;
        }
        let max_x = (self.frame.width - self.item.w) as i64;
        let max_y = (self.frame.height - self.item.h) as i64;
        let nx = (self.item.x as i64 + to.0 - from.0).clamp(0, max_x);
        let ny = (self.item.y as i64 + to.1 - from.1).clamp(0, max_y);
        self.item = Rect::new(nx as u32, ny as u32, self.item.w, self.item.h);
        let (cx, cy) = self.item.center();
        Some(if hits(&self.target, (cx as i64, cy as i64)) { 1.0 } else { -1.0 })
    }

    fn oracle(&self, pointer: &Pointer) -> Result<Vec<Intent>> {
        let mut out = Vec::new();
        match pointer.drag_origin {
            Some(origin) if pointer.mouse_down && hits(&self.item, origin) => {
                let (gx, gy) = self.item.center();
                let (tx, ty) = self.target.center();
                out.push(Intent::ReleaseAt { x: tx as i64 + origin.0 - gx as i64, y: ty as i64 + origin.1 - gy as i64 });
                return Ok(out);
            }
            _ if pointer.mouse_down => {
                out.push(Intent::ReleaseAt { x: pointer.cursor.0, y: pointer.cursor.1 });
            }
            _ => {}
        }
        out.push(Intent::Drag { grab: self.item, onto: self.target });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_outcomes() {
        let mut t = DragBox {
            item: Rect::new(10, 10, 16, 16),
            target: Rect::new(100, 100, 32, 32),
            frame: FrameSize { width: 160, height: 182 },
        };
        assert_eq!(t.clone().on_drop((0, 0), (50, 50)), None);
        assert_eq!(t.clone().on_drop((18, 18), (116, 116)), Some(1.0));
        assert_eq!(t.on_drop((18, 18), (60, 60)), Some(-1.0));
    }
}
