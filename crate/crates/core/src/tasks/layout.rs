use crate::render::{Framebuffer, Rect, Rgb, BLACK};
use crate::rng::SplitMix64;

use super::FrameSize;

pub const BUTTON_FILL: Rgb = [222, 222, 222];
pub const BORDER: Rgb = [90, 90, 90];

pub const WORDS: [&str; 24] = [
    "ok", "no", "yes", "cancel", "submit", "next", "prev", "stop", "go", "back", "done", "more",
    "cat", "dog", "tree", "lamp", "red", "sun", "moon", "fish", "bird", "star", "road", "cake",
];

/// Places rectangles of the given sizes at random, pairwise separated by `gap` pixels
/// and kept `margin` pixels from the frame edge. Panics if the sizes cannot be packed,
/// which would be a bug in a task's size ranges.
pub fn place_disjoint(rng: &mut SplitMix64, sizes: &[(u32, u32)], area: FrameSize, margin: u32, gap: u32) -> Vec<Rect> {
    'restart: for _ in 0..64 {
        let mut placed: Vec<Rect> = Vec::with_capacity(sizes.len());
        for &(w, h) in sizes {
            let max_x = area.width - margin - w;
            let max_y = area.height - margin - h;
            let mut found = None;
            for _ in 0..200 {
                let x = rng.range_inclusive(margin as i64, max_x as i64) as u32;
                let y = rng.range_inclusive(margin as i64, max_y as i64) as u32;
                let cand = Rect::new(x, y, w, h);
                let padded = Rect::new(x.saturating_sub(gap), y.saturating_sub(gap), w + 2 * gap, h + 2 * gap);
                if placed.iter().all(|p| !padded.intersects(p)) {
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(r) => placed.push(r),
                None => continue 'restart,
            }
        }
        return placed;
    }
    panic!("could not place {} widgets in {}x{}", sizes.len(), area.width, area.height);
}

pub fn pick_words(rng: &mut SplitMix64, count: usize) -> Vec<&'static str> {
    rng.sample_indices(WORDS.len(), count).into_iter().map(|i| WORDS[i]).collect()
}

pub fn draw_button(frame: &mut Framebuffer, r: Rect, label: &str) {
    frame.fill_rect(r, BUTTON_FILL);
    frame.stroke_rect(r, BORDER);
    frame.draw_text_centered(r, label, BLACK);
}

pub fn hits(r: &Rect, p: (i64, i64)) -> bool {
    r.contains(p.0, p.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_respects_gap() {
        let mut rng = SplitMix64::new(1);
        let area = FrameSize { width: 160, height: 182 };
        for _ in 0..50 {
            let rs = place_disjoint(&mut rng, &[(40, 20); 6], area, 4, 3);
            for (i, a) in rs.iter().enumerate() {
                assert!(a.inside(160, 182));
                for b in &rs[i + 1..] {
                    assert!(!a.intersects(b));
                }
            }
        }
    }
}
