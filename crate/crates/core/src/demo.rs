//! Demonstration files: one JSON episode per line, replayable from `(task, seed)`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::action::{Action, BinConfig};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::render::Rect;
use crate::tasks::TaskId;

/// Demonstrations below this raw reward are dropped before training.
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Oracle,
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    /// Action text.
    pub a: String,
    /// Digest of the observation the action was taken from.
    #[serde(with = "hex_digest")]
    pub d: u64,
    /// Base64 PNG of that observation, when recorded with frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub png: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoEpisode {
    pub task: TaskId,
    pub seed: u64,
    pub steps: Vec<DemoStep>,
    pub raw: f64,
    pub source: Source,
}

mod hex_digest {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{d:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<u64, D::Error> {
        let s = String::deserialize(de)?;
        if s.len() != 16 {
            return Err(D::Error::custom(format!("digest `{s}` is not 16 hex digits")));
        }
        u64::from_str_radix(&s, 16).map_err(D::Error::custom)
    }
}

impl DemoEpisode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(digest, action text)` training pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (u64, &str)> {
        self.steps.iter().map(|s| (s.d, s.a.as_str()))
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }

    /// Plays the recorded actions from a fresh reset.
    pub fn record(env: &Env, task: TaskId, seed: u64, actions: &[Action], source: Source, with_frames: bool) -> Result<Self> {
        let (mut state, mut obs) = env.reset(task, seed);
        let mut steps = Vec::with_capacity(actions.len());
        for a in actions {
            let png = with_frames.then(|| base64::engine::general_purpose::STANDARD.encode(obs.to_png()));
            steps.push(DemoStep { a: a.serialize(), d: obs.digest, png });
            let (next, r) = env.step(&state, a)?;
            state = next;
            obs = r.observation;
        }
        let raw = env.terminal_reward(&state).map_err(|_| Error::NonTerminalEpisode)?;
        Ok(DemoEpisode { task, seed, steps, raw, source })
    }
}

pub fn write_jsonl(path: &Path, demos: &[DemoEpisode]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in demos {
        writeln!(w, "{}", d.to_json_line()?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn append_jsonl(path: &Path, demo: &DemoEpisode) -> Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", demo.to_json_line()?)?;
    Ok(())
}

/// Blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Vec<DemoEpisode>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(DemoEpisode::from_json_line(&line).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mismatch {
    /// Recorded digest differs from the replayed one at this step.
    Digest { step: usize, recorded: u64, replayed: u64 },
    /// The action could not be applied (bad text, or the episode already ended).
    Action { step: usize, reason: String },
    /// All actions replayed but the episode did not end.
    NotTerminal,
    Reward { recorded: f64, replayed: f64 },
}

impl Mismatch {
    pub fn step(&self) -> Option<usize> {
        match self {
            Mismatch::Digest { step, .. } | Mismatch::Action { step, .. } => Some(*step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub valid: bool,
    pub mismatch: Option<Mismatch>,
}

/// Re-runs the actions from `(task, seed)` and compares every digest and the final
/// reward.
pub fn replay_validate(env: &Env, demo: &DemoEpisode) -> ReplayReport {
    let fail = |m| ReplayReport { valid: false, mismatch: Some(m) };
    let (mut state, mut obs) = env.reset(demo.task, demo.seed);
    for (i, step) in demo.steps.iter().enumerate() {
        if obs.digest != step.d {
            return fail(Mismatch::Digest { step: i, recorded: step.d, replayed: obs.digest });
        }
        match env.step_text(&state, &step.a) {
            Ok((next, r)) => {
                state = next;
                obs = r.observation;
            }
            Err(e) => return fail(Mismatch::Action { step: i, reason: e.to_string() }),
        }
    }
    match state.outcome {
        None => fail(Mismatch::NotTerminal),
        Some(o) if o.raw != demo.raw => fail(Mismatch::Reward { recorded: demo.raw, replayed: o.raw }),
        Some(_) => ReplayReport { valid: true, mismatch: None },
    }
}

pub fn filter_low_reward(demos: &[DemoEpisode], threshold: f64) -> Vec<DemoEpisode> {
    demos.iter().filter(|d| d.raw >= threshold).cloned().collect()
}

/// Pages of a scrollable task frame. Rects are in page coordinates; one scroll bin
/// moves the page by one viewport height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub height: u32,
    pub page_height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HighLevelOp {
    ClickElement { rect: Rect },
    TypeText { rect: Rect, text: String },
    Search { rect: Rect, query: String },
}

/// The rect's centre as a bin, with the banner offset applied.
fn click_center(r: &Rect, bins: &BinConfig, banner: u32) -> Result<Action> {
    let (cx, cy) = r.center();
    let (x, y) = bins.bin_point(cx, cy + banner)?;
    Ok(Action::Click { x, y })
}

fn key_for(c: char) -> Result<Action> {
    let name = if c == ' ' { "space".to_string() } else { c.to_string() };
    if !crate::action::is_key_name(&name) {
        return Err(Error::Grammar(format!("cannot type {c:?}")));
    }
    Ok(Action::key(&name))
}

/// Lowers a high-level trace into grammar actions. Rects are in task-frame pixels;
/// `banner` is the height above the task frame in the full observation. Without a
/// viewport the frame is assumed to be fully visible.
pub fn convert_high_level(
    trace: &[HighLevelOp],
    bins: &BinConfig,
    banner: u32,
    viewport: Option<Viewport>,
) -> Result<Vec<Action>> {
    let mut out = Vec::new();
    let mut page = 0u32;
    for op in trace {
        let rect = match op {
            HighLevelOp::ClickElement { rect } | HighLevelOp::TypeText { rect, .. } | HighLevelOp::Search { rect, .. } => *rect,
        };
        let visible = match viewport {
            None => {
                if !rect.inside(bins.width_px, bins.height_px - banner) {
                    return Err(Error::OffscreenElement(format!("{rect:?} outside the frame")));
                }
                rect
            }
            Some(vp) => {
                if vp.height == 0 || rect.bottom() > vp.page_height || rect.h > vp.height {
                    return Err(Error::OffscreenElement(format!("{rect:?} cannot be scrolled into view")));
                }
                let target = rect.y / vp.height;
                if rect.bottom() > (target + 1) * vp.height {
                    return Err(Error::OffscreenElement(format!("{rect:?} straddles a page boundary")));
                }
                if target != page {
                    let delta = target as i64 - page as i64;
                    let step = bins.scroll_bin_max as i64;
                    let mut left = delta;
                    while left != 0 {
                        let z = left.clamp(-step, step);
                        out.push(Action::Scroll { z: z as i32 });
                        left -= z;
                    }
                    page = target;
                }
                Rect::new(rect.x, rect.y - page * vp.height, rect.w, rect.h)
            }
        };
        out.push(click_center(&visible, bins, banner)?);
        match op {
            HighLevelOp::ClickElement { .. } => {}
            HighLevelOp::TypeText { text, .. } => {
                for c in text.chars() {
                    out.push(key_for(c)?);
                }
            }
            HighLevelOp::Search { query, .. } => {
                for c in query.chars() {
                    out.push(key_for(c)?);
                }
                out.push(Action::key("enter"));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConversionStats {
    pub attempted: usize,
    pub converted: usize,
}

impl ConversionStats {
    pub fn record<T>(&mut self, r: &Result<T>) {
        self.attempted += 1;
        if r.is_ok() {
            self.converted += 1;
        }
    }

    pub fn rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.converted as f64 / self.attempted as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_frame_bins() -> BinConfig {
        BinConfig::default()
    }

    #[test]
    fn click_element_centre_example() {
        // Rect in full-observation pixels: no banner offset.
        let a = convert_high_level(&[HighLevelOp::ClickElement { rect: Rect::new(40, 20, 20, 10) }], &full_frame_bins(), 0, None).unwrap();
        assert_eq!(a, vec![Action::Click { x: 10, y: 3 }]);
    }

    #[test]
    fn search_and_type_lowering() {
        let r = Rect::new(40, 20, 20, 10);
        let a = convert_high_level(&[HighLevelOp::Search { rect: r, query: "ab".into() }], &full_frame_bins(), 0, None).unwrap();
        let texts: Vec<String> = a.iter().map(|a| a.serialize()).collect();
        assert_eq!(texts, ["click 10 3", "key a", "key b", "key enter"]);
        let a = convert_high_level(&[HighLevelOp::TypeText { rect: r, text: String::new() }], &full_frame_bins(), 0, None).unwrap();
        assert_eq!(a.len(), 1);
        let a = convert_high_level(&[HighLevelOp::TypeText { rect: r, text: "a b".into() }], &full_frame_bins(), 0, None).unwrap();
        assert_eq!(a[2].serialize(), "key space");
    }

    #[test]
    fn offscreen_and_scrolling() {
        let bins = full_frame_bins();
        let far = Rect::new(10, 400, 20, 10);
        assert!(matches!(
            convert_high_level(&[HighLevelOp::ClickElement { rect: far }], &bins, 0, None),
            Err(Error::OffscreenElement(_))
        ));
        let vp = Viewport { height: 210, page_height: 2000 };
        let a = convert_high_level(&[HighLevelOp::ClickElement { rect: far }], &bins, 0, Some(vp)).unwrap();
        // Page 1: one scroll down, then the rect sits at y = 190.
        assert_eq!(a[0], Action::Scroll { z: 1 });
        assert_eq!(a[1], Action::Click { x: 4, y: bins.bin_point(20, 195).unwrap().1 });
        let deep = Rect::new(10, 210 * 5, 20, 10);
        let a = convert_high_level(&[HighLevelOp::ClickElement { rect: deep }, HighLevelOp::ClickElement { rect: Rect::new(0, 0, 5, 5) }], &bins, 0, Some(vp)).unwrap();
        let scrolls: Vec<i32> = a.iter().filter_map(|a| match a { Action::Scroll { z } => Some(*z), _ => None }).collect();
        assert_eq!(scrolls, [3, 2, -3, -2]);
        assert!(convert_high_level(&[HighLevelOp::ClickElement { rect: Rect::new(0, 1990, 5, 20) }], &bins, 0, Some(vp)).is_err());
    }

    #[test]
    fn filter_threshold_edges() {
        let mk = |raw| DemoEpisode { task: TaskId::ClickTest, seed: 0, steps: vec![], raw, source: Source::Oracle };
        let kept = filter_low_reward(&[mk(0.79), mk(0.8), mk(0.81), mk(1.0), mk(-1.0)], DEFAULT_THRESHOLD);
        let raws: Vec<f64> = kept.iter().map(|d| d.raw).collect();
        assert_eq!(raws, [0.8, 0.81, 1.0]);
        assert!(filter_low_reward(&[], DEFAULT_THRESHOLD).is_empty());
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(raws in proptest::collection::vec(-1.0f64..=1.0, 0..30)) {
            let demos: Vec<DemoEpisode> = raws.iter().map(|&raw| DemoEpisode { task: TaskId::ClickTest, seed: 0, steps: vec![], raw, source: Source::Search }).collect();
            let once = filter_low_reward(&demos, DEFAULT_THRESHOLD);
            prop_assert_eq!(filter_low_reward(&once, DEFAULT_THRESHOLD), once);
        }
    }

    #[test]
    fn json_schema_shape() {
        let env = Env::default();
        let (s, _) = env.reset(TaskId::ClickTest, 4);
        let actions = env.oracle_actions(&s).unwrap();
        let demo = DemoEpisode::record(&env, TaskId::ClickTest, 4, &actions, Source::Oracle, false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&demo.to_json_line().unwrap()).unwrap();
        assert_eq!(v["task"], "click-test");
        assert_eq!(v["seed"], 4);
        assert_eq!(v["source"], "oracle");
        assert_eq!(v["raw"], 1.0);
        let d = v["steps"][0]["d"].as_str().unwrap();
        assert_eq!(d.len(), 16);
        assert!(v["steps"][0].get("png").is_none());
        assert_eq!(DemoEpisode::from_json_line(&demo.to_json_line().unwrap()).unwrap(), demo);
        assert!(DemoEpisode::from_json_line(r#"{"task":"click-test","seed":0,"steps":[{"a":"click 1 1","d":"ab"}],"raw":1,"source":"human"}"#).is_err());
    }

    #[test]
    fn replay_detects_perturbation() {
        let env = Env::default();
        let (s, _) = env.reset(TaskId::ClickCheckboxes, 11);
        let actions = env.oracle_actions(&s).unwrap();
        let demo = DemoEpisode::record(&env, TaskId::ClickCheckboxes, 11, &actions, Source::Oracle, true).unwrap();
        assert!(replay_validate(&env, &demo).valid);
        assert!(demo.steps[0].png.is_some());

        let mut bad = demo.clone();
        bad.steps[0].a = "click 0 0".into();
        let r = replay_validate(&env, &bad);
        assert!(!r.valid);
        assert_eq!(r.mismatch.unwrap().step(), Some(1));

        let mut other_seed = demo.clone();
        other_seed.seed = 12;
        assert!(!replay_validate(&env, &other_seed).valid);
    }

    #[test]
    fn jsonl_file_round_trip() {
        let env = Env::default();
        let mut demos = Vec::new();
        for seed in 0..3 {
            let (s, _) = env.reset(TaskId::DragBox, seed);
            let actions = env.oracle_actions(&s).unwrap();
            demos.push(DemoEpisode::record(&env, TaskId::DragBox, seed, &actions, Source::Oracle, false).unwrap());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        write_jsonl(&p, &demos[..2]).unwrap();
        append_jsonl(&p, &demos[2]).unwrap();
        assert_eq!(read_jsonl(&p).unwrap(), demos);
    }

    #[test]
    fn conversion_rate() {
        let mut st = ConversionStats::default();
        st.record(&Ok::<(), Error>(()));
        st.record(&Err::<(), Error>(Error::EmptyBeam));
        assert_eq!(st.rate(), 0.5);
    }
}
