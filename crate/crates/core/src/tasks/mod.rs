//! Eight seeded click/type/drag tasks.
//!
//! Every task generates its layout and instruction from `(task, seed)` through
//! [`SplitMix64`], reacts to pointer and key events, and knows a scripted solution
//! from any state it can reach.

mod click_button;
mod click_checkboxes;
mod click_color;
mod click_test;
mod drag_box;
mod enter_text;
mod grid_coordinate;
mod layout;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Action, BinConfig, Modifier};
use crate::error::{Error, Result};
use crate::render::{Framebuffer, Rect, Rgb};
use crate::rng::SplitMix64;

pub use click_button::ClickButton;
pub use click_checkboxes::ClickCheckboxes;
pub use click_color::ClickColor;
pub use click_test::{ClickTest, ClickTest2};
pub use drag_box::DragBox;
pub use enter_text::EnterText;
pub use grid_coordinate::GridCoordinate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TaskId {
    ClickTest,
    ClickTest2,
    ClickButton,
    ClickCheckboxes,
    ClickColor,
    GridCoordinate,
    EnterText,
    DragBox,
}

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        TaskId::ClickTest,
        TaskId::ClickTest2,
        TaskId::ClickButton,
        TaskId::ClickCheckboxes,
        TaskId::ClickColor,
        TaskId::GridCoordinate,
        TaskId::EnterText,
        TaskId::DragBox,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::ClickTest => "click-test",
            TaskId::ClickTest2 => "click-test-2",
            TaskId::ClickButton => "click-button",
            TaskId::ClickCheckboxes => "click-checkboxes",
            TaskId::ClickColor => "click-color",
            TaskId::GridCoordinate => "grid-coordinate",
            TaskId::EnterText => "enter-text",
            TaskId::DragBox => "drag-box",
        }
    }

    /// Upper bound on the scripted solution length from a fresh reset.
    pub fn horizon_hint(self) -> u32 {
        match self {
            TaskId::ClickTest | TaskId::ClickTest2 | TaskId::ClickButton => 3,
            TaskId::ClickColor | TaskId::GridCoordinate => 3,
            TaskId::ClickCheckboxes => 10,
            TaskId::EnterText => 12,
            TaskId::DragBox => 4,
        }
    }

    /// Tasks whose terminal reward is always +1 or -1.
    pub fn is_binary(self) -> bool {
        self != TaskId::EnterText
    }

    /// Tasks solved by a single action from reset.
    pub fn is_single_step(self) -> bool {
        matches!(
            self,
            TaskId::ClickTest
                | TaskId::ClickTest2
                | TaskId::ClickButton
                | TaskId::ClickColor
                | TaskId::GridCoordinate
        )
    }

    fn salt(self) -> u64 {
        // Stable per-task stream separation.
        self.as_str().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<TaskId> for String {
    fn from(t: TaskId) -> String {
        t.as_str().to_string()
    }
}

impl TryFrom<String> for TaskId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskId::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetKind {
    Button,
    Checkbox,
    TextField,
    DraggableBox,
    DropTarget,
    ColoredSquare,
    GridCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Widget {
    pub kind: WidgetKind,
    /// Task-frame coordinates.
    pub rect: Rect,
    pub label: Option<String>,
    pub color: Option<Rgb>,
}

impl Widget {
    pub fn new(kind: WidgetKind, rect: Rect) -> Self {
        Widget { kind, rect, label: None, color: None }
    }

    pub fn labeled(kind: WidgetKind, rect: Rect, label: &str) -> Self {
        Widget { kind, rect, label: Some(label.to_string()), color: None }
    }
}

/// Pointer bookkeeping visible to tasks, in task-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pointer {
    pub cursor: (i64, i64),
    pub mouse_down: bool,
    pub drag_origin: Option<(i64, i64)>,
}

/// One step of a scripted solution, before binning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intent {
    ClickRect(Rect),
    Key(String),
    /// Press inside `grab` and release so that `grab`'s centre lands on `onto`'s centre.
    Drag { grab: Rect, onto: Rect },
    /// Release the held button at a task-frame point.
    ReleaseAt { x: i64, y: i64 },
}

pub(crate) trait TaskLogic {
    fn instruction(&self) -> String;
    fn widgets(&self) -> Vec<Widget>;
    fn render(&self, frame: &mut Framebuffer);
    /// `Some(raw)` ends the episode.
    fn on_click(&mut self, p: (i64, i64)) -> Option<f64>;
    fn on_key(&mut self, _modifier: Option<Modifier>, _keys: &[String]) -> Option<f64> {
        None
    }
    fn on_drop(&mut self, _from: (i64, i64), _to: (i64, i64)) -> Option<f64> {
        None
    }
    fn oracle(&self, pointer: &Pointer) -> Result<Vec<Intent>>;
    /// Widgets a plausible-but-wrong policy would click.
    fn decoy_rects(&self) -> Vec<Rect> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskState {
    ClickTest(ClickTest),
    ClickTest2(ClickTest2),
    ClickButton(ClickButton),
    ClickCheckboxes(ClickCheckboxes),
    ClickColor(ClickColor),
    GridCoordinate(GridCoordinate),
    EnterText(EnterText),
    DragBox(DragBox),
}

/// Size of the task area below the banner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSize {
    pub width: u32,
    pub height: u32,
}

impl TaskState {
    pub fn generate(task: TaskId, seed: u64, size: FrameSize) -> TaskState {
        let mut rng = SplitMix64::from_words(&[task.salt(), seed]);
        match task {
            TaskId::ClickTest => TaskState::ClickTest(ClickTest::generate(&mut rng, size)),
            TaskId::ClickTest2 => TaskState::ClickTest2(ClickTest2::generate(&mut rng, size)),
            TaskId::ClickButton => TaskState::ClickButton(ClickButton::generate(&mut rng, size)),
            TaskId::ClickCheckboxes => {
                TaskState::ClickCheckboxes(ClickCheckboxes::generate(&mut rng, size))
            }
            TaskId::ClickColor => TaskState::ClickColor(ClickColor::generate(&mut rng, size)),
            TaskId::GridCoordinate => {
                TaskState::GridCoordinate(GridCoordinate::generate(&mut rng, size))
            }
            TaskId::EnterText => TaskState::EnterText(EnterText::generate(&mut rng, size)),
            TaskId::DragBox => TaskState::DragBox(DragBox::generate(&mut rng, size)),
        }
    }

    pub fn id(&self) -> TaskId {
        match self {
            TaskState::ClickTest(_) => TaskId::ClickTest,
            TaskState::ClickTest2(_) => TaskId::ClickTest2,
            TaskState::ClickButton(_) => TaskId::ClickButton,
            TaskState::ClickCheckboxes(_) => TaskId::ClickCheckboxes,
            TaskState::ClickColor(_) => TaskId::ClickColor,
            TaskState::GridCoordinate(_) => TaskId::GridCoordinate,
            TaskState::EnterText(_) => TaskId::EnterText,
            TaskState::DragBox(_) => TaskId::DragBox,
        }
    }

    fn logic(&self) -> &dyn TaskLogic {
        match self {
            TaskState::ClickTest(t) => t,
            TaskState::ClickTest2(t) => t,
            TaskState::ClickButton(t) => t,
            TaskState::ClickCheckboxes(t) => t,
            TaskState::ClickColor(t) => t,
            TaskState::GridCoordinate(t) => t,
            TaskState::EnterText(t) => t,
            TaskState::DragBox(t) => t,
        }
    }

    fn logic_mut(&mut self) -> &mut dyn TaskLogic {
        match self {
            TaskState::ClickTest(t) => t,
            TaskState::ClickTest2(t) => t,
            TaskState::ClickButton(t) => t,
            TaskState::ClickCheckboxes(t) => t,
            TaskState::ClickColor(t) => t,
            TaskState::GridCoordinate(t) => t,
            TaskState::EnterText(t) => t,
            TaskState::DragBox(t) => t,
        }
    }

    pub fn instruction(&self) -> String {
        self.logic().instruction()
    }

    pub fn widgets(&self) -> Vec<Widget> {
        self.logic().widgets()
    }

    pub fn render(&self, size: FrameSize) -> Framebuffer {
        let mut frame = Framebuffer::new(size.width, size.height, crate::render::WHITE);
        self.logic().render(&mut frame);
        frame
    }

    pub fn on_click(&mut self, p: (i64, i64)) -> Option<f64> {
        self.logic_mut().on_click(p)
    }

    pub fn on_key(&mut self, modifier: Option<Modifier>, keys: &[String]) -> Option<f64> {
        self.logic_mut().on_key(modifier, keys)
    }

    pub fn on_drop(&mut self, from: (i64, i64), to: (i64, i64)) -> Option<f64> {
        self.logic_mut().on_drop(from, to)
    }

    pub fn oracle_intents(&self, pointer: &Pointer) -> Result<Vec<Intent>> {
        self.logic().oracle(pointer)
    }

    pub fn decoy_rects(&self) -> Vec<Rect> {
        self.logic().decoy_rects()
    }
}

/// Turns solution intents into binned actions. `banner` is the vertical offset of the
/// task frame inside the observation.
pub fn intents_to_actions(intents: &[Intent], bins: &BinConfig, banner: u32) -> Result<Vec<Action>> {
    let to_bins = |x: i64, y: i64| -> Result<(u32, u32)> {
        if x < 0 || y < 0 {
            return Err(Error::NoOracle(format!("target ({x}, {y}) outside the frame")));
        }
        bins.bin_point(x as u32, y as u32 + banner)
            .map_err(|e| Error::NoOracle(format!("target outside the frame: {e}")))
    };
    let mut out = Vec::with_capacity(intents.len());
    for intent in intents {
        match intent {
            Intent::ClickRect(r) => {
                let (cx, cy) = r.center();
                let (x, y) = to_bins(cx as i64, cy as i64)?;
                out.push(Action::Click { x, y });
            }
            Intent::Key(k) => out.push(Action::key(k)),
            Intent::Drag { grab, onto } => {
                let (gx, gy) = grab.center();
                let (bx, by) = to_bins(gx as i64, gy as i64)?;
                // Where the press actually lands after binning.
                let (px, py) = bins.unbin_point(bx, by)?;
                let press = (px as i64, py as i64 - banner as i64);
                let (tx, ty) = onto.center();
                let release = (tx as i64 + press.0 - gx as i64, ty as i64 + press.1 - gy as i64);
                let (ex, ey) = to_bins(release.0, release.1)?;
                out.push(Action::BeginDrag { x: bx, y: by });
                out.push(Action::EndDrag { x: ex, y: ey });
            }
            Intent::ReleaseAt { x, y } => {
                let (x, y) = to_bins(*x, *y)?;
                out.push(Action::EndDrag { x, y });
            }
        }
    }
    Ok(out)
}

/// Every bin whose centre falls strictly inside `r`, as clicks.
pub fn clicks_inside(r: &Rect, bins: &BinConfig, banner: u32) -> Vec<Action> {
    let mut out = Vec::new();
    for y in 0..bins.y_bins {
        let py = bins.unbin_point(0, y).map(|p| p.1).unwrap_or(0) as i64 - banner as i64;
        if py < r.y as i64 || py >= r.bottom() as i64 {
            continue;
        }
        for x in 0..bins.x_bins {
            let px = bins.unbin_point(x, 0).map(|p| p.0).unwrap_or(0) as i64;
            if r.contains(px, py) {
                out.push(Action::Click { x, y });
            }
        }
    }
    out
}

pub fn task_roster() -> Vec<(TaskId, u32)> {
    TaskId::ALL.iter().map(|&t| (t, t.horizon_hint())).collect()
}
