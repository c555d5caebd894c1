//! Seeded reset and pure, deterministic stepping.
//!
//! `step` never mutates its input: it returns a new [`EnvState`], so lookahead is just
//! stepping a clone. Rewards arrive only on the terminal step.

use std::collections::VecDeque;

use crate::action::{parse_action, Action, BinConfig};
use crate::error::{Error, Result};
use crate::render::{compose, Observation, OverlayConfig};
use crate::tasks::{intents_to_actions, FrameSize, Pointer, TaskId, TaskState};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub max_steps: u32,
    /// Full observation size, banner included.
    pub resolution: (u32, u32),
    pub bins: BinConfig,
    pub overlay: OverlayConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            max_steps: 30,
            resolution: (160, 210),
            bins: BinConfig::default(),
            overlay: OverlayConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        self.bins.validate()?;
        if (self.bins.width_px, self.bins.height_px) != self.resolution {
            return Err(Error::Config("bins must cover the full observation".into()));
        }
        self.overlay.validate(self.resolution.0, self.resolution.1)
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    /// Terminal reward in `[-1, 1]`; `-1` for timeouts.
    pub raw: f64,
    /// The step limit was hit before the task finished. Scored as 0.
    pub incomplete: bool,
}

impl Outcome {
    pub fn score(&self) -> f64 {
        if self.incomplete {
            0.0
        } else {
            raw_to_score(self.raw).expect("task rewards lie in [-1, 1]")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub task: TaskState,
    pub seed: u64,
    /// Full-observation pixel coordinates.
    pub cursor_px: (u32, u32),
    pub mouse_down: bool,
    pub drag_origin: Option<(u32, u32)>,
    pub steps_taken: u32,
    pub recent_actions: VecDeque<String>,
    pub outcome: Option<Outcome>,
}

impl EnvState {
    pub fn task_id(&self) -> TaskId {
        self.task.id()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    /// Present iff `done`.
    pub raw_reward: Option<f64>,
    pub done: bool,
    pub incomplete: bool,
}

#[derive(Debug, Clone)]
#[derive(Default)]
pub struct Env {
    cfg: EnvConfig,
}


impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Env { cfg })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn bins(&self) -> &BinConfig {
        &self.cfg.bins
    }

    pub fn banner(&self) -> u32 {
        self.cfg.overlay.banner_height_px
    }

    pub fn task_frame_size(&self) -> FrameSize {
        FrameSize { width: self.cfg.resolution.0, height: self.cfg.resolution.1 - self.banner() }
    }

    pub fn reset(&self, task: TaskId, seed: u64) -> (EnvState, Observation) {
        let state = EnvState {
            task: TaskState::generate(task, seed, self.task_frame_size()),
            seed,
            cursor_px: (self.cfg.resolution.0 / 2, self.cfg.resolution.1 / 2),
            mouse_down: false,
            drag_origin: None,
            steps_taken: 0,
            recent_actions: VecDeque::new(),
            outcome: None,
        };
        let obs = self.observe(&state);
        (state, obs)
    }

    /// Like [`Env::reset`] but resolves the task by name.
    pub fn reset_named(&self, task: &str, seed: u64) -> Result<(EnvState, Observation)> {
        Ok(self.reset(task.parse()?, seed))
    }

    pub fn observe(&self, state: &EnvState) -> Observation {
        let frame = state.task.render(self.task_frame_size());
        let recent: Vec<String> = state.recent_actions.iter().cloned().collect();
        compose(
            &frame,
            &state.task.instruction(),
            state.cursor_px,
            state.mouse_down,
            &recent,
            &self.cfg.overlay,
            state.steps_taken,
        )
        .expect("cursor is kept inside the observation")
    }

    fn to_task(&self, p: (u32, u32)) -> (i64, i64) {
        (p.0 as i64, p.1 as i64 - self.banner() as i64)
    }

    /// Applies `action` to a copy of `state`; the input is left untouched.
    pub fn step(&self, state: &EnvState, action: &Action) -> Result<(EnvState, StepResult)> {
        let next = self.transition(state, action)?;
        let observation = self.observe(&next);
        let result = StepResult {
            observation,
            raw_reward: next.outcome.map(|o| o.raw),
            done: next.is_done(),
            incomplete: next.outcome.is_some_and(|o| o.incomplete),
        };
        Ok((next, result))
    }

    /// The state transition alone, without rendering an observation.
    pub fn transition(&self, state: &EnvState, action: &Action) -> Result<EnvState> {
        if state.is_done() {
            return Err(Error::TerminalState);
        }
        action.validate(&self.cfg.bins)?;
        let mut next = state.clone();
        next.steps_taken += 1;
        let point = match action.coords() {
            Some((x, y)) => Some(self.cfg.bins.unbin_point(x, y)?),
            None => None,
        };
        if let Some(p) = point {
            next.cursor_px = p;
        }
        let terminal = match action {
            Action::Click { .. } => {
                let p = self.to_task(next.cursor_px);
                next.task.on_click(p)
            }
            Action::BeginDrag { .. } => {
                next.mouse_down = true;
                next.drag_origin = Some(next.cursor_px);
                None
            }
            Action::EndDrag { .. } => {
                next.mouse_down = false;
                match next.drag_origin.take() {
                    Some(origin) => {
                        let (from, to) = (self.to_task(origin), self.to_task(next.cursor_px));
                        next.task.on_drop(from, to)
                    }
                    None => None,
                }
            }
            Action::Key { modifier, keys } => next.task.on_key(*modifier, keys),
            Action::Scroll { .. } => None,
        };
        if self.cfg.overlay.history_len > 0 {
            next.recent_actions.push_back(action.serialize());
            while next.recent_actions.len() > self.cfg.overlay.history_len {
                next.recent_actions.pop_front();
            }
        }
        next.outcome = match terminal {
            Some(raw) => Some(Outcome { raw, incomplete: false }),
            None if next.steps_taken >= self.cfg.max_steps => Some(Outcome { raw: -1.0, incomplete: true }),
            None => None,
        };
        Ok(next)
    }

    pub fn step_text(&self, state: &EnvState, text: &str) -> Result<(EnvState, StepResult)> {
        let action = parse_action(text, &self.cfg.bins)?;
        self.step(state, &action)
    }

    pub fn pointer(&self, state: &EnvState) -> Pointer {
        Pointer {
            cursor: self.to_task(state.cursor_px),
            mouse_down: state.mouse_down,
            drag_origin: state.drag_origin.map(|o| self.to_task(o)),
        }
    }

    /// Scripted solution from `state`.
    pub fn oracle_actions(&self, state: &EnvState) -> Result<Vec<Action>> {
        if state.is_done() {
            return Err(Error::NoOracle("state is terminal".into()));
        }
        let pointer = self.pointer(state);
        let intents = state.task.oracle_intents(&pointer)?;
        let actions = intents_to_actions(&intents, &self.cfg.bins, self.banner())?;
        if actions.len() as u32 > self.cfg.max_steps - state.steps_taken {
            return Err(Error::NoOracle("not enough steps left".into()));
        }
        Ok(actions)
    }

    /// Terminal raw reward of a finished episode.
    pub fn terminal_reward(&self, state: &EnvState) -> Result<f64> {
        state.outcome.map(|o| o.raw).ok_or(Error::NonTerminal)
    }
}

/// Maps a raw reward from `[-1, 1]` to a score in `[0, 100]`.
pub fn raw_to_score(raw: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&raw) {
        return Err(Error::Range(format!("raw reward {raw} outside [-1, 1]")));
    }
    Ok((raw + 1.0) / 2.0 * 100.0)
}
