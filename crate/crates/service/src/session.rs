//! Live sessions and the transport-independent request handler.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use base64::Engine;
use screenagent::demo::{replay_validate, write_jsonl, DemoEpisode, DemoStep, Source};
use screenagent::{parse_action, Action, Env, EnvState, Error as CoreError, Observation, TaskId};

use crate::protocol::{ClientMessage, ErrorCode, EventKind, PixelEvent, ServerMessage, TaskEntry};

pub struct Session {
    pub id: String,
    pub task: TaskId,
    pub seed: u64,
    pub state: EnvState,
    pub obs: Observation,
    pub steps: Vec<DemoStep>,
    pub saved: Option<PathBuf>,
    pub created_at: SystemTime,
}

impl Session {
    fn demo(&self) -> Option<DemoEpisode> {
        let raw = self.state.outcome?.raw;
        Some(DemoEpisode { task: self.task, seed: self.seed, steps: self.steps.clone(), raw, source: Source::Human })
    }
}

/// Owns every live session. Each session sits behind its own lock so actions on one
/// session apply serially while different sessions proceed in parallel.
pub struct SessionManager {
    env: Env,
    demo_dir: PathBuf,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    next_id: AtomicU64,
}

fn png_b64(obs: &Observation) -> String {
    base64::engine::general_purpose::STANDARD.encode(obs.to_png())
}

fn action_error(e: CoreError) -> ServerMessage {
    match e {
        CoreError::TerminalState => ServerMessage::error(ErrorCode::EpisodeDone, "episode already finished"),
        CoreError::Grammar(_) | CoreError::Range(_) => ServerMessage::error(ErrorCode::BadAction, e.to_string()),
        other => ServerMessage::error(ErrorCode::Internal, other.to_string()),
    }
}

impl SessionManager {
    pub fn new(env: Env, demo_dir: impl Into<PathBuf>) -> Self {
        SessionManager { env, demo_dir: demo_dir.into(), sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn demo_dir(&self) -> &Path {
        &self.demo_dir
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    fn get(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        self.sessions.lock().expect("session map poisoned").get(id).cloned()
    }

    /// Handles one message. `current` is the connection's active session, used when a
    /// message names none; `create` replaces it.
    pub async fn handle(&self, msg: ClientMessage, current: &mut Option<String>) -> ServerMessage {
        match msg {
            ClientMessage::Create { task, seed } => {
                let reply = self.create(&task, seed);
                if let ServerMessage::Obs { session, .. } = &reply {
                    *current = Some(session.clone());
                }
                reply
            }
            ClientMessage::Act { session, action, event } => {
                let Some(id) = session.or_else(|| current.clone()) else {
                    return ServerMessage::error(ErrorCode::UnknownSession, "no session; send create first");
                };
                let action = match (action, event) {
                    (Some(text), None) => match parse_action(&text, self.env.bins()) {
                        Ok(a) => a,
                        Err(e) => return action_error(e),
                    },
                    (None, Some(ev)) => match self.event_to_action(&ev) {
                        Ok(a) => a,
                        Err(e) => return action_error(e),
                    },
                    _ => return ServerMessage::error(ErrorCode::BadMessage, "act needs exactly one of `action` or `event`"),
                };
                self.act(&id, &action).await
            }
            ClientMessage::Save { session } => {
                let Some(id) = session.or_else(|| current.clone()) else {
                    return ServerMessage::error(ErrorCode::UnknownSession, "no session; send create first");
                };
                self.save(&id).await
            }
            ClientMessage::ListTasks => ServerMessage::Tasks {
                tasks: screenagent::tasks::task_roster()
                    .into_iter()
                    .map(|(t, h)| TaskEntry { id: t.as_str().to_string(), horizon: h })
                    .collect(),
            },
        }
    }

    /// Parses and handles raw JSON text; malformed input becomes a `bad_message` error.
    pub async fn handle_text(&self, text: &str, current: &mut Option<String>) -> ServerMessage {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg, current).await,
            Err(e) => ServerMessage::error(ErrorCode::BadMessage, e.to_string()),
        }
    }

    pub fn create(&self, task: &str, seed: u64) -> ServerMessage {
        let Ok(task) = task.parse::<TaskId>() else {
            return ServerMessage::error(ErrorCode::UnknownTask, format!("unknown task `{task}`"));
        };
        let (state, obs) = self.env.reset(task, seed);
        let id = format!("s{:08x}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let png = png_b64(&obs);
        let session = Session { id: id.clone(), task, seed, state, obs, steps: Vec::new(), saved: None, created_at: SystemTime::now() };
        self.sessions.lock().expect("session map poisoned").insert(id.clone(), Arc::new(tokio::sync::Mutex::new(session)));
        tracing::debug!(session = %id, %task, seed, "created session");
        ServerMessage::Obs { session: id, png, step: 0, action: None }
    }

    /// Bins a pixel event in full-observation coordinates.
    pub fn event_to_action(&self, ev: &PixelEvent) -> Result<Action, CoreError> {
        let point = || -> Result<(u32, u32), CoreError> {
            match (ev.px, ev.py) {
                (Some(px), Some(py)) => self.env.bins().bin_point(px, py),
                _ => Err(CoreError::Grammar("pointer event needs px and py".into())),
            }
        };
        Ok(match ev.kind {
            EventKind::Click => {
                let (x, y) = point()?;
                Action::Click { x, y }
            }
            EventKind::BeginDrag => {
                let (x, y) = point()?;
                Action::BeginDrag { x, y }
            }
            EventKind::EndDrag => {
                let (x, y) = point()?;
                Action::EndDrag { x, y }
            }
            EventKind::Key => {
                let key = ev.key.as_deref().ok_or_else(|| CoreError::Grammar("key event needs `key`".into()))?;
                parse_action(&format!("key {key}"), self.env.bins())?
            }
            EventKind::Scroll => {
                let z = ev.z.ok_or_else(|| CoreError::Grammar("scroll event needs `z`".into()))?;
                parse_action(&format!("scroll {z}"), self.env.bins())?
            }
        })
    }

    pub async fn act(&self, id: &str, action: &Action) -> ServerMessage {
        let Some(session) = self.get(id) else {
            return ServerMessage::error(ErrorCode::UnknownSession, format!("no session `{id}`"));
        };
        let mut s = session.lock().await;
        let (next, r) = match self.env.step(&s.state, action) {
            Ok(x) => x,
            Err(e) => return action_error(e),
        };
        let text = action.serialize();
        let digest = s.obs.digest;
        s.steps.push(DemoStep { a: text.clone(), d: digest, png: None });
        s.state = next;
        s.obs = r.observation;
        let png = png_b64(&s.obs);
        let step = s.state.steps_taken;
        match s.state.outcome {
            Some(o) => ServerMessage::Done {
                session: id.to_string(),
                png,
                step,
                action: text,
                raw: o.raw,
                score: o.score(),
                incomplete: o.incomplete,
            },
            None => ServerMessage::Obs { session: id.to_string(), png, step, action: Some(text) },
        }
    }

    /// Writes the finished episode once; later saves return the same file.
    pub async fn save(&self, id: &str) -> ServerMessage {
        let Some(session) = self.get(id) else {
            return ServerMessage::error(ErrorCode::UnknownSession, format!("no session `{id}`"));
        };
        let mut s = session.lock().await;
        let Some(demo) = s.demo() else {
            return ServerMessage::error(ErrorCode::NotDone, "episode not finished");
        };
        let valid = replay_validate(&self.env, &demo).valid;
        let path = match &s.saved {
            Some(p) => p.clone(),
            None => {
                let p = self.demo_dir.join(format!("{id}.jsonl"));
                if let Err(e) = std::fs::create_dir_all(&self.demo_dir).map_err(CoreError::from).and_then(|_| write_jsonl(&p, &[demo])) {
                    return ServerMessage::error(ErrorCode::Internal, e.to_string());
                }
                s.saved = Some(p.clone());
                p
            }
        };
        ServerMessage::Saved { session: id.to_string(), path: path.display().to_string(), valid }
    }
}
