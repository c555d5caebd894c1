//! Wire messages. Every message is a JSON object with a `type` discriminator.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Create {
        task: String,
        seed: u64,
    },
    /// Exactly one of `action` (grammar text) or `event` (raw pixels).
    Act {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        event: Option<PixelEvent>,
    },
    Save {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
    ListTasks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Click,
    BeginDrag,
    EndDrag,
    Key,
    Scroll,
}

/// A raw input event in full-observation pixels (banner included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelEvent {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub px: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub py: Option<u32>,
    /// Key event payload in grammar form, e.g. `"a"` or `"shift a"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// Scroll amount in bins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub id: String,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Obs {
        session: String,
        /// Base64 PNG of the current observation.
        png: String,
        step: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<String>,
    },
    Done {
        session: String,
        png: String,
        step: u32,
        action: String,
        raw: f64,
        score: f64,
        incomplete: bool,
    },
    Saved {
        session: String,
        path: String,
        valid: bool,
    },
    Tasks {
        tasks: Vec<TaskEntry>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownTask,
    BadAction,
    EpisodeDone,
    NotDone,
    UnknownSession,
    BadMessage,
    Internal,
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error { code, message: message.into() }
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            ServerMessage::Error { code, .. } => Some(*code),
            _ => None,
        }
    }
}
