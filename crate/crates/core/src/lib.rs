//! Deterministic pixel-observation GUI environments and the agents that act in them.

pub mod action;
pub mod agent;
pub mod demo;
pub mod env;
pub mod error;
pub mod eval;
pub mod exec;
pub mod improve;
pub mod policy;
pub mod render;
pub mod rng;
pub mod search;
pub mod tasks;
pub mod value;

pub use action::{parse_action, serialize_action, Action, BinConfig, Modifier};
pub use agent::{Agent, Episode, GreedyAgent, SearchAgent};
pub use demo::{DemoEpisode, DemoStep, Source};
pub use env::{raw_to_score, Env, EnvConfig, EnvState, Outcome, StepResult};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use policy::{ActionScorer, GreedyPolicy, NoisyOracleScorer, OracleScorer, ScoreContext, ScoredAction, TabularPolicy};
pub use render::{Framebuffer, Observation, OverlayConfig};
pub use search::{MctsConfig, SearchNode, Searcher};
pub use tasks::TaskId;
pub use value::{Surrogate, TabularValue, ValueBuckets, ValueFn};
