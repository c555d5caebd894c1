//! Episode runners: greedy and tree-search agents.

use crate::demo::{DemoEpisode, DemoStep, Source};
use crate::env::{raw_to_score, Env};
use crate::error::{Error, Result};
use crate::policy::{ActionScorer, GreedyPolicy, ScoreContext, DEFAULT_BEAM};
use crate::search::{MctsConfig, Searcher};
use crate::tasks::TaskId;
use crate::value::{Surrogate, ValueFn};

/// A finished episode with the surrogate reward observed after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub demo: DemoEpisode,
    pub rewards: Vec<f64>,
    pub incomplete: bool,
}

impl Episode {
    pub fn raw(&self) -> f64 {
        self.demo.raw
    }

    pub fn len(&self) -> usize {
        self.demo.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demo.steps.is_empty()
    }

    /// 0 for timeouts, otherwise the raw reward on the 0..100 scale.
    pub fn score(&self) -> f64 {
        if self.incomplete {
            0.0
        } else {
            raw_to_score(self.demo.raw).expect("task rewards lie in [-1, 1]")
        }
    }

    pub fn surrogate_return(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

pub trait Agent: Sync {
    fn run_episode(&self, env: &Env, task: TaskId, seed: u64) -> Result<Episode>;
}

/// Incrementally records an episode as it is played.
struct Recorder {
    steps: Vec<DemoStep>,
    rewards: Vec<f64>,
    surrogate: Surrogate,
}

impl Recorder {
    fn new(surrogate: Surrogate) -> Self {
        Recorder { steps: Vec::new(), rewards: Vec::new(), surrogate }
    }

    fn push(&mut self, action: String, digest: u64, raw: Option<f64>) {
        self.steps.push(DemoStep { a: action, d: digest, png: None });
        self.rewards.push(self.surrogate.reward(raw));
    }

    fn finish(self, task: TaskId, seed: u64, state: &crate::env::EnvState, source: Source) -> Result<Episode> {
        let outcome = state.outcome.ok_or(Error::NonTerminalEpisode)?;
        Ok(Episode {
            demo: DemoEpisode { task, seed, steps: self.steps, raw: outcome.raw, source },
            rewards: self.rewards,
            incomplete: outcome.incomplete,
        })
    }
}

/// Runs the greedy policy over a scorer until the episode ends.
pub struct GreedyAgent<S> {
    pub scorer: S,
    pub k: usize,
    pub surrogate: Surrogate,
    /// Tag written into recorded episodes.
    pub source: Source,
}

impl<S: ActionScorer> GreedyAgent<S> {
    pub fn new(scorer: S) -> Self {
        GreedyAgent { scorer, k: DEFAULT_BEAM, surrogate: Surrogate::default(), source: Source::Oracle }
    }
}

impl<S: ActionScorer> Agent for GreedyAgent<S> {
    fn run_episode(&self, env: &Env, task: TaskId, seed: u64) -> Result<Episode> {
        let mut policy = GreedyPolicy::new(&self.scorer, self.k);
        let (mut state, mut obs) = env.reset(task, seed);
        let mut rec = Recorder::new(self.surrogate);
        while !state.is_done() {
            let action = policy.select(&ScoreContext { env, state: &state, obs: &obs })?;
            let (next, r) = env.step(&state, &action)?;
            rec.push(action.serialize(), obs.digest, r.raw_reward);
            state = next;
            obs = r.observation;
        }
        rec.finish(task, seed, &state, self.source)
    }
}

/// Chooses every action by tree search, carrying the chosen subtree forward.
pub struct SearchAgent<S, V> {
    pub scorer: S,
    pub value_fn: V,
    pub cfg: MctsConfig,
}

impl<S: ActionScorer, V: ValueFn> SearchAgent<S, V> {
    pub fn new(scorer: S, value_fn: V, cfg: MctsConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(SearchAgent { scorer, value_fn, cfg })
    }
}

impl<S: ActionScorer, V: ValueFn> Agent for SearchAgent<S, V> {
    fn run_episode(&self, env: &Env, task: TaskId, seed: u64) -> Result<Episode> {
        let searcher = Searcher::new(env, &self.scorer, &self.value_fn, self.cfg)?;
        let (mut state, mut obs) = env.reset(task, seed);
        let mut rec = Recorder::new(self.cfg.surrogate);
        let mut reused = None;
        while !state.is_done() {
            let mut out = searcher.search_act(&state, &obs, reused.take())?;
            let (next, r) = env.step(&state, &out.action)?;
            rec.push(out.action.serialize(), obs.digest, r.raw_reward);
            reused = out.take_subtree();
            state = next;
            obs = r.observation;
        }
        rec.finish(task, seed, &state, Source::Search)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::replay_validate;
    use crate::policy::{NoisyOracleScorer, OracleScorer};
    use crate::value::{ConstantValue, ValueBuckets};

    #[test]
    fn oracle_greedy_episode_replays() {
        let env = Env::default();
        for t in TaskId::ALL {
            let ep = GreedyAgent::new(OracleScorer).run_episode(&env, t, 3).unwrap();
            assert_eq!(ep.raw(), 1.0, "{t}");
            assert_eq!(ep.score(), 100.0);
            assert!(replay_validate(&env, &ep.demo).valid);
        }
    }

    #[test]
    fn surrogate_rewards_sum() {
        let env = Env::default();
        let scorer = NoisyOracleScorer::new(0.3, 1).unwrap();
        let agent = GreedyAgent::new(scorer);
        let s = Surrogate::default();
        for seed in 0..20 {
            let ep = agent.run_episode(&env, TaskId::ClickCheckboxes, seed).unwrap();
            let want = ep.len() as f64 * s.step_penalty + s.terminal(ep.raw());
            assert!((ep.surrogate_return() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn search_episode_is_tagged_and_replays() {
        let env = Env::default();
        let agent = SearchAgent::new(OracleScorer, ConstantValue::new(ValueBuckets::default(), 0.9), MctsConfig::default()).unwrap();
        let ep = agent.run_episode(&env, TaskId::DragBox, 2).unwrap();
        assert_eq!(ep.demo.source, Source::Search);
        assert_eq!(ep.raw(), 1.0);
        assert!(replay_validate(&env, &ep.demo).valid);
    }
}
