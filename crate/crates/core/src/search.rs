//! Monte Carlo tree search over environment clones.
//!
//! Edges are limited to the scorer's top-k beam and explored with a prior-weighted
//! bonus. Leaves are valued by mixing the value function with a greedy rollout. The
//! return credited to an edge in a round is the step penalties between it and the leaf
//! plus the leaf value, so Q is the running mean of those.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::env::{Env, EnvState};
use crate::error::{Error, Result};
use crate::policy::{ActionScorer, GreedyPolicy, ScoreContext};
use crate::render::Observation;
use crate::value::{estimate_value, Surrogate, ValueFn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MctsConfig {
    /// Rounds per action choice.
    pub rounds: u32,
    pub c: f64,
    pub lambda: f64,
    /// Beam width; only these actions become edges.
    pub k: usize,
    pub rollout_max: u32,
    pub surrogate: Surrogate,
    /// Buckets mixed into the value estimate.
    pub value_top_n: usize,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            rounds: 16,
            c: 0.1,
            lambda: 0.1,
            k: 8,
            rollout_max: 20,
            surrogate: Surrogate::default(),
            value_top_n: 3,
        }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must be finite and non-negative, got {}", self.c)));
        }
        if self.k == 0 {
            return Err(Error::Config("beam width must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub action: Action,
    pub text: String,
    pub prior: f64,
    pub visits: u32,
    pub q: f64,
    pub child: Option<Box<SearchNode>>,
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: EnvState,
    pub obs: Observation,
    /// Creation counts as the first visit.
    pub visits: u32,
    /// Leaf value at creation; the surrogate terminal value for terminal nodes.
    pub value: f64,
    pub terminal: bool,
    pub edges: Vec<Edge>,
}

impl SearchNode {
    /// Every expanded node has `visits = 1 + Σ edge visits`, recursively.
    pub fn visits_conserved(&self) -> bool {
        if self.terminal {
            return self.edges.is_empty();
        }
        let sum: u32 = self.edges.iter().map(|e| e.visits).sum();
        self.visits == sum + 1
            && self.edges.iter().all(|e| match &e.child {
                Some(c) => c.visits == e.visits && c.visits_conserved(),
                None => e.visits == 0,
            })
    }

    pub fn node_count(&self) -> usize {
        1 + self.edges.iter().filter_map(|e| e.child.as_ref()).map(|c| c.node_count()).sum::<usize>()
    }

    /// A comparable description of the tree: pre-order `(depth, action, visits, q)`.
    pub fn shape(&self) -> Vec<(usize, String, u32, u64)> {
        let mut out = Vec::new();
        self.shape_into(0, &mut out);
        out
    }

    fn shape_into(&self, depth: usize, out: &mut Vec<(usize, String, u32, u64)>) {
        for e in &self.edges {
            out.push((depth, e.text.clone(), e.visits, e.q.to_bits()));
            if let Some(c) = &e.child {
                c.shape_into(depth + 1, out);
            }
        }
    }
}

/// `c · p · √N / (1 + n)`.
pub fn exploration_bonus(prior: f64, parent_visits: u32, edge_visits: u32, c: f64) -> f64 {
    c * prior * (parent_visits as f64).sqrt() / (1.0 + edge_visits as f64)
}

/// Index of the edge maximising `Q + U`; ties go to the higher prior, then the
/// lexicographically smaller action text.
pub fn select_child(node: &SearchNode, c: f64) -> Result<usize> {
    let key = |e: &Edge| e.q + exploration_bonus(e.prior, node.visits, e.visits, c);
    best_by(&node.edges, |a, b| {
        key(a).total_cmp(&key(b)).then(a.prior.total_cmp(&b.prior)).then_with(|| b.text.cmp(&a.text))
    })
}

/// Most visited edge; ties go to higher Q, then higher prior, then action text.
pub fn most_visited(node: &SearchNode) -> Result<usize> {
    best_by(&node.edges, |a, b| {
        a.visits
            .cmp(&b.visits)
            .then(a.q.total_cmp(&b.q))
            .then(a.prior.total_cmp(&b.prior))
            .then_with(|| b.text.cmp(&a.text))
    })
}

fn best_by(edges: &[Edge], cmp: impl Fn(&Edge, &Edge) -> Ordering) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in edges.iter().enumerate() {
        best = match best {
            Some(b) if cmp(e, &edges[b]) != Ordering::Greater => Some(b),
            _ => Some(i),
        };
    }
    best.ok_or(Error::NoEdges)
}

/// Result of one [`Searcher::search_act`] call.
#[derive(Debug)]
pub struct SearchOutcome {
    pub action: Action,
    /// The searched root, with the chosen edge's subtree still attached.
    pub root: Box<SearchNode>,
    pub chosen: usize,
    pub rounds_run: u32,
}

impl SearchOutcome {
    /// Detaches the chosen child for reuse at the next step.
    pub fn take_subtree(&mut self) -> Option<Box<SearchNode>> {
        self.root.edges[self.chosen].child.take()
    }
}

pub struct Searcher<'a, S: ?Sized, V: ?Sized> {
    pub env: &'a Env,
    pub scorer: &'a S,
    pub value_fn: &'a V,
    pub cfg: MctsConfig,
}

impl<'a, S: ActionScorer + ?Sized, V: ValueFn + ?Sized> Searcher<'a, S, V> {
    pub fn new(env: &'a Env, scorer: &'a S, value_fn: &'a V, cfg: MctsConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Searcher { env, scorer, value_fn, cfg })
    }

    /// Accumulated surrogate reward of a greedy rollout from a non-terminal state,
    /// clipped below at 0.
    pub fn rollout(&self, state: &EnvState, obs: &Observation) -> Result<f64> {
        let mut policy = GreedyPolicy::new(self.scorer, self.cfg.k);
        let (mut state, mut obs) = (state.clone(), obs.clone());
        let mut ret = 0.0;
        for _ in 0..self.cfg.rollout_max {
            let ctx = ScoreContext { env: self.env, state: &state, obs: &obs };
            let action = match policy.select(&ctx) {
                Ok(a) => a,
                Err(Error::EmptyBeam) => break,
                Err(e) => return Err(e),
            };
            let (next, r) = self.env.step(&state, &action)?;
            ret += self.cfg.surrogate.reward(r.raw_reward);
            if r.done {
                break;
            }
            state = next;
            obs = r.observation;
        }
        Ok(ret.max(0.0))
    }

    /// `λ·v̂ + (1 − λ)·rollout` for a non-terminal leaf. Skips whichever term has zero
    /// weight.
    pub fn evaluate_leaf(&self, state: &EnvState, obs: &Observation) -> Result<f64> {
        let lambda = self.cfg.lambda;
        let v_hat = if lambda > 0.0 { estimate_value(self.value_fn, obs, self.cfg.value_top_n)? } else { 0.0 };
        let rollout = if lambda < 1.0 { self.rollout(state, obs)? } else { 0.0 };
        Ok(lambda * v_hat + (1.0 - lambda) * rollout)
    }

    /// Creates and evaluates a node; its edges start at `Q = value + α`.
    pub fn make_node(&self, state: EnvState, obs: Observation) -> Result<SearchNode> {
        if let Some(o) = state.outcome {
            let value = self.cfg.surrogate.terminal(o.raw);
            return Ok(SearchNode { state, obs, visits: 1, value, terminal: true, edges: Vec::new() });
        }
        let beam = self.scorer.top_k(&ScoreContext { env: self.env, state: &state, obs: &obs }, self.cfg.k);
        if beam.is_empty() {
            return Ok(SearchNode { state, obs, visits: 1, value: 0.0, terminal: true, edges: Vec::new() });
        }
        let value = self.evaluate_leaf(&state, &obs)?;
        let q0 = value + self.cfg.surrogate.step_penalty;
        let edges = beam
            .into_iter()
            .take(self.cfg.k)
            .map(|sa| Edge { text: sa.action.serialize(), action: sa.action, prior: sa.score, visits: 0, q: q0, child: None })
            .collect();
        Ok(SearchNode { state, obs, visits: 1, value, terminal: false, edges })
    }

    /// One selection/expansion/backup pass; returns this node's round value.
    pub fn round(&self, node: &mut SearchNode) -> Result<f64> {
        if node.terminal {
            node.visits += 1;
            return Ok(node.value);
        }
        let i = select_child(node, self.cfg.c)?;
        let below = match node.edges[i].child.as_mut() {
            Some(child) => self.round(child)?,
            None => {
                let (next, r) = self.env.step(&node.state, &node.edges[i].action)?;
                let child = self.make_node(next, r.observation)?;
                let v = child.value;
                node.edges[i].child = Some(Box::new(child));
                v
            }
        };
        let ret = self.cfg.surrogate.step_penalty + below;
        let e = &mut node.edges[i];
        e.visits += 1;
        e.q += (ret - e.q) / e.visits as f64;
        node.visits += 1;
        Ok(ret)
    }

    /// Searches from `state` and picks the most visited action. A reused subtree is
    /// kept only if it is rooted at `state`; its visits count toward the round budget.
    pub fn search_act(&self, state: &EnvState, obs: &Observation, reused: Option<Box<SearchNode>>) -> Result<SearchOutcome> {
        if state.is_done() {
            return Err(Error::TerminalState);
        }
        let (mut root, credit) = match reused {
            Some(t) if !t.terminal && t.state == *state => {
                let credit = t.visits;
                (t, credit)
            }
            _ => (Box::new(self.make_node(state.clone(), obs.clone())?), 0),
        };
        if root.edges.is_empty() {
            return Err(Error::EmptyBeam);
        }
        let rounds_run = self.cfg.rounds.saturating_sub(credit);
        for _ in 0..rounds_run {
            self.round(&mut root)?;
        }
        let chosen = most_visited(&root)?;
        Ok(SearchOutcome { action: root.edges[chosen].action.clone(), root, chosen, rounds_run })
    }
}

/// Free-function form of [`Searcher::search_act`].
pub fn search_act<S: ActionScorer + ?Sized, V: ValueFn + ?Sized>(
    env: &Env,
    state: &EnvState,
    obs: &Observation,
    scorer: &S,
    value_fn: &V,
    cfg: MctsConfig,
    reused: Option<Box<SearchNode>>,
) -> Result<SearchOutcome> {
    Searcher::new(env, scorer, value_fn, cfg)?.search_act(state, obs, reused)
}
