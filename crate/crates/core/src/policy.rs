//! Action scoring, the greedy policy, and reference scorers.
//!
//! An [`ActionScorer`] stands in for the policy model: given the current observation it
//! returns up to `k` actions with approximate probabilities. Learned scorers look only
//! at the observation; the oracle scorers additionally read the privileged task state.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use crate::action::{parse_action, Action};
use crate::env::{Env, EnvState};
use crate::error::{Error, Result};
use crate::render::Observation;
use crate::rng::SplitMix64;
use crate::tasks::{clicks_inside, TaskId};

/// Beam-search length normalisation exponent.
pub const LENGTH_PENALTY: f64 = 0.6;
pub const DEFAULT_BEAM: usize = 8;
/// Score given to the oracle's action; distractors share the remainder.
pub const ORACLE_HEAD_SCORE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAction {
    pub action: Action,
    pub score: f64,
}

/// What a scorer may look at when proposing actions.
#[derive(Clone, Copy)]
pub struct ScoreContext<'a> {
    pub env: &'a Env,
    pub state: &'a EnvState,
    pub obs: &'a Observation,
}

pub trait ActionScorer: Send + Sync {
    /// At most `k` actions, sorted by descending score.
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction>;
}

impl<S: ActionScorer + ?Sized> ActionScorer for &S {
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        (**self).top_k(ctx, k)
    }
}

impl<S: ActionScorer + ?Sized> ActionScorer for Arc<S> {
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        (**self).top_k(ctx, k)
    }
}

/// `log_prob / length^0.6`.
pub fn length_normalized_score(log_prob: f64, length: usize) -> f64 {
    debug_assert!(length >= 1);
    log_prob / (length as f64).powf(LENGTH_PENALTY)
}

/// Descending score, then ascending action text.
pub fn sort_beam(beam: &mut [ScoredAction]) {
    beam.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.action.serialize().cmp(&b.action.serialize()))
    });
}

/// Picks the best beam action not yet taken from the current observation.
pub struct GreedyPolicy<S> {
    scorer: S,
    k: usize,
    taken: HashMap<u64, HashSet<String>>,
}

impl<S: ActionScorer> GreedyPolicy<S> {
    pub fn new(scorer: S, k: usize) -> Self {
        GreedyPolicy { scorer, k, taken: HashMap::new() }
    }

    pub fn scorer(&self) -> &S {
        &self.scorer
    }

    /// Forget taken actions; call at episode start.
    pub fn reset(&mut self) {
        self.taken.clear();
    }

    pub fn was_taken(&self, digest: u64, action: &Action) -> bool {
        self.taken.get(&digest).is_some_and(|s| s.contains(&action.serialize()))
    }

    pub fn select(&mut self, ctx: &ScoreContext<'_>) -> Result<Action> {
        let beam = self.scorer.top_k(ctx, self.k);
        self.select_from_beam(ctx.obs.digest, &beam)
    }

    /// The highest-scored untaken action of `beam`, or its head when every action has
    /// already been tried from this observation.
    pub fn select_from_beam(&mut self, digest: u64, beam: &[ScoredAction]) -> Result<Action> {
        let head = beam.first().ok_or(Error::EmptyBeam)?;
        let taken = self.taken.entry(digest).or_default();
        let choice = beam
            .iter()
            .find(|sa| !taken.contains(&sa.action.serialize()))
            .unwrap_or(head)
            .action
            .clone();
        taken.insert(choice.serialize());
        Ok(choice)
    }
}

/// Scripted-solution scorer: the next oracle action on top, distractors below.
#[derive(Debug, Clone, Default)]
pub struct OracleScorer;

pub fn oracle_scorer(task: &str) -> Result<OracleScorer> {
    task.parse::<TaskId>()?;
    Ok(OracleScorer)
}

const DISTRACTOR_STREAM: u64 = 0xD157_AC70_0000_0001;
const NOISE_STREAM: u64 = 0x0015_E000_0000_0002;

impl OracleScorer {
    fn beam(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        if k == 0 {
            return Vec::new();
        }
        let head = ctx.env.oracle_actions(ctx.state).ok().and_then(|a| a.into_iter().next());
        let n_distract = match head {
            Some(_) => k - 1,
            None => k,
        };
        let distractors = distractors(ctx, head.as_ref(), n_distract);
        let mut beam = Vec::with_capacity(k);
        match head {
            Some(h) => {
                let rest = if distractors.is_empty() { 0.0 } else { (1.0 - ORACLE_HEAD_SCORE) / distractors.len() as f64 };
                beam.push(ScoredAction { action: h, score: ORACLE_HEAD_SCORE });
                beam.extend(distractors.into_iter().map(|action| ScoredAction { action, score: rest }));
            }
            None => {
                let share = 1.0 / distractors.len().max(1) as f64;
                beam.extend(distractors.into_iter().map(|action| ScoredAction { action, score: share }));
            }
        }
        sort_beam(&mut beam);
        beam
    }
}

impl ActionScorer for OracleScorer {
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        self.beam(ctx, k)
    }
}

/// Clicks on decoy widgets first (in a digest-seeded order), padded with clicks on
/// random bins. Never repeats and never contains `head`.
fn distractors(ctx: &ScoreContext<'_>, head: Option<&Action>, count: usize) -> Vec<Action> {
    let bins = ctx.env.bins();
    let mut rng = SplitMix64::from_words(&[ctx.obs.digest, DISTRACTOR_STREAM]);
    let mut seen: BTreeSet<String> = head.map(|h| h.serialize()).into_iter().collect();
    let mut pool: Vec<Action> = Vec::new();
    for r in ctx.state.task.decoy_rects() {
        for a in clicks_inside(&r, bins, ctx.env.banner()) {
            if seen.insert(a.serialize()) {
                pool.push(a);
            }
        }
    }
    rng.shuffle(&mut pool);
    pool.truncate(count);
    let total = (bins.x_bins * bins.y_bins) as usize;
    while pool.len() < count && seen.len() < total {
        let a = Action::click(rng.below(bins.x_bins as u64) as u32, rng.below(bins.y_bins as u64) as u32);
        if seen.insert(a.serialize()) {
            pool.push(a);
        }
    }
    pool
}

/// The oracle scorer with the head swapped for a distractor on a fraction `epsilon`
/// of observations. Whether a given observation is corrupted depends only on
/// `(digest, noise_seed)`.
#[derive(Debug, Clone)]
pub struct NoisyOracleScorer {
    pub epsilon: f64,
    pub noise_seed: u64,
}

pub fn noisy_oracle_scorer(task: &str, epsilon: f64, noise_seed: u64) -> Result<NoisyOracleScorer> {
    task.parse::<TaskId>()?;
    NoisyOracleScorer::new(epsilon, noise_seed)
}

impl NoisyOracleScorer {
    pub fn new(epsilon: f64, noise_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Range(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(NoisyOracleScorer { epsilon, noise_seed })
    }

    pub fn is_corrupted(&self, digest: u64) -> bool {
        let mut rng = SplitMix64::from_words(&[digest, self.noise_seed, NOISE_STREAM]);
        rng.next_f64() < self.epsilon
    }
}

impl ActionScorer for NoisyOracleScorer {
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        let mut beam = OracleScorer.beam(ctx, k);
        if beam.len() >= 2 && self.is_corrupted(ctx.obs.digest) {
            let mut rng = SplitMix64::from_words(&[ctx.obs.digest, self.noise_seed, NOISE_STREAM, 1]);
            let j = 1 + rng.below(beam.len() as u64 - 1) as usize;
            let (head, other) = (beam[0].score, beam[j].score);
            beam[0].score = other;
            beam[j].score = head;
            sort_beam(&mut beam);
        }
        beam
    }
}

/// Behavioural cloning by counting: each observation digest maps to the empirical
/// distribution of actions demonstrated from it.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    table: BTreeMap<u64, BTreeMap<String, u32>>,
    global: BTreeMap<String, u32>,
}

pub fn tabular_bc_fit<S: AsRef<str>>(dataset: &[(u64, S)]) -> Result<TabularPolicy> {
    TabularPolicy::fit(dataset.iter().map(|(d, a)| (*d, a.as_ref())))
}

impl TabularPolicy {
    pub fn fit<'a>(pairs: impl IntoIterator<Item = (u64, &'a str)>) -> Result<Self> {
        let mut table: BTreeMap<u64, BTreeMap<String, u32>> = BTreeMap::new();
        for (d, a) in pairs {
            *table.entry(d).or_default().entry(a.to_string()).or_default() += 1;
        }
        Self::from_table(table)
    }

    pub fn from_table(table: BTreeMap<u64, BTreeMap<String, u32>>) -> Result<Self> {
        let mut global: BTreeMap<String, u32> = BTreeMap::new();
        for counts in table.values() {
            for (a, c) in counts {
                *global.entry(a.clone()).or_default() += c;
            }
        }
        if global.values().all(|&c| c == 0) {
            return Err(Error::EmptyDataset);
        }
        Ok(TabularPolicy { table, global })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn knows(&self, digest: u64) -> bool {
        self.table.contains_key(&digest)
    }

    /// `(action text, probability)` sorted by probability, then text.
    pub fn distribution(&self, digest: u64) -> Vec<(String, f64)> {
        let counts = self.table.get(&digest).unwrap_or(&self.global);
        let total: u32 = counts.values().sum();
        let mut out: Vec<(String, f64)> =
            counts.iter().map(|(a, &c)| (a.clone(), c as f64 / total as f64)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .table
            .iter()
            .map(|(d, counts)| (format!("{d:016x}"), serde_json::to_value(counts).expect("string keys")))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Format("policy table must be an object".into()))?;
        let mut table = BTreeMap::new();
        for (k, counts) in obj {
            let d = u64::from_str_radix(k, 16).map_err(|_| Error::Format(format!("bad digest key `{k}`")))?;
            let counts: BTreeMap<String, u32> = serde_json::from_value(counts.clone())?;
            table.insert(d, counts);
        }
        Self::from_table(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

impl ActionScorer for TabularPolicy {
    fn top_k(&self, ctx: &ScoreContext<'_>, k: usize) -> Vec<ScoredAction> {
        self.distribution(ctx.obs.digest)
            .into_iter()
            .filter_map(|(text, p)| {
                parse_action(&text, ctx.env.bins()).ok().map(|action| ScoredAction { action, score: p })
            })
            .take(k)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Env;
    use proptest::prelude::*;

    fn sa(text: &str, score: f64) -> ScoredAction {
        ScoredAction { action: parse_action(text, &Default::default()).unwrap(), score }
    }

    #[test]
    fn length_normalization() {
        assert_eq!(length_normalized_score(-1.0, 1), -1.0);
        assert!((length_normalized_score(-1.0, 4) - (-0.43528)).abs() < 1e-5);
        assert_eq!(length_normalized_score(0.0, 7), 0.0);
    }

    #[test]
    fn greedy_skips_taken_then_falls_back() {
        struct Fixed;
        impl ActionScorer for Fixed {
            fn top_k(&self, _: &ScoreContext<'_>, _: usize) -> Vec<ScoredAction> {
                vec![]
            }
        }
        let beam = vec![sa("click 1 1", 0.6), sa("click 2 2", 0.4)];
        let mut g = GreedyPolicy::new(Fixed, 8);
        assert_eq!(g.select_from_beam(7, &beam).unwrap(), beam[0].action);
        assert_eq!(g.select_from_beam(7, &beam).unwrap(), beam[1].action);
        assert_eq!(g.select_from_beam(7, &beam).unwrap(), beam[0].action);
        // A fresh observation starts over.
        assert_eq!(g.select_from_beam(8, &beam).unwrap(), beam[0].action);
        g.reset();
        assert_eq!(g.select_from_beam(7, &beam).unwrap(), beam[0].action);
        assert!(matches!(g.select_from_beam(7, &[]), Err(Error::EmptyBeam)));
    }

    proptest! {
        #[test]
        fn greedy_never_repeats_while_alternatives_remain(
            n in 1usize..8,
            taken_mask in 0u32..256,
        ) {
            struct Fixed;
            impl ActionScorer for Fixed {
                fn top_k(&self, _: &ScoreContext<'_>, _: usize) -> Vec<ScoredAction> { vec![] }
            }
            let beam: Vec<ScoredAction> =
                (0..n).map(|i| sa(&format!("click {i} 0"), 1.0 / (i + 2) as f64)).collect();
            let mut g = GreedyPolicy::new(Fixed, 8);
            for (i, b) in beam.iter().enumerate() {
                if taken_mask >> i & 1 == 1 {
                    g.taken.entry(1).or_default().insert(b.action.serialize());
                }
            }
            let untaken: Vec<&ScoredAction> = beam.iter().filter(|b| !g.was_taken(1, &b.action)).collect();
            let choice = g.select_from_beam(1, &beam).unwrap();
            match untaken.first() {
                Some(first) => prop_assert_eq!(&choice, &first.action),
                None => prop_assert_eq!(&choice, &beam[0].action),
            }
        }

        #[test]
        fn length_normalization_monotone(lp1 in -50.0f64..0.0, lp2 in -50.0f64..0.0, len in 1usize..40) {
            let (lo, hi) = if lp1 < lp2 { (lp1, lp2) } else { (lp2, lp1) };
            prop_assert!(length_normalized_score(lo, len) <= length_normalized_score(hi, len));
            if lo < 0.0 {
                prop_assert!(length_normalized_score(lo, len + 1) > length_normalized_score(lo, len));
            }
        }
    }

    #[test]
    fn oracle_beam_shape() {
        let env = Env::default();
        for t in TaskId::ALL {
            for seed in 0..20 {
                let (s, obs) = env.reset(t, seed);
                let ctx = ScoreContext { env: &env, state: &s, obs: &obs };
                let beam = OracleScorer.top_k(&ctx, 8);
                assert_eq!(beam.len(), 8);
                assert_eq!(beam[0].action, env.oracle_actions(&s).unwrap()[0]);
                assert!(beam[0].score >= 0.9);
                let texts: HashSet<String> = beam.iter().map(|b| b.action.serialize()).collect();
                assert_eq!(texts.len(), 8);
                let total: f64 = beam.iter().map(|b| b.score).sum();
                assert!(total <= 1.0 + 1e-9);
                assert_eq!(OracleScorer.top_k(&ctx, 8), beam);
            }
        }
    }

    #[test]
    fn binary_decoy_tasks_fill_beam_with_wrong_widgets() {
        let env = Env::default();
        let (s, obs) = env.reset(TaskId::ClickTest2, 0);
        let ctx = ScoreContext { env: &env, state: &s, obs: &obs };
        for b in &OracleScorer.top_k(&ctx, 8)[1..] {
            let (_, r) = env.step(&s, &b.action).unwrap();
            assert_eq!(r.raw_reward, Some(-1.0));
        }
    }

    #[test]
    fn noisy_extremes() {
        let env = Env::default();
        let clean = NoisyOracleScorer::new(0.0, 1).unwrap();
        let always = NoisyOracleScorer::new(1.0, 1).unwrap();
        for seed in 0..30 {
            let (s, obs) = env.reset(TaskId::ClickColor, seed);
            let ctx = ScoreContext { env: &env, state: &s, obs: &obs };
            let oracle = OracleScorer.top_k(&ctx, 8);
            assert_eq!(clean.top_k(&ctx, 8), oracle);
            assert_ne!(always.top_k(&ctx, 8)[0].action, oracle[0].action);
        }
        assert!(NoisyOracleScorer::new(1.5, 0).is_err());
    }

    #[test]
    fn tabular_frequencies_and_fallback() {
        let data = vec![(1u64, "click 1 1"), (1, "click 1 1"), (1, "click 1 1"), (1, "click 2 2"), (2, "click 2 2")];
        let p = tabular_bc_fit(&data).unwrap();
        let d1 = p.distribution(1);
        assert_eq!(d1[0], ("click 1 1".to_string(), 0.75));
        // Unseen: global mode. click 1 1 x3 vs click 2 2 x2.
        let unseen = p.distribution(99);
        assert_eq!(unseen[0], ("click 1 1".to_string(), 0.6));
        assert!(matches!(tabular_bc_fit::<&str>(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn tabular_json_round_trip() {
        let data = vec![(0xabcu64, "click 1 1"), (7, "key enter")];
        let p = tabular_bc_fit(&data).unwrap();
        let v = p.to_json();
        assert!(v.get("0000000000000abc").is_some());
        assert_eq!(TabularPolicy::from_json(&v).unwrap(), p);
    }
}
