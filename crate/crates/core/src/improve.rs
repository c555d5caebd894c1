//! Policy improvement: harvest search episodes, keep the successful ones, refit the
//! tabular scorer on everything kept so far, repeat. The value function stays fixed.

use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::agent::{Episode, GreedyAgent, SearchAgent};
use crate::demo::DemoEpisode;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::eval::{eval_suite, mean, run_episodes, suite_report, task_report};
use crate::exec::ExecMode;
use crate::policy::{ActionScorer, TabularPolicy};
use crate::rng::SplitMix64;
use crate::search::MctsConfig;
use crate::tasks::TaskId;
use crate::value::ValueFn;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iteration {
    pub iteration: usize,
    pub harvested: usize,
    pub kept: usize,
    pub greedy_mean: f64,
    pub search_mean: f64,
}

#[derive(Debug, Clone)]
pub struct ImproveConfig {
    pub tasks: Vec<TaskId>,
    pub seeds: Range<u64>,
    pub iterations: usize,
    pub mcts: MctsConfig,
    pub threshold: f64,
    pub mode: ExecMode,
}

impl Default for ImproveConfig {
    fn default() -> Self {
        ImproveConfig {
            tasks: vec![TaskId::ClickTest2, TaskId::ClickColor],
            seeds: 0..100,
            iterations: 1,
            mcts: MctsConfig::default(),
            threshold: crate::demo::DEFAULT_THRESHOLD,
            mode: ExecMode::Parallel,
        }
    }
}

/// One search episode per `(task, seed)`, tasks outermost.
pub fn harvest<S: ActionScorer, V: ValueFn>(
    env: &Env,
    tasks: &[TaskId],
    seeds: Range<u64>,
    scorer: S,
    value_fn: V,
    mcts: MctsConfig,
    mode: ExecMode,
) -> Result<Vec<Episode>> {
    let agent = SearchAgent::new(scorer, value_fn, mcts)?;
    let jobs: Vec<(TaskId, u64)> = tasks.iter().flat_map(|&t| seeds.clone().map(move |s| (t, s))).collect();
    run_episodes(&agent, env, &jobs, mode)
}

/// Keeps episodes with `raw >= threshold`.
pub fn filter_successes(episodes: &[Episode], threshold: f64) -> Vec<Episode> {
    episodes.iter().filter(|e| e.raw() >= threshold).cloned().collect()
}

/// Seeded shuffle, then the first `round(fraction·N)` items become the dev set.
pub fn split_dev<T: Clone>(items: &[T], fraction: f64, split_seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Range(format!("dev fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    SplitMix64::new(split_seed).shuffle(&mut order);
    let n_dev = (fraction * items.len() as f64).round() as usize;
    let dev = order[..n_dev].iter().map(|&i| items[i].clone()).collect();
    let train = order[n_dev..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, dev))
}

pub fn fit_on_demos<'a>(demos: impl IntoIterator<Item = &'a DemoEpisode>) -> Result<TabularPolicy> {
    TabularPolicy::fit(demos.into_iter().flat_map(|d| d.pairs()))
}

fn mean_by_task(tasks: &[TaskId], episodes: &[Episode]) -> Result<f64> {
    let reports = tasks
        .iter()
        .map(|&t| {
            let eps: Vec<Episode> = episodes.iter().filter(|e| e.demo.task == t).cloned().collect();
            task_report(t, &eps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(suite_report(reports)?.mean)
}

/// Returns one report per iteration plus the final scorer. Report `i` measures the
/// scorer in use at the start of iteration `i`.
pub fn improve<V: ValueFn>(
    env: &Env,
    initial: Arc<dyn ActionScorer>,
    value_fn: &V,
    cfg: &ImproveConfig,
) -> Result<(Vec<Iteration>, Arc<dyn ActionScorer>)> {
    let (reports, fitted) = improve_tabular(env, initial.clone(), value_fn, cfg)?;
    let scorer = match fitted {
        Some(p) => p as Arc<dyn ActionScorer>,
        None => initial,
    };
    Ok((reports, scorer))
}

/// Like [`improve`], but hands back the last fitted table (none if nothing was kept).
pub fn improve_tabular<V: ValueFn>(
    env: &Env,
    initial: Arc<dyn ActionScorer>,
    value_fn: &V,
    cfg: &ImproveConfig,
) -> Result<(Vec<Iteration>, Option<Arc<TabularPolicy>>)> {
    if cfg.iterations == 0 {
        return Err(Error::Config("at least one iteration".into()));
    }
    if cfg.tasks.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Config("no tasks or seeds to harvest".into()));
    }
    let mut scorer = initial;
    let mut fitted = None;
    let mut kept_all: Vec<Episode> = Vec::new();
    let mut reports = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let greedy = GreedyAgent { scorer: scorer.clone(), k: cfg.mcts.k, surrogate: cfg.mcts.surrogate, source: crate::demo::Source::Search };
        let greedy_mean = eval_suite(&greedy, env, &cfg.tasks, cfg.seeds.clone(), cfg.mode)?.mean;
        let episodes = harvest(env, &cfg.tasks, cfg.seeds.clone(), scorer.clone(), value_fn, cfg.mcts, cfg.mode)?;
        let search_mean = mean_by_task(&cfg.tasks, &episodes)?;
        let kept = filter_successes(&episodes, cfg.threshold);
        reports.push(Iteration { iteration, harvested: episodes.len(), kept: kept.len(), greedy_mean, search_mean });
        kept_all.extend(kept);
        if !kept_all.is_empty() {
            let p = Arc::new(fit_on_demos(kept_all.iter().map(|e| &e.demo))?);
            scorer = p.clone();
            fitted = Some(p);
        }
    }
    Ok((reports, fitted))
}

/// Mean of `Episode::score` over a batch.
pub fn mean_score(episodes: &[Episode]) -> Result<f64> {
    mean(&episodes.iter().map(Episode::score).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::Source;
    use crate::policy::OracleScorer;
    use crate::value::{ConstantValue, ValueBuckets};
    use proptest::prelude::*;

    fn ep(raw: f64) -> Episode {
        Episode {
            demo: DemoEpisode { task: TaskId::ClickTest, seed: 0, steps: vec![], raw, source: Source::Search },
            rewards: vec![],
            incomplete: false,
        }
    }

    #[test]
    fn filter_edges() {
        let raws: Vec<f64> = filter_successes(&[ep(0.75), ep(0.8), ep(0.81)], 0.8).iter().map(|e| e.raw()).collect();
        assert_eq!(raws, [0.8, 0.81]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let items: Vec<u32> = (0..100).collect();
        let (tr, dev) = split_dev(&items, 0.1, 7).unwrap();
        assert_eq!((tr.len(), dev.len()), (90, 10));
        assert_eq!(split_dev(&items, 0.1, 7).unwrap(), (tr.clone(), dev.clone()));
        let mut all = tr;
        all.extend(dev);
        all.sort();
        assert_eq!(all, items);
        let (a, b) = split_dev(&[1, 2], 0.5, 0).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert!(split_dev(&items, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn filter_successes_idempotent(raws in proptest::collection::vec(-1.0f64..=1.0, 0..30)) {
            let eps: Vec<Episode> = raws.into_iter().map(ep).collect();
            let once = filter_successes(&eps, 0.8);
            prop_assert_eq!(filter_successes(&once, 0.8), once);
        }
    }

    #[test]
    fn harvest_cardinality_and_determinism() {
        let env = Env::default();
        let v = ConstantValue::new(ValueBuckets::default(), 0.9);
        let tasks = [TaskId::ClickTest, TaskId::ClickButton];
        let a = harvest(&env, &tasks, 0..5, OracleScorer, v, MctsConfig::default(), ExecMode::Parallel).unwrap();
        let b = harvest(&env, &tasks, 0..5, OracleScorer, v, MctsConfig::default(), ExecMode::Sequential).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
        assert!(a.iter().all(|e| e.len() <= 30));
    }

    #[test]
    fn oracle_start_is_already_saturated() {
        let env = Env::default();
        let v = ConstantValue::new(ValueBuckets::default(), 0.9);
        let cfg = ImproveConfig { seeds: 0..10, iterations: 2, ..Default::default() };
        let (reports, _) = improve(&env, Arc::new(OracleScorer), &v, &cfg).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.greedy_mean, 100.0);
            assert_eq!(r.search_mean, 100.0);
            assert_eq!(r.kept, 20);
        }
    }
}
