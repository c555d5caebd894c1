//! Score reporting: per-task means over seeds, then the unweighted mean over tasks.

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use crate::agent::{Agent, Episode};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, ExecMode};
use crate::tasks::TaskId;

/// Seed blocks for variance trials start at multiples of this.
pub const TRIAL_BLOCK: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub task: TaskId,
    pub episodes: usize,
    pub mean: f64,
    pub successes: usize,
    pub incomplete: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub mean: f64,
    pub tasks: Vec<TaskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub task: TaskId,
    pub trial_means: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub stddev: f64,
}

/// Runs every `(task, seed)` pair; results come back in input order.
pub fn run_episodes<A: Agent + ?Sized>(agent: &A, env: &Env, jobs: &[(TaskId, u64)], mode: ExecMode) -> Result<Vec<Episode>> {
    map_ordered(jobs, mode, |&(t, s)| agent.run_episode(env, t, s)).into_iter().collect()
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample (n − 1) standard deviation.
pub fn sample_stddev(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::Range("standard deviation needs at least two values".into()));
    }
    let m = mean(xs)?;
    Ok((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

pub fn task_report(task: TaskId, episodes: &[Episode]) -> Result<TaskReport> {
    let scores: Vec<f64> = episodes.iter().map(Episode::score).collect();
    Ok(TaskReport {
        task,
        episodes: episodes.len(),
        mean: mean(&scores)?,
        successes: episodes.iter().filter(|e| !e.incomplete && e.raw() > 0.0).count(),
        incomplete: episodes.iter().filter(|e| e.incomplete).count(),
    })
}

pub fn eval_task<A: Agent + ?Sized>(agent: &A, env: &Env, task: TaskId, seeds: Range<u64>, mode: ExecMode) -> Result<TaskReport> {
    let jobs: Vec<(TaskId, u64)> = seeds.map(|s| (task, s)).collect();
    task_report(task, &run_episodes(agent, env, &jobs, mode)?)
}

/// Unweighted mean over task reports; the table is sorted by task name.
pub fn suite_report(mut tasks: Vec<TaskReport>) -> Result<SuiteReport> {
    tasks.sort_by(|a, b| a.task.as_str().cmp(b.task.as_str()));
    let means: Vec<f64> = tasks.iter().map(|t| t.mean).collect();
    Ok(SuiteReport { mean: mean(&means)?, tasks })
}

pub fn eval_suite<A: Agent + ?Sized>(agent: &A, env: &Env, tasks: &[TaskId], seeds: Range<u64>, mode: ExecMode) -> Result<SuiteReport> {
    let jobs: Vec<(TaskId, u64)> = tasks.iter().flat_map(|&t| seeds.clone().map(move |s| (t, s))).collect();
    let episodes = run_episodes(agent, env, &jobs, mode)?;
    let n = (seeds.end.saturating_sub(seeds.start)) as usize;
    let reports = tasks
        .iter()
        .zip(episodes.chunks(n.max(1)))
        .map(|(&t, eps)| task_report(t, eps))
        .collect::<Result<Vec<_>>>()?;
    suite_report(reports)
}

/// Trial `i` evaluates seeds `TRIAL_BLOCK·i ..` so blocks never overlap.
pub fn seed_variance_report<A: Agent + ?Sized>(
    agent: &A,
    env: &Env,
    task: TaskId,
    trials: usize,
    seeds_per_trial: u64,
    mode: ExecMode,
) -> Result<VarianceReport> {
    if trials < 2 {
        return Err(Error::Range("variance needs at least two trials".into()));
    }
    if seeds_per_trial > TRIAL_BLOCK {
        return Err(Error::Range(format!("at most {TRIAL_BLOCK} seeds per trial")));
    }
    let trial_means = (0..trials as u64)
        .map(|i| {
            let base = i * TRIAL_BLOCK;
            eval_task(agent, env, task, base..base + seeds_per_trial, mode).map(|r| r.mean)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceReport { task, mean: mean(&trial_means)?, stddev: sample_stddev(&trial_means)?, trial_means })
}

impl SuiteReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>8} {:>8} {:>8} {:>10}", "task", "episodes", "mean", "success", "incomplete");
        for t in &self.tasks {
            let _ = writeln!(s, "{:<18} {:>8} {:>8.1} {:>8} {:>10}", t.task.as_str(), t.episodes, t.mean, t.successes, t.incomplete);
        }
        let _ = writeln!(s, "{:<18} {:>8} {:>8.1}", "mean", "", self.mean);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::GreedyAgent;
    use crate::demo::{DemoEpisode, Source};
    use crate::policy::{ActionScorer, OracleScorer, ScoreContext, ScoredAction};

    fn ep(raw: f64, incomplete: bool) -> Episode {
        Episode {
            demo: DemoEpisode { task: TaskId::ClickTest, seed: 0, steps: vec![], raw, source: Source::Oracle },
            rewards: vec![],
            incomplete,
        }
    }

    #[test]
    fn half_success_is_fifty() {
        let eps: Vec<Episode> = (0..100).map(|i| ep(if i % 2 == 0 { 1.0 } else { -1.0 }, false)).collect();
        assert_eq!(task_report(TaskId::ClickTest, &eps).unwrap().mean, 50.0);
        let timeouts: Vec<Episode> = (0..10).map(|_| ep(-1.0, true)).collect();
        assert_eq!(task_report(TaskId::ClickTest, &timeouts).unwrap().mean, 0.0);
    }

    #[test]
    fn suite_mean_arithmetic() {
        let r = |task, mean| TaskReport { task, episodes: 1, mean, successes: 0, incomplete: 0 };
        let a = suite_report(vec![r(TaskId::DragBox, 100.0), r(TaskId::ClickTest, 0.0)]).unwrap();
        assert_eq!(a.mean, 50.0);
        assert_eq!(a.tasks[0].task, TaskId::ClickTest);
        let b = suite_report(vec![r(TaskId::ClickTest, 0.0), r(TaskId::DragBox, 100.0)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(suite_report(vec![r(TaskId::ClickColor, 37.5)]).unwrap().mean, 37.5);
        assert!(suite_report(vec![]).is_err());
    }

    #[test]
    fn stddev_matches_hand_value() {
        let s = sample_stddev(&[96.2, 96.4, 96.1]).unwrap();
        assert!((s - 0.152_752_523).abs() < 1e-6);
        assert!(sample_stddev(&[1.0]).is_err());
    }

    #[test]
    fn oracle_eval_is_perfect_and_modes_agree() {
        let env = Env::default();
        let agent = GreedyAgent::new(OracleScorer);
        let seq = eval_suite(&agent, &env, &[TaskId::ClickTest, TaskId::GridCoordinate], 0..20, ExecMode::Sequential).unwrap();
        let par = eval_suite(&agent, &env, &[TaskId::ClickTest, TaskId::GridCoordinate], 0..20, ExecMode::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.mean, 100.0);
        let v = seed_variance_report(&agent, &env, TaskId::ClickTest, 3, 10, ExecMode::Parallel).unwrap();
        assert_eq!(v.stddev, 0.0);
        assert!(seq.to_table().contains("grid-coordinate"));
    }

    #[test]
    fn timeouts_score_zero() {
        // Scroll never ends an episode.
        struct Idle;
        impl ActionScorer for Idle {
            fn top_k(&self, _: &ScoreContext<'_>, _: usize) -> Vec<ScoredAction> {
                vec![ScoredAction { action: crate::Action::Scroll { z: 0 }, score: 1.0 }]
            }
        }
        let env = Env::default();
        let r = eval_task(&GreedyAgent::new(Idle), &env, TaskId::ClickTest, 0..5, ExecMode::Parallel).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.incomplete, 5);
    }
}
