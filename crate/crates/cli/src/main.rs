use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use screenagent::demo::{read_jsonl, replay_validate, write_jsonl, DemoEpisode};
use screenagent::eval::{eval_suite, run_episodes};
use screenagent::improve::{filter_successes, fit_on_demos, harvest, improve_tabular, split_dev, ImproveConfig};
use screenagent::policy::{ActionScorer, NoisyOracleScorer, OracleScorer, TabularPolicy};
use screenagent::search::MctsConfig;
use screenagent::value::{value_samples, ConstantValue, Surrogate, TabularValue, ValueBuckets, ValueFn};
use screenagent::{Env, ExecMode, GreedyAgent, TaskId};
use screenagent_service::SessionManager;
use serde_json::json;

#[derive(Parser)]
#[command(name = "screenagent", version, about = "Deterministic GUI tasks, scripted and tabular agents, tree search")]
struct Cli {
    /// Run episodes on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Task roster.
    Tasks {
        #[command(subcommand)]
        cmd: TasksCmd,
    },
    /// Mean score of the greedy policy over seeds.
    Eval {
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        seeds: SeedArgs,
        /// Print JSON (default).
        #[arg(long, conflicts_with = "table")]
        json: bool,
        #[arg(long)]
        table: bool,
    },
    /// Record oracle demonstrations.
    RecordOracle {
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long)]
        out: PathBuf,
        /// Store a PNG for every step.
        #[arg(long)]
        with_frames: bool,
    },
    /// Fit a tabular policy on demonstrations (filtered, with a dev split).
    FitPolicy {
        #[arg(long, required = true, num_args = 1..)]
        demos: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long, default_value_t = 0.1)]
        dev_fraction: f64,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Fit a tabular value function on demonstrations.
    FitValue {
        #[arg(long, required = true, num_args = 1..)]
        demos: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Harvest tree-search episodes as demonstrations.
    SearchImprove {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        base: u64,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Harvest, filter and refit for a number of iterations.
    Improve {
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Where to write the final tabular policy.
        #[arg(long)]
        out_policy: Option<PathBuf>,
    },
    /// Check that demonstrations replay exactly.
    Replay {
        #[arg(long, required = true, num_args = 1..)]
        demos: Vec<PathBuf>,
    },
    /// Websocket session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: std::net::SocketAddr,
        #[arg(long, default_value = "demos")]
        demo_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum TasksCmd {
    List,
}

#[derive(Args)]
struct PolicyArgs {
    /// Built-in scorer: oracle or noisy.
    #[arg(long, default_value = "oracle", conflicts_with = "policy_file")]
    policy: String,
    /// Tabular policy JSON written by fit-policy.
    #[arg(long)]
    policy_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 7)]
    noise_seed: u64,
    #[arg(long, default_value_t = 8)]
    k: usize,
}

impl PolicyArgs {
    fn scorer(&self) -> Result<Arc<dyn ActionScorer>> {
        if let Some(p) = &self.policy_file {
            return Ok(Arc::new(TabularPolicy::load(p).with_context(|| format!("loading {}", p.display()))?));
        }
        Ok(match self.policy.as_str() {
            "oracle" => Arc::new(OracleScorer),
            "noisy" => Arc::new(NoisyOracleScorer::new(self.epsilon, self.noise_seed)?),
            other => bail!("unknown built-in policy `{other}` (expected oracle or noisy)"),
        })
    }
}

#[derive(Args)]
struct SeedArgs {
    /// Comma-separated task ids; all tasks when omitted.
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    base: u64,
}

impl SeedArgs {
    fn tasks(&self) -> Result<Vec<TaskId>> {
        if self.tasks.is_empty() {
            return Ok(TaskId::ALL.to_vec());
        }
        self.tasks.iter().map(|t| t.parse::<TaskId>().map_err(Into::into)).collect()
    }

    fn range(&self) -> std::ops::Range<u64> {
        self.base..self.base + self.seeds
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 16)]
    rounds: u32,
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 20)]
    rollout_max: u32,
    /// Tabular value JSON written by fit-value; required when lambda > 0.
    #[arg(long)]
    value: Option<PathBuf>,
}

impl SearchArgs {
    fn config(&self, k: usize) -> Result<MctsConfig> {
        let cfg = MctsConfig { rounds: self.rounds, c: self.c, lambda: self.lambda, k, rollout_max: self.rollout_max, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    fn value_fn(&self) -> Result<Arc<dyn ValueFn>> {
        match &self.value {
            Some(p) => Ok(Arc::new(TabularValue::load(p).with_context(|| format!("loading {}", p.display()))?)),
            None if self.lambda > 0.0 => bail!("--value is required when --lambda > 0"),
            None => Ok(Arc::new(ConstantValue::new(ValueBuckets::default(), 0.0))),
        }
    }
}

fn load_demos(paths: &[PathBuf]) -> Result<Vec<DemoEpisode>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_jsonl(p).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(out)
}

fn print(v: serde_json::Value) {
    println!("{v}");
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let env = Env::default();
    match cli.cmd {
        Cmd::Tasks { cmd: TasksCmd::List } => {
            let tasks: Vec<_> = screenagent::tasks::task_roster()
                .into_iter()
                .map(|(t, h)| json!({"id": t.as_str(), "horizon": h, "binary": t.is_binary()}))
                .collect();
            print(json!(tasks));
        }
        Cmd::Eval { policy, seeds, json: _, table } => {
            let agent = GreedyAgent { k: policy.k, ..GreedyAgent::new(policy.scorer()?) };
            let report = eval_suite(&agent, &env, &seeds.tasks()?, seeds.range(), mode)?;
            if table {
                print!("{}", report.to_table());
            } else {
                print(serde_json::to_value(&report)?);
            }
        }
        Cmd::RecordOracle { seeds, out, with_frames } => {
            let jobs: Vec<(TaskId, u64)> = seeds.tasks()?.into_iter().flat_map(|t| seeds.range().map(move |s| (t, s))).collect();
            let eps = run_episodes(&GreedyAgent::new(OracleScorer), &env, &jobs, mode)?;
            let demos = if with_frames {
                eps.iter()
                    .map(|e| {
                        let actions = e.demo.steps.iter().map(|s| screenagent::parse_action(&s.a, env.bins())).collect::<Result<Vec<_>, _>>()?;
                        DemoEpisode::record(&env, e.demo.task, e.demo.seed, &actions, e.demo.source, true)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                eps.into_iter().map(|e| e.demo).collect()
            };
            write_jsonl(&out, &demos)?;
            print(json!({"episodes": demos.len(), "out": out}));
        }
        Cmd::FitPolicy { demos, out, threshold, dev_fraction, split_seed } => {
            let all = load_demos(&demos)?;
            let kept = screenagent::demo::filter_low_reward(&all, threshold);
            let (train, dev) = split_dev(&kept, dev_fraction, split_seed)?;
            let policy = fit_on_demos(&train)?;
            policy.save(&out)?;
            print(json!({"demos": all.len(), "kept": kept.len(), "train": train.len(), "dev": dev.len(), "observations": policy.len(), "out": out}));
        }
        Cmd::FitValue { demos, out } => {
            let all = load_demos(&demos)?;
            let samples = value_samples(&all, &Surrogate::default());
            let v = TabularValue::fit(&samples, ValueBuckets::default())?;
            v.save(&out)?;
            print(json!({"demos": all.len(), "samples": samples.len(), "observations": v.len(), "out": out}));
        }
        Cmd::SearchImprove { task, seeds, base, search, policy, out } => {
            let task: TaskId = task.parse()?;
            let cfg = search.config(policy.k)?;
            let eps = harvest(&env, &[task], base..base + seeds, policy.scorer()?, search.value_fn()?, cfg, mode)?;
            let kept = filter_successes(&eps, 0.8).len();
            let mean = screenagent::improve::mean_score(&eps)?;
            let demos: Vec<DemoEpisode> = eps.into_iter().map(|e| e.demo).collect();
            write_jsonl(&out, &demos)?;
            print(json!({"task": task, "episodes": demos.len(), "kept": kept, "mean_score": mean, "out": out}));
        }
        Cmd::Improve { seeds, iterations, search, policy, out_policy } => {
            let cfg = ImproveConfig {
                tasks: seeds.tasks()?,
                seeds: seeds.range(),
                iterations,
                mcts: search.config(policy.k)?,
                mode,
                ..Default::default()
            };
            let value_fn = search.value_fn()?;
            let (reports, fitted) = improve_tabular(&env, policy.scorer()?, &value_fn, &cfg)?;
            for r in &reports {
                print(serde_json::to_value(r)?);
            }
            if let Some(p) = out_policy {
                match fitted {
                    Some(table) => table.save(&p)?,
                    None => bail!("no successful episodes were harvested; nothing to save"),
                }
            }
        }
        Cmd::Replay { demos } => {
            let all = load_demos(&demos)?;
            let mut invalid = 0;
            for (i, d) in all.iter().enumerate() {
                let r = replay_validate(&env, d);
                if !r.valid {
                    invalid += 1;
                    eprintln!("episode {i} ({} seed {}): {:?}", d.task, d.seed, r.mismatch);
                }
            }
            print(json!({"episodes": all.len(), "invalid": invalid}));
            if invalid > 0 {
                std::process::exit(1);
            }
        }
        Cmd::Serve { addr, demo_dir } => {
            let manager = Arc::new(SessionManager::new(env, demo_dir));
            screenagent_service::serve(addr, manager, |a| eprintln!("listening on ws://{a}/ws")).await?;
        }
    }
    Ok(())
}
