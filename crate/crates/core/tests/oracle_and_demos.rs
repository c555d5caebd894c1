use proptest::prelude::*;
use screenagent::demo::{convert_high_level, read_jsonl, replay_validate, write_jsonl, HighLevelOp};
use screenagent::rng::SplitMix64;
use screenagent::tasks::Intent;
use screenagent::{Action, DemoEpisode, Env, Source, TaskId};

#[test]
fn oracle_solves_every_task_for_100_seeds() {
    let env = Env::default();
    for t in TaskId::ALL {
        for seed in 0..100 {
            let (s, _) = env.reset(t, seed);
            let actions = env.oracle_actions(&s).unwrap();
            assert!(actions.len() as u32 <= t.horizon_hint(), "{t} seed {seed}: {} steps", actions.len());
            let demo = DemoEpisode::record(&env, t, seed, &actions, Source::Oracle, false).unwrap();
            assert!(demo.raw >= 0.8, "{t} seed {seed}: raw {}", demo.raw);
            assert!(replay_validate(&env, &demo).valid);
        }
    }
}

fn random_actions(seed: u64, n: usize) -> Vec<Action> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| match rng.below(6) {
            0 | 1 => Action::click(rng.below(32) as u32, rng.below(32) as u32),
            2 => Action::BeginDrag { x: rng.below(32) as u32, y: rng.below(32) as u32 },
            3 => Action::EndDrag { x: rng.below(32) as u32, y: rng.below(32) as u32 },
            4 => Action::key(["a", "b", "backspace", "enter", "space"][rng.below(5) as usize]),
            _ => Action::Scroll { z: rng.range_inclusive(-3, 3) as i32 },
        })
        .collect()
}

/// Plays `actions` until the episode ends, padding with no-op scrolls up to the step limit.
fn terminal_prefix(env: &Env, task: TaskId, seed: u64, actions: &[Action]) -> Vec<Action> {
    let (mut s, _) = env.reset(task, seed);
    let mut out = Vec::new();
    let mut it = actions.iter().cloned().chain(std::iter::repeat(Action::Scroll { z: 0 }));
    while !s.is_done() {
        let a = it.next().unwrap();
        s = env.transition(&s, &a).unwrap();
        out.push(a);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recorded_random_episodes_replay(task_i in 0usize..8, seed in 0u64..1000, action_seed: u64, n in 0usize..30) {
        let env = Env::default();
        let task = TaskId::ALL[task_i];
        let actions = terminal_prefix(&env, task, seed, &random_actions(action_seed, n));
        let demo = DemoEpisode::record(&env, task, seed, &actions, Source::Human, false).unwrap();
        prop_assert!(replay_validate(&env, &demo).valid);
        let line = demo.to_json_line().unwrap();
        prop_assert_eq!(DemoEpisode::from_json_line(&line).unwrap(), demo);
    }
}

#[test]
fn high_level_click_traces_match_oracle_outcomes() {
    let env = Env::default();
    let single = [TaskId::ClickTest, TaskId::ClickTest2, TaskId::ClickButton, TaskId::ClickColor, TaskId::GridCoordinate, TaskId::ClickCheckboxes];
    for t in single {
        for seed in 0..100 {
            let (s, _) = env.reset(t, seed);
            let intents = s.task.oracle_intents(&env.pointer(&s)).unwrap();
            let trace: Vec<HighLevelOp> = intents
                .iter()
                .map(|i| match i {
                    Intent::ClickRect(r) => HighLevelOp::ClickElement { rect: *r },
                    other => panic!("{t}: unexpected intent {other:?}"),
                })
                .collect();
            let converted = convert_high_level(&trace, env.bins(), env.banner(), None).unwrap();
            let direct = env.oracle_actions(&s).unwrap();
            let a = DemoEpisode::record(&env, t, seed, &converted, Source::Human, false).unwrap();
            let b = DemoEpisode::record(&env, t, seed, &direct, Source::Oracle, false).unwrap();
            assert_eq!(a.raw >= 0.8, b.raw >= 0.8, "{t} seed {seed}");
        }
    }
}

#[test]
fn enter_text_typing_trace_converts() {
    let env = Env::default();
    for seed in 0..30 {
        let (s, _) = env.reset(TaskId::EnterText, seed);
        let widgets = s.task.widgets();
        let instr = s.task.instruction();
        let target = instr.split('"').nth(1).expect("quoted target").to_string();
        let field = widgets[0].rect;
        let submit = widgets[1].rect;
        let trace = [HighLevelOp::TypeText { rect: field, text: target }, HighLevelOp::ClickElement { rect: submit }];
        let actions = convert_high_level(&trace, env.bins(), env.banner(), None).unwrap();
        let demo = DemoEpisode::record(&env, TaskId::EnterText, seed, &actions, Source::Human, false).unwrap();
        assert_eq!(demo.raw, 1.0, "seed {seed}: {instr}");
    }
}

#[test]
fn jsonl_files_survive_a_round_trip() {
    let env = Env::default();
    let demos: Vec<DemoEpisode> = (0..10)
        .map(|seed| {
            let (s, _) = env.reset(TaskId::ClickButton, seed);
            DemoEpisode::record(&env, TaskId::ClickButton, seed, &env.oracle_actions(&s).unwrap(), Source::Oracle, seed % 2 == 0).unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("demos.jsonl");
    write_jsonl(&p, &demos).unwrap();
    let back = read_jsonl(&p).unwrap();
    assert_eq!(back, demos);
    assert!(back.iter().all(|d| replay_validate(&env, d).valid));
}
