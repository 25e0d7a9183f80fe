use std::fs;

use psadpg::agents::{Agent, AgentKind};
use psadpg::harness::{moving_mean_100, parse_config, read_curve, run_training, train, StepInfo, TrainingObserver};
use psadpg::replay::ReplayBuffer;

struct ScanBuffer {
    all_one_hot: bool,
    snapshot_checked: bool,
    dir: std::path::PathBuf,
}

impl TrainingObserver for ScanBuffer {
    fn on_step(&mut self, info: &StepInfo<'_>) {
        self.all_one_hot &= info.buffer.iter().all(|t| t.surrogate_action.is_one_hot());
        if info.global_step == 700 {
            let path = self.dir.join("replay.csv");
            info.buffer.write_snapshot(&path).unwrap();
            let back = ReplayBuffer::read_snapshot(&path, info.buffer.capacity()).unwrap();
            assert!(back.iter().eq(info.buffer.iter()));
            self.snapshot_checked = true;
        }
    }
}

#[test]
fn psadpg_replay_holds_only_one_hot_actions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(None, &["episodes=2".into(), "hyperparams.learning_starts=200".into()]).unwrap();
    let mut scan = ScanBuffer {
        all_one_hot: true,
        snapshot_checked: false,
        dir: dir.path().to_path_buf(),
    };
    train(&cfg, &mut scan).unwrap();
    assert!(scan.all_one_hot);
    assert!(scan.snapshot_checked);
}

#[test]
fn acrobot_curves_respect_reward_floor_and_mean_invariant() {
    let dir = tempfile::tempdir().unwrap();
    for agent in ["psadpg", "dqn"] {
        let out = dir.path().join(agent);
        let cfg = parse_config(
            None,
            &[
                format!("agent={agent}"),
                "episodes=4".into(),
                format!("output_path={:?}", out.display().to_string()),
            ],
        )
        .unwrap();
        let (outcome, art) = run_training(&cfg, &mut ()).unwrap();
        let curve = read_curve(&art.curve).unwrap();
        assert_eq!(curve, outcome.curve);
        let rewards: Vec<f64> = curve.iter().map(|p| p.reward).collect();
        for (p, m) in curve.iter().zip(moving_mean_100(&rewards)) {
            assert_eq!(p.mean100, m);
            assert!(p.reward >= -500.0 && p.reward <= 0.0);
        }
        assert_eq!(outcome.agent.kind(), if agent == "dqn" { AgentKind::Dqn } else { AgentKind::Psadpg });
        let meta = fs::read_to_string(&art.metadata).unwrap();
        assert!(meta.contains("Acrobot-v1"));
    }
}

#[test]
fn checkpoint_restores_the_trained_agent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(
        None,
        &["episodes=3".into(), format!("output_path={:?}", dir.path().display().to_string())],
    )
    .unwrap();
    let (outcome, art) = run_training(&cfg, &mut ()).unwrap();
    let back = Agent::from_checkpoint(&psadpg::agents::Checkpoint::load(&art.checkpoint).unwrap()).unwrap();
    assert_eq!(back.checkpoint().to_bytes(), outcome.agent.checkpoint().to_bytes());
}
