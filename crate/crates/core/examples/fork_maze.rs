//! Language-conditioned navigation in the fork maze: trains the
//! state-action, future-state and label encoders on goal-directed
//! trajectories, then compares the direct policy with the one that
//! marginalizes over future states. From inside an alleyway the direct
//! policy drifts towards the middle row of the ambiguous "first column".
//!
//! cargo run --release --example fork_maze -- [epochs] [episodes]

use std::time::Instant;

use modality_bridge::maze::{
    column_and_row_labels, find_label, fork_episodes, rollout_eval, train_maze, MazeConfig,
    MazeEnv, PolicyKind, Selection, ACTION_NAMES,
};
use modality_bridge::numerics::SeedRng;

fn main() -> modality_bridge::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = MazeConfig::default();
    if let Some(e) = args.get(1).and_then(|s| s.parse().ok()) {
        cfg.train.epochs = e;
    }
    if let Some(n) = args.get(2).and_then(|s| s.parse().ok()) {
        cfg.episodes = n;
    }
    let env = MazeEnv::fork(cfg.step)?;
    let labels = column_and_row_labels(&env);
    print!("{}", env.render_with(&[(2, 6)]));

    let t = Instant::now();
    let model = train_maze(&cfg, &env, &labels)?;
    let last = model.history_crl.last().expect("trained");
    println!(
        "trained in {:.1}s, final (s,a)->s_f validation loss {:.3}",
        t.elapsed().as_secs_f64(),
        last.validation
    );

    let goal = find_label(&labels, "the first column")?;
    let start = [2.5, 6.5];
    for kind in [PolicyKind::Direct, PolicyKind::Lse] {
        let q = model.q_values(kind, start, goal)?;
        let best = (0..8)
            .max_by(|&a, &b| q[a].total_cmp(&q[b]))
            .expect("eight actions");
        let shown: Vec<String> = q
            .iter()
            .zip(ACTION_NAMES)
            .map(|(v, n)| format!("{n}={v:.2}"))
            .collect();
        println!(
            "{:<6} first action: {:<10} [{}]",
            kind.tag(),
            ACTION_NAMES[best],
            shown.join(" ")
        );
    }

    let episodes = fork_episodes(
        &mut SeedRng::new(cfg.seed).substream("eval", 0),
        &env,
        &labels,
        cfg.eval_episodes,
    )?;
    let sel = Selection::Softmax {
        temperature: cfg.temperature,
    };
    for kind in [PolicyKind::Direct, PolicyKind::Lse] {
        let r = rollout_eval(&env, &model, &labels, kind, &episodes, cfg.max_steps, sel)?;
        println!(
            "{:<6} success rate {:.3} over {} episodes",
            kind.tag(),
            r.success_rate,
            r.episodes
        );
    }
    Ok(())
}
