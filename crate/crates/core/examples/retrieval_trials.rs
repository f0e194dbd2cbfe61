//! Synthetic A→C retrieval with each critic: privileged ground truth,
//! direct comparison and Monte Carlo bridging.
//!
//! cargo run --release --example retrieval_trials -- [trials] [epochs] [noise]

use std::time::Instant;

use modality_bridge::contrastive::CriticKind;
use modality_bridge::eval::{run_trials, Method, RetrievalConfig};

fn main() -> modality_bridge::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let trials = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let epochs = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let noise = args.get(3).and_then(|s| s.parse().ok());
    for critic in [
        CriticKind::L2Half,
        CriticKind::Dot,
        CriticKind::cosine(1.0)?,
    ] {
        let mut cfg = RetrievalConfig {
            trials,
            eval_every: 5,
            ..RetrievalConfig::default()
        };
        cfg.train.critic = critic;
        cfg.train.epochs = epochs;
        if let Some(n) = noise {
            cfg.synth.noise = n;
        }
        let t = Instant::now();
        let report = run_trials(&cfg)?;
        println!(
            "critic {critic} ({} trials, {:.1}s)",
            report.completed,
            t.elapsed().as_secs_f64()
        );
        for m in [Method::GroundTruth, Method::Direct, Method::MonteCarlo] {
            let c = report.curve(m).expect("method present");
            let line: Vec<String> = (0..c.epochs.len())
                .map(|i| format!("{}:{:.3}±{:.3}", c.epochs[i], c.stats(i).0, c.stats(i).1))
                .collect();
            println!("  {:<13} {}", m.tag(), line.join("  "));
        }
    }
    Ok(())
}
