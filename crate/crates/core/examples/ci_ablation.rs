//! Retrieval as a latent shared by `A` and `C` (and invisible to `B`)
//! grows. The privileged model can exploit it; the bridged scores cannot.
//!
//! cargo run --release --example ci_ablation -- [trials] [epochs]

use modality_bridge::eval::{ablate_ci, Method, RetrievalConfig};

fn main() -> modality_bridge::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = RetrievalConfig {
        trials: args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3),
        ..RetrievalConfig::default()
    };
    if let Some(e) = args.get(2).and_then(|s| s.parse().ok()) {
        cfg.train.epochs = e;
    }
    println!("shift  ground_truth  direct  monte_carlo");
    for (shift, report) in ablate_ci(&cfg, &[0.0, 1.0, 2.0, 4.0])? {
        let m = |x| report.final_mean(x).unwrap_or(f64::NAN);
        println!(
            "{shift:>5}  {:>12.3}  {:>6.3}  {:>11.3}",
            m(Method::GroundTruth),
            m(Method::Direct),
            m(Method::MonteCarlo)
        );
    }
    Ok(())
}
