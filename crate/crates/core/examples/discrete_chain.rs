//! Exact discrete bridging. On a random Markov chain `A → B → C`, the
//! sampled log-sum-exp over `B` converges to the enumerated
//! `log p(c|a)/p(c)`. Two binary joints with the same pairwise tables
//! show why conditional independence is needed.
//!
//! cargo run --release --example discrete_chain

use modality_bridge::bridge::{binary_counterexample, DiscreteChain};
use modality_bridge::numerics::SeedRng;

fn main() -> modality_bridge::Result<()> {
    let mut rng = SeedRng::new(3);
    let chain = DiscreteChain::random(&mut rng, [6, 8, 5])?;
    println!(
        "A ⟂ C | B gap: {:.2e}",
        chain.joint().conditional_independence_gap()
    );
    for n in [100, 1_000, 10_000, 100_000] {
        let bank = chain.sample_b(&mut rng, n)?;
        let mut worst: f64 = 0.0;
        for a in 0..6 {
            for c in 0..5 {
                let exact = chain.exact_log_ratio(a, c);
                let est = chain.mc_log_ratio(a, c, &bank)?;
                worst = worst.max(((est.exp() - exact.exp()) / exact.exp()).abs());
            }
        }
        println!("N = {n:>6}: max relative error of p(c|a)/p(c) {worst:.4}");
    }

    let (indep, copied) = binary_counterexample();
    for (name, j) in [("independent", &indep), ("copied", &copied)] {
        println!(
            "{name:<12} p(A,B) {:?}  p(B,C) {:?}  p(C=0|A=0) = {}",
            j.marginal_ab(),
            j.marginal_bc(),
            j.conditional_c_given_a(0, 0)?
        );
    }
    Ok(())
}
