//! Closed-form bridging scores against brute-force sampling: the
//! hypersphere form (Bessel normalizer) and the Gaussian form, including
//! what happens with the wrong `δ`.
//!
//! cargo run --release --example closed_form_laws

use modality_bridge::bridge::{gaussian_law_check, sphere_law_check};
use modality_bridge::numerics::SeedRng;

fn main() -> modality_bridge::Result<()> {
    let root = SeedRng::new(7);
    for dim in [3, 8, 32] {
        let r = sphere_law_check(&mut root.substream("sphere", dim as u64), dim, 20, 100_000)?;
        let worst = r
            .cases
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
            .expect("cases");
        println!(
            "sphere p={dim:<3} max rel error {:.2e}  (x={:+.3}: closed {:.5}, sampled {:.5})",
            r.max_rel_error, worst.inner, worst.closed_form, worst.monte_carlo
        );
    }
    for k in [1, 2] {
        for c in [0.5, 1.0, 2.0] {
            let rng = root.substream("gaussian", (k * 10) as u64 + (c * 2.0) as u64);
            let good = gaussian_law_check(&mut rng.clone(), k, c, None, 0.7, 20, 1_000_000)?;
            let bad = gaussian_law_check(
                &mut rng.clone(),
                k,
                c,
                Some(1.0 / (c + 1.0)),
                0.7,
                20,
                1_000_000,
            )?;
            println!(
                "gaussian k={k} c={c:<3} δ=2/(c+1): {:.2e} (log K {:+.4}, expected {:+.4})  δ=1/(c+1): {:.2e}",
                good.max_rel_error,
                good.log_constant,
                -(k as f64) / 2.0 * (2.0 * c + 1.0_f64).ln(),
                bad.max_rel_error
            );
        }
    }
    Ok(())
}
