//! Bridging two separately trained models. `A–B` and `B–C` each get their
//! own `B` encoder, so their latent spaces are unrelated and the direct
//! score is near chance. Encoding one shared list of `B` items with both
//! models, saved and reloaded through the binary container, recovers
//! retrieval. A sweep over the bank size follows.
//!
//! cargo run --release --example external_bridge -- [epochs]

use modality_bridge::contrastive::train_pair;
use modality_bridge::embed_io::{bridge_external, scaling_sweep, AlignedBank, EmbeddingContainer};
use modality_bridge::eval::{RetrievalConfig, TrialData};
use modality_bridge::numerics::SeedRng;
use modality_bridge::synthdata::{Split, SplitSizes};

fn main() -> modality_bridge::Result<()> {
    let mut cfg = RetrievalConfig::default();
    if let Some(e) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.train.epochs = e;
    }
    let rng = SeedRng::new(1);
    let sizes = SplitSizes {
        privileged: 0,
        ..cfg.split
    };
    let data = TrialData::generate(&rng, &cfg.synth, sizes, true, cfg.candidates, cfg.bank_size)?;
    let s = &data.splits;
    let first = train_pair(
        &rng.substream("ab", 0),
        &cfg.train,
        &s.ab,
        &s.eval.ab(Split::Validation)?,
    )?;
    let second = train_pair(
        &rng.substream("bc", 0),
        &cfg.train,
        &s.bc,
        &s.eval.bc(Split::Validation)?,
    )?;

    let items = data.intermediate_rows();
    let dir = std::env::temp_dir().join("modality_bridge_external");
    std::fs::create_dir_all(&dir)?;
    let files = [
        ("bank_first", "items", first.right.forward(items.view())?),
        ("bank_second", "items", second.left.forward(items.view())?),
        ("queries", "eval_a", first.left.forward(s.eval.a.view())?),
        ("pool", "eval_c", second.right.forward(s.eval.c.view())?),
    ];
    for (file, name, m) in files {
        EmbeddingContainer::new(name, m)?.save(dir.join(format!("{file}.uclb")))?;
    }
    let load = |f: &str| EmbeddingContainer::load(dir.join(format!("{f}.uclb")));
    let bank = AlignedBank::new(load("bank_first")?, load("bank_second")?)?;
    let (queries, pool) = (load("queries")?, load("pool")?);

    let critic = cfg.train.critic;
    let r = bridge_external(
        &bank,
        (critic, critic),
        &queries,
        &pool,
        &data.candidates,
        1,
    )?;
    println!(
        "recall@1 out of {}: direct {:.3}, bridged {:.3}, chance {:.3}",
        r.candidates,
        r.direct.unwrap_or(f64::NAN),
        r.monte_carlo,
        r.chance
    );
    let points = scaling_sweep(
        &rng.substream("sweep", 0),
        &bank.phi_bank(critic, critic)?,
        queries.matrix(),
        pool.matrix(),
        &data.candidates,
        1,
        &[1, 10, 100, 1000, bank.len()],
        10,
    )?;
    for p in points {
        println!("M = {:>6}: {:.3} ± {:.3}", p.m, p.mean, p.ci95);
    }
    Ok(())
}
