//! Trains the chain with a 2-D latent for each critic and writes the
//! evaluation representations as CSV for plotting.
//!
//! cargo run --release --example representations_2d -- [out.csv]

use ndarray::s;

use modality_bridge::contrastive::{train_chain, CriticKind};
use modality_bridge::eval::{
    dump_representations_2d, write_points_csv, RetrievalConfig, TrialData,
};
use modality_bridge::numerics::SeedRng;
use modality_bridge::synthdata::{Split, SplitSizes};

fn main() -> modality_bridge::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "representations_2d.csv".into());
    let cfg = RetrievalConfig::default();
    let rng = SeedRng::new(2);
    let sizes = SplitSizes {
        privileged: 0,
        ..cfg.split
    };
    let data = TrialData::generate(&rng, &cfg.synth, sizes, true, cfg.candidates, cfg.bank_size)?;
    let e = &data.splits.eval;
    let mut points = Vec::new();
    for critic in [
        CriticKind::L2Half,
        CriticKind::Dot,
        CriticKind::cosine(1.0)?,
    ] {
        let mut t = cfg.train.clone();
        t.critic = critic;
        t.latent_dim = 2;
        let sp = &data.splits;
        let chain = train_chain(
            &rng,
            &t,
            &sp.ab,
            &sp.bc,
            &e.ab(Split::Validation)?,
            &e.bc(Split::Validation)?,
        )?;
        let rows = s![..300, ..];
        points.extend(dump_representations_2d(
            &[
                ("A", &chain.a, e.a.slice(rows)),
                ("B", &chain.b, e.b.slice(rows)),
                ("C", &chain.c, e.c.slice(rows)),
            ],
            &critic.to_string(),
        )?);
        println!(
            "{critic}: final validation losses {:.3} / {:.3}",
            chain.history_ab.last().map_or(f64::NAN, |l| l.validation),
            chain.history_bc.last().map_or(f64::NAN, |l| l.validation)
        );
    }
    write_points_csv(&points, std::fs::File::create(&path)?)?;
    println!("wrote {} points to {path}", points.len());
    Ok(())
}
