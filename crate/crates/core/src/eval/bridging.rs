use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recall::{recall_from_scores, recall_from_set_scores};
use super::trials::{chain_recalls, mean_std, RetrievalConfig, TrialData};
use crate::bridge::{mc_lse_selected, PhiBank};
use crate::contrastive::{score_matrix, train_chain, train_pair};
use crate::embed_io::{scaling_sweep, ScalingPoint};
use crate::error::{Error, Result};
use crate::numerics::SeedRng;
use crate::synthdata::{Split, SplitSizes};

/// `A → C` recall when the `A–B` and `B–C` pairs are trained separately,
/// each with its own `B` encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentReport {
    pub critic: String,
    pub k: usize,
    pub candidates: usize,
    pub trial_seeds: Vec<u64>,
    pub direct: Vec<f64>,
    pub monte_carlo: Vec<f64>,
}

impl IndependentReport {
    pub fn chance(&self) -> f64 {
        self.k as f64 / self.candidates as f64
    }

    pub fn direct_stats(&self) -> (f64, f64) {
        mean_std(&self.direct)
    }

    pub fn monte_carlo_stats(&self) -> (f64, f64) {
        mean_std(&self.monte_carlo)
    }
}

fn unprivileged(config: &RetrievalConfig) -> SplitSizes {
    SplitSizes {
        privileged: 0,
        ..config.split
    }
}

/// One trial: the critic applied to `(φ_A¹, φ_C²)` across the two models
/// versus the Monte Carlo bridge over intermediate rows encoded by both
/// `B` encoders. Returns `(direct, monte_carlo)`.
pub fn run_independent_trial(config: &RetrievalConfig, rng: &SeedRng) -> Result<(f64, f64)> {
    config.validate()?;
    let data = TrialData::generate(
        rng,
        &config.synth,
        unprivileged(config),
        config.standardize,
        config.candidates,
        config.bank_size,
    )?;
    let s = &data.splits;
    let first = train_pair(
        &rng.substream("train-ab", 0),
        &config.train,
        &s.ab,
        &s.eval.ab(Split::Validation)?,
    )?;
    let second = train_pair(
        &rng.substream("train-bc", 0),
        &config.train,
        &s.bc,
        &s.eval.bc(Split::Validation)?,
    )?;
    let pa = first.left.forward(s.eval.a.view())?;
    let pc = second.right.forward(s.eval.c.view())?;
    let critic = config.train.critic;
    let direct = recall_from_scores(
        &score_matrix(critic, pa.view(), pc.view())?,
        &data.candidates,
        config.k,
    )?;
    let items = data.intermediate_rows();
    let bank = PhiBank::two_sided(
        first.right.forward(items.view())?,
        second.left.forward(items.view())?,
        critic,
        critic,
    )?;
    let scores = mc_lse_selected(&bank, pa.view(), pc.view(), data.candidates.sets())?;
    let mc = recall_from_set_scores(&scores, &data.candidates, config.k)?;
    Ok((direct, mc))
}

pub fn run_independent_trials(config: &RetrievalConfig) -> Result<IndependentReport> {
    config.validate()?;
    let root = SeedRng::new(config.seed);
    let rngs: Vec<SeedRng> = (0..config.trials)
        .map(|t| root.substream("trial", t as u64))
        .collect();
    let results = rngs
        .par_iter()
        .map(|r| run_independent_trial(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndependentReport {
        critic: config.train.critic.to_string(),
        k: config.k,
        candidates: config.candidates,
        trial_seeds: rngs.iter().map(SeedRng::seed).collect(),
        direct: results.iter().map(|r| r.0).collect(),
        monte_carlo: results.iter().map(|r| r.1).collect(),
    })
}

/// Monte Carlo recall against bank size for one jointly trained chain,
/// next to the chain's direct recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub critic: String,
    pub bank_size: usize,
    pub direct: f64,
    pub points: Vec<ScalingPoint>,
}

/// Trains the chain of trial 0 and sweeps the bank size over `ms`, drawing
/// `subsamples` random banks of each size from the `config.bank_size`
/// intermediate rows.
pub fn scaling_experiment(
    config: &RetrievalConfig,
    ms: &[usize],
    subsamples: usize,
) -> Result<ScalingReport> {
    config.validate()?;
    if ms.is_empty() {
        return Err(Error::InvalidArgument("no bank sizes to sweep".into()));
    }
    let rng = SeedRng::new(config.seed).substream("trial", 0);
    let data = TrialData::generate(
        &rng,
        &config.synth,
        unprivileged(config),
        config.standardize,
        config.candidates,
        config.bank_size,
    )?;
    let s = &data.splits;
    let chain = train_chain(
        &rng.substream("train-chain", 0),
        &config.train,
        &s.ab,
        &s.bc,
        &s.eval.ab(Split::Validation)?,
        &s.eval.bc(Split::Validation)?,
    )?;
    let (direct, _) = chain_recalls(&config.train, &chain.a, &chain.b, &chain.c, &data, config.k)?;
    let bank = PhiBank::symmetric(
        chain.b.forward(data.intermediate_rows().view())?,
        config.train.critic,
    )?;
    let pa = chain.a.forward(s.eval.a.view())?;
    let pc = chain.c.forward(s.eval.c.view())?;
    let points = scaling_sweep(
        &rng.substream("sweep", 0),
        &bank,
        &pa,
        &pc,
        &data.candidates,
        config.k,
        ms,
        subsamples,
    )?;
    Ok(ScalingReport {
        critic: config.train.critic.to_string(),
        bank_size: bank.len(),
        direct,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::TrainConfig;
    use crate::synthdata::SynthSpec;

    fn small() -> RetrievalConfig {
        RetrievalConfig {
            trials: 2,
            synth: SynthSpec {
                n_a: 4,
                n_b: 2,
                n_c: 4,
                noise: 0.25,
                ..SynthSpec::default()
            },
            split: SplitSizes {
                train: 300,
                validation: 100,
                privileged: 0,
            },
            train: TrainConfig {
                epochs: 2,
                batch_size: 64,
                hidden: vec![16],
                latent_dim: 4,
                ..TrainConfig::default()
            },
            candidates: 8,
            bank_size: 200,
            ..RetrievalConfig::default()
        }
    }

    #[test]
    fn independent_trials_are_reproducible() {
        let cfg = small();
        let a = run_independent_trials(&cfg).unwrap();
        let b = run_independent_trials(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.direct.len(), 2);
        assert_eq!(a.chance(), 1.0 / 8.0);
        assert!(a.monte_carlo.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scaling_full_bank_matches_chain_recall() {
        let cfg = small();
        let r = scaling_experiment(&cfg, &[1, 200], 3).unwrap();
        assert_eq!(r.bank_size, 200);
        let rng = SeedRng::new(cfg.seed).substream("trial", 0);
        let data = TrialData::generate(
            &rng,
            &cfg.synth,
            unprivileged(&cfg),
            true,
            cfg.candidates,
            cfg.bank_size,
        )
        .unwrap();
        let s = &data.splits;
        let chain = train_chain(
            &rng.substream("train-chain", 0),
            &cfg.train,
            &s.ab,
            &s.bc,
            &s.eval.ab(Split::Validation).unwrap(),
            &s.eval.bc(Split::Validation).unwrap(),
        )
        .unwrap();
        let (direct, mc) =
            chain_recalls(&cfg.train, &chain.a, &chain.b, &chain.c, &data, cfg.k).unwrap();
        assert_eq!(r.direct, direct);
        assert_eq!(r.points[1].mean, mc);
        assert!(scaling_experiment(&cfg, &[201], 1).is_err());
    }
}
