use std::fmt;
use std::io::Write;

use ndarray::Axis;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recall::{recall_from_scores, recall_from_set_scores, CandidateSets};
use crate::bridge::{mc_lse_selected, PhiBank};
use crate::contrastive::{score_matrix, ChainTrainer, PairTrainer, TrainConfig};
use crate::encoders::EncoderNet;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeedRng};
use crate::synthdata::{
    make_generator, sample_triples, split_pairs, Split, SplitSizes, Splits, SynthSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GroundTruth,
    Direct,
    MonteCarlo,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::GroundTruth => "ground_truth",
            Method::Direct => "direct",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Synthetic retrieval experiment: train the `A–B–C` chain (and an
/// optional privileged `A–C` pair), then score held-out `A → C` retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub seed: u64,
    pub trials: usize,
    pub synth: SynthSpec,
    pub split: SplitSizes,
    pub train: TrainConfig,
    /// Candidate-set size per query.
    pub candidates: usize,
    pub k: usize,
    /// Intermediate training rows encoded into the Monte Carlo bank.
    pub bank_size: usize,
    /// Evaluate after every `eval_every` epochs (and always after the last).
    pub eval_every: usize,
    pub ground_truth: bool,
    /// Z-score every modality with training-split statistics.
    pub standardize: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 20,
            synth: SynthSpec {
                n_b: 4,
                noise: 0.25,
                ..SynthSpec::default()
            },
            split: SplitSizes::default(),
            train: TrainConfig::default(),
            candidates: 32,
            k: 1,
            bank_size: 10000,
            eval_every: 1,
            ground_truth: true,
            standardize: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.train.validate()?;
        if self.trials == 0 || self.eval_every == 0 || self.bank_size == 0 {
            return Err(Error::InvalidArgument(
                "trials, eval_every and bank_size must be >= 1".into(),
            ));
        }
        if self.k == 0 || self.k > self.candidates {
            return Err(Error::InvalidArgument(format!(
                "k = {} must lie in 1..={}",
                self.k, self.candidates
            )));
        }
        if self.candidates > self.split.validation {
            return Err(Error::InvalidArgument(
                "candidate set larger than the evaluation pool".into(),
            ));
        }
        if self.bank_size > 2 * self.split.train {
            return Err(Error::InvalidArgument(
                "bank larger than the intermediate training rows".into(),
            ));
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m = Vec::new();
        if self.ground_truth {
            m.push(Method::GroundTruth);
        }
        m.extend([Method::Direct, Method::MonteCarlo]);
        m
    }

    fn split_sizes(&self) -> SplitSizes {
        SplitSizes {
            privileged: if self.ground_truth {
                self.split.train
            } else {
                0
            },
            ..self.split
        }
    }

    fn eval_epochs(&self) -> Vec<usize> {
        let e = self.train.epochs;
        let mut v: Vec<usize> = (1..=e).filter(|k| k % self.eval_every == 0).collect();
        if v.last() != Some(&e) && e > 0 {
            v.push(e);
        }
        if e == 0 {
            v.push(0);
        }
        v
    }
}

/// Generated data for one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub splits: Splits,
    pub candidates: CandidateSets,
    /// Indices into the concatenated intermediate training rows
    /// (`A–B` right side, then `B–C` left side) used for the bank.
    pub bank_rows: Vec<usize>,
}

impl TrialData {
    pub fn generate(
        rng: &SeedRng,
        synth: &SynthSpec,
        sizes: SplitSizes,
        standardize: bool,
        candidates: usize,
        bank: usize,
    ) -> Result<Self> {
        let generator = make_generator(&mut rng.substream("generator", 0), synth)?;
        let triples = sample_triples(&mut rng.substream("data", 0), &generator, sizes.total())?;
        let mut splits = split_pairs(&triples, sizes)?;
        if standardize {
            splits = splits.standardized()?;
        }
        let n = splits.eval.len();
        let candidates =
            CandidateSets::sample(&mut rng.substream("candidates", 0), n, n, candidates)?;
        let pool = splits.ab.len() + splits.bc.len();
        if bank > pool {
            return Err(Error::InsufficientRows {
                requested: bank,
                available: pool,
            });
        }
        let mut bank_rows = sample(&mut rng.substream("bank", 0), pool, bank).into_vec();
        bank_rows.sort_unstable();
        Ok(Self {
            splits,
            candidates,
            bank_rows,
        })
    }

    pub fn intermediate_rows(&self) -> Matrix {
        let b = ndarray::concatenate![Axis(0), self.splits.ab.right, self.splits.bc.left];
        b.select(Axis(0), &self.bank_rows)
    }
}

/// Direct and Monte Carlo `A → C` recall for a trained chain.
pub fn chain_recalls(
    config: &TrainConfig,
    a: &EncoderNet,
    b: &EncoderNet,
    c: &EncoderNet,
    data: &TrialData,
    k: usize,
) -> Result<(f64, f64)> {
    let pa = a.forward(data.splits.eval.a.view())?;
    let pc = c.forward(data.splits.eval.c.view())?;
    let direct = recall_from_scores(
        &score_matrix(config.critic, pa.view(), pc.view())?,
        &data.candidates,
        k,
    )?;
    let bank = PhiBank::symmetric(b.forward(data.intermediate_rows().view())?, config.critic)?;
    let sets = data.candidates.sets();
    let mc = recall_from_set_scores(
        &mc_lse_selected(&bank, pa.view(), pc.view(), sets)?,
        &data.candidates,
        k,
    )?;
    Ok((direct, mc))
}

pub fn pair_recall(
    critic_cfg: &TrainConfig,
    left: &EncoderNet,
    right: &EncoderNet,
    data: &TrialData,
    k: usize,
) -> Result<f64> {
    let pa = left.forward(data.splits.eval.a.view())?;
    let pc = right.forward(data.splits.eval.c.view())?;
    recall_from_scores(
        &score_matrix(critic_cfg.critic, pa.view(), pc.view())?,
        &data.candidates,
        k,
    )
}

/// Recall per evaluated epoch for each method of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialCurves {
    pub epochs: Vec<usize>,
    /// `[method][epoch]`, methods in [`RetrievalConfig::methods`] order.
    pub recall: Vec<Vec<f64>>,
}

pub fn run_trial(config: &RetrievalConfig, rng: &SeedRng) -> Result<TrialCurves> {
    config.validate()?;
    let data = TrialData::generate(
        rng,
        &config.synth,
        config.split_sizes(),
        config.standardize,
        config.candidates,
        config.bank_size,
    )?;
    let s = &data.splits;
    let val_ab = s.eval.ab(Split::Validation)?;
    let val_bc = s.eval.bc(Split::Validation)?;
    let val_ac = s.eval.ac(Split::Validation)?;
    let dims = [s.ab.left_dim(), s.ab.right_dim(), s.bc.right_dim()];
    let mut chain = ChainTrainer::new(&rng.substream("train-chain", 0), &config.train, dims)?;
    let mut truth = match &s.ac_privileged {
        Some(ac) => Some((
            PairTrainer::new(
                &rng.substream("train-truth", 0),
                &config.train,
                ac.left_dim(),
                ac.right_dim(),
            )?,
            ac,
        )),
        None => None,
    };
    let eval_epochs = config.eval_epochs();
    let methods = config.methods();
    let mut recall = vec![Vec::with_capacity(eval_epochs.len()); methods.len()];
    let mut next = 0;
    for epoch in 0..=config.train.epochs {
        if epoch > 0 {
            chain.epoch(&s.ab, &s.bc, &val_ab, &val_bc)?;
            if let Some((t, ac)) = truth.as_mut() {
                t.epoch(ac, &val_ac)?;
            }
        }
        if next < eval_epochs.len() && eval_epochs[next] == epoch {
            next += 1;
            let (a, b, c) = chain.encoders();
            let (direct, mc) = chain_recalls(&config.train, a, b, c, &data, config.k)?;
            let mut col = Vec::with_capacity(3);
            if let Some((t, _)) = truth.as_ref() {
                col.push(pair_recall(
                    &config.train,
                    t.left(),
                    t.right(),
                    &data,
                    config.k,
                )?);
            }
            col.extend([direct, mc]);
            for (m, v) in col.into_iter().enumerate() {
                recall[m].push(v);
            }
        }
    }
    Ok(TrialCurves {
        epochs: eval_epochs,
        recall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedTrial {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: Method,
    pub epochs: Vec<usize>,
    /// `[epoch][completed trial]`
    pub values: Vec<Vec<f64>>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl MethodCurve {
    pub fn stats(&self, idx: usize) -> (f64, f64) {
        mean_std(&self.values[idx])
    }

    pub fn final_stats(&self) -> (f64, f64) {
        self.stats(self.values.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub critic: String,
    pub k: usize,
    pub candidates: usize,
    pub trial_seeds: Vec<u64>,
    pub completed: usize,
    pub aborted: Vec<AbortedTrial>,
    pub curves: Vec<MethodCurve>,
}

impl RetrievalReport {
    pub fn curve(&self, method: Method) -> Option<&MethodCurve> {
        self.curves.iter().find(|c| c.method == method)
    }

    /// Mean final-epoch recall of `method`.
    pub fn final_mean(&self, method: Method) -> Option<f64> {
        self.curve(method).map(|c| c.final_stats().0)
    }

    pub fn chance(&self) -> f64 {
        self.k as f64 / self.candidates as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,method,mean,std,trials")?;
        for c in &self.curves {
            for (i, e) in c.epochs.iter().enumerate() {
                let (m, s) = c.stats(i);
                writeln!(w, "{},{},{},{},{}", e, c.method, m, s, c.values[i].len())?;
            }
        }
        Ok(())
    }
}

/// Runs `config.trials` independent trials (in parallel when threads are
/// available). Failed trials are recorded and excluded from the curves.
pub fn run_trials(config: &RetrievalConfig) -> Result<RetrievalReport> {
    config.validate()?;
    let root = SeedRng::new(config.seed);
    let rngs: Vec<SeedRng> = (0..config.trials)
        .map(|t| root.substream("trial", t as u64))
        .collect();
    let results: Vec<Result<TrialCurves>> = rngs.par_iter().map(|r| run_trial(config, r)).collect();
    let methods = config.methods();
    let epochs = config.eval_epochs();
    let mut curves: Vec<MethodCurve> = methods
        .iter()
        .map(|&method| MethodCurve {
            method,
            epochs: epochs.clone(),
            values: vec![Vec::new(); epochs.len()],
        })
        .collect();
    let mut aborted = Vec::new();
    for (t, res) in results.into_iter().enumerate() {
        match res {
            Ok(tc) => {
                for (m, curve) in curves.iter_mut().enumerate() {
                    for (e, v) in tc.recall[m].iter().enumerate() {
                        curve.values[e].push(*v);
                    }
                }
            }
            Err(e) => aborted.push(AbortedTrial {
                trial: t,
                seed: rngs[t].seed(),
                error: e.to_string(),
            }),
        }
    }
    let completed = config.trials - aborted.len();
    if completed == 0 {
        return Err(Error::InvalidArgument(format!(
            "all {} trials aborted; first error: {}",
            config.trials, aborted[0].error
        )));
    }
    Ok(RetrievalReport {
        critic: config.train.critic.to_string(),
        k: config.k,
        candidates: config.candidates,
        trial_seeds: rngs.iter().map(SeedRng::seed).collect(),
        completed,
        aborted,
        curves,
    })
}

/// Final-epoch recall per method at each conditional-independence
/// violation strength.
pub fn ablate_ci(config: &RetrievalConfig, shifts: &[f64]) -> Result<Vec<(f64, RetrievalReport)>> {
    shifts
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.synth.ci_shift = s;
            c.eval_every = c.train.epochs.max(1);
            run_trials(&c).map(|r| (s, r))
        })
        .collect()
}
