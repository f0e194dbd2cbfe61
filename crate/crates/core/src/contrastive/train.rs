use std::io::Write;

use ndarray::{s, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::critic::CriticKind;
use super::infonce::{infonce_loss, infonce_loss_and_grad};
use crate::encoders::{adam_step, Activation, AdamConfig, AdamState, EncoderNet, OutputMode};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeedRng};
use crate::synthdata::PairDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub critic: CriticKind,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            critic: CriticKind::L2Half,
            latent_dim: 8,
            hidden: vec![128, 128],
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.latent_dim == 0 || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidArgument("layer widths must be >= 1".into()));
        }
        self.critic.validate()
    }

    /// Unit-normalized outputs for the cosine critic, raw otherwise.
    pub fn output_mode(&self) -> OutputMode {
        match self.critic {
            CriticKind::Cosine { .. } => OutputMode::UnitNorm,
            _ => OutputMode::Raw,
        }
    }

    pub fn layer_sizes(&self, input: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(self.latent_dim);
        sizes
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    fn encoder(&self, rng: &SeedRng, label: &str, input: usize) -> Result<EncoderNet> {
        EncoderNet::new(
            &self.layer_sizes(input),
            self.activation,
            self.output_mode(),
            &mut rng.substream(label, 0),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub validation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,train_loss,validation_loss")?;
        for e in &self.epochs {
            writeln!(w, "{},{},{}", e.epoch, e.train, e.validation)?;
        }
        Ok(())
    }
}

fn shuffled_batches(rng: &SeedRng, epoch: usize, n: usize, batch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng.substream("shuffle", epoch as u64));
    order
        .chunks(batch)
        .filter(|c| c.len() >= 2)
        .map(<[usize]>::to_vec)
        .collect()
}

/// Mean InfoNCE loss over consecutive validation batches of the training
/// batch size (a trailing single row is skipped).
pub(crate) fn batched_loss(
    critic: CriticKind,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
    batch: usize,
) -> Result<f64> {
    let n = left.nrows();
    let mut total = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        if end - start >= 2 {
            total += infonce_loss(
                critic,
                left.slice(s![start..end, ..]),
                right.slice(s![start..end, ..]),
            )?;
            count += 1;
        }
        start = end;
    }
    if count == 0 {
        return Err(Error::InsufficientNegatives(n));
    }
    Ok(total / count as f64)
}

fn check_finite(loss: f64, epoch: usize, step: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss { epoch, step, loss })
    }
}

/// One optimizer step on a batch of aligned rows; returns the batch loss.
fn pair_step(
    critic: CriticKind,
    left: (&mut EncoderNet, &mut AdamState, &Matrix),
    right: (&mut EncoderNet, &mut AdamState, &Matrix),
) -> Result<f64> {
    let lc = left.0.forward_cached(left.2.view())?;
    let rc = right.0.forward_cached(right.2.view())?;
    let out = infonce_loss_and_grad(critic, lc.output().view(), rc.output().view())?;
    let lg = left.0.backward(&lc, out.grad_left.view())?;
    let rg = right.0.backward(&rc, out.grad_right.view())?;
    adam_step(left.0, &lg, left.1)?;
    adam_step(right.0, &rg, right.1)?;
    Ok(out.loss)
}

#[derive(Debug, Clone)]
pub struct TrainedPair {
    pub left: EncoderNet,
    pub right: EncoderNet,
    pub history: LossHistory,
}

/// Trains a left/right encoder pair one epoch at a time.
#[derive(Debug, Clone)]
pub struct PairTrainer {
    config: TrainConfig,
    rng: SeedRng,
    left: EncoderNet,
    right: EncoderNet,
    left_opt: AdamState,
    right_opt: AdamState,
    history: LossHistory,
}

impl PairTrainer {
    pub fn new(
        rng: &SeedRng,
        config: &TrainConfig,
        left_dim: usize,
        right_dim: usize,
    ) -> Result<Self> {
        config.validate()?;
        let left = config.encoder(rng, "init-left", left_dim)?;
        let right = config.encoder(rng, "init-right", right_dim)?;
        let left_opt = AdamState::new(&left, config.adam());
        let right_opt = AdamState::new(&right, config.adam());
        Ok(Self {
            config: config.clone(),
            rng: rng.clone(),
            left,
            right,
            left_opt,
            right_opt,
            history: LossHistory::default(),
        })
    }

    pub fn left(&self) -> &EncoderNet {
        &self.left
    }

    pub fn right(&self) -> &EncoderNet {
        &self.right
    }

    pub fn history(&self) -> &LossHistory {
        &self.history
    }

    pub fn epochs_done(&self) -> usize {
        self.history.epochs.len()
    }

    pub fn epoch(&mut self, train: &PairDataset, validation: &PairDataset) -> Result<EpochLoss> {
        if train.left_dim() != self.left.input_dim() || train.right_dim() != self.right.input_dim()
        {
            return Err(Error::Shape(
                "training data does not match encoder inputs".into(),
            ));
        }
        let epoch = self.epochs_done();
        let critic = self.config.critic;
        let mut total = 0.0;
        let batches = shuffled_batches(&self.rng, epoch, train.len(), self.config.batch_size);
        if batches.is_empty() {
            return Err(Error::InsufficientNegatives(train.len()));
        }
        for (step, idx) in batches.iter().enumerate() {
            let l = train.left.select(Axis(0), idx);
            let r = train.right.select(Axis(0), idx);
            let loss = pair_step(
                critic,
                (&mut self.left, &mut self.left_opt, &l),
                (&mut self.right, &mut self.right_opt, &r),
            )?;
            check_finite(loss, epoch, step)?;
            total += loss;
        }
        let val = batched_loss(
            critic,
            self.left.forward(validation.left.view())?.view(),
            self.right.forward(validation.right.view())?.view(),
            self.config.batch_size,
        )?;
        check_finite(val, epoch, batches.len())?;
        let rec = EpochLoss {
            epoch: epoch + 1,
            train: total / batches.len() as f64,
            validation: val,
        };
        self.history.epochs.push(rec);
        Ok(rec)
    }

    pub fn finish(self) -> TrainedPair {
        TrainedPair {
            left: self.left,
            right: self.right,
            history: self.history,
        }
    }
}

/// Trains an encoder pair for `config.epochs` epochs.
pub fn train_pair(
    rng: &SeedRng,
    config: &TrainConfig,
    train: &PairDataset,
    validation: &PairDataset,
) -> Result<TrainedPair> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut t = PairTrainer::new(rng, config, train.left_dim(), train.right_dim())?;
    for _ in 0..config.epochs {
        t.epoch(train, validation)?;
    }
    Ok(t.finish())
}

#[derive(Debug, Clone)]
pub struct TrainedChain {
    pub a: EncoderNet,
    pub b: EncoderNet,
    pub c: EncoderNet,
    pub history_ab: LossHistory,
    pub history_bc: LossHistory,
}

/// Jointly trains `φ_A ↔ φ_B` and `φ_B ↔ φ_C` with one shared `φ_B`:
/// each step sums the two InfoNCE losses, one batch from each dataset.
#[derive(Debug, Clone)]
pub struct ChainTrainer {
    config: TrainConfig,
    rng: SeedRng,
    a: EncoderNet,
    b: EncoderNet,
    c: EncoderNet,
    opts: [AdamState; 3],
    history_ab: LossHistory,
    history_bc: LossHistory,
}

impl ChainTrainer {
    pub fn new(rng: &SeedRng, config: &TrainConfig, dims: [usize; 3]) -> Result<Self> {
        config.validate()?;
        let a = config.encoder(rng, "init-a", dims[0])?;
        let b = config.encoder(rng, "init-b", dims[1])?;
        let c = config.encoder(rng, "init-c", dims[2])?;
        Self::from_encoders(rng, config, [a, b, c])
    }

    /// Starts from caller-built encoders (e.g. different architectures per
    /// modality); only the critic, batch size and learning rate of
    /// `config` are used.
    pub fn from_encoders(
        rng: &SeedRng,
        config: &TrainConfig,
        nets: [EncoderNet; 3],
    ) -> Result<Self> {
        config.validate()?;
        let [a, b, c] = nets;
        if a.output_dim() != b.output_dim() || b.output_dim() != c.output_dim() {
            return Err(Error::Shape(
                "chain encoders must share the latent dimension".into(),
            ));
        }
        let opts = [
            AdamState::new(&a, config.adam()),
            AdamState::new(&b, config.adam()),
            AdamState::new(&c, config.adam()),
        ];
        Ok(Self {
            config: config.clone(),
            rng: rng.clone(),
            a,
            b,
            c,
            opts,
            history_ab: LossHistory::default(),
            history_bc: LossHistory::default(),
        })
    }

    pub fn encoders(&self) -> (&EncoderNet, &EncoderNet, &EncoderNet) {
        (&self.a, &self.b, &self.c)
    }

    pub fn epochs_done(&self) -> usize {
        self.history_ab.epochs.len()
    }

    /// Runs one epoch over both datasets. The shorter dataset's batches
    /// are cycled so every step sees one batch of each.
    pub fn epoch(
        &mut self,
        ab: &PairDataset,
        bc: &PairDataset,
        val_ab: &PairDataset,
        val_bc: &PairDataset,
    ) -> Result<(EpochLoss, EpochLoss)> {
        if ab.left_dim() != self.a.input_dim()
            || ab.right_dim() != self.b.input_dim()
            || bc.left_dim() != self.b.input_dim()
            || bc.right_dim() != self.c.input_dim()
        {
            return Err(Error::Shape(
                "training data does not match encoder inputs".into(),
            ));
        }
        let epoch = self.epochs_done();
        let critic = self.config.critic;
        let bs = self.config.batch_size;
        let batches_ab = shuffled_batches(&self.rng.substream("ab", 0), epoch, ab.len(), bs);
        let batches_bc = shuffled_batches(&self.rng.substream("bc", 0), epoch, bc.len(), bs);
        if batches_ab.is_empty() || batches_bc.is_empty() {
            return Err(Error::InsufficientNegatives(ab.len().min(bc.len())));
        }
        let steps = batches_ab.len().max(batches_bc.len());
        let (mut tot_ab, mut tot_bc) = (0.0, 0.0);
        for step in 0..steps {
            let i1 = &batches_ab[step % batches_ab.len()];
            let i2 = &batches_bc[step % batches_bc.len()];
            let xa = ab.left.select(Axis(0), i1);
            let xb1 = ab.right.select(Axis(0), i1);
            let xb2 = bc.left.select(Axis(0), i2);
            let xc = bc.right.select(Axis(0), i2);
            let ca = self.a.forward_cached(xa.view())?;
            let cb1 = self.b.forward_cached(xb1.view())?;
            let cb2 = self.b.forward_cached(xb2.view())?;
            let cc = self.c.forward_cached(xc.view())?;
            let o1 = infonce_loss_and_grad(critic, ca.output().view(), cb1.output().view())?;
            let o2 = infonce_loss_and_grad(critic, cb2.output().view(), cc.output().view())?;
            check_finite(o1.loss + o2.loss, epoch, step)?;
            let ga = self.a.backward(&ca, o1.grad_left.view())?;
            let mut gb = self.b.backward(&cb1, o1.grad_right.view())?;
            gb.add_assign(&self.b.backward(&cb2, o2.grad_left.view())?)?;
            let gc = self.c.backward(&cc, o2.grad_right.view())?;
            let [oa, ob, oc] = &mut self.opts;
            adam_step(&mut self.a, &ga, oa)?;
            adam_step(&mut self.b, &gb, ob)?;
            adam_step(&mut self.c, &gc, oc)?;
            tot_ab += o1.loss;
            tot_bc += o2.loss;
        }
        let v_ab = batched_loss(
            critic,
            self.a.forward(val_ab.left.view())?.view(),
            self.b.forward(val_ab.right.view())?.view(),
            bs,
        )?;
        let v_bc = batched_loss(
            critic,
            self.b.forward(val_bc.left.view())?.view(),
            self.c.forward(val_bc.right.view())?.view(),
            bs,
        )?;
        check_finite(v_ab + v_bc, epoch, steps)?;
        let e_ab = EpochLoss {
            epoch: epoch + 1,
            train: tot_ab / steps as f64,
            validation: v_ab,
        };
        let e_bc = EpochLoss {
            epoch: epoch + 1,
            train: tot_bc / steps as f64,
            validation: v_bc,
        };
        self.history_ab.epochs.push(e_ab);
        self.history_bc.epochs.push(e_bc);
        Ok((e_ab, e_bc))
    }

    pub fn finish(self) -> TrainedChain {
        TrainedChain {
            a: self.a,
            b: self.b,
            c: self.c,
            history_ab: self.history_ab,
            history_bc: self.history_bc,
        }
    }
}

pub fn train_chain(
    rng: &SeedRng,
    config: &TrainConfig,
    ab: &PairDataset,
    bc: &PairDataset,
    val_ab: &PairDataset,
    val_bc: &PairDataset,
) -> Result<TrainedChain> {
    let mut t = ChainTrainer::new(rng, config, [ab.left_dim(), ab.right_dim(), bc.right_dim()])?;
    for _ in 0..config.epochs {
        t.epoch(ab, bc, val_ab, val_bc)?;
    }
    Ok(t.finish())
}
