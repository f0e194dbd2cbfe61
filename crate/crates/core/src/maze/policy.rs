use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{
    collect, label_features, make_crl_pairs, make_lang_pairs, uniform_state, CollectPolicy,
    Featurizer,
};
use super::env::{MazeEnv, State, ACTIONS};
use super::labels::LanguageLabel;
use crate::contrastive::{score_matrix, ChainTrainer, CriticKind, LossHistory, TrainConfig};
use crate::embed_io::EmbeddingContainer;
use crate::encoders::{load_checkpoint, save_checkpoint, Activation, EncoderNet};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, Matrix, SeedRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// `Q = f(φ_A(s,a), φ_C(ℓ))`
    Direct,
    /// `Q = LSE_i[f(φ_A(s,a), Φ_i) + f(Φ_i, φ_C(ℓ))] − log N` over a
    /// future-state bank, with `f` the trained critic.
    Lse,
}

impl PolicyKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PolicyKind::Direct => "direct",
            PolicyKind::Lse => "lse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Argmax,
    /// Samples `a ∝ exp(Q / temperature)`.
    Softmax {
        temperature: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MazeConfig {
    pub seed: u64,
    pub step: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub collect: CollectPolicy,
    /// Discount of the future-offset distribution.
    pub gamma: f64,
    pub lang_pairs: usize,
    pub train: TrainConfig,
    pub bank_size: usize,
    pub temperature: f64,
    pub eval_episodes: usize,
    pub max_steps: usize,
}

impl Default for MazeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            step: 0.5,
            episodes: 1000,
            horizon: 50,
            collect: CollectPolicy::default(),
            gamma: 0.9,
            lang_pairs: 20000,
            train: TrainConfig {
                critic: CriticKind::L2Half,
                latent_dim: 16,
                epochs: 10,
                ..TrainConfig::default()
            },
            bank_size: 5000,
            temperature: 0.5,
            eval_episodes: 200,
            max_steps: 40,
        }
    }
}

/// Trained encoders for `(s, a)`, future states and labels, plus the bank
/// of future-state representations used by the LSE policy.
#[derive(Debug, Clone)]
pub struct MazeModel {
    pub featurizer: Featurizer,
    pub n_labels: usize,
    pub critic: CriticKind,
    pub state_action: EncoderNet,
    pub state: EncoderNet,
    pub label: EncoderNet,
    pub bank: Matrix,
    pub history_crl: LossHistory,
    pub history_lang: LossHistory,
}

/// Collects trajectories and trains the three encoders jointly, sharing the
/// future-state encoder between both pairs.
pub fn train_maze(
    config: &MazeConfig,
    env: &MazeEnv,
    labels: &[LanguageLabel],
) -> Result<MazeModel> {
    let root = SeedRng::new(config.seed);
    let val_episodes = (config.episodes / 10).max(2);
    let trajs = collect(
        &mut root.substream("collect", 0),
        env,
        config.episodes,
        config.horizon,
        config.collect,
    )?;
    let val_trajs = collect(
        &mut root.substream("collect", 1),
        env,
        val_episodes,
        config.horizon,
        config.collect,
    )?;
    let crl = make_crl_pairs(&mut root.substream("offsets", 0), env, &trajs, config.gamma)?;
    let crl_val = make_crl_pairs(
        &mut root.substream("offsets", 1),
        env,
        &val_trajs,
        config.gamma,
    )?;
    let (lang, _) = make_lang_pairs(
        &mut root.substream("lang", 0),
        env,
        labels,
        config.lang_pairs,
    )?;
    let (lang_val, _) = make_lang_pairs(
        &mut root.substream("lang", 1),
        env,
        labels,
        (config.lang_pairs / 10).max(2),
    )?;
    train_maze_on(config, env, labels.len(), &crl, &crl_val, &lang, &lang_val)
}

pub fn train_maze_on(
    config: &MazeConfig,
    env: &MazeEnv,
    n_labels: usize,
    crl: &crate::synthdata::PairDataset,
    crl_val: &crate::synthdata::PairDataset,
    lang: &crate::synthdata::PairDataset,
    lang_val: &crate::synthdata::PairDataset,
) -> Result<MazeModel> {
    let root = SeedRng::new(config.seed);
    let featurizer = Featurizer::new(env);
    let t = &config.train;
    let act = t.activation;
    let mode = t.output_mode();
    let sa = EncoderNet::new(
        &t.layer_sizes(featurizer.state_action_dim()),
        act,
        mode,
        &mut root.substream("init-sa", 0),
    )?;
    let st = EncoderNet::new(
        &t.layer_sizes(featurizer.state_dim()),
        act,
        mode,
        &mut root.substream("init-state", 0),
    )?;
    let lb = EncoderNet::new(
        &[n_labels, t.latent_dim],
        Activation::Relu,
        mode,
        &mut root.substream("init-label", 0),
    )?;
    // the crl pair is (s,a) ↔ s_f and the language pair s ↔ ℓ, so the
    // shared middle encoder sees future states on one side and annotated
    // states on the other
    let mut trainer = ChainTrainer::from_encoders(&root.substream("train", 0), t, [sa, st, lb])?;
    for _ in 0..t.epochs {
        trainer.epoch(crl, lang, crl_val, lang_val)?;
    }
    let done = trainer.finish();
    let mut bank_rng = root.substream("bank", 0);
    let bank_states: Vec<State> = (0..config.bank_size)
        .map(|_| uniform_state(&mut bank_rng, env))
        .collect();
    let bank = done.b.forward(featurizer.states(&bank_states).view())?;
    Ok(MazeModel {
        featurizer,
        n_labels,
        critic: t.critic,
        state_action: done.a,
        state: done.b,
        label: done.c,
        bank,
        history_crl: done.history_ab,
        history_lang: done.history_bc,
    })
}

impl MazeModel {
    pub fn label_embedding(&self, label: usize) -> Result<Array1<f64>> {
        if label >= self.n_labels {
            return Err(Error::InvalidArgument(format!(
                "label id {label} out of range"
            )));
        }
        let x = label_features(&[label], self.n_labels);
        Ok(self.label.forward(x.view())?.row(0).to_owned())
    }

    /// `φ_A(s, a)` for all eight actions.
    pub fn action_embeddings(&self, s: State) -> Result<Matrix> {
        let pairs: Vec<(State, usize)> = (0..ACTIONS.len()).map(|a| (s, a)).collect();
        self.state_action
            .forward(self.featurizer.state_actions(&pairs).view())
    }

    pub fn q_values(&self, kind: PolicyKind, s: State, label: usize) -> Result<[f64; 8]> {
        let phi_a = self.action_embeddings(s)?;
        let phi_c = self.label_embedding(label)?;
        let mut q = [0.0; 8];
        let phi_c = phi_c.insert_axis(Axis(0));
        match kind {
            PolicyKind::Direct => {
                let d = score_matrix(self.critic, phi_a.view(), phi_c.view())?;
                for (i, v) in d.column(0).iter().enumerate() {
                    q[i] = *v;
                }
            }
            PolicyKind::Lse => {
                if self.bank.nrows() == 0 {
                    return Err(Error::EmptyReduction);
                }
                let s1 = score_matrix(self.critic, phi_a.view(), self.bank.view())?;
                let s2 = score_matrix(self.critic, self.bank.view(), phi_c.view())?;
                let s2 = s2.column(0);
                let ln_n = (self.bank.nrows() as f64).ln();
                for (i, row) in s1.axis_iter(Axis(0)).enumerate() {
                    let terms: Vec<f64> = row.iter().zip(s2.iter()).map(|(x, y)| x + y).collect();
                    q[i] = log_sum_exp(&terms)? - ln_n;
                }
            }
        }
        Ok(q)
    }

    pub fn q_value(&self, kind: PolicyKind, s: State, action: usize, label: usize) -> Result<f64> {
        if action >= ACTIONS.len() {
            return Err(Error::InvalidArgument(format!(
                "action {action} out of range"
            )));
        }
        Ok(self.q_values(kind, s, label)?[action])
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        kind: PolicyKind,
        s: State,
        label: usize,
        selection: Selection,
    ) -> Result<usize> {
        let q = self.q_values(kind, s, label)?;
        Ok(match selection {
            Selection::Argmax => argmax(&q),
            Selection::Softmax { temperature } => {
                if !(temperature > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "temperature must be positive, got {temperature}"
                    )));
                }
                let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = q.iter().map(|v| ((v - m) / temperature).exp()).collect();
                let total: f64 = w.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                let mut pick = w.len() - 1;
                for (i, wi) in w.iter().enumerate() {
                    if u < *wi {
                        pick = i;
                        break;
                    }
                    u -= wi;
                }
                pick
            }
        })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        save_checkpoint(&self.state_action, dir.join("state_action.ucln"))?;
        save_checkpoint(&self.state, dir.join("state.ucln"))?;
        save_checkpoint(&self.label, dir.join("label.ucln"))?;
        EmbeddingContainer::with_dtype(
            "future_state_bank",
            self.bank.clone(),
            crate::embed_io::Dtype::F64,
        )?
        .save(dir.join("bank.uclb"))?;
        std::fs::write(dir.join("critic.txt"), format!("{}\n", self.critic))?;
        let mut f = std::fs::File::create(dir.join("loss_crl.csv"))?;
        self.history_crl.write_csv(&mut f)?;
        let mut f = std::fs::File::create(dir.join("loss_lang.csv"))?;
        self.history_lang.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, env: &MazeEnv) -> Result<Self> {
        let dir = dir.as_ref();
        let label = load_checkpoint(dir.join("label.ucln"))?;
        Ok(Self {
            featurizer: Featurizer::new(env),
            n_labels: label.input_dim(),
            critic: std::fs::read_to_string(dir.join("critic.txt"))?
                .trim()
                .parse()?,
            state_action: load_checkpoint(dir.join("state_action.ucln"))?,
            state: load_checkpoint(dir.join("state.ucln"))?,
            label,
            bank: EmbeddingContainer::load(dir.join("bank.uclb"))?.into_matrix(),
            history_crl: LossHistory::default(),
            history_lang: LossHistory::default(),
        })
    }
}

fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

/// One evaluation episode; the seed drives action sampling so that both
/// policies face identical randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: State,
    pub label: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutReport {
    pub policy: PolicyKind,
    pub episodes: usize,
    pub successes: Vec<bool>,
    pub steps: Vec<Option<usize>>,
    pub success_rate: f64,
}

/// Steps until the agent's cell first lies in the label's cell set, or
/// `None` if that does not happen within `max_steps`.
pub fn rollout(
    env: &MazeEnv,
    model: &MazeModel,
    labels: &[LanguageLabel],
    kind: PolicyKind,
    episode: &Episode,
    max_steps: usize,
    selection: Selection,
) -> Result<Option<usize>> {
    let target = labels
        .get(episode.label)
        .ok_or_else(|| Error::InvalidArgument("label id out of range".into()))?;
    let mut rng = SeedRng::new(episode.seed);
    let mut s = episode.start;
    for t in 0..=max_steps {
        if target.contains(env.cell_of(s)) {
            return Ok(Some(t));
        }
        if t == max_steps {
            break;
        }
        let a = model.select_action(&mut rng, kind, s, episode.label, selection)?;
        s = env.step(s, ACTIONS[a])?;
    }
    Ok(None)
}

pub fn rollout_eval(
    env: &MazeEnv,
    model: &MazeModel,
    labels: &[LanguageLabel],
    kind: PolicyKind,
    episodes: &[Episode],
    max_steps: usize,
    selection: Selection,
) -> Result<RolloutReport> {
    let steps = episodes
        .iter()
        .map(|e| rollout(env, model, labels, kind, e, max_steps, selection))
        .collect::<Result<Vec<_>>>()?;
    let successes: Vec<bool> = steps.iter().map(Option::is_some).collect();
    let rate = if episodes.is_empty() {
        0.0
    } else {
        successes.iter().filter(|&&s| s).count() as f64 / episodes.len() as f64
    };
    Ok(RolloutReport {
        policy: kind,
        episodes: episodes.len(),
        successes,
        steps,
        success_rate: rate,
    })
}

/// Episodes that start in a left-half alleyway of the fork maze and target
/// a column label strictly to the left of the start column. Column labels
/// are ambiguous here: only the start row's cell of the target column is
/// reachable without going around through the open right half.
pub fn fork_episodes<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    labels: &[LanguageLabel],
    n: usize,
) -> Result<Vec<Episode>> {
    let columns: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.text.ends_with(" column"))
        .map(|(i, _)| i)
        .collect();
    let half = env.width() / 2;
    if columns.len() < half || half < 2 {
        return Err(Error::InvalidArgument(
            "fork episodes need column labels over a wide enough maze".into(),
        ));
    }
    (0..n)
        .map(|_| {
            let col = rng.gen_range(1..half);
            let row = rng.gen_range(0..env.height());
            let target = rng.gen_range(0..col);
            Ok(Episode {
                start: [col as f64 + rng.gen::<f64>(), row as f64 + rng.gen::<f64>()],
                label: columns[target],
                seed: rng.gen(),
            })
        })
        .collect()
}

/// Mean critic value `f(φ_B(s), φ_C(ℓ))` over `samples` uniform states per cell, in
/// row-major cell order.
pub fn label_heatmap<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    model: &MazeModel,
    label: usize,
    samples: usize,
) -> Result<Vec<f64>> {
    let phi_c = model.label_embedding(label)?.insert_axis(Axis(0));
    cell_means(rng, env, model, samples, &phi_c)
}

/// Mean critic value `f(φ_A(s, a), φ_B(s′))` over `samples` uniform states `s′` per cell.
pub fn action_heatmap<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    model: &MazeModel,
    s: State,
    action: usize,
    samples: usize,
) -> Result<Vec<f64>> {
    if action >= ACTIONS.len() {
        return Err(Error::InvalidArgument(format!(
            "action {action} out of range"
        )));
    }
    let phi_a = model.action_embeddings(s)?;
    cell_means(
        rng,
        env,
        model,
        samples,
        &phi_a.slice(ndarray::s![action..=action, ..]).to_owned(),
    )
}

fn cell_means<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    model: &MazeModel,
    samples: usize,
    other: &Matrix,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample per cell".into(),
        ));
    }
    let mut out = Vec::with_capacity(env.n_cells());
    for (c, r) in env.cells() {
        let states: Vec<State> = (0..samples)
            .map(|_| [c as f64 + rng.gen::<f64>(), r as f64 + rng.gen::<f64>()])
            .collect();
        let phi_b = model
            .state
            .forward(model.featurizer.states(&states).view())?;
        let scores = score_matrix(model.critic, phi_b.view(), other.view())?;
        out.push(scores.mean().expect("non-empty"));
    }
    Ok(out)
}

pub fn write_heatmap_csv<W: Write>(env: &MazeEnv, values: &[f64], mut w: W) -> Result<()> {
    if values.len() != env.n_cells() {
        return Err(Error::Shape(format!(
            "{} values for {} cells",
            values.len(),
            env.n_cells()
        )));
    }
    writeln!(w, "col,row,value")?;
    for ((c, r), v) in env.cells().zip(values) {
        writeln!(w, "{c},{r},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::critic_score;
    use crate::encoders::OutputMode;
    use crate::maze::data::uniform_state;
    use crate::maze::labels::column_and_row_labels;

    fn random_model(env: &MazeEnv, n_labels: usize, critic: CriticKind, seed: u64) -> MazeModel {
        let mut rng = SeedRng::new(seed);
        let f = Featurizer::new(env);
        let sa = EncoderNet::new(
            &[f.state_action_dim(), 12, 4],
            Activation::Tanh,
            OutputMode::Raw,
            &mut rng,
        )
        .unwrap();
        let st = EncoderNet::new(
            &[f.state_dim(), 12, 4],
            Activation::Tanh,
            OutputMode::Raw,
            &mut rng,
        )
        .unwrap();
        let lb =
            EncoderNet::new(&[n_labels, 4], Activation::Relu, OutputMode::Raw, &mut rng).unwrap();
        let states: Vec<State> = (0..50).map(|_| uniform_state(&mut rng, env)).collect();
        let bank = st.forward(f.states(&states).view()).unwrap();
        MazeModel {
            featurizer: f,
            n_labels,
            critic,
            state_action: sa,
            state: st,
            label: lb,
            bank,
            history_crl: LossHistory::default(),
            history_lang: LossHistory::default(),
        }
    }

    #[test]
    fn single_sample_bank_sums_the_critics() {
        let env = MazeEnv::open(4, 3, 0.5).unwrap();
        for critic in [CriticKind::Dot, CriticKind::L2Half] {
            let mut m = random_model(&env, 7, critic, 1);
            m.bank = m.bank.slice(ndarray::s![3..4, ..]).to_owned();
            let s = [1.3, 2.2];
            let q = m.q_values(PolicyKind::Lse, s, 2).unwrap();
            let phi_a = m.action_embeddings(s).unwrap();
            let phi_c = m.label_embedding(2).unwrap();
            let b = m.bank.row(0);
            for a in 0..8 {
                let want = critic_score(critic, phi_a.row(a), b).unwrap()
                    + critic_score(critic, b, phi_c.view()).unwrap();
                assert!((q[a] - want).abs() < 1e-12);
            }
            m.bank = Matrix::zeros((0, 4));
            assert!(m.q_values(PolicyKind::Lse, s, 2).is_err());
            assert!(m.q_values(PolicyKind::Direct, s, 2).is_ok());
        }
    }

    #[test]
    fn zero_encoders_give_a_flat_heatmap() {
        let env = MazeEnv::fork(0.5).unwrap();
        let mut m = random_model(&env, 28, CriticKind::Dot, 2);
        m.state =
            EncoderNet::zeros(&m.state.layer_sizes(), Activation::Tanh, OutputMode::Raw).unwrap();
        m.label =
            EncoderNet::zeros(&m.label.layer_sizes(), Activation::Relu, OutputMode::Raw).unwrap();
        let mut rng = SeedRng::new(3);
        let h = label_heatmap(&mut rng, &env, &m, 0, 3).unwrap();
        assert_eq!(h.len(), 14 * 14);
        assert!(h.iter().all(|&v| v == h[0]));
        let h = action_heatmap(&mut rng, &env, &m, [2.5, 6.5], 4, 3).unwrap();
        assert!(h.iter().all(|&v| v == h[0]));
        let mut buf = Vec::new();
        write_heatmap_csv(&env, &h, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 14 * 14);
        assert!(write_heatmap_csv(&env, &h[1..], Vec::new()).is_err());
    }

    #[test]
    fn start_inside_the_label_succeeds_at_once() {
        let env = MazeEnv::open(4, 4, 0.5).unwrap();
        let labels = column_and_row_labels(&env);
        let m = random_model(&env, labels.len(), CriticKind::Dot, 4);
        let episodes: Vec<Episode> = (0..10)
            .map(|i| Episode {
                start: [0.5, i as f64 * 0.3],
                label: 0,
                seed: i,
            })
            .collect();
        let sel = Selection::Softmax { temperature: 0.5 };
        let r = rollout_eval(&env, &m, &labels, PolicyKind::Lse, &episodes, 10, sel).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert!(r.steps.iter().all(|&s| s == Some(0)));
    }

    #[test]
    fn walled_off_label_is_never_reached() {
        let mut env = MazeEnv::open(4, 4, 0.5).unwrap();
        for r in 0..4 {
            env.set_wall_right((2, r), true).unwrap();
        }
        let labels = column_and_row_labels(&env);
        let m = random_model(&env, labels.len(), CriticKind::L2Half, 5);
        let episodes: Vec<Episode> = (0..20)
            .map(|i| Episode {
                start: [0.5, 1.5],
                label: 3,
                seed: i,
            })
            .collect();
        for kind in [PolicyKind::Direct, PolicyKind::Lse] {
            let r = rollout_eval(
                &env,
                &m,
                &labels,
                kind,
                &episodes,
                60,
                Selection::Softmax { temperature: 1.0 },
            )
            .unwrap();
            assert_eq!(r.success_rate, 0.0);
        }
    }

    #[test]
    fn paired_seeds_make_episode_order_irrelevant() {
        let env = MazeEnv::fork(0.5).unwrap();
        let labels = column_and_row_labels(&env);
        let m = random_model(&env, labels.len(), CriticKind::Dot, 6);
        let mut episodes = fork_episodes(&mut SeedRng::new(7), &env, &labels, 30).unwrap();
        let sel = Selection::Softmax { temperature: 0.5 };
        let a = rollout_eval(&env, &m, &labels, PolicyKind::Lse, &episodes, 20, sel).unwrap();
        episodes.reverse();
        let b = rollout_eval(&env, &m, &labels, PolicyKind::Lse, &episodes, 20, sel).unwrap();
        assert_eq!(a.success_rate, b.success_rate);
        let mut steps = b.steps.clone();
        steps.reverse();
        assert_eq!(a.steps, steps);
    }

    #[test]
    fn cold_softmax_matches_argmax() {
        let env = MazeEnv::fork(0.5).unwrap();
        let m = random_model(&env, 28, CriticKind::Dot, 8);
        let mut rng = SeedRng::new(9);
        for kind in [PolicyKind::Direct, PolicyKind::Lse] {
            let q = m.q_values(kind, [3.2, 4.7], 5).unwrap();
            let cold = Selection::Softmax { temperature: 1e-9 };
            assert_eq!(
                m.select_action(&mut rng, kind, [3.2, 4.7], 5, cold)
                    .unwrap(),
                argmax(&q)
            );
            assert_eq!(
                m.select_action(&mut rng, kind, [3.2, 4.7], 5, Selection::Argmax)
                    .unwrap(),
                argmax(&q)
            );
        }
        let bad = Selection::Softmax { temperature: 0.0 };
        assert!(m
            .select_action(&mut rng, PolicyKind::Direct, [3.2, 4.7], 5, bad)
            .is_err());
        assert!(m.q_value(PolicyKind::Direct, [3.2, 4.7], 8, 5).is_err());
        assert!(m.label_embedding(28).is_err());
    }

    #[test]
    fn lse_argmax_ignores_label_side_shifts() {
        let env = MazeEnv::fork(0.5).unwrap();
        let m = random_model(&env, 28, CriticKind::Dot, 10);
        let s = [4.4, 9.1];
        let base = m.q_values(PolicyKind::Lse, s, 3).unwrap();
        let phi_a = m.action_embeddings(s).unwrap();
        let f2 = m.bank.dot(&m.label_embedding(3).unwrap());
        let shifted: Vec<f64> = (0..8)
            .map(|a| {
                let terms: Vec<f64> = m
                    .bank
                    .dot(&phi_a.row(a))
                    .iter()
                    .zip(&f2)
                    .map(|(x, y)| x + y + 3.7)
                    .collect();
                log_sum_exp(&terms).unwrap() - (m.bank.nrows() as f64).ln()
            })
            .collect();
        assert_eq!(argmax(&base), argmax(&shifted));
    }

    #[test]
    fn save_and_load_keep_q_values() {
        let env = MazeEnv::fork(0.5).unwrap();
        let m = random_model(&env, 28, CriticKind::L2Half, 11);
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = MazeModel::load(dir.path(), &env).unwrap();
        assert_eq!(back.critic, CriticKind::L2Half);
        for kind in [PolicyKind::Direct, PolicyKind::Lse] {
            assert_eq!(
                m.q_values(kind, [1.1, 2.2], 4).unwrap(),
                back.q_values(kind, [1.1, 2.2], 4).unwrap()
            );
        }
    }

    #[test]
    fn fork_episodes_target_columns_left_of_the_start() {
        let env = MazeEnv::fork(0.5).unwrap();
        let labels = column_and_row_labels(&env);
        let eps = fork_episodes(&mut SeedRng::new(12), &env, &labels, 200).unwrap();
        for e in &eps {
            let col = env.cell_of(e.start).0;
            assert!((1..7).contains(&col));
            assert!(labels[e.label].text.ends_with("column"));
            assert!(labels[e.label].cells.iter().all(|c| c.0 < col));
        }
    }
}
