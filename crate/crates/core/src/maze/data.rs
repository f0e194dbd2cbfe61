use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::{Cell, MazeEnv, State, ACTIONS};
use super::labels::LanguageLabel;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::synthdata::{PairDataset, Split};

/// States visited and actions taken; `states.len() == actions.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

pub fn uniform_state<R: Rng + ?Sized>(rng: &mut R, env: &MazeEnv) -> State {
    [
        rng.gen::<f64>() * env.width() as f64,
        rng.gen::<f64>() * env.height() as f64,
    ]
}

/// How data-collection episodes pick their actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum CollectPolicy {
    /// Uniformly random action at every step.
    RandomWalk,
    /// Follows shortest cell paths towards uniformly drawn goal cells,
    /// drawing a new goal on arrival; with probability `epsilon` a step
    /// takes a uniformly random action instead.
    Oracle { epsilon: f64 },
}

impl Default for CollectPolicy {
    fn default() -> Self {
        CollectPolicy::Oracle { epsilon: 0.1 }
    }
}

/// Episodes from uniformly drawn start states.
pub fn collect<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    episodes: usize,
    horizon: usize,
    policy: CollectPolicy,
) -> Result<Vec<Trajectory>> {
    if episodes == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "need at least one episode of at least one step".into(),
        ));
    }
    if let CollectPolicy::Oracle { epsilon } = policy {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
    }
    let mut dist_cache: Vec<Option<Vec<usize>>> = vec![None; env.n_cells()];
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = uniform_state(rng, env);
        let mut goal = None;
        let mut states = vec![s];
        let mut actions = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let a = match policy {
                CollectPolicy::RandomWalk => rng.gen_range(0..ACTIONS.len()),
                CollectPolicy::Oracle { epsilon } => {
                    if rng.gen::<f64>() < epsilon {
                        rng.gen_range(0..ACTIONS.len())
                    } else {
                        let here = env.cell_of(s);
                        if goal.map_or(true, |g| g == here) {
                            goal = draw_goal(rng, env, here);
                        }
                        match goal {
                            Some(g) => {
                                let dist = dist_cache[env.cell_index(g)]
                                    .get_or_insert_with(|| env.distances_to(g));
                                toward(env, s, next_cell(env, dist, here))?
                            }
                            None => rng.gen_range(0..ACTIONS.len()),
                        }
                    }
                }
            };
            s = env.step(s, ACTIONS[a])?;
            actions.push(a);
            states.push(s);
        }
        out.push(Trajectory { states, actions });
    }
    Ok(out)
}

fn draw_goal<R: Rng + ?Sized>(rng: &mut R, env: &MazeEnv, here: Cell) -> Option<Cell> {
    let reach = env.reachable(here);
    let options: Vec<Cell> = env
        .cells()
        .filter(|&c| c != here && reach[env.cell_index(c)])
        .collect();
    if options.is_empty() {
        None
    } else {
        Some(options[rng.gen_range(0..options.len())])
    }
}

/// Open neighbour one step closer to the goal of `dist`.
fn next_cell(env: &MazeEnv, dist: &[usize], here: Cell) -> Cell {
    let d = dist[env.cell_index(here)];
    let (c, r) = here;
    [
        (c.wrapping_sub(1), r),
        (c + 1, r),
        (c, r.wrapping_sub(1)),
        (c, r + 1),
    ]
    .into_iter()
    .find(|&n| {
        n.0 < env.width()
            && n.1 < env.height()
            && env.open_between(here, n)
            && dist[env.cell_index(n)] + 1 == d
    })
    .unwrap_or(here)
}

/// Action best aligned with the direction to the centre of `target` among
/// those the environment does not reject.
fn toward(env: &MazeEnv, s: State, target: Cell) -> Result<usize> {
    let t = MazeEnv::center(target);
    let dir = [t[0] - s[0], t[1] - s[1]];
    let mut order: Vec<usize> = (0..ACTIONS.len()).collect();
    order.sort_by(|&a, &b| {
        let da = ACTIONS[a][0] * dir[0] + ACTIONS[a][1] * dir[1];
        let db = ACTIONS[b][0] * dir[0] + ACTIONS[b][1] * dir[1];
        db.total_cmp(&da)
    });
    for &a in &order {
        if env.step(s, ACTIONS[a])? != s {
            return Ok(a);
        }
    }
    Ok(order[0])
}

/// Offset `Δ ≥ 1` with `P(Δ = k) = (1 − γ) γ^{k−1}`.
pub fn sample_offset<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> usize {
    let mut k = 1;
    while rng.gen::<f64>() < gamma {
        k += 1;
    }
    k
}

/// Maps continuous states to encoder inputs: scaled coordinates followed
/// by a one-hot cell indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    width: usize,
    height: usize,
}

impl Featurizer {
    pub fn new(env: &MazeEnv) -> Self {
        Self {
            width: env.width(),
            height: env.height(),
        }
    }

    pub fn state_dim(&self) -> usize {
        2 + self.width * self.height
    }

    pub fn state_action_dim(&self) -> usize {
        self.state_dim() + ACTIONS.len()
    }

    fn fill_state(&self, row: &mut [f64], s: State) {
        row[0] = s[0] / self.width as f64;
        row[1] = s[1] / self.height as f64;
        let c = (s[0].floor() as usize).min(self.width - 1);
        let r = (s[1].floor() as usize).min(self.height - 1);
        row[2 + r * self.width + c] = 1.0;
    }

    pub fn states(&self, states: &[State]) -> Matrix {
        let mut m = Array2::zeros((states.len(), self.state_dim()));
        for (mut row, s) in m.rows_mut().into_iter().zip(states) {
            self.fill_state(row.as_slice_mut().expect("row-major"), *s);
        }
        m
    }

    pub fn state_actions(&self, pairs: &[(State, usize)]) -> Matrix {
        let sd = self.state_dim();
        let mut m = Array2::zeros((pairs.len(), self.state_action_dim()));
        for (mut row, (s, a)) in m.rows_mut().into_iter().zip(pairs) {
            let row = row.as_slice_mut().expect("row-major");
            self.fill_state(&mut row[..sd], *s);
            row[sd + a] = 1.0;
        }
        m
    }
}

/// One-hot label rows.
pub fn label_features(ids: &[usize], n_labels: usize) -> Matrix {
    let mut m = Array2::zeros((ids.len(), n_labels));
    for (i, &l) in ids.iter().enumerate() {
        m[[i, l]] = 1.0;
    }
    m
}

/// `(s_t, a_t) ↔ s_{t+Δ}` pairs, one per step, with `Δ ~ Geometric(1 − γ)`
/// truncated at the end of the episode.
pub fn make_crl_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    trajectories: &[Trajectory],
    gamma: f64,
) -> Result<PairDataset> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "discount must lie in [0, 1), got {gamma}"
        )));
    }
    let mut sa = Vec::new();
    let mut future = Vec::new();
    for tr in trajectories {
        for t in 0..tr.len() {
            let k = (t + sample_offset(rng, gamma)).min(tr.len());
            sa.push((tr.states[t], tr.actions[t]));
            future.push(tr.states[k]);
        }
    }
    if sa.is_empty() {
        return Err(Error::InvalidArgument(
            "no transitions in the trajectories".into(),
        ));
    }
    let f = Featurizer::new(env);
    PairDataset::new(f.state_actions(&sa), f.states(&future), Split::Train)
}

/// `s ↔ ℓ` pairs: a state uniform over the maze, then a uniformly chosen
/// label among those whose cell set contains it. Returns the dataset and
/// the label ids.
pub fn make_lang_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    env: &MazeEnv,
    labels: &[LanguageLabel],
    n: usize,
) -> Result<(PairDataset, Vec<usize>)> {
    let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); env.n_cells()];
    for (i, l) in labels.iter().enumerate() {
        for &c in &l.cells {
            if c.0 >= env.width() || c.1 >= env.height() {
                return Err(Error::InvalidArgument(format!(
                    "label {:?} names cell {c:?} outside the maze",
                    l.text
                )));
            }
            per_cell[env.cell_index(c)].push(i);
        }
    }
    if per_cell.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument(
            "labels do not cover every cell".into(),
        ));
    }
    let mut states = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let s = uniform_state(rng, env);
        let opts = &per_cell[env.cell_index(env.cell_of(s))];
        ids.push(opts[rng.gen_range(0..opts.len())]);
        states.push(s);
    }
    let f = Featurizer::new(env);
    let ds = PairDataset::new(
        f.states(&states),
        label_features(&ids, labels.len()),
        Split::Train,
    )?;
    Ok((ds, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::labels::column_and_row_labels;
    use crate::numerics::SeedRng;

    #[test]
    fn zero_discount_gives_next_state() {
        let env = MazeEnv::fork(0.5).unwrap();
        let mut rng = SeedRng::new(1);
        let tr = collect(&mut rng, &env, 3, 10, CollectPolicy::RandomWalk).unwrap();
        let ds = make_crl_pairs(&mut rng, &env, &tr, 0.0).unwrap();
        let f = Featurizer::new(&env);
        let expect: Vec<State> = tr.iter().flat_map(|t| t.states[1..].to_vec()).collect();
        assert_eq!(ds.right, f.states(&expect));
    }

    #[test]
    fn oracle_reaches_goals_through_the_junction() {
        let env = MazeEnv::fork(0.5).unwrap();
        let mut rng = SeedRng::new(4);
        let tr = collect(
            &mut rng,
            &env,
            20,
            300,
            CollectPolicy::Oracle { epsilon: 0.0 },
        )
        .unwrap();
        // without exploration noise every episode keeps moving and visits
        // more than one alleyway
        for t in &tr {
            assert!(t.states.windows(2).all(|w| w[0] != w[1]));
            let rows: std::collections::BTreeSet<usize> = t
                .states
                .iter()
                .map(|&s| env.cell_of(s))
                .filter(|c| c.0 < 7)
                .map(|c| c.1)
                .collect();
            assert!(rows.len() > 1);
        }
        assert!(collect(&mut rng, &env, 1, 1, CollectPolicy::Oracle { epsilon: 1.5 }).is_err());
    }

    #[test]
    fn offset_mean() {
        let mut rng = SeedRng::new(2);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_offset(&mut rng, 0.9) as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 10.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn lang_pairs_use_containing_labels() {
        let env = MazeEnv::fork(0.5).unwrap();
        let labels = column_and_row_labels(&env);
        let mut rng = SeedRng::new(3);
        let (ds, ids) = make_lang_pairs(&mut rng, &env, &labels, 500).unwrap();
        for (i, &l) in ids.iter().enumerate() {
            let x = ds.left[[i, 0]] * 14.0;
            let y = ds.left[[i, 1]] * 14.0;
            assert!(labels[l].contains(env.cell_of([x, y])));
        }
        assert!(make_lang_pairs(&mut rng, &env, &labels[..3], 10).is_err());
    }

    #[test]
    fn features_are_one_hot() {
        let env = MazeEnv::open(3, 2, 0.5).unwrap();
        let f = Featurizer::new(&env);
        let m = f.state_actions(&[([2.5, 1.25], 4)]);
        assert_eq!(m.ncols(), 2 + 6 + 8);
        assert_eq!(m.row(0).sum(), 2.5 / 3.0 + 1.25 / 2.0 + 2.0);
        assert_eq!(m[[0, 2 + 5]], 1.0);
        assert_eq!(m[[0, 8 + 4]], 1.0);
    }
}
