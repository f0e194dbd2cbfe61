use ndarray::{ArrayView1, ArrayView2, Axis};

use super::laws::{gaussian_law_log_ratio, sphere_law_log_ratio};
use crate::contrastive::{critic_score, score_matrix, CriticKind};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, Matrix};

/// Intermediate-modality representations `Φ` with the critic pairing
/// `A` to `B` (`first`) and the one pairing `B` to `C` (`second`).
///
/// Row `i` of the two sides encodes the same `B` item; they differ only
/// when the two pairs were trained separately and own different
/// `B` encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiBank {
    phi: Matrix,
    phi_second: Option<Matrix>,
    pub first: CriticKind,
    pub second: CriticKind,
}

impl PhiBank {
    pub fn new(phi: Matrix, first: CriticKind, second: CriticKind) -> Result<Self> {
        if phi.nrows() == 0 {
            return Err(Error::EmptyReduction);
        }
        first.validate()?;
        second.validate()?;
        Ok(Self {
            phi,
            phi_second: None,
            first,
            second,
        })
    }

    /// Bank over items encoded by two different `B` encoders: `via_first`
    /// is scored against `A`, `via_second` against `C`.
    pub fn two_sided(
        via_first: Matrix,
        via_second: Matrix,
        first: CriticKind,
        second: CriticKind,
    ) -> Result<Self> {
        if via_first.nrows() != via_second.nrows() {
            return Err(Error::Shape(format!(
                "bank sides list {} and {} items",
                via_first.nrows(),
                via_second.nrows()
            )));
        }
        let mut bank = Self::new(via_first, first, second)?;
        bank.phi_second = Some(via_second);
        Ok(bank)
    }

    /// Bank where both sides use the same critic.
    pub fn symmetric(phi: Matrix, critic: CriticKind) -> Result<Self> {
        Self::new(phi, critic, critic)
    }

    /// Representations scored against `A`.
    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    /// Representations scored against `C`.
    pub fn phi_second(&self) -> &Matrix {
        self.phi_second.as_ref().unwrap_or(&self.phi)
    }

    /// Keeps the listed rows on both sides, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "bank row {r} outside {} items",
                self.len()
            )));
        }
        let mut out = Self::new(self.phi.select(Axis(0), rows), self.first, self.second)?;
        out.phi_second = self.phi_second.as_ref().map(|m| m.select(Axis(0), rows));
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.phi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.nrows() == 0
    }

    /// Dimension of the side scored against `A`.
    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }
}

/// `log Σ_i exp(s1_i + s2_i) − log N`.
pub fn lse_of_sums(s1: &[f64], s2: &[f64]) -> Result<f64> {
    if s1.len() != s2.len() {
        return Err(Error::Shape(format!(
            "score vectors of length {} and {}",
            s1.len(),
            s2.len()
        )));
    }
    let sums: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| a + b).collect();
    Ok(log_sum_exp(&sums)? - (s1.len() as f64).ln())
}

pub fn direct_score(
    critic: CriticKind,
    phi_a: ArrayView1<'_, f64>,
    phi_c: ArrayView1<'_, f64>,
) -> Result<f64> {
    critic_score(critic, phi_a, phi_c)
}

/// Monte Carlo estimate of `log p(c|a)/p(c)` (up to a constant):
/// `LSE_i [f₁(φ_A, Φ_i) + f₂(Φ_i, φ_C)] − log N`.
pub fn mc_lse_log_ratio(
    bank: &PhiBank,
    phi_a: ArrayView1<'_, f64>,
    phi_c: ArrayView1<'_, f64>,
) -> Result<f64> {
    let s1 = score_matrix(bank.first, phi_a.insert_axis(Axis(0)), bank.phi.view())?;
    let s2 = score_matrix(
        bank.second,
        bank.phi_second().view(),
        phi_c.insert_axis(Axis(0)),
    )?;
    let s2 = s2.column(0).to_vec();
    lse_of_sums(s1.row(0).as_slice().expect("row-major"), &s2)
}

/// Batched [`mc_lse_log_ratio`] for every (query, candidate) pair.
pub fn mc_lse_matrix(
    bank: &PhiBank,
    queries: ArrayView2<'_, f64>,
    candidates: ArrayView2<'_, f64>,
) -> Result<Matrix> {
    let f = Factored::new(bank, queries, candidates)?;
    let prod = f.e1.dot(&f.e2);
    let mut out = Matrix::zeros(prod.dim());
    for ((q, j), v) in out.indexed_iter_mut() {
        *v = f.finish(q, j, prod[[q, j]])?;
    }
    Ok(out)
}

/// [`mc_lse_log_ratio`] for selected pairs only: entry `[q][t]` scores
/// query `q` against candidate `selected[q][t]`.
pub fn mc_lse_selected(
    bank: &PhiBank,
    queries: ArrayView2<'_, f64>,
    candidates: ArrayView2<'_, f64>,
    selected: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    if selected.len() != queries.nrows() {
        return Err(Error::Shape(format!(
            "{} selections for {} queries",
            selected.len(),
            queries.nrows()
        )));
    }
    if let Some(&j) = selected
        .iter()
        .flatten()
        .find(|&&j| j >= candidates.nrows())
    {
        return Err(Error::Shape(format!(
            "candidate {j} outside {} rows",
            candidates.nrows()
        )));
    }
    let f = Factored::new(bank, queries, candidates)?;
    selected
        .iter()
        .enumerate()
        .map(|(q, js)| {
            js.iter()
                .map(|&j| f.finish(q, j, f.e1.row(q).dot(&f.e2.column(j))))
                .collect()
        })
        .collect()
}

/// With row maxima `m_q` of `S₁` and column maxima `m_j` of `S₂` the bank
/// sum factorizes into `exp(S₁ − m_q)` times `exp(S₂ − m_j)`; entries whose
/// product underflows are recomputed directly.
struct Factored {
    s1: Matrix,
    s2: Matrix,
    e1: Matrix,
    e2: Matrix,
    mq: Vec<f64>,
    mj: Vec<f64>,
    ln_n: f64,
}

impl Factored {
    fn new(
        bank: &PhiBank,
        queries: ArrayView2<'_, f64>,
        candidates: ArrayView2<'_, f64>,
    ) -> Result<Self> {
        let s1 = score_matrix(bank.first, queries, bank.phi.view())?;
        let s2 = score_matrix(bank.second, bank.phi_second().view(), candidates)?;
        let mq: Vec<f64> = s1
            .axis_iter(Axis(0))
            .map(|r| r.fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
            .collect();
        let mj: Vec<f64> = s2
            .axis_iter(Axis(1))
            .map(|c| c.fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
            .collect();
        let mut e1 = s1.clone();
        for (mut r, m) in e1.axis_iter_mut(Axis(0)).zip(&mq) {
            r.mapv_inplace(|v| (v - m).exp());
        }
        let mut e2 = s2.clone();
        for (mut c, m) in e2.axis_iter_mut(Axis(1)).zip(&mj) {
            c.mapv_inplace(|v| (v - m).exp());
        }
        Ok(Self {
            s1,
            s2,
            e1,
            e2,
            mq,
            mj,
            ln_n: (bank.len() as f64).ln(),
        })
    }

    fn finish(&self, q: usize, j: usize, product: f64) -> Result<f64> {
        if product > 1e-200 {
            Ok(self.mq[q] + self.mj[j] + product.ln() - self.ln_n)
        } else {
            let col = self.s2.column(j).to_vec();
            lse_of_sums(self.s1.row(q).as_slice().expect("row-major"), &col)
        }
    }
}

/// How unpaired `(A, C)` representations are scored.
#[derive(Debug, Clone, PartialEq)]
pub enum BridgeEstimator {
    Direct(CriticKind),
    MonteCarloLse(PhiBank),
    /// Uniform-hypersphere closed form; inputs must be unit vectors.
    ClosedFormSphere {
        dim: usize,
    },
    /// Isotropic-Gaussian closed form with representation variance `scale`.
    ClosedFormGaussian {
        scale: f64,
    },
}

impl BridgeEstimator {
    pub fn tag(&self) -> &'static str {
        match self {
            BridgeEstimator::Direct(_) => "direct",
            BridgeEstimator::MonteCarloLse(_) => "monte_carlo",
            BridgeEstimator::ClosedFormSphere { .. } => "sphere_law",
            BridgeEstimator::ClosedFormGaussian { .. } => "gaussian_law",
        }
    }

    pub fn score(&self, phi_a: ArrayView1<'_, f64>, phi_c: ArrayView1<'_, f64>) -> Result<f64> {
        match self {
            BridgeEstimator::Direct(c) => direct_score(*c, phi_a, phi_c),
            BridgeEstimator::MonteCarloLse(bank) => mc_lse_log_ratio(bank, phi_a, phi_c),
            BridgeEstimator::ClosedFormSphere { dim } => sphere_law_log_ratio(*dim, phi_a, phi_c),
            BridgeEstimator::ClosedFormGaussian { scale } => {
                gaussian_law_log_ratio(*scale, phi_a, phi_c)
            }
        }
    }

    /// Scores for every (query, candidate) pair.
    pub fn score_matrix(
        &self,
        queries: ArrayView2<'_, f64>,
        candidates: ArrayView2<'_, f64>,
    ) -> Result<Matrix> {
        match self {
            BridgeEstimator::Direct(c) => score_matrix(*c, queries, candidates),
            BridgeEstimator::MonteCarloLse(bank) => mc_lse_matrix(bank, queries, candidates),
            _ => {
                let mut out = Matrix::zeros((queries.nrows(), candidates.nrows()));
                for (q, a) in queries.axis_iter(Axis(0)).enumerate() {
                    for (j, c) in candidates.axis_iter(Axis(0)).enumerate() {
                        out[[q, j]] = self.score(a, c)?;
                    }
                }
                Ok(out)
            }
        }
    }
}
