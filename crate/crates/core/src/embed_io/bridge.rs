use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::container::EmbeddingContainer;
use crate::bridge::{mc_lse_selected, PhiBank};
use crate::contrastive::{score_matrix, CriticKind};
use crate::error::{Error, Result};
use crate::eval::{mean_std, recall_from_scores, recall_from_set_scores, CandidateSets};
use crate::numerics::{Matrix, SeedRng};

/// The same ordered list of `B` items encoded by two models: `via_first`
/// by the `A–B` model and `via_second` by the `B–C` model. Both containers
/// must carry the list's name, which is the only provenance check
/// available on opaque embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedBank {
    via_first: EmbeddingContainer,
    via_second: EmbeddingContainer,
}

impl AlignedBank {
    pub fn new(via_first: EmbeddingContainer, via_second: EmbeddingContainer) -> Result<Self> {
        if via_first.rows() != via_second.rows() {
            return Err(Error::Shape(format!(
                "aligned banks list {} and {} items",
                via_first.rows(),
                via_second.rows()
            )));
        }
        if via_first.name() != via_second.name() {
            return Err(Error::InvalidArgument(format!(
                "banks encode different item lists: {:?} vs {:?}",
                via_first.name(),
                via_second.name()
            )));
        }
        if via_first.rows() == 0 {
            return Err(Error::EmptyReduction);
        }
        Ok(Self {
            via_first,
            via_second,
        })
    }

    pub fn items(&self) -> &str {
        self.via_first.name()
    }

    pub fn len(&self) -> usize {
        self.via_first.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn via_first(&self) -> &EmbeddingContainer {
        &self.via_first
    }

    pub fn via_second(&self) -> &EmbeddingContainer {
        &self.via_second
    }

    pub fn phi_bank(&self, first: CriticKind, second: CriticKind) -> Result<PhiBank> {
        PhiBank::two_sided(
            self.via_first.matrix().clone(),
            self.via_second.matrix().clone(),
            first,
            second,
        )
    }
}

/// Recall of bridged `A → C` retrieval where query `q`'s match is pool
/// row `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub items: String,
    pub bank_size: usize,
    pub queries: usize,
    pub candidates: usize,
    pub k: usize,
    pub chance: f64,
    pub monte_carlo: f64,
    /// Critic applied straight to `(φ_A, φ_C)`; only defined when both
    /// sides share a dimension and critic.
    pub direct: Option<f64>,
}

/// Scores queries from the `A–B` model against a pool from the `B–C`
/// model by marginalizing over the shared `B` items, without ever seeing
/// an `(A, C)` pair.
pub fn bridge_external(
    bank: &AlignedBank,
    critics: (CriticKind, CriticKind),
    queries: &EmbeddingContainer,
    pool: &EmbeddingContainer,
    candidates: &CandidateSets,
    k: usize,
) -> Result<BridgeReport> {
    if queries.rows() != pool.rows() || candidates.len() != queries.rows() {
        return Err(Error::Shape(format!(
            "{} queries, {} pool rows and {} candidate sets must agree",
            queries.rows(),
            pool.rows(),
            candidates.len()
        )));
    }
    let phi = bank.phi_bank(critics.0, critics.1)?;
    let (q, p) = (queries.matrix().view(), pool.matrix().view());
    let scores = mc_lse_selected(&phi, q, p, candidates.sets())?;
    let monte_carlo = recall_from_set_scores(&scores, candidates, k)?;
    let direct = if critics.0 == critics.1 && queries.dim() == pool.dim() {
        Some(recall_from_scores(
            &score_matrix(critics.0, q, p)?,
            candidates,
            k,
        )?)
    } else {
        None
    };
    Ok(BridgeReport {
        items: bank.items().to_string(),
        bank_size: bank.len(),
        queries: queries.rows(),
        candidates: candidates.set_size(),
        k,
        chance: k as f64 / candidates.set_size() as f64,
        monte_carlo,
        direct,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
    /// Half-width of the normal 95% interval of the mean.
    pub ci95: f64,
    pub trials: usize,
}

/// Monte Carlo recall as a function of the number `M` of bank items: each
/// trial scores with a fresh subsample of `M` rows (without replacement).
/// With `M` equal to the bank size every trial uses the full bank.
pub fn scaling_sweep(
    rng: &SeedRng,
    bank: &PhiBank,
    queries: &Matrix,
    pool: &Matrix,
    candidates: &CandidateSets,
    k: usize,
    ms: &[usize],
    trials: usize,
) -> Result<Vec<ScalingPoint>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if let Some(&m) = ms.iter().find(|&&m| m == 0 || m > bank.len()) {
        return Err(Error::InsufficientRows {
            requested: m,
            available: bank.len(),
        });
    }
    let score = |b: &PhiBank| -> Result<f64> {
        let scores = mc_lse_selected(b, queries.view(), pool.view(), candidates.sets())?;
        recall_from_set_scores(&scores, candidates, k)
    };
    ms.iter()
        .enumerate()
        .map(|(mi, &m)| {
            let recalls = if m == bank.len() {
                vec![score(bank)?; trials]
            } else {
                (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut stream = rng.substream("subsample", (mi * trials + t) as u64);
                        let mut rows = sample(&mut stream, bank.len(), m).into_vec();
                        rows.sort_unstable();
                        score(&bank.select(&rows)?)
                    })
                    .collect::<Result<Vec<f64>>>()?
            };
            let (mean, std) = mean_std(&recalls);
            Ok(ScalingPoint {
                m,
                mean,
                std,
                ci95: 1.96 * std / (trials as f64).sqrt(),
                trials,
            })
        })
        .collect()
}

pub fn write_scaling_csv<W: Write>(points: &[ScalingPoint], mut w: W) -> Result<()> {
    writeln!(w, "m,mean_recall,ci95,std,trials")?;
    for p in points {
        writeln!(w, "{},{},{},{},{}", p.m, p.mean, p.ci95, p.std, p.trials)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::mc_lse_matrix;
    use crate::numerics::standard_normal_matrix;

    fn container(name: &str, m: Matrix) -> EmbeddingContainer {
        EmbeddingContainer::new(name, m).unwrap()
    }

    #[test]
    fn aligned_bank_checks_item_lists() {
        let mut rng = SeedRng::new(1);
        let a = standard_normal_matrix(&mut rng, 5, 3);
        let b = standard_normal_matrix(&mut rng, 5, 4);
        assert!(
            AlignedBank::new(container("items", a.clone()), container("items", b.clone())).is_ok()
        );
        assert!(AlignedBank::new(container("items", a.clone()), container("other", b)).is_err());
        let short = standard_normal_matrix(&mut rng, 4, 4);
        assert!(AlignedBank::new(container("items", a), container("items", short)).is_err());
    }

    #[test]
    fn identical_models_reduce_to_single_bank() {
        let mut rng = SeedRng::new(2);
        let phi = standard_normal_matrix(&mut rng, 40, 3);
        let q = standard_normal_matrix(&mut rng, 12, 3);
        let p = standard_normal_matrix(&mut rng, 12, 3);
        let bank =
            AlignedBank::new(container("b", phi.clone()), container("b", phi.clone())).unwrap();
        let sets = CandidateSets::sample(&mut rng, 12, 12, 4).unwrap();
        let critics = (CriticKind::L2Half, CriticKind::L2Half);
        let report = bridge_external(
            &bank,
            critics,
            &container("a", q.clone()),
            &container("c", p.clone()),
            &sets,
            1,
        )
        .unwrap();
        let single =
            PhiBank::symmetric(bank.via_first().matrix().clone(), CriticKind::L2Half).unwrap();
        let q32 = container("a", q).matrix().clone();
        let p32 = container("c", p).matrix().clone();
        let want = recall_from_scores(
            &mc_lse_matrix(&single, q32.view(), p32.view()).unwrap(),
            &sets,
            1,
        )
        .unwrap();
        assert_eq!(report.monte_carlo, want);
        assert!(report.direct.is_some());
        assert_eq!(report.chance, 0.25);
    }

    #[test]
    fn item_order_does_not_matter() {
        let mut rng = SeedRng::new(3);
        let b1 = standard_normal_matrix(&mut rng, 30, 3);
        let b2 = standard_normal_matrix(&mut rng, 30, 5);
        let q = standard_normal_matrix(&mut rng, 8, 3);
        let p = standard_normal_matrix(&mut rng, 8, 5);
        let bank = PhiBank::two_sided(b1, b2, CriticKind::Dot, CriticKind::L2Half).unwrap();
        let perm: Vec<usize> = (0..30).rev().collect();
        let shuffled = bank.select(&perm).unwrap();
        let a = mc_lse_matrix(&bank, q.view(), p.view()).unwrap();
        let b = mc_lse_matrix(&shuffled, q.view(), p.view()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn differing_dimensions_have_no_direct_score() {
        let mut rng = SeedRng::new(4);
        let bank = AlignedBank::new(
            container("b", standard_normal_matrix(&mut rng, 20, 3)),
            container("b", standard_normal_matrix(&mut rng, 20, 6)),
        )
        .unwrap();
        let q = container("a", standard_normal_matrix(&mut rng, 10, 3));
        let p = container("c", standard_normal_matrix(&mut rng, 10, 6));
        let sets = CandidateSets::sample(&mut rng, 10, 10, 5).unwrap();
        let r =
            bridge_external(&bank, (CriticKind::Dot, CriticKind::Dot), &q, &p, &sets, 2).unwrap();
        assert_eq!(r.direct, None);
        assert!((0.0..=1.0).contains(&r.monte_carlo));
        let short = container("c", standard_normal_matrix(&mut rng, 9, 6));
        assert!(bridge_external(
            &bank,
            (CriticKind::Dot, CriticKind::Dot),
            &q,
            &short,
            &sets,
            2
        )
        .is_err());
    }

    #[test]
    fn full_bank_sweep_point_is_exact() {
        let mut rng = SeedRng::new(5);
        let bank = PhiBank::symmetric(standard_normal_matrix(&mut rng, 25, 2), CriticKind::L2Half)
            .unwrap();
        let q = standard_normal_matrix(&mut rng, 16, 2);
        let p = &q + &(standard_normal_matrix(&mut rng, 16, 2) * 0.3);
        let sets = CandidateSets::sample(&mut rng, 16, 16, 8).unwrap();
        let pts = scaling_sweep(&SeedRng::new(6), &bank, &q, &p, &sets, 1, &[1, 5, 25], 4).unwrap();
        let exact =
            recall_from_scores(&mc_lse_matrix(&bank, q.view(), p.view()).unwrap(), &sets, 1)
                .unwrap();
        assert_eq!(pts[2].mean, exact);
        assert_eq!(pts[2].std, 0.0);
        assert!(scaling_sweep(&SeedRng::new(6), &bank, &q, &p, &sets, 1, &[26], 4).is_err());
        let mut buf = Vec::new();
        write_scaling_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,mean_recall,ci95,std,trials\n1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
