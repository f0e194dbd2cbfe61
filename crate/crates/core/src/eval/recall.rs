use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-query candidate lists. Query `i`'s true match is pool item `i`,
/// which is always included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    sets: Vec<Vec<usize>>,
}

impl CandidateSets {
    /// For each of `n_queries` queries draws `m − 1` distinct decoys from
    /// the other pool items. Candidate lists are sorted by pool index.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        n_queries: usize,
        pool: usize,
        m: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "candidate set size must be >= 1".into(),
            ));
        }
        if pool < m || n_queries > pool {
            return Err(Error::InvalidArgument(format!(
                "pool of {pool} cannot supply {m} candidates for {n_queries} queries"
            )));
        }
        let sets = (0..n_queries)
            .map(|q| {
                let mut set: Vec<usize> = sample(rng, pool - 1, m - 1)
                    .into_iter()
                    .map(|j| if j >= q { j + 1 } else { j })
                    .collect();
                set.push(q);
                set.sort_unstable();
                set
            })
            .collect();
        Ok(Self { sets })
    }

    pub fn from_sets(sets: Vec<Vec<usize>>) -> Result<Self> {
        for (q, s) in sets.iter().enumerate() {
            if !s.contains(&q) {
                return Err(Error::InvalidArgument(format!(
                    "candidate set {q} lacks its true match"
                )));
            }
        }
        Ok(Self { sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Candidate-set size of the first query (all sets share it when
    /// built by [`CandidateSets::sample`]).
    pub fn set_size(&self) -> usize {
        self.sets.first().map_or(0, Vec::len)
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }
}

/// 0-based rank of the true match: candidates scoring strictly higher,
/// plus tied candidates with a lower pool index.
pub fn rank_of_truth(
    query: usize,
    set: &[usize],
    scorer: &mut impl FnMut(usize, usize) -> f64,
) -> usize {
    let truth = scorer(query, query);
    set.iter()
        .filter(|&&j| j != query)
        .filter(|&&j| {
            let s = scorer(query, j);
            s > truth || (s == truth && j < query)
        })
        .count()
}

/// Fraction of queries whose true match ranks in the top `k` of its
/// candidate set under `scorer(query, pool_index)`.
pub fn recall_at_k(
    mut scorer: impl FnMut(usize, usize) -> f64,
    sets: &CandidateSets,
    k: usize,
) -> Result<f64> {
    if sets.is_empty() {
        return Err(Error::EmptyReduction);
    }
    if k == 0 || sets.sets.iter().any(|s| k > s.len()) {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds candidate set size {}",
            sets.set_size()
        )));
    }
    let hits = sets
        .sets
        .iter()
        .enumerate()
        .filter(|(q, s)| rank_of_truth(*q, s, &mut scorer) < k)
        .count();
    Ok(hits as f64 / sets.len() as f64)
}

/// [`recall_at_k`] over a precomputed `queries × pool` score matrix.
pub fn recall_from_scores(scores: &Matrix, sets: &CandidateSets, k: usize) -> Result<f64> {
    if scores.nrows() < sets.len() {
        return Err(Error::Shape(format!(
            "{} score rows for {} queries",
            scores.nrows(),
            sets.len()
        )));
    }
    let max_idx = sets.sets.iter().flatten().copied().max().unwrap_or(0);
    if max_idx >= scores.ncols() {
        return Err(Error::Shape(format!(
            "candidate {max_idx} outside {} score columns",
            scores.ncols()
        )));
    }
    recall_at_k(|q, j| scores[[q, j]], sets, k)
}

/// [`recall_at_k`] from per-set scores: `scores[q][t]` belongs to
/// candidate `sets.sets()[q][t]`.
pub fn recall_from_set_scores(scores: &[Vec<f64>], sets: &CandidateSets, k: usize) -> Result<f64> {
    if scores.len() != sets.len()
        || scores
            .iter()
            .zip(&sets.sets)
            .any(|(s, c)| s.len() != c.len())
    {
        return Err(Error::Shape(
            "set scores do not match candidate sets".into(),
        ));
    }
    recall_at_k(
        |q, j| {
            let t = sets.sets[q]
                .binary_search(&j)
                .expect("candidate belongs to its set");
            scores[q][t]
        },
        sets,
        k,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn indicator_scorer_is_perfect() {
        let sets = CandidateSets::sample(&mut SeedRng::new(1), 100, 300, 32).unwrap();
        let r = recall_at_k(|q, j| if q == j { 1.0 } else { 0.0 }, &sets, 1).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn full_k_is_perfect() {
        let sets = CandidateSets::sample(&mut SeedRng::new(2), 50, 50, 32).unwrap();
        assert_eq!(recall_at_k(|_, j| -(j as f64), &sets, 32).unwrap(), 1.0);
        assert!(recall_at_k(|_, _| 0.0, &sets, 33).is_err());
    }

    #[test]
    fn ties_favor_lower_index() {
        let sets = CandidateSets::from_sets(vec![vec![0, 5], vec![0, 1]]).unwrap();
        // constant scores: query 0 wins its tie, query 1 loses to index 0
        assert_eq!(recall_at_k(|_, _| 1.0, &sets, 1).unwrap(), 0.5);
    }

    #[test]
    fn sets_contain_truth_and_are_distinct() {
        let sets = CandidateSets::sample(&mut SeedRng::new(3), 200, 200, 32).unwrap();
        for (q, s) in sets.sets().iter().enumerate() {
            assert!(s.contains(&q));
            let mut d = s.clone();
            d.dedup();
            assert_eq!(d.len(), 32);
        }
    }
}
