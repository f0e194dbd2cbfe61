use ndarray::{s, ArrayView2};
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

/// Row-aligned samples from two modalities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub left: Matrix,
    pub right: Matrix,
    pub split: Split,
}

impl PairDataset {
    pub fn new(left: Matrix, right: Matrix, split: Split) -> Result<Self> {
        if left.nrows() != right.nrows() {
            return Err(Error::Shape(format!(
                "pair sides have {} and {} rows",
                left.nrows(),
                right.nrows()
            )));
        }
        ensure_finite(left.view(), "left modality")?;
        ensure_finite(right.view(), "right modality")?;
        Ok(Self { left, right, split })
    }

    pub fn len(&self) -> usize {
        self.left.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn left_dim(&self) -> usize {
        self.left.ncols()
    }

    pub fn right_dim(&self) -> usize {
        self.right.ncols()
    }

    pub fn swapped(&self) -> PairDataset {
        PairDataset {
            left: self.right.clone(),
            right: self.left.clone(),
            split: self.split,
        }
    }
}

/// Row-aligned `(A, B, C)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleDataset {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl TripleDataset {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        if a.nrows() != b.nrows() || b.nrows() != c.nrows() {
            return Err(Error::Shape(format!(
                "triple rows differ: {} / {} / {}",
                a.nrows(),
                b.nrows(),
                c.nrows()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self, start: usize, end: usize) -> TripleDataset {
        let take = |m: &Matrix| m.slice(s![start..end, ..]).to_owned();
        TripleDataset {
            a: take(&self.a),
            b: take(&self.b),
            c: take(&self.c),
        }
    }

    fn pair(
        left: ArrayView2<'_, f64>,
        right: ArrayView2<'_, f64>,
        split: Split,
    ) -> Result<PairDataset> {
        PairDataset::new(left.to_owned(), right.to_owned(), split)
    }

    pub fn ab(&self, split: Split) -> Result<PairDataset> {
        Self::pair(self.a.view(), self.b.view(), split)
    }

    pub fn bc(&self, split: Split) -> Result<PairDataset> {
        Self::pair(self.b.view(), self.c.view(), split)
    }

    pub fn ac(&self, split: Split) -> Result<PairDataset> {
        Self::pair(self.a.view(), self.c.view(), split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSizes {
    /// Pairs in each of the `A–B` and `B–C` training sets.
    pub train: usize,
    /// Held-out triples used for validation loss and retrieval.
    pub validation: usize,
    /// Extra `A–C` training pairs for the privileged reference model;
    /// zero disables it.
    pub privileged: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: 5000,
            validation: 1000,
            privileged: 0,
        }
    }
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        2 * self.train + self.validation + self.privileged
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub ab: PairDataset,
    pub bc: PairDataset,
    pub eval: TripleDataset,
    pub ac_privileged: Option<PairDataset>,
}

impl Splits {
    /// Standardizes every modality with statistics from the training
    /// rows only (`A` from `A–B`, `C` from `B–C`, `B` from both).
    pub fn standardized(&self) -> Result<Splits> {
        let sa = Standardizer::fit(&self.ab.left)?;
        let sb = Standardizer::fit(&ndarray::concatenate![
            ndarray::Axis(0),
            self.ab.right,
            self.bc.left
        ])?;
        let sc = Standardizer::fit(&self.bc.right)?;
        let ab = PairDataset::new(
            sa.apply(&self.ab.left)?,
            sb.apply(&self.ab.right)?,
            self.ab.split,
        )?;
        let bc = PairDataset::new(
            sb.apply(&self.bc.left)?,
            sc.apply(&self.bc.right)?,
            self.bc.split,
        )?;
        let eval = TripleDataset::new(
            sa.apply(&self.eval.a)?,
            sb.apply(&self.eval.b)?,
            sc.apply(&self.eval.c)?,
        )?;
        let ac_privileged = match &self.ac_privileged {
            Some(p) => Some(PairDataset::new(
                sa.apply(&p.left)?,
                sc.apply(&p.right)?,
                p.split,
            )?),
            None => None,
        };
        Ok(Splits {
            ab,
            bc,
            eval,
            ac_privileged,
        })
    }
}

/// Contiguous disjoint partition: `A–B` pairs, then `B–C` pairs, then
/// evaluation triples, then privileged `A–C` pairs.
pub fn split_pairs(triples: &TripleDataset, sizes: SplitSizes) -> Result<Splits> {
    if sizes.total() > triples.len() {
        return Err(Error::InsufficientRows {
            requested: sizes.total(),
            available: triples.len(),
        });
    }
    let t = sizes.train;
    let v = sizes.validation;
    let ab = triples.rows(0, t).ab(Split::Train)?;
    let bc = triples.rows(t, 2 * t).bc(Split::Train)?;
    let eval = triples.rows(2 * t, 2 * t + v);
    let ac_privileged = if sizes.privileged > 0 {
        Some(
            triples
                .rows(2 * t + v, 2 * t + v + sizes.privileged)
                .ac(Split::Train)?,
        )
    } else {
        None
    };
    Ok(Splits {
        ab,
        bc,
        eval,
        ac_privileged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triples whose every entry encodes the row index, so provenance is
    /// checkable after splitting.
    fn indexed(n: usize) -> TripleDataset {
        let col = |offset: f64| Matrix::from_shape_fn((n, 2), |(i, _)| i as f64 + offset);
        TripleDataset::new(col(0.0), col(0.25), col(0.5)).unwrap()
    }

    #[test]
    fn partition_is_disjoint() {
        let t = indexed(11000);
        let s = split_pairs(
            &t,
            SplitSizes {
                train: 5000,
                validation: 1000,
                privileged: 0,
            },
        )
        .unwrap();
        let ab: Vec<i64> =
            s.ab.right
                .column(0)
                .iter()
                .map(|v| v.floor() as i64)
                .collect();
        let bc: Vec<i64> =
            s.bc.left
                .column(0)
                .iter()
                .map(|v| v.floor() as i64)
                .collect();
        let ev: Vec<i64> = s
            .eval
            .b
            .column(0)
            .iter()
            .map(|v| v.floor() as i64)
            .collect();
        let mut all: Vec<i64> = ab.iter().chain(&bc).chain(&ev).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 11000);
        assert!(s.ac_privileged.is_none());
    }

    #[test]
    fn too_many_rows_requested() {
        let t = indexed(100);
        let err = split_pairs(
            &t,
            SplitSizes {
                train: 50,
                validation: 1,
                privileged: 0,
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientRows {
                requested: 101,
                available: 100
            }
        ));
    }

    #[test]
    fn eval_rows_share_origin() {
        let t = indexed(40);
        let s = split_pairs(
            &t,
            SplitSizes {
                train: 10,
                validation: 10,
                privileged: 10,
            },
        )
        .unwrap();
        for i in 0..10 {
            assert_eq!(s.eval.a[[i, 0]].floor(), s.eval.c[[i, 0]].floor());
            assert_eq!(s.eval.b[[i, 1]], (20 + i) as f64 + 0.25);
        }
        let p = s.ac_privileged.unwrap();
        assert_eq!(p.left[[0, 0]], 30.0);
        assert_eq!(p.right[[0, 0]], 30.5);
    }

    #[test]
    fn pair_shape_mismatch() {
        assert!(
            PairDataset::new(Matrix::zeros((3, 2)), Matrix::zeros((4, 2)), Split::Train).is_err()
        );
    }
}
