use ndarray::{ArrayView2, Axis};

use super::critic::{critic_backward, score_matrix, CriticKind};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Loss and gradients of the symmetrized InfoNCE objective.
#[derive(Debug, Clone)]
pub struct InfoNceOutput {
    pub loss: f64,
    pub grad_left: Matrix,
    pub grad_right: Matrix,
}

/// Row-wise and column-wise softmax of the logits plus the loss
/// `−(1/N) Σ_i [ log softmax_j L[i, ·]_i + log softmax_j L[·, i]_i ]`.
fn softmaxes(logits: &Matrix) -> (f64, Matrix, Matrix) {
    let n = logits.nrows();
    let mut rows = logits.clone();
    let mut cols = logits.clone();
    let mut loss = 0.0;
    for (i, mut r) in rows.axis_iter_mut(Axis(0)).enumerate() {
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r.mapv_inplace(|v| (v - max).exp());
        let s = r.sum();
        loss -= logits[[i, i]] - max - s.ln();
        r.mapv_inplace(|v| v / s);
    }
    for (j, mut c) in cols.axis_iter_mut(Axis(1)).enumerate() {
        let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        c.mapv_inplace(|v| (v - max).exp());
        let s = c.sum();
        loss -= logits[[j, j]] - max - s.ln();
        c.mapv_inplace(|v| v / s);
    }
    (loss / n as f64, rows, cols)
}

fn check(left: ArrayView2<'_, f64>, right: ArrayView2<'_, f64>) -> Result<()> {
    if left.dim() != right.dim() {
        return Err(Error::Shape(format!(
            "InfoNCE batches {:?} and {:?} differ",
            left.dim(),
            right.dim()
        )));
    }
    if left.nrows() < 2 {
        return Err(Error::InsufficientNegatives(left.nrows()));
    }
    Ok(())
}

/// Symmetrized InfoNCE loss over aligned rows (row `i` of `left` pairs
/// with row `i` of `right`; every other row is an in-batch negative).
pub fn infonce_loss(
    critic: CriticKind,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
) -> Result<f64> {
    check(left, right)?;
    let logits = score_matrix(critic, left, right)?;
    Ok(softmaxes(&logits).0)
}

pub fn infonce_loss_and_grad(
    critic: CriticKind,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
) -> Result<InfoNceOutput> {
    check(left, right)?;
    let n = left.nrows();
    let logits = score_matrix(critic, left, right)?;
    let (loss, rows, cols) = softmaxes(&logits);
    // ∂loss/∂L[i, j] = (R[i, j] + C[i, j] − 2δ_ij) / N
    let mut g = rows + cols;
    for i in 0..n {
        g[[i, i]] -= 2.0;
    }
    g /= n as f64;
    let (grad_left, grad_right) = critic_backward(critic, left, right, g.view())?;
    Ok(InfoNceOutput {
        loss,
        grad_left,
        grad_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{standard_normal_matrix, SeedRng};
    use ndarray::array;

    #[test]
    fn uniform_scores_give_two_log_n() {
        // identical rows make every dot score equal
        let a = Matrix::from_elem((6, 3), 0.5);
        let loss = infonce_loss(CriticKind::Dot, a.view(), a.view()).unwrap();
        assert!((loss - 2.0 * 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_diagonal_gives_near_zero_loss() {
        // dot scores: 50 on the diagonal, 0 elsewhere
        let a = Matrix::eye(4) * 50f64.sqrt();
        let loss = infonce_loss(CriticKind::Dot, a.view(), a.view()).unwrap();
        // exact value 2·ln(1 + 3e^{-50}) ≈ 1.2e-21
        assert!(loss <= 1e-15, "{loss}");
        assert!(loss >= 0.0);
    }

    #[test]
    fn needs_two_rows() {
        let a = array![[1.0, 2.0]];
        let err = infonce_loss(CriticKind::Dot, a.view(), a.view()).unwrap_err();
        assert!(err.to_string().contains("insufficient negatives"));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeedRng::new(12);
        for kind in [
            CriticKind::L2Half,
            CriticKind::Dot,
            CriticKind::cosine(0.5).unwrap(),
        ] {
            let a = standard_normal_matrix(&mut rng, 5, 3);
            let b = standard_normal_matrix(&mut rng, 5, 3);
            let out = infonce_loss_and_grad(kind, a.view(), b.view()).unwrap();
            let h = 1e-5;
            for (which, base, grad) in [(0, &a, &out.grad_left), (1, &b, &out.grad_right)] {
                for idx in 0..base.len() {
                    let (r, c) = (idx / 3, idx % 3);
                    let mut plus = base.clone();
                    plus[[r, c]] += h;
                    let mut minus = base.clone();
                    minus[[r, c]] -= h;
                    let f = |m: &Matrix| {
                        if which == 0 {
                            infonce_loss(kind, m.view(), b.view()).unwrap()
                        } else {
                            infonce_loss(kind, a.view(), m.view()).unwrap()
                        }
                    };
                    let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                    let an = grad[[r, c]];
                    assert!(
                        (fd - an).abs() <= 1e-6 + 1e-4 * fd.abs(),
                        "{kind} side {which} [{r},{c}] fd={fd} an={an}"
                    );
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = SeedRng::new(13);
        let a = standard_normal_matrix(&mut rng, 7, 4);
        let b = standard_normal_matrix(&mut rng, 7, 4);
        let perm = [3usize, 0, 6, 2, 5, 1, 4];
        let pa = a.select(Axis(0), &perm);
        let pb = b.select(Axis(0), &perm);
        for kind in [
            CriticKind::L2Half,
            CriticKind::Dot,
            CriticKind::cosine(1.0).unwrap(),
        ] {
            let l1 = infonce_loss(kind, a.view(), b.view()).unwrap();
            let l2 = infonce_loss(kind, pa.view(), pb.view()).unwrap();
            assert!((l1 - l2).abs() < 1e-12);
        }
    }
}
