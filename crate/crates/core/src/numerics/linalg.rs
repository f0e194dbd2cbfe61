use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
pub type Matrix = Array2<f64>;
/// Dense `f64` vector.
pub type Vector = Array1<f64>;

/// Fails with [`Error::NonFinite`] if any entry is NaN or infinite.
pub fn ensure_finite(m: ArrayView2<'_, f64>, what: &str) -> Result<()> {
    if let Some(((r, c), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what}[{r}, {c}] = {v}")));
    }
    Ok(())
}

/// L2 norm of every row.
pub fn row_norms(m: ArrayView2<'_, f64>) -> Vector {
    m.map_axis(Axis(1), |row| row.dot(&row).sqrt())
}

/// Lower-triangular `L` with `L Lᵀ = a` for symmetric positive-definite `a`.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "cholesky needs a square matrix, got {:?}",
            a.dim()
        )));
    }
    let mut l = Matrix::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let d = diag.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_of_identity_is_identity() {
        let eye = Matrix::eye(5);
        assert_eq!(cholesky(eye.view()).unwrap(), eye);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(l[[0, 1]], 0.0);
        assert_eq!(l[[1, 2]], 0.0);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        let err = cholesky(a.view()).unwrap_err();
        assert!(err.to_string().contains("not positive definite"));
    }

    #[test]
    fn finiteness_check() {
        let mut m = Matrix::zeros((2, 2));
        assert!(ensure_finite(m.view(), "m").is_ok());
        m[[1, 0]] = f64::NAN;
        assert!(ensure_finite(m.view(), "m").is_err());
    }
}
