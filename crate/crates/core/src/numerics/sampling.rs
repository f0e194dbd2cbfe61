use ndarray::{Array1, ArrayView1, Axis};
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::linalg::Matrix;
use crate::error::{Error, Result};

/// Points drawn uniformly from the unit sphere `S^{dim-1}`.
#[derive(Debug, Clone)]
pub struct SphereSample {
    pub dim: usize,
    pub points: Matrix,
}

/// Points drawn from `N(0, scale · I)`.
#[derive(Debug, Clone)]
pub struct GaussianSample {
    pub dim: usize,
    pub scale: f64,
    pub points: Matrix,
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

fn normalize_rows_in_place<R: Rng + ?Sized>(rng: &mut R, m: &mut Matrix) {
    let cols = m.ncols();
    for mut row in m.axis_iter_mut(Axis(0)) {
        loop {
            let norm = row.dot(&row).sqrt();
            if norm > 1e-100 {
                row.mapv_inplace(|v| v / norm);
                break;
            }
            for j in 0..cols {
                row[j] = rng.sample(StandardNormal);
            }
        }
    }
}

/// Uniform points on `S^{dim-1}` as normalized standard Gaussians.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n: usize,
) -> Result<SphereSample> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "sphere dimension must be >= 1".into(),
        ));
    }
    let mut points = standard_normal_matrix(rng, n, dim);
    normalize_rows_in_place(rng, &mut points);
    Ok(SphereSample { dim, points })
}

/// Isotropic Gaussian points with covariance `scale · I`.
pub fn sample_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n: usize,
    scale: f64,
) -> Result<GaussianSample> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "gaussian dimension must be >= 1".into(),
        ));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!(
            "gaussian scale must be positive, got {scale}"
        )));
    }
    let sd = scale.sqrt();
    let points = standard_normal_matrix(rng, n, dim) * sd;
    Ok(GaussianSample { dim, scale, points })
}

/// von Mises-Fisher samples around the unit vector `mean` with
/// concentration `kappa`, using Wood's rejection scheme.
pub fn sample_vmf<R: Rng + ?Sized>(
    rng: &mut R,
    mean: ArrayView1<'_, f64>,
    kappa: f64,
    n: usize,
) -> Result<Matrix> {
    let dim = mean.len();
    if dim < 2 {
        return Err(Error::Domain("vMF sampling needs dimension >= 2".into()));
    }
    let norm = mean.dot(&mean).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "vMF mean must be a unit vector, norm {norm}"
        )));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!(
            "vMF concentration must be >= 0, got {kappa}"
        )));
    }
    let m = (dim - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt()) / m;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * m, 0.5 * m).map_err(|e| Error::Domain(e.to_string()))?;

    let mut out = Matrix::zeros((n, dim));
    for mut row in out.axis_iter_mut(Axis(0)) {
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.gen();
            if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        };
        // uniform direction orthogonal to the mean
        let tangent = loop {
            let g: Array1<f64> = Array1::from_shape_simple_fn(dim, || rng.sample(StandardNormal));
            let proj = g.dot(&mean);
            let t = &g - &(&mean * proj);
            let tn = t.dot(&t).sqrt();
            if tn > 1e-12 {
                break t / tn;
            }
        };
        let s = (1.0 - w * w).max(0.0).sqrt();
        row.assign(&(&mean * w + &tangent * s));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn sphere_rows_are_unit() {
        let mut rng = SeedRng::new(3);
        let s = sample_uniform_sphere(&mut rng, 7, 500).unwrap();
        for row in s.points.rows() {
            assert!((row.dot(&row).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_mean_near_origin() {
        let mut rng = SeedRng::new(4);
        let s = sample_uniform_sphere(&mut rng, 5, 100_000).unwrap();
        let mean = s.points.mean_axis(Axis(0)).unwrap();
        // each coordinate has variance 1/5; 3 sd of the mean ≈ 0.0042
        for v in mean.iter() {
            assert!(v.abs() < 0.02, "{v}");
        }
    }

    #[test]
    fn identical_seed_identical_samples() {
        let a = sample_uniform_sphere(&mut SeedRng::new(9), 4, 50).unwrap();
        let b = sample_uniform_sphere(&mut SeedRng::new(9), 4, 50).unwrap();
        assert_eq!(a.points, b.points);
        let g1 = sample_gaussian(&mut SeedRng::new(9), 3, 20, 2.0).unwrap();
        let g2 = sample_gaussian(&mut SeedRng::new(9), 3, 20, 2.0).unwrap();
        assert_eq!(g1.points, g2.points);
    }

    #[test]
    fn gaussian_variance_matches_scale() {
        let g = sample_gaussian(&mut SeedRng::new(5), 2, 200_000, 2.5).unwrap();
        let var = g.points.mapv(|v| v * v).mean().unwrap();
        assert!((var - 2.5).abs() < 0.05, "{var}");
    }

    #[test]
    fn vmf_mean_resultant_length() {
        // E[μᵀx] = I_{p/2}(κ) / I_{p/2-1}(κ)
        let p = 8;
        let kappa = 5.0;
        let mut mean = Array1::zeros(p);
        mean[0] = 1.0;
        let x = sample_vmf(&mut SeedRng::new(21), mean.view(), kappa, 40_000).unwrap();
        let avg = x.column(0).mean().unwrap();
        let expected = crate::numerics::bessel_i(4.0, kappa).unwrap()
            / crate::numerics::bessel_i(3.0, kappa).unwrap();
        assert!((avg - expected).abs() < 0.01, "{avg} vs {expected}");
        for row in x.rows() {
            assert!((row.dot(&row) - 1.0).abs() < 1e-12);
        }
    }
}
