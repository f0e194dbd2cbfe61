use std::f64::consts::PI;

use ndarray::{ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::sample_uniform_sphere;

/// Kolmogorov limiting survival function `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ
        let y = (-PI * PI / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        let mut j = 1.0f64;
        loop {
            let t = y.powf(j * j);
            s += t;
            if t < 1e-17 * s.max(1e-300) || j > 100.0 {
                break;
            }
            j += 2.0;
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let t = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { t } else { -t };
            if t < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// `Q((√nₑ + 0.12 + 0.11/√nₑ) D)`, `nₑ = n m / (n + m)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyReduction);
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("KS sample".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let sq = ne.sqrt();
    let p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    /// Median KS statistic over directions.
    pub statistic: f64,
    /// Bonferroni-corrected minimum p-value.
    pub p_value: f64,
    pub directions: usize,
    pub sample_size: usize,
    pub reference_size: usize,
    pub per_direction: Vec<KsResult>,
}

impl UniformityReport {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Compares unit-norm representations against a fresh uniform-sphere
/// sample along `directions` random 1-D projections.
pub fn uniformity_test<R: Rng + ?Sized>(
    rng: &mut R,
    reps: ArrayView2<'_, f64>,
    directions: usize,
    reference_size: usize,
) -> Result<UniformityReport> {
    let n = reps.nrows();
    if n < 10 || reference_size < 10 {
        return Err(Error::SampleTooSmall(n.min(reference_size)));
    }
    if directions == 0 {
        return Err(Error::InvalidArgument(
            "need at least one projection direction".into(),
        ));
    }
    let d = reps.ncols();
    for (i, r) in reps.axis_iter(Axis(0)).enumerate() {
        let norm = r.dot(&r).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "row {i} has norm {norm}, expected unit vectors"
            )));
        }
    }
    let dirs = sample_uniform_sphere(rng, d, directions)?.points;
    let reference = sample_uniform_sphere(rng, d, reference_size)?.points;
    let proj_x = reps.dot(&dirs.t());
    let proj_y = reference.dot(&dirs.t());
    let mut per_direction = Vec::with_capacity(directions);
    for k in 0..directions {
        let x = proj_x.column(k).to_vec();
        let y = proj_y.column(k).to_vec();
        per_direction.push(ks_two_sample(&x, &y)?);
    }
    let p_min = per_direction.iter().map(|r| r.p_value).fold(1.0, f64::min);
    let mut ds: Vec<f64> = per_direction.iter().map(|r| r.statistic).collect();
    ds.sort_by(f64::total_cmp);
    let mid = ds.len() / 2;
    let median = if ds.len() % 2 == 1 {
        ds[mid]
    } else {
        0.5 * (ds[mid - 1] + ds[mid])
    };
    Ok(UniformityReport {
        statistic: median,
        p_value: (p_min * directions as f64).min(1.0),
        directions,
        sample_size: n,
        reference_size,
        per_direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, SeedRng};

    #[test]
    fn q_function_values() {
        assert_eq!(kolmogorov_q(0.0), 1.0);
        // standard critical values: Q(1.3581) = 0.05, Q(1.6276) = 0.01
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
        // both branches agree at the switch point
        let l = 1.18;
        let direct: f64 = 2.0
            * (1..50)
                .map(|j| {
                    let j = j as f64;
                    (if j as i64 % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * j * j * l * l).exp()
                })
                .sum::<f64>();
        assert!((kolmogorov_q(l - 1e-12) - direct).abs() < 1e-10);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let y: Vec<f64> = (100..150).map(f64::from).collect();
        let r = ks_two_sample(&x, &y).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn ks_monotone_transform_invariance() {
        let mut rng = SeedRng::new(5);
        let x: Vec<f64> = (0..300).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.gen::<f64>().powf(1.3)).collect();
        let base = ks_two_sample(&x, &y).unwrap().statistic;
        let f = |v: f64| (3.0 * v).exp() - 7.0;
        let xt: Vec<f64> = x.iter().map(|&v| f(v)).collect();
        let yt: Vec<f64> = y.iter().map(|&v| f(v)).collect();
        assert_eq!(ks_two_sample(&xt, &yt).unwrap().statistic, base);
    }

    #[test]
    fn degenerate_representations_are_rejected() {
        let mut reps = Matrix::zeros((500, 4));
        reps.column_mut(0).fill(1.0);
        let r = uniformity_test(&mut SeedRng::new(1), reps.view(), 16, 500).unwrap();
        assert!(r.statistic > 0.4);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn too_few_rows() {
        let reps = Matrix::eye(5);
        let err = uniformity_test(&mut SeedRng::new(1), reps.view(), 16, 100).unwrap_err();
        assert!(err.to_string().contains("sample too small"));
    }
}
