use rand::Rng;
use serde::{Deserialize, Serialize};

use super::laws::{
    gaussian_law_coefficients, gaussian_law_log_ratio_with_delta, sphere_law_log_ratio,
};
use crate::error::{Error, Result};
use crate::numerics::{sample_gaussian, sample_uniform_sphere, Matrix};

/// One `(φ_A, φ_C)` pair: closed form against the sample mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCase {
    /// `φ_Aᵀφ_C`.
    pub inner: f64,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereLawCheck {
    pub dim: usize,
    pub samples: usize,
    pub cases: Vec<LawCase>,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLawCheck {
    pub dim: usize,
    pub scale: f64,
    pub delta: f64,
    pub samples: usize,
    /// Additive log-constant fitted by least squares in log space.
    pub log_constant: f64,
    pub cases: Vec<LawCase>,
    pub max_rel_error: f64,
}

fn check_counts(pairs: usize, samples: usize) -> Result<()> {
    if pairs == 0 || samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "need pairs and samples >= 1, got {pairs} and {samples}"
        )));
    }
    Ok(())
}

fn mean_exp_rows(bank: &Matrix, f: impl Fn(ndarray::ArrayView1<'_, f64>) -> f64) -> f64 {
    bank.rows().into_iter().map(|r| f(r).exp()).sum::<f64>() / bank.nrows() as f64
}

fn max_rel(cases: &[LawCase]) -> f64 {
    cases.iter().map(|c| c.rel_error).fold(0.0, f64::max)
}

/// Sample mean of `exp(φ_Bᵀ(φ_A + φ_C))` over uniform `φ_B` on the sphere,
/// for `pairs` random unit pairs, against the Bessel closed form. One
/// sphere sample is shared by all pairs.
pub fn sphere_law_check<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    pairs: usize,
    samples: usize,
) -> Result<SphereLawCheck> {
    if dim < 2 {
        return Err(Error::Domain("sphere law needs dimension >= 2".into()));
    }
    check_counts(pairs, samples)?;
    let ends = sample_uniform_sphere(rng, dim, 2 * pairs)?.points;
    let bank = sample_uniform_sphere(rng, dim, samples)?.points;
    let mut cases = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let (a, c) = (ends.row(2 * i), ends.row(2 * i + 1));
        let sum = &a + &c;
        let closed_form = sphere_law_log_ratio(dim, a, c)?.exp();
        let monte_carlo = mean_exp_rows(&bank, |b| b.dot(&sum));
        cases.push(LawCase {
            inner: a.dot(&c),
            closed_form,
            monte_carlo,
            rel_error: (closed_form - monte_carlo).abs() / monte_carlo,
        });
    }
    Ok(SphereLawCheck {
        dim,
        samples,
        max_rel_error: max_rel(&cases),
        cases,
    })
}

/// Sample mean of `exp(−½(‖φ_C − φ_B‖² + ‖φ_B − φ_A‖²))` over
/// `φ_B ~ N(0, c I)` against `exp(−γ(‖φ_A − φ_C‖² + δ φ_Aᵀφ_C) + K)`,
/// where `K` is fitted. Pair endpoints are drawn from `N(0, spread² I)`.
/// Passing a `δ` other than `2/(c+1)` shows how far a wrong coefficient
/// lands.
pub fn gaussian_law_check<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    scale: f64,
    delta: Option<f64>,
    spread: f64,
    pairs: usize,
    samples: usize,
) -> Result<GaussianLawCheck> {
    let (_, exact) = gaussian_law_coefficients(scale)?;
    let delta = delta.unwrap_or(exact);
    if !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite, got {delta}")));
    }
    check_counts(pairs, samples)?;
    let ends = sample_gaussian(rng, dim, 2 * pairs, spread * spread)?.points;
    let bank = sample_gaussian(rng, dim, samples, scale)?.points;
    let mut forms = Vec::with_capacity(pairs);
    let mut means = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let (a, c) = (ends.row(2 * i), ends.row(2 * i + 1));
        forms.push(gaussian_law_log_ratio_with_delta(scale, delta, a, c)?);
        means.push(mean_exp_rows(&bank, |b| {
            let (mut da, mut dc) = (0.0, 0.0);
            for ((bv, av), cv) in b.iter().zip(a.iter()).zip(c.iter()) {
                da += (bv - av) * (bv - av);
                dc += (bv - cv) * (bv - cv);
            }
            -0.5 * (da + dc)
        }));
    }
    let log_constant = forms
        .iter()
        .zip(&means)
        .map(|(f, m)| m.ln() - f)
        .sum::<f64>()
        / pairs as f64;
    let cases: Vec<LawCase> = (0..pairs)
        .map(|i| {
            let closed_form = (forms[i] + log_constant).exp();
            LawCase {
                inner: ends.row(2 * i).dot(&ends.row(2 * i + 1)),
                closed_form,
                monte_carlo: means[i],
                rel_error: (closed_form - means[i]).abs() / means[i],
            }
        })
        .collect();
    Ok(GaussianLawCheck {
        dim,
        scale,
        delta,
        samples,
        log_constant,
        max_rel_error: max_rel(&cases),
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn sphere_check_agrees() {
        let r = sphere_law_check(&mut SeedRng::new(1), 3, 5, 100_000).unwrap();
        assert_eq!(r.cases.len(), 5);
        assert!(r.max_rel_error < 0.01, "{r:?}");
    }

    #[test]
    fn gaussian_check_fits_the_known_constant() {
        let c = 1.0;
        let r = gaussian_law_check(&mut SeedRng::new(2), 2, c, None, 0.7, 8, 200_000).unwrap();
        assert!(r.max_rel_error < 0.01, "{r:?}");
        let want = -(2.0 * c + 1.0_f64).ln();
        assert!((r.log_constant - want).abs() < 0.01);
        let wrong =
            gaussian_law_check(&mut SeedRng::new(2), 2, c, Some(0.5), 0.7, 8, 200_000).unwrap();
        assert!(wrong.max_rel_error > r.max_rel_error);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = SeedRng::new(3);
        assert!(sphere_law_check(&mut rng, 1, 2, 10).is_err());
        assert!(sphere_law_check(&mut rng, 3, 0, 10).is_err());
        assert!(gaussian_law_check(&mut rng, 2, -1.0, None, 1.0, 2, 10).is_err());
        assert!(gaussian_law_check(&mut rng, 2, 1.0, Some(f64::NAN), 1.0, 2, 10).is_err());
    }
}
