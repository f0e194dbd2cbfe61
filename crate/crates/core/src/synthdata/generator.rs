use ndarray::{Array1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::TripleDataset;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, standard_normal_matrix, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
    /// Standard deviation of the additive noise on `A` and `C`.
    pub noise: f64,
    /// Mean of `B`; empty means zero.
    pub mean: Vec<f64>,
    /// Scale of the per-row latent shift added along the all-ones vector
    /// to both `A` and `C`.
    pub ci_shift: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_a: 16,
            n_b: 16,
            n_c: 16,
            noise: 0.1,
            mean: Vec::new(),
            ci_shift: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_b == 0 || self.n_c == 0 {
            return Err(Error::InvalidArgument(
                "modality dimensions must be >= 1".into(),
            ));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        if !(self.ci_shift.is_finite() && self.ci_shift >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ci_shift must be finite and >= 0, got {}",
                self.ci_shift
            )));
        }
        if !self.mean.is_empty() && self.mean.len() != self.n_b {
            return Err(Error::Shape(format!(
                "mean has {} entries, n_b = {}",
                self.mean.len(),
                self.n_b
            )));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean".into()));
        }
        Ok(())
    }
}

/// Frozen draw of `(μ, Σ, M_A, M_C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub mean: Vector,
    pub covariance: Matrix,
    pub cov_factor: Matrix,
    /// `n_a × n_b`
    pub map_a: Matrix,
    /// `n_c × n_b`
    pub map_c: Matrix,
    pub noise: f64,
    pub ci_shift: f64,
}

/// `Σ = WWᵀ + 10⁻³ I` with standard normal `W`; projection entries are
/// `N(0, 1/n_b)`.
pub fn make_generator<R: Rng + ?Sized>(rng: &mut R, spec: &SynthSpec) -> Result<Generator> {
    spec.validate()?;
    let nb = spec.n_b;
    let w = standard_normal_matrix(rng, nb, nb);
    let mut covariance = w.dot(&w.t());
    for i in 0..nb {
        covariance[[i, i]] += 1e-3;
    }
    let cov_factor = cholesky(covariance.view())?;
    let sd = (1.0 / nb as f64).sqrt();
    let map_a = standard_normal_matrix(rng, spec.n_a, nb) * sd;
    let map_c = standard_normal_matrix(rng, spec.n_c, nb) * sd;
    let mean = if spec.mean.is_empty() {
        Vector::zeros(nb)
    } else {
        Array1::from(spec.mean.clone())
    };
    Ok(Generator {
        mean,
        covariance,
        cov_factor,
        map_a,
        map_c,
        noise: spec.noise,
        ci_shift: spec.ci_shift,
    })
}

impl Generator {
    pub fn n_a(&self) -> usize {
        self.map_a.nrows()
    }

    pub fn n_b(&self) -> usize {
        self.mean.len()
    }

    pub fn n_c(&self) -> usize {
        self.map_c.nrows()
    }

    /// Observation model `B·Mᵀ + σξ + κ_shift·z·1`.
    fn observe<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        b: &Matrix,
        map: &Matrix,
        shift: &Vector,
    ) -> Matrix {
        let mut out = b.dot(&map.t());
        if self.noise > 0.0 {
            out.scaled_add(
                self.noise,
                &standard_normal_matrix(rng, b.nrows(), map.nrows()),
            );
        }
        if self.ci_shift > 0.0 {
            for (mut row, z) in out.axis_iter_mut(Axis(0)).zip(shift.iter()) {
                row += self.ci_shift * z;
            }
        }
        out
    }
}

pub fn sample_triples<R: Rng + ?Sized>(
    rng: &mut R,
    generator: &Generator,
    n: usize,
) -> Result<TripleDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one triple".into()));
    }
    let z = standard_normal_matrix(rng, n, generator.n_b());
    let mut b = z.dot(&generator.cov_factor.t());
    b += &generator.mean;
    let shift: Vector = if generator.ci_shift > 0.0 {
        Vector::from_shape_simple_fn(n, || rng.sample(StandardNormal))
    } else {
        Vector::zeros(n)
    };
    let a = generator.observe(rng, &b, &generator.map_a, &shift);
    let c = generator.observe(rng, &b, &generator.map_c, &shift);
    TripleDataset::new(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn covariance_is_pd_and_seeded() {
        let spec = SynthSpec::default();
        let g1 = make_generator(&mut SeedRng::new(1), &spec).unwrap();
        let g2 = make_generator(&mut SeedRng::new(1), &spec).unwrap();
        assert_eq!(g1, g2);
        assert!(cholesky(g1.covariance.view()).is_ok());
        let asym = (&g1.covariance - &g1.covariance.t())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(asym, 0.0);
    }

    #[test]
    fn projection_variance() {
        let spec = SynthSpec::default();
        let mut sum = 0.0;
        let mut count = 0.0;
        for seed in 0..200 {
            let g = make_generator(&mut SeedRng::new(seed), &spec).unwrap();
            sum += g.map_a.iter().map(|v| v * v).sum::<f64>();
            count += g.map_a.len() as f64;
        }
        let var = sum / count;
        // 51200 draws: standard error of the variance ≈ (1/16)·√(2/51200)
        assert!((var - 1.0 / 16.0).abs() < 0.0025, "{var}");
    }

    #[test]
    fn noiseless_identity_copies_b() {
        let spec = SynthSpec {
            noise: 0.0,
            ..SynthSpec::default()
        };
        let mut g = make_generator(&mut SeedRng::new(2), &spec).unwrap();
        g.map_a = Matrix::eye(16);
        let t = sample_triples(&mut SeedRng::new(3), &g, 50).unwrap();
        assert_eq!(t.a, t.b);
    }

    #[test]
    fn rejects_bad_spec() {
        let mut rng = SeedRng::new(0);
        assert!(make_generator(
            &mut rng,
            &SynthSpec {
                n_b: 0,
                ..SynthSpec::default()
            }
        )
        .is_err());
        assert!(make_generator(
            &mut rng,
            &SynthSpec {
                noise: f64::NAN,
                ..SynthSpec::default()
            }
        )
        .is_err());
        assert!(make_generator(
            &mut rng,
            &SynthSpec {
                mean: vec![0.0; 3],
                ..SynthSpec::default()
            }
        )
        .is_err());
    }
}
