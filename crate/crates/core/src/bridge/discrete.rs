use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::estimator::lse_of_sums;
use crate::error::{Error, Result};

/// Joint table `p(a, b, c)` over finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    sizes: [usize; 3],
    p: Vec<f64>,
}

impl DiscreteJoint {
    /// `p` is indexed `[a][b][c]`, flattened row-major.
    pub fn new(sizes: [usize; 3], p: Vec<f64>) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) || p.len() != sizes.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "table of {} entries for sizes {sizes:?}",
                p.len()
            )));
        }
        if p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::Domain(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self { sizes, p })
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    pub fn prob(&self, a: usize, b: usize, c: usize) -> f64 {
        let [_, nb, nc] = self.sizes;
        self.p[(a * nb + b) * nc + c]
    }

    /// `p(a, b)` as `[a][b]`.
    pub fn marginal_ab(&self) -> Vec<Vec<f64>> {
        let [na, nb, nc] = self.sizes;
        (0..na)
            .map(|a| {
                (0..nb)
                    .map(|b| (0..nc).map(|c| self.prob(a, b, c)).sum())
                    .collect()
            })
            .collect()
    }

    /// `p(b, c)` as `[b][c]`.
    pub fn marginal_bc(&self) -> Vec<Vec<f64>> {
        let [na, nb, nc] = self.sizes;
        (0..nb)
            .map(|b| {
                (0..nc)
                    .map(|c| (0..na).map(|a| self.prob(a, b, c)).sum())
                    .collect()
            })
            .collect()
    }

    /// `p(a, c)` as `[a][c]`.
    pub fn marginal_ac(&self) -> Vec<Vec<f64>> {
        let [na, nb, nc] = self.sizes;
        (0..na)
            .map(|a| {
                (0..nc)
                    .map(|c| (0..nb).map(|b| self.prob(a, b, c)).sum())
                    .collect()
            })
            .collect()
    }

    /// `p(c | a)`; errors when `p(a) = 0`.
    pub fn conditional_c_given_a(&self, c: usize, a: usize) -> Result<f64> {
        let ac = self.marginal_ac();
        let pa: f64 = ac[a].iter().sum();
        if pa == 0.0 {
            return Err(Error::Domain(format!("p(a={a}) is zero")));
        }
        Ok(ac[a][c] / pa)
    }

    /// Largest `|p(a,b,c) p(b) − p(a,b) p(b,c)|`; zero iff `A ⟂ C | B`.
    pub fn conditional_independence_gap(&self) -> f64 {
        let [na, nb, nc] = self.sizes;
        let ab = self.marginal_ab();
        let bc = self.marginal_bc();
        let pb: Vec<f64> = (0..nb).map(|b| bc[b].iter().sum()).collect();
        let mut worst = 0.0f64;
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    worst = worst.max((self.prob(a, b, c) * pb[b] - ab[a][b] * bc[b][c]).abs());
                }
            }
        }
        worst
    }
}

/// Two joints over binary `(A, B, C)` with identical uniform `p(A, B)` and
/// `p(B, C)`: in the first `A ⟂ C | B` and `p(C=a | A=a) = ½`, in the
/// second `C = A` always.
pub fn binary_counterexample() -> (DiscreteJoint, DiscreteJoint) {
    let independent = DiscreteJoint::new([2, 2, 2], vec![0.125; 8]).expect("valid table");
    let mut copy = vec![0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            copy[(a * 2 + b) * 2 + a] = 0.25;
        }
    }
    let copied = DiscreteJoint::new([2, 2, 2], copy).expect("valid table");
    (independent, copied)
}

/// Markov chain `A → B → C` given by `p(a)`, `p(b|a)`, `p(c|b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChain {
    pub p_a: Vec<f64>,
    pub p_b_given_a: Vec<Vec<f64>>,
    pub p_c_given_b: Vec<Vec<f64>>,
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    // floor keeps every state reachable so all log ratios are finite
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

impl DiscreteChain {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, sizes: [usize; 3]) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument("alphabet sizes must be >= 1".into()));
        }
        let [na, nb, nc] = sizes;
        let p_a = random_simplex(rng, na);
        let p_b_given_a = (0..na).map(|_| random_simplex(rng, nb)).collect();
        let p_c_given_b = (0..nb).map(|_| random_simplex(rng, nc)).collect();
        Ok(Self {
            p_a,
            p_b_given_a,
            p_c_given_b,
        })
    }

    pub fn sizes(&self) -> [usize; 3] {
        [
            self.p_a.len(),
            self.p_c_given_b.len(),
            self.p_c_given_b[0].len(),
        ]
    }

    pub fn joint(&self) -> DiscreteJoint {
        let [na, nb, nc] = self.sizes();
        let mut p = Vec::with_capacity(na * nb * nc);
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    p.push(self.p_a[a] * self.p_b_given_a[a][b] * self.p_c_given_b[b][c]);
                }
            }
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        DiscreteJoint::new([na, nb, nc], p).expect("chain tables are valid")
    }

    pub fn p_b(&self) -> Vec<f64> {
        let nb = self.p_c_given_b.len();
        (0..nb)
            .map(|b| {
                self.p_a
                    .iter()
                    .zip(&self.p_b_given_a)
                    .map(|(pa, row)| pa * row[b])
                    .sum()
            })
            .collect()
    }

    pub fn p_c(&self) -> Vec<f64> {
        let pb = self.p_b();
        let nc = self.p_c_given_b[0].len();
        (0..nc)
            .map(|c| {
                pb.iter()
                    .zip(&self.p_c_given_b)
                    .map(|(pb, row)| pb * row[c])
                    .sum()
            })
            .collect()
    }

    /// Critic equal to the exact `log p(b|a)/p(b)`.
    pub fn first_critic(&self, a: usize, b: usize) -> f64 {
        (self.p_b_given_a[a][b] / self.p_b()[b]).ln()
    }

    /// Critic equal to the exact `log p(c|b)/p(c)`.
    pub fn second_critic(&self, b: usize, c: usize) -> f64 {
        (self.p_c_given_b[b][c] / self.p_c()[c]).ln()
    }

    /// `log p(c|a)/p(c)` by enumeration over `b`.
    pub fn exact_log_ratio(&self, a: usize, c: usize) -> f64 {
        let pc_a: f64 = self.p_b_given_a[a]
            .iter()
            .zip(&self.p_c_given_b)
            .map(|(pb, row)| pb * row[c])
            .sum();
        (pc_a / self.p_c()[c]).ln()
    }

    pub fn sample_b<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<usize>> {
        let dist = WeightedIndex::new(self.p_b()).map_err(|e| Error::Domain(e.to_string()))?;
        Ok((0..n).map(|_| dist.sample(rng)).collect())
    }

    /// Monte Carlo estimate of `log p(c|a)/p(c)` over a bank of `b` draws.
    pub fn mc_log_ratio(&self, a: usize, c: usize, bank: &[usize]) -> Result<f64> {
        let pb = self.p_b();
        let pc = self.p_c();
        let s1: Vec<f64> = bank
            .iter()
            .map(|&b| (self.p_b_given_a[a][b] / pb[b]).ln())
            .collect();
        let s2: Vec<f64> = bank
            .iter()
            .map(|&b| (self.p_c_given_b[b][c] / pc[c]).ln())
            .collect();
        lse_of_sums(&s1, &s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;

    #[test]
    fn counterexample_marginals_match() {
        let (x, y) = binary_counterexample();
        assert_eq!(x.marginal_ab(), vec![vec![0.25, 0.25]; 2]);
        assert_eq!(y.marginal_ab(), x.marginal_ab());
        assert_eq!(y.marginal_bc(), x.marginal_bc());
        assert_eq!(x.conditional_c_given_a(0, 0).unwrap(), 0.5);
        assert_eq!(y.conditional_c_given_a(0, 0).unwrap(), 1.0);
        assert_eq!(x.conditional_independence_gap(), 0.0);
        assert!(y.conditional_independence_gap() > 0.0);
    }

    #[test]
    fn chain_is_conditionally_independent() {
        let chain = DiscreteChain::random(&mut SeedRng::new(1), [4, 6, 5]).unwrap();
        assert!(chain.joint().conditional_independence_gap() < 1e-15);
    }

    #[test]
    fn critics_marginalize_exactly() {
        // Σ_b p(b) e^{f₁(a,b) + f₂(b,c)} = p(c|a)/p(c)
        let chain = DiscreteChain::random(&mut SeedRng::new(2), [3, 5, 4]).unwrap();
        let pb = chain.p_b();
        for a in 0..3 {
            for c in 0..4 {
                let sum: f64 = (0..5)
                    .map(|b| pb[b] * (chain.first_critic(a, b) + chain.second_critic(b, c)).exp())
                    .sum();
                assert!((sum.ln() - chain.exact_log_ratio(a, c)).abs() < 1e-12);
            }
        }
    }
}
