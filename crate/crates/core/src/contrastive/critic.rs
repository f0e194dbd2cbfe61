use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Similarity `f(x, y)` between two representations.
///
/// Text form: `l2`, `dot`, `cosine` or `cosine:<τ>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CriticKind {
    /// `-½‖x − y‖²`
    L2Half,
    /// `xᵀy`
    Dot,
    /// `xᵀy / (τ ‖x‖ ‖y‖)`
    Cosine { temperature: f64 },
}

impl CriticKind {
    pub fn cosine(temperature: f64) -> Result<Self> {
        let c = CriticKind::Cosine { temperature };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let CriticKind::Cosine { temperature } = self {
            if !(temperature.is_finite() && *temperature > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cosine temperature must be positive, got {temperature}"
                )));
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CriticKind::L2Half => "l2",
            CriticKind::Dot => "dot",
            CriticKind::Cosine { .. } => "cosine",
        }
    }
}

impl fmt::Display for CriticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticKind::Cosine { temperature } if *temperature != 1.0 => {
                write!(f, "cosine:{temperature}")
            }
            other => f.write_str(other.tag()),
        }
    }
}

impl FromStr for CriticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(t) = lower.strip_prefix("cosine:") {
            let temperature = t
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad cosine temperature {t:?}")))?;
            return CriticKind::cosine(temperature);
        }
        match lower.as_str() {
            "l2" | "l2half" | "l2_half" => Ok(CriticKind::L2Half),
            "dot" => Ok(CriticKind::Dot),
            "cosine" | "cos" => Ok(CriticKind::Cosine { temperature: 1.0 }),
            other => Err(Error::InvalidArgument(format!(
                "unknown critic {other:?} (expected l2, dot or cosine)"
            ))),
        }
    }
}

impl TryFrom<String> for CriticKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CriticKind> for String {
    fn from(c: CriticKind) -> String {
        c.to_string()
    }
}

pub fn critic_score(
    kind: CriticKind,
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "critic inputs have dims {} and {}",
            x.len(),
            y.len()
        )));
    }
    match kind {
        CriticKind::L2Half => Ok(-0.5
            * x.iter()
                .zip(y.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()),
        CriticKind::Dot => Ok(x.dot(&y)),
        CriticKind::Cosine { temperature } => {
            let nx = x.dot(&x).sqrt();
            let ny = y.dot(&y).sqrt();
            if nx == 0.0 || ny == 0.0 {
                return Err(Error::ZeroNorm(nx.min(ny)));
            }
            Ok(x.dot(&y) / (temperature * nx * ny))
        }
    }
}

fn normalized(m: ArrayView2<'_, f64>) -> Result<(Matrix, Vector)> {
    let norms: Vector = m.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    if let Some(&n) = norms.iter().find(|&&n| !(n > 0.0)) {
        return Err(Error::ZeroNorm(n));
    }
    let mut out = m.to_owned();
    for (mut row, n) in out.axis_iter_mut(Axis(0)).zip(norms.iter()) {
        row.mapv_inplace(|v| v / n);
    }
    Ok((out, norms))
}

/// `L[i, j] = f(left_i, right_j)`.
pub fn score_matrix(
    kind: CriticKind,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
) -> Result<Matrix> {
    if left.ncols() != right.ncols() {
        return Err(Error::Shape(format!(
            "critic inputs have dims {} and {}",
            left.ncols(),
            right.ncols()
        )));
    }
    match kind {
        CriticKind::Dot => Ok(left.dot(&right.t())),
        CriticKind::L2Half => {
            let ln: Vector = left.map_axis(Axis(1), |r| r.dot(&r));
            let rn: Vector = right.map_axis(Axis(1), |r| r.dot(&r));
            let mut l = left.dot(&right.t());
            for ((i, j), v) in l.indexed_iter_mut() {
                // exact zero on the diagonal of identical inputs is not
                // guaranteed by this expansion, so clamp the positive noise
                *v = (*v - 0.5 * ln[i] - 0.5 * rn[j]).min(0.0);
            }
            Ok(l)
        }
        CriticKind::Cosine { temperature } => {
            let (ln, _) = normalized(left)?;
            let (rn, _) = normalized(right)?;
            Ok(ln.dot(&rn.t()) / temperature)
        }
    }
}

/// Gradients of `Σ_ij g[i, j] · f(left_i, right_j)` with respect to both
/// inputs.
pub fn critic_backward(
    kind: CriticKind,
    left: ArrayView2<'_, f64>,
    right: ArrayView2<'_, f64>,
    g: ArrayView2<'_, f64>,
) -> Result<(Matrix, Matrix)> {
    if g.dim() != (left.nrows(), right.nrows()) || left.ncols() != right.ncols() {
        return Err(Error::Shape("critic gradient shapes do not line up".into()));
    }
    match kind {
        CriticKind::Dot => Ok((g.dot(&right), g.t().dot(&left))),
        CriticKind::L2Half => {
            // ∂/∂a_i = Σ_j g_ij (b_j − a_i);  ∂/∂b_j = Σ_i g_ij (a_i − b_j)
            let row_sums = g.sum_axis(Axis(1));
            let col_sums = g.sum_axis(Axis(0));
            let mut da = g.dot(&right);
            for (mut row, (s, a)) in da
                .axis_iter_mut(Axis(0))
                .zip(row_sums.iter().zip(left.axis_iter(Axis(0))))
            {
                row.scaled_add(-s, &a);
            }
            let mut db = g.t().dot(&left);
            for (mut row, (s, b)) in db
                .axis_iter_mut(Axis(0))
                .zip(col_sums.iter().zip(right.axis_iter(Axis(0))))
            {
                row.scaled_add(-s, &b);
            }
            Ok((da, db))
        }
        CriticKind::Cosine { temperature } => {
            let (ln, lnorm) = normalized(left)?;
            let (rn, rnorm) = normalized(right)?;
            let dln = g.dot(&rn) / temperature;
            let drn = g.t().dot(&ln) / temperature;
            Ok((
                project_back(&ln, &lnorm, dln),
                project_back(&rn, &rnorm, drn),
            ))
        }
    }
}

/// Chain rule through `x ↦ x/‖x‖`: `(g − x̂ (x̂ᵀg)) / ‖x‖` per row.
fn project_back(unit: &Matrix, norms: &Vector, mut grad: Matrix) -> Matrix {
    for ((mut g, u), n) in grad
        .axis_iter_mut(Axis(0))
        .zip(unit.axis_iter(Axis(0)))
        .zip(norms.iter())
    {
        let p = g.dot(&u);
        g.scaled_add(-p, &u);
        g.mapv_inplace(|v| v / n);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn examples() {
        let x = array![1.0, -2.0, 0.5];
        assert_eq!(
            critic_score(CriticKind::L2Half, x.view(), x.view()).unwrap(),
            0.0
        );
        let e1 = array![1.0, 0.0];
        let e2 = array![0.0, 1.0];
        assert_eq!(
            critic_score(CriticKind::Dot, e1.view(), e2.view()).unwrap(),
            0.0
        );
        let v = array![0.3, -4.0];
        let neg = -&v;
        let c = critic_score(CriticKind::cosine(1.0).unwrap(), v.view(), neg.view()).unwrap();
        assert!((c + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors_on_zero_vector() {
        let z = array![0.0, 0.0];
        let v = array![1.0, 0.0];
        assert!(critic_score(CriticKind::cosine(1.0).unwrap(), z.view(), v.view()).is_err());
        assert!(score_matrix(
            CriticKind::cosine(0.5).unwrap(),
            array![[0.0, 0.0]].view(),
            array![[1.0, 0.0]].view()
        )
        .is_err());
    }

    #[test]
    fn invalid_temperature() {
        assert!(CriticKind::cosine(0.0).is_err());
        assert!(CriticKind::cosine(f64::NAN).is_err());
    }

    #[test]
    fn parse_tags() {
        assert_eq!("L2".parse::<CriticKind>().unwrap(), CriticKind::L2Half);
        assert_eq!("dot".parse::<CriticKind>().unwrap(), CriticKind::Dot);
        assert_eq!(
            "cosine".parse::<CriticKind>().unwrap(),
            CriticKind::Cosine { temperature: 1.0 }
        );
        assert!("hinge".parse::<CriticKind>().is_err());
        let c = "cosine:0.25".parse::<CriticKind>().unwrap();
        assert_eq!(c, CriticKind::Cosine { temperature: 0.25 });
        assert_eq!(c.to_string().parse::<CriticKind>().unwrap(), c);
        assert!("cosine:-1".parse::<CriticKind>().is_err());
    }

    #[test]
    fn matrix_matches_pointwise() {
        let a = array![[1.0, 2.0], [-0.5, 0.25], [3.0, -1.0]];
        let b = array![[0.5, -1.0], [2.0, 2.0]];
        for kind in [
            CriticKind::L2Half,
            CriticKind::Dot,
            CriticKind::cosine(0.7).unwrap(),
        ] {
            let m = score_matrix(kind, a.view(), b.view()).unwrap();
            for i in 0..3 {
                for j in 0..2 {
                    let s = critic_score(kind, a.row(i), b.row(j)).unwrap();
                    assert!((m[[i, j]] - s).abs() < 1e-12, "{kind} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn cosine_scores_bounded_by_inverse_temperature() {
        let mut rng = crate::numerics::SeedRng::new(4);
        let a = crate::numerics::standard_normal_matrix(&mut rng, 30, 4);
        let b = crate::numerics::standard_normal_matrix(&mut rng, 30, 4);
        for tau in [0.1, 1.0, 3.0] {
            let m = score_matrix(CriticKind::cosine(tau).unwrap(), a.view(), b.view()).unwrap();
            assert!(m.iter().all(|&v| v.abs() <= 1.0 / tau + 1e-12));
        }
    }
}
