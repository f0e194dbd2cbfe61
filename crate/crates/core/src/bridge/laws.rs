use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::numerics::{ln_sphere_area, vmf_log_norm};

const UNIT_TOL: f64 = 1e-6;

/// Log of `g(x) = E_{φ_B ~ U(S^{p−1})}[exp(φ_Bᵀ(φ_A + φ_C))]` with
/// `x = φ_Aᵀφ_C`, i.e. `g = 1 / (Area(S^{p−1}) · C_p(√(2 + 2x)))`.
pub fn sphere_law_log_ratio(
    dim: usize,
    phi_a: ArrayView1<'_, f64>,
    phi_c: ArrayView1<'_, f64>,
) -> Result<f64> {
    if phi_a.len() != dim || phi_c.len() != dim {
        return Err(Error::Shape(format!(
            "expected dimension {dim}, got {} and {}",
            phi_a.len(),
            phi_c.len()
        )));
    }
    for n in [phi_a.dot(&phi_a).sqrt(), phi_c.dot(&phi_c).sqrt()] {
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!(
                "sphere law needs unit vectors, got norm {n}"
            )));
        }
    }
    let x = phi_a.dot(&phi_c).clamp(-1.0, 1.0);
    let kappa = (2.0 + 2.0 * x).sqrt();
    Ok(-ln_sphere_area(dim) - vmf_log_norm(dim, kappa)?)
}

/// `(γ, δ) = ((c+1)/(4c+2), 2/(c+1))` for representation variance `c`.
pub fn gaussian_law_coefficients(scale: f64) -> Result<(f64, f64)> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!(
            "gaussian scale must be positive, got {scale}"
        )));
    }
    Ok(((scale + 1.0) / (4.0 * scale + 2.0), 2.0 / (scale + 1.0)))
}

/// `−γ(‖φ_A − φ_C‖² + δ φ_Aᵀφ_C)`, the log ratio under `φ_B ~ N(0, c I)`
/// with the additive constant dropped.
pub fn gaussian_law_log_ratio(
    scale: f64,
    phi_a: ArrayView1<'_, f64>,
    phi_c: ArrayView1<'_, f64>,
) -> Result<f64> {
    let (_, delta) = gaussian_law_coefficients(scale)?;
    gaussian_law_log_ratio_with_delta(scale, delta, phi_a, phi_c)
}

/// Same form with an explicit `δ`, for comparing candidate coefficients.
pub fn gaussian_law_log_ratio_with_delta(
    scale: f64,
    delta: f64,
    phi_a: ArrayView1<'_, f64>,
    phi_c: ArrayView1<'_, f64>,
) -> Result<f64> {
    let (gamma, _) = gaussian_law_coefficients(scale)?;
    if phi_a.len() != phi_c.len() {
        return Err(Error::Shape(format!(
            "dims {} and {}",
            phi_a.len(),
            phi_c.len()
        )));
    }
    let d2: f64 = phi_a
        .iter()
        .zip(phi_c.iter())
        .map(|(a, c)| (a - c) * (a - c))
        .sum();
    Ok(-gamma * (d2 + delta * phi_a.dot(&phi_c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn antipodal_gives_zero() {
        let a = array![0.0, 0.0, 1.0];
        let c = array![0.0, 0.0, -1.0];
        assert!(sphere_law_log_ratio(3, a.view(), c.view()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_on_two_sphere() {
        // g = sinh(κ)/κ on S² with κ = √2
        let a = array![1.0, 0.0, 0.0];
        let c = array![0.0, 1.0, 0.0];
        let k = 2f64.sqrt();
        let expect = (k.sinh() / k).ln();
        assert!((sphere_law_log_ratio(3, a.view(), c.view()).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.3136).abs() < 1e-4);
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..100 {
            let x = -1.0 + 2.0 * i as f64 / 99.0;
            let a = array![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            let mut c = ndarray::Array1::zeros(8);
            c[0] = x;
            c[1] = (1.0 - x * x).max(0.0).sqrt();
            let g = sphere_law_log_ratio(8, a.view(), c.view()).unwrap();
            assert!(g >= prev, "x={x}");
            prev = g;
        }
    }

    #[test]
    fn rejects_non_unit() {
        let a = array![1.0, 1.0];
        assert!(sphere_law_log_ratio(2, a.view(), a.view()).is_err());
    }

    #[test]
    fn gaussian_unit_scale() {
        let (g, d) = gaussian_law_coefficients(1.0).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
        let a = array![0.3, -1.2];
        let c = array![2.0, 0.5];
        let d2 = (0.3f64 - 2.0).powi(2) + (-1.2f64 - 0.5).powi(2);
        let expect = -(d2 + a.dot(&c)) / 3.0;
        assert!((gaussian_law_log_ratio(1.0, a.view(), c.view()).unwrap() - expect).abs() < 1e-14);
        let z = array![0.0, 0.0];
        assert_eq!(
            gaussian_law_log_ratio(1.0, z.view(), z.view()).unwrap(),
            0.0
        );
        assert!(gaussian_law_log_ratio(0.0, z.view(), z.view()).is_err());
    }
}
