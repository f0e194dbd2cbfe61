use crate::error::{Error, Result};

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

fn check_args(order: f64, x: f64) -> Result<()> {
    if !order.is_finite() || order < 0.0 {
        return Err(Error::Domain(format!(
            "bessel order must be finite and >= 0, got {order}"
        )));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel argument must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

/// `Σ_k (x²/4)^k / (k! (ν+1)_k)`: the power series of `I_ν` with the
/// leading factor `(x/2)^ν / Γ(ν+1)` stripped. All terms are positive.
fn reduced_series(order: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order));
        sum += term;
        if term < 1e-17 * sum && k > 0.5 * x {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    sum
}

/// `I_ν(x)` by its power series. Accurate everywhere the result is
/// representable, but the number of terms grows with `x`.
pub fn bessel_i_series(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    if x == 0.0 {
        return Ok(if order == 0.0 { 1.0 } else { 0.0 });
    }
    let lead = order * (0.5 * x).ln() - ln_gamma(order + 1.0);
    Ok((lead + reduced_series(order, x).ln()).exp())
}

/// `ln I_ν(x)` by Miller's backward recurrence, normalized with the
/// Gegenbauer sum `Σ_k c_k I_{μ+k}(x) = e^x (x/2)^μ / Γ(μ)` (`μ` the
/// fractional part of `ν`; the integer case uses `I_0 + 2 Σ I_k = e^x`).
fn ln_bessel_i_miller(order: f64, x: f64) -> f64 {
    let whole = order.floor();
    let frac = order - whole;
    let n = whole as usize;
    let top = n + (100.0 * x).sqrt().ceil() as usize + 40;

    let weights: Vec<f64> = if frac == 0.0 {
        (0..=top).map(|k| if k == 0 { 1.0 } else { 2.0 }).collect()
    } else {
        let mut ratio = 1.0;
        (0..=top)
            .map(|k| {
                if k > 0 {
                    let kf = k as f64;
                    ratio *= (kf - 1.0 + 2.0 * frac) / kf;
                }
                (k as f64 + frac) * ratio
            })
            .collect()
    };

    // values at orders frac + k, walking k downward
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut sum = weights[top] * current;
    let mut target = if top == n { current } else { 0.0 };
    for k in (1..=top).rev() {
        let below = 2.0 * (frac + k as f64) / x * current + above;
        above = current;
        current = below;
        sum += weights[k - 1] * current;
        if k - 1 == n {
            target = current;
        }
        // target and sum share the scale, so it cancels in the ratio
        if current > 1e200 {
            above /= 1e200;
            current /= 1e200;
            sum /= 1e200;
            target /= 1e200;
        }
    }
    let ln_norm = if frac == 0.0 {
        x
    } else {
        x + frac * (0.5 * x).ln() - ln_gamma(frac)
    };
    target.ln() - sum.ln() + ln_norm
}

/// `I_ν(x)` via Miller's backward recurrence.
pub fn bessel_i_miller(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    if x == 0.0 {
        return Ok(if order == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(ln_bessel_i_miller(order, x).exp())
}

const SERIES_LIMIT: f64 = 20.0;

/// Modified Bessel function of the first kind, `I_ν(x)`, for `ν, x >= 0`.
///
/// Uses the power series below `x = 20` and Miller's backward recurrence
/// above it.
pub fn bessel_i(order: f64, x: f64) -> Result<f64> {
    if x < SERIES_LIMIT {
        bessel_i_series(order, x)
    } else {
        bessel_i_miller(order, x)
    }
}

/// `ln I_ν(x)`; returns `-inf` for `x = 0, ν > 0`.
pub fn ln_bessel_i(order: f64, x: f64) -> Result<f64> {
    check_args(order, x)?;
    if x == 0.0 {
        return Ok(if order == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x < SERIES_LIMIT {
        Ok(order * (0.5 * x).ln() - ln_gamma(order + 1.0) + reduced_series(order, x).ln())
    } else {
        Ok(ln_bessel_i_miller(order, x))
    }
}

/// `ln Area(S^{p-1})` for the unit sphere in `R^p`.
pub fn ln_sphere_area(dim: usize) -> f64 {
    let p = dim as f64;
    std::f64::consts::LN_2 + 0.5 * p * std::f64::consts::PI.ln() - ln_gamma(0.5 * p)
}

/// `ln C_p(κ)`, the log normalizer of the von Mises-Fisher density
/// `C_p(κ) exp(κ μᵀx)` on `S^{p-1}`,
/// `C_p(κ) = κ^{p/2-1} / ((2π)^{p/2} I_{p/2-1}(κ))`.
///
/// Continuous at `κ = 0`, where it equals `-ln Area(S^{p-1})`.
pub fn vmf_log_norm(dim: usize, kappa: f64) -> Result<f64> {
    if dim < 2 {
        return Err(Error::Domain(format!(
            "vMF dimension must be >= 2, got {dim}"
        )));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Domain(format!(
            "vMF concentration must be finite and >= 0, got {kappa}"
        )));
    }
    let p = dim as f64;
    let order = 0.5 * p - 1.0;
    let ln_two_pi = (2.0 * std::f64::consts::PI).ln();
    if kappa < SERIES_LIMIT {
        // the κ^ν factors cancel against the series prefactor
        Ok(
            order * std::f64::consts::LN_2 - 0.5 * p * ln_two_pi + ln_gamma(order + 1.0)
                - reduced_series(order, kappa).ln(),
        )
    } else {
        Ok(order * kappa.ln() - 0.5 * p * ln_two_pi - ln_bessel_i_miller(order, kappa))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Straight power series `Σ (x²/4)^k / (k!)²` with explicit factorials.
    fn i0_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0f64;
        for k in 0..60 {
            if k > 0 {
                fact *= k as f64;
            }
            sum += (x * x / 4.0).powi(k) / (fact * fact);
        }
        sum
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn i0_at_one() {
        let oracle = i0_oracle(1.0);
        assert!((oracle - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!(rel(bessel_i(0.0, 1.0).unwrap(), oracle) < 1e-14);
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1.5, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_order_closed_forms() {
        for &x in &[0.3, 1.0, 5.0, 19.0, 20.0, 33.0, 50.0] {
            let half = (2.0 / (PI * x)).sqrt() * x.sinh();
            assert!(rel(bessel_i(0.5, x).unwrap(), half) < 1e-12, "x={x}");
            let three_half = (2.0 / (PI * x)).sqrt() * (x.cosh() - x.sinh() / x);
            assert!(rel(bessel_i(1.5, x).unwrap(), three_half) < 1e-11, "x={x}");
        }
        assert!((bessel_i(0.5, 1.0).unwrap() - 0.937_674_888_245_488).abs() < 1e-12);
    }

    #[test]
    fn miller_agrees_with_series_in_overlap() {
        for &order in &[0.0, 0.5, 1.0, 2.5, 3.0, 7.5, 12.0, 20.0] {
            for &x in &[1.0, 8.0, 20.0, 27.5, 40.0, 50.0] {
                let s = bessel_i_series(order, x).unwrap();
                let m = bessel_i_miller(order, x).unwrap();
                assert!(
                    rel(m, s) < 1e-10,
                    "order={order} x={x} series={s} miller={m}"
                );
            }
        }
    }

    #[test]
    fn recurrence_relation() {
        for &order in &[1.0, 1.5, 2.0, 3.5, 10.0, 19.0] {
            for &x in &[0.5, 3.0, 12.0, 25.0, 45.0] {
                let lhs = bessel_i(order - 1.0, x).unwrap() - bessel_i(order + 1.0, x).unwrap();
                let rhs = 2.0 * order / x * bessel_i(order, x).unwrap();
                assert!(rel(lhs, rhs) < 1e-8, "order={order} x={x}");
            }
        }
    }

    #[test]
    fn log_bessel_matches_direct() {
        for &(order, x) in &[(0.0, 0.1), (2.5, 3.0), (3.0, 30.0), (0.5, 49.0)] {
            let direct = bessel_i(order, x).unwrap().ln();
            assert!((ln_bessel_i(order, x).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(bessel_i(0.0, -1.0).is_err());
        assert!(bessel_i(-0.5, 1.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((ln_sphere_area(2) - (2.0 * PI).ln()).abs() < 1e-14);
        assert!((ln_sphere_area(3) - (4.0 * PI).ln()).abs() < 1e-14);
        // S^3 has area 2π²
        assert!((ln_sphere_area(4) - (2.0 * PI * PI).ln()).abs() < 1e-13);
    }

    #[test]
    fn vmf_norm_small_kappa_limits() {
        assert!((vmf_log_norm(2, 0.0).unwrap() - (1.0 / (2.0 * PI)).ln()).abs() < 1e-14);
        assert!((vmf_log_norm(3, 0.0).unwrap() + (4.0 * PI).ln()).abs() < 1e-14);
        assert!((vmf_log_norm(3, 1e-12).unwrap() + (4.0 * PI).ln()).abs() < 1e-12);
        for p in 2..12 {
            assert!((vmf_log_norm(p, 0.0).unwrap() + ln_sphere_area(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn vmf_norm_three_dims_closed_form() {
        // C_3(κ) = κ / (4π sinh κ)
        for &k in &[1.0, 2.0, 19.5, 20.0, 35.0] {
            let expected = (k / (4.0 * PI * f64::sinh(k))).ln();
            assert!(
                (vmf_log_norm(3, k).unwrap() - expected).abs() < 1e-11,
                "κ={k}"
            );
        }
        assert!((vmf_log_norm(3, 1.0).unwrap() + (4.0 * PI * 1.0f64.sinh()).ln()).abs() < 1e-13);
    }

    #[test]
    fn vmf_norm_matches_bessel_definition() {
        for &p in &[2usize, 5, 8, 16] {
            for &k in &[0.5, 2.0, 10.0, 30.0] {
                let nu = p as f64 / 2.0 - 1.0;
                let direct = nu * f64::ln(k)
                    - (p as f64 / 2.0) * (2.0 * PI).ln()
                    - bessel_i(nu, k).unwrap().ln();
                assert!(
                    (vmf_log_norm(p, k).unwrap() - direct).abs() < 1e-10,
                    "p={p} κ={k}"
                );
            }
        }
    }

    #[test]
    fn vmf_rejects_low_dimension() {
        assert!(vmf_log_norm(1, 1.0).is_err());
        assert!(vmf_log_norm(3, -1.0).is_err());
    }
}
