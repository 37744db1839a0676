use super::gamma::{ln_gamma, ln_reg_upper_gamma, reg_upper_gamma};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Survival function of `χ²_d` at `x`.
///
/// ```
/// let sf = samtest::special::chi2_sf(2, 2.0).unwrap();
/// assert!((sf - (-1.0f64).exp()).abs() < 1e-14);
/// ```
pub fn chi2_sf(d: u64, x: f64) -> Result<f64> {
    reg_upper_gamma(d as f64 / 2.0, x / 2.0)
}

/// `x^a e^{-x} / (Γ(a+1) Q(a, x))` at `a = d/2`, `x = (d + r²)/2`.
///
/// Both conditional moments are rational in this ratio, via
/// `Q(a+1, x) = Q(a, x) + x^a e^{-x} / Γ(a+1)`.
fn tail_ratio(d: u64, r: f64) -> Result<(f64, f64, f64)> {
    let a = d as f64 / 2.0;
    let x = (d as f64 + r * r) / 2.0;
    let ln_q = ln_reg_upper_gamma(a, x)?;
    if !ln_q.is_finite() {
        return Err(Error::Underflow { d, r });
    }
    let ln_r1 = a * x.ln() - x - ln_gamma(a + 1.0) - ln_q;
    let r1 = ln_r1.exp();
    if !r1.is_finite() {
        return Err(Error::Underflow { d, r });
    }
    Ok((a, x, r1))
}

/// `α_r(d) = E[χ²_d | χ²_d ≥ d + r²]`, the null centering of `T_r(d)`.
///
/// ```
/// let alpha = samtest::special::alpha_threshold(2, 0.0).unwrap();
/// assert!((alpha - 4.0).abs() < 1e-12);
/// ```
pub fn alpha_threshold(d: u64, r: f64) -> Result<f64> {
    let (_, _, r1) = tail_ratio(d, r)?;
    Ok(d as f64 * (1.0 + r1))
}

/// `E[(χ²_d)² | χ²_d ≥ d + r²]`.
pub fn truncated_chi2_second_moment(d: u64, r: f64) -> Result<f64> {
    let (a, x, r1) = tail_ratio(d, r)?;
    let df = d as f64;
    Ok(df * (df + 2.0) * (1.0 + r1 + r1 * x / (a + 1.0)))
}

/// `Var(χ²_d | χ²_d ≥ d + r²)`.
pub fn truncated_chi2_var(d: u64, r: f64) -> Result<f64> {
    let (a, x, r1) = tail_ratio(d, r)?;
    let df = d as f64;
    let alpha = df * (1.0 + r1);
    let second = df * (df + 2.0) * (1.0 + r1 + r1 * x / (a + 1.0));
    Ok((second - alpha * alpha).max(0.0))
}

/// Laurent–Massart level `d + 2 sqrt(dx) + 2x`, exceeded with probability at most `e^{-x}`.
pub fn laurent_massart_threshold(d: u64, x: f64) -> f64 {
    let df = d as f64;
    df + 2.0 * (df * x).sqrt() + 2.0 * x
}

/// One draw of `χ²_d(λ)`: the noncentrality sits on the first coordinate.
pub fn sample_noncentral_chi2<R: Rng + ?Sized>(d: u64, lambda: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let mut total = (z + lambda.sqrt()).powi(2);
    for _ in 1..d {
        let z: f64 = rng.sample(StandardNormal);
        total += z * z;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_chi2_two() {
        assert!((alpha_threshold(2, 0.0).unwrap() - 4.0).abs() < 1e-12);
        // E[X²|X≥2] = 8 Q(3,1)/Q(1,1) = 8 * 2.5 = 20.
        assert!((truncated_chi2_second_moment(2, 0.0).unwrap() - 20.0).abs() < 1e-12);
        assert!((truncated_chi2_var(2, 0.0).unwrap() - 4.0).abs() < 1e-11);
    }

    #[test]
    fn chi2_sf_examples() {
        assert_eq!(chi2_sf(7, 0.0).unwrap(), 1.0);
        assert!((chi2_sf(4, 2.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn alpha_exceeds_cutoff() {
        for d in 1..=20u64 {
            for i in 0..20 {
                let r = i as f64 * 0.75;
                let alpha = alpha_threshold(d, r).unwrap();
                assert!(alpha >= d as f64 + r * r, "d={d} r={r}");
                assert!(truncated_chi2_var(d, r).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn deep_tail_is_finite() {
        // Q itself is below 1e-300 here.
        let alpha = alpha_threshold(4, 40.0).unwrap();
        assert!(alpha > 1604.0 && alpha < 1610.0);
    }

    #[test]
    fn laurent_massart() {
        assert_eq!(laurent_massart_threshold(1, 1.0), 5.0);
        for d in [1u64, 3, 10, 50, 200] {
            for x in [0.1, 1.0, 3.0, 10.0] {
                let sf = chi2_sf(d, laurent_massart_threshold(d, x)).unwrap();
                assert!(sf <= (-x).exp());
            }
        }
    }

    #[test]
    fn sampler_is_deterministic_and_centered() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| sample_noncentral_chi2(3, 2.0, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reps = 200_000;
        let (d, lambda) = (4u64, 3.0);
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..reps {
            let v = sample_noncentral_chi2(d, lambda, &mut rng);
            sum += v;
            sq += v * v;
        }
        let mean = sum / reps as f64;
        let var = sq / reps as f64 - mean * mean;
        let want_var = 2.0 * d as f64 + 4.0 * lambda;
        assert!((mean - 7.0).abs() < 4.0 * (want_var / reps as f64).sqrt());
        assert!((var - want_var).abs() < 0.05 * want_var);
    }
}
