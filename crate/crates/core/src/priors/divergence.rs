use super::{Layout, Prior};
use crate::error::{Error, Result};
use crate::harness::replication_rng;
use rayon::prelude::*;

/// Largest `p` for exact overlap enumeration.
pub const MAX_EXACT_P: u64 = 10_000;
/// Largest support size for exact overlap enumeration.
pub const MAX_EXACT_S: u64 = 100;

const PURPOSE_DIVERGENCE: u64 = 0x6469_7665_7267;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceMethod {
    /// Exact hypergeometric enumeration plus the closed-form bound.
    Exact,
    /// Closed-form bound only.
    BoundOnly,
    /// Paired-draw Monte Carlo.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub exact: Option<f64>,
    pub upper_bound: Option<f64>,
    /// Monte Carlo estimate and its standard error, when no closed form applies.
    pub monte_carlo: Option<(f64, f64)>,
    /// `4η²`.
    pub target: f64,
    pub method: DivergenceMethod,
}

impl DivergenceReport {
    /// Best available divergence value.
    pub fn value(&self) -> f64 {
        self.exact
            .or(self.monte_carlo.map(|m| m.0))
            .or(self.upper_bound)
            .unwrap_or(f64::INFINITY)
    }
}

/// `(support size, log g(1))` for priors whose divergence depends only on the
/// overlap `K = |S ∩ S'|` through `g(K) = g(1)^K`.
fn overlap_structure(prior: &Prior) -> Result<(u64, f64)> {
    let n = prior.spec().dims.n;
    match *prior.layout() {
        Layout::Block { support, rows, value, signed } => {
            let x = n * value * value;
            let ln_g1 = if signed { rows as f64 * ln_cosh(x) } else { rows as f64 * x };
            Ok((support, ln_g1))
        }
        Layout::Mixture { .. } => Err(Error::Unsupported(
            "closed-form divergence needs a single-support prior; use the Monte Carlo estimate".into(),
        )),
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `log(e^x - 1)` for `x > 0`.
fn ln_expm1(x: f64) -> f64 {
    if x > 1.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `E[g(K)] - 1` by exact summation over the hypergeometric law of the overlap.
///
/// ```
/// use samtest::{EigenProfile, ProblemDims};
/// use samtest::priors::{chi2_divergence_exact, Prior, PriorSpec, PriorVariant};
/// let spec = PriorSpec {
///     variant: PriorVariant::Trivial { c: 0.5 },
///     dims: ProblemDims::new(20, 1, 4.0).unwrap(),
///     profile: EigenProfile::sobolev(1.0),
/// };
/// let div = chi2_divergence_exact(&Prior::new(spec).unwrap()).unwrap();
/// assert!((div - (1.0f64).exp_m1() / 20.0).abs() < 1e-12);
/// ```
pub fn chi2_divergence_exact(prior: &Prior) -> Result<f64> {
    let (s, ln_g1) = overlap_structure(prior)?;
    let p = prior.spec().dims.p;
    if p > MAX_EXACT_P || s > MAX_EXACT_S {
        return Err(Error::EnumerationTooLarge { p, s });
    }
    if ln_g1 <= 0.0 {
        return Ok(0.0);
    }
    // Unnormalized log-pmf of K from the ratio
    // P(k+1)/P(k) = (s-k)² / ((k+1)(p-2s+k+1)).
    let k_lo = (2 * s).saturating_sub(p);
    let mut ln_w = Vec::with_capacity((s - k_lo + 1) as usize);
    let mut acc = 0.0;
    for k in k_lo..=s {
        if k > k_lo {
            let j = (k - 1) as f64;
            let ratio = (s as f64 - j).powi(2) / ((j + 1.0) * (p as f64 - 2.0 * s as f64 + j + 1.0));
            acc += ratio.ln();
        }
        ln_w.push(acc);
    }
    let ln_norm = log_sum_exp(&ln_w);
    // Σ_k P(k) (g(1)^k - 1): positive terms, no cancellation near zero.
    let terms: Vec<f64> = (k_lo..=s)
        .zip(&ln_w)
        .filter(|(k, _)| *k > 0)
        .map(|(k, w)| w - ln_norm + ln_expm1(k as f64 * ln_g1))
        .collect();
    Ok(log_sum_exp(&terms).exp())
}

/// Hypergeometric MGF bound `(1 - s/p + (s/p) e^λ)^s - 1` with `λ = log g(1)`.
pub fn chi2_divergence_bound(prior: &Prior) -> Result<f64> {
    let (s, ln_g1) = overlap_structure(prior)?;
    let frac = s as f64 / prior.spec().dims.p as f64;
    Ok((s as f64 * (frac * ln_g1.exp_m1()).ln_1p()).exp_m1())
}

/// Paired-draw estimate of `E[exp(n ⟨Θ, Θ'⟩_F)] - 1` with its standard error.
pub fn chi2_divergence_mc(prior: &Prior, reps: u64, seed: u64) -> (f64, f64) {
    let n = prior.spec().dims.n;
    let rows = prior.rows();
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, PURPOSE_DIVERGENCE, rep);
            let a = prior.sample(rows, &mut rng);
            let b = prior.sample(rows, &mut rng);
            let inner: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum();
            (n * inner).exp()
        })
        .collect();
    let r = reps as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
    (mean - 1.0, (var / r).sqrt())
}

/// `1 - sqrt(χ²)/2`, clamped to `[0, 1]`.
pub fn total_risk_lower_bound(divergence: f64) -> f64 {
    (1.0 - divergence.max(0.0).sqrt() / 2.0).clamp(0.0, 1.0)
}

/// Exact value and bound when available, Monte Carlo otherwise.
pub fn divergence_report(prior: &Prior, eta: f64, mc_reps: u64, seed: u64) -> Result<DivergenceReport> {
    let target = 4.0 * eta * eta;
    match overlap_structure(prior) {
        Ok(_) => {
            let upper_bound = Some(chi2_divergence_bound(prior)?);
            match chi2_divergence_exact(prior) {
                Ok(exact) => Ok(DivergenceReport {
                    exact: Some(exact),
                    upper_bound,
                    monte_carlo: None,
                    target,
                    method: DivergenceMethod::Exact,
                }),
                Err(Error::EnumerationTooLarge { .. }) => Ok(DivergenceReport {
                    exact: None,
                    upper_bound,
                    monte_carlo: None,
                    target,
                    method: DivergenceMethod::BoundOnly,
                }),
                Err(e) => Err(e),
            }
        }
        Err(Error::Unsupported(_)) => Ok(DivergenceReport {
            exact: None,
            upper_bound: None,
            monte_carlo: Some(chi2_divergence_mc(prior, mc_reps, seed)),
            target,
            method: DivergenceMethod::MonteCarlo,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{MinimaxCase, PriorSpec, PriorVariant};
    use crate::rates::ProblemDims;
    use crate::spectra::EigenProfile;

    fn prior(variant: PriorVariant, p: u64, s: u64, n: f64) -> Prior {
        Prior::new(PriorSpec {
            variant,
            dims: ProblemDims::new(p, s, n).unwrap(),
            profile: EigenProfile::sobolev(1.0),
        })
        .unwrap()
    }

    #[test]
    fn single_support_is_bernoulli() {
        let pr = prior(PriorVariant::Trivial { c: 0.7 }, 13, 1, 3.0);
        let g = (3.0f64 * 0.49).exp();
        let want = 1.0 - 1.0 / 13.0 + g / 13.0 - 1.0;
        assert!((chi2_divergence_exact(&pr).unwrap() - want).abs() < 1e-12);
        assert!((chi2_divergence_bound(&pr).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bound_dominates_exact() {
        for &(p, s, n, c) in &[(20, 3, 2.0, 0.6), (50, 7, 1.0, 1.0), (1000, 30, 0.5, 0.4)] {
            let pr = prior(PriorVariant::Trivial { c }, p, s, n);
            assert!(chi2_divergence_exact(&pr).unwrap() <= chi2_divergence_bound(&pr).unwrap() + 1e-9);
        }
    }

    #[test]
    fn zero_signal_has_zero_divergence() {
        let pr = prior(PriorVariant::Trivial { c: 0.0 }, 30, 4, 5.0);
        assert_eq!(chi2_divergence_bound(&pr).unwrap(), 0.0);
        assert!(chi2_divergence_exact(&pr).unwrap().abs() < 1e-12);
    }

    #[test]
    fn log_space_survives_large_exponent() {
        let pr = prior(PriorVariant::Trivial { c: 1.0 }, 40, 1, 700.0);
        let v = chi2_divergence_exact(&pr).unwrap();
        assert!(v.is_finite());
        assert!((v.ln() - (700.0 - 40f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn size_gate() {
        let pr = prior(PriorVariant::Trivial { c: 0.1 }, 20_000, 3, 5.0);
        assert!(matches!(chi2_divergence_exact(&pr), Err(Error::EnumerationTooLarge { .. })));
        let r = divergence_report(&pr, 0.3, 10, 0).unwrap();
        assert_eq!(r.method, DivergenceMethod::BoundOnly);
    }

    #[test]
    fn mixture_priors_fall_back_to_mc() {
        let pr = Prior::new(PriorSpec {
            variant: PriorVariant::SobolevDense { c: 0.3, alpha0: 0.5, alpha1: 2.0 },
            dims: ProblemDims::new(64, 16, 1e3).unwrap(),
            profile: EigenProfile::sobolev(1.0),
        })
        .unwrap();
        assert!(matches!(chi2_divergence_exact(&pr), Err(Error::Unsupported(_))));
        let r = divergence_report(&pr, 0.3, 2000, 1).unwrap();
        assert_eq!(r.method, DivergenceMethod::MonteCarlo);
        assert!(r.value().is_finite());
    }

    #[test]
    fn risk_bound_examples() {
        assert_eq!(total_risk_lower_bound(0.0), 1.0);
        assert!((total_risk_lower_bound(0.36) - 0.7).abs() < 1e-15);
        assert_eq!(total_risk_lower_bound(4.0), 0.0);
        assert_eq!(total_risk_lower_bound(9.0), 0.0);
    }

    #[test]
    fn bulk_uses_cosh_per_row() {
        let pr = prior(PriorVariant::Minimax { c: 0.5, case: MinimaxCase::Bulk }, 100, 2, 500.0);
        let Layout::Block { rows, value, .. } = *pr.layout() else { panic!() };
        let (_, ln_g1) = overlap_structure(&pr).unwrap();
        assert!((ln_g1 - rows as f64 * (500.0 * value * value).cosh().ln()).abs() < 1e-12);
    }
}
