use super::gamma::normal_sf;
use std::f64::consts::PI;

/// Below this `|μ|` the coefficient `c0` is taken from its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Variables of Temme's uniform expansion of `Q(a, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemmeTerms {
    pub a: f64,
    pub x: f64,
    /// `x / a`
    pub lambda: f64,
    /// `λ - 1`
    pub mu: f64,
    /// `sign(μ) sqrt(2(μ - ln(1 + μ)))`
    pub eta: f64,
}

impl TemmeTerms {
    pub fn new(a: f64, x: f64) -> Self {
        let lambda = x / a;
        let mu = lambda - 1.0;
        let eta = (2.0 * (mu - mu.ln_1p())).max(0.0).sqrt().copysign(mu);
        TemmeTerms { a, x, lambda, mu, eta }
    }
}

/// The first coefficient `c0(η) = 1/μ - 1/η`, continuous through `μ = 0`.
pub fn temme_c0(terms: &TemmeTerms) -> f64 {
    let mu = terms.mu;
    if mu.abs() < SERIES_CUTOFF {
        -1.0 / 3.0 + mu / 12.0 - 23.0 * mu * mu / 540.0 + 353.0 * mu.powi(3) / 12_960.0
    } else {
        1.0 / mu - 1.0 / terms.eta
    }
}

/// Order-one approximation with its error envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemmeApprox {
    pub approx: f64,
    /// `exp(-aη²/2) / sqrt(2πa)`
    pub envelope: f64,
    pub terms: TemmeTerms,
}

/// `Q(a, x) ≈ (1 - Φ(η√a)) + exp(-aη²/2)/sqrt(2πa) · c0(η)`.
///
/// ```
/// use samtest::special::{reg_upper_gamma, temme_q_order1};
/// let t = temme_q_order1(50.0, 75.0);
/// let q = reg_upper_gamma(50.0, 75.0).unwrap();
/// assert!((t.approx - q).abs() <= t.envelope);
/// ```
pub fn temme_q_order1(a: f64, x: f64) -> TemmeApprox {
    let terms = TemmeTerms::new(a, x);
    let envelope = (-0.5 * a * terms.eta * terms.eta).exp() / (2.0 * PI * a).sqrt();
    let approx = normal_sf(terms.eta * a.sqrt()) + envelope * temme_c0(&terms);
    TemmeApprox { approx, envelope, terms }
}
