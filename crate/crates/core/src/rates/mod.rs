//! Deterministic rate objects: the truncation order `ν_H`, the nonparametric
//! rate `Γ_H`, minimax and adaptive separation rates, and the adaptation grids.

mod adapt;
mod sobolev;

pub use adapt::{
    adaptive_rate, fixed_point, grid_s, grid_tilde_v, grid_v, min_adaptive_sparsity,
    psi_adapt_sq, FixedPoint,
};
pub use sobolev::{loglog_floor, sobolev_adaptive_rates, SobolevRates};

use crate::error::{Error, Result};
use crate::spectra::EigenProfile;

/// Upper limit for the truncation order search.
pub const MAX_NU: u64 = 1 << 40;

/// One detection problem: dimension `p`, sparsity `s`, sample size `n`
/// (noise variance `1/n`) and adaptation budget `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemDims {
    pub p: u64,
    pub s: u64,
    pub n: f64,
    pub a: f64,
}

impl ProblemDims {
    /// Dimensions with budget `a = 1`.
    pub fn new(p: u64, s: u64, n: f64) -> Result<Self> {
        Self::with_budget(p, s, n, 1.0)
    }

    pub fn with_budget(p: u64, s: u64, n: f64, a: f64) -> Result<Self> {
        if p == 0 || s == 0 || s > p {
            return Err(Error::InvalidDims(format!("need 1 <= s <= p, got p={p}, s={s}")));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidDims(format!("n must be positive, got {n}")));
        }
        if !(a.is_finite() && a >= 1.0) {
            return Err(Error::InvalidDims(format!("budget a must be >= 1, got {a}")));
        }
        Ok(ProblemDims { p, s, n, a })
    }

    /// `log(1 + p a / s²)`.
    pub fn log_term(&self) -> f64 {
        log_term(self.p, self.s, self.a)
    }

    /// True when `log(1 + p a / s²) > n / 2`, where only the trivial rate applies.
    pub fn is_trivial(&self) -> bool {
        self.log_term() > self.n / 2.0
    }

    /// True when `s ≥ sqrt(p a)`.
    pub fn is_dense(&self) -> bool {
        (self.s as f64).powi(2) >= self.p as f64 * self.a
    }
}

pub(crate) fn log_term(p: u64, s: u64, a: f64) -> f64 {
    (p as f64 * a / (s as f64).powi(2)).ln_1p()
}

/// Which branch of the rate (and of the test) is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Trivial,
    SparseBulk,
    SparseTail,
    Dense,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Trivial => "trivial",
            Regime::SparseBulk => "sparse_bulk",
            Regime::SparseTail => "sparse_tail",
            Regime::Dense => "dense",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Constants the paper leaves unspecified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    /// Scale of the threshold `r`.
    pub k2: f64,
    /// Bulk/tail boundary.
    pub k3: f64,
    /// Floor `D` on the number of aggregated coordinates.
    pub d_floor: f64,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning { k2: 1.0, k3: 1.0, d_floor: 8.0 }
    }
}

impl Tuning {
    /// `d = ν ∨ ⌈D⌉`.
    pub fn dimension(&self, nu: u64) -> u64 {
        nu.max(self.d_floor.ceil().max(1.0) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub nu: u64,
    pub gamma: f64,
    /// Squared separation rate, never above `s`.
    pub eps_sq: f64,
    pub regime: Regime,
    /// Set where the matching lower bound is not established.
    pub unverified: bool,
}

/// Smallest `ν ≥ 1` with `μ_ν ≤ sqrt(ν L) / n`.
pub(crate) fn nu_for(profile: &EigenProfile, log_term: f64, n: f64) -> Result<u64> {
    let holds = |nu: u64| profile.eigenvalue(nu) <= (nu as f64 * log_term).sqrt() / n;
    if holds(1) {
        return Ok(1);
    }
    let mut hi = 2u64;
    while !holds(hi) {
        if hi >= MAX_NU {
            return Err(Error::Overflow);
        }
        hi *= 2;
    }
    // holds(lo) is false, holds(hi) is true.
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `Γ = μ_ν ∨ sqrt((ν-1) L) / n` at `ν = ν_H`.
pub(crate) fn gamma_for(profile: &EigenProfile, nu: u64, log_term: f64, n: f64) -> f64 {
    profile.eigenvalue(nu).max(((nu - 1) as f64 * log_term).sqrt() / n)
}

/// The truncation order `ν_H(s, a)`.
///
/// ```
/// use samtest::{EigenProfile, ProblemDims, rates::nu_h};
/// let dims = ProblemDims::new(100, 1, 1000.0).unwrap();
/// assert_eq!(nu_h(&EigenProfile::sobolev(1.0), &dims).unwrap(), 12);
/// ```
pub fn nu_h(profile: &EigenProfile, dims: &ProblemDims) -> Result<u64> {
    nu_for(profile, dims.log_term(), dims.n)
}

/// `Γ_H(s, a) = max_ν min(μ_ν, sqrt(ν L) / n)`, via its closed form.
pub fn gamma_h(profile: &EigenProfile, dims: &ProblemDims) -> Result<f64> {
    let l = dims.log_term();
    let nu = nu_for(profile, l, dims.n)?;
    Ok(gamma_for(profile, nu, l, dims.n))
}

/// Bulk, tail, dense or trivial.
pub fn select_regime(profile: &EigenProfile, dims: &ProblemDims, tuning: &Tuning) -> Result<Regime> {
    if dims.is_trivial() {
        return Ok(Regime::Trivial);
    }
    if dims.is_dense() {
        return Ok(Regime::Dense);
    }
    let d = tuning.dimension(nu_h(profile, dims)?);
    if dims.log_term().sqrt() > tuning.k3 * (d as f64).sqrt() {
        Ok(Regime::SparseTail)
    } else {
        Ok(Regime::SparseBulk)
    }
}

/// Minimax squared separation rate at budget `a = 1`.
///
/// ```
/// use samtest::{EigenProfile, ProblemDims, Regime, Tuning, rates::minimax_rate};
/// let dims = ProblemDims::new(10_000, 200, 10_000.0).unwrap();
/// let report = minimax_rate(&EigenProfile::sobolev(1.0), &dims, &Tuning::default()).unwrap();
/// assert_eq!(report.regime, Regime::Dense);
/// ```
pub fn minimax_rate(profile: &EigenProfile, dims: &ProblemDims, tuning: &Tuning) -> Result<RateReport> {
    if dims.a != 1.0 {
        return Err(Error::InvalidDims("the minimax rate is defined at a = 1".into()));
    }
    let l = dims.log_term();
    let nu = nu_for(profile, l, dims.n)?;
    let gamma = gamma_for(profile, nu, l, dims.n);
    let regime = select_regime(profile, dims, tuning)?;
    let (s, n) = (dims.s as f64, dims.n);
    let eps_sq = match regime {
        Regime::Trivial => s,
        Regime::Dense => (dims.p as f64 * nu as f64).sqrt() / n,
        Regime::SparseBulk | Regime::SparseTail => s / n * l + s / n * (nu as f64 * l).sqrt(),
    };
    Ok(RateReport { nu, gamma, eps_sq: eps_sq.min(s), regime, unverified: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims(p: u64, s: u64, n: f64) -> ProblemDims {
        ProblemDims::new(p, s, n).unwrap()
    }

    fn brute_gamma(profile: &EigenProfile, d: &ProblemDims, upto: u64) -> f64 {
        let l = d.log_term();
        (1..=upto)
            .map(|nu| profile.eigenvalue(nu).min((nu as f64 * l).sqrt() / d.n))
            .fold(0.0, f64::max)
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_h(&EigenProfile::sobolev(1.0), &dims(100, 1, 1000.0)).unwrap(), 12);
        assert_eq!(nu_h(&EigenProfile::finite_rank(5), &dims(10, 1, 100.0)).unwrap(), 6);
        // n below sqrt(L) gives ν = 1.
        assert_eq!(nu_h(&EigenProfile::sobolev(2.0), &dims(100, 1, 2.0)).unwrap(), 1);
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_h(&EigenProfile::sobolev(1.0), &dims(100, 1, 1000.0)).unwrap();
        let want = (1.0f64 / 144.0).max((11.0 * 101f64.ln()).sqrt() / 1000.0);
        assert!((g - want).abs() < 1e-15);
        assert!((g - 0.007125).abs() < 1e-5);

        // p chosen so that log(1 + p/s²) = 1.
        let p = (std::f64::consts::E - 1.0).round() as u64;
        let d = dims(p.max(2), 1, 10.0);
        let g = gamma_h(&EigenProfile::finite_rank(1), &d).unwrap();
        assert!((g - brute_gamma(&EigenProfile::finite_rank(1), &d, 16)).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let d = dims(2, 1, 1e30);
        assert_eq!(nu_h(&EigenProfile::finite_rank(u64::MAX), &d), Err(Error::Overflow));
    }

    #[test]
    fn trivial_regime() {
        let d = dims(1, 1, 1.0);
        let r = minimax_rate(&EigenProfile::sobolev(1.0), &d, &Tuning::default()).unwrap();
        assert_eq!(r.regime, Regime::Trivial);
        assert_eq!(r.eps_sq, 1.0);
    }

    #[test]
    fn dense_example() {
        let profile = EigenProfile::sobolev(1.0);
        let d = dims(10_000, 200, 10_000.0);
        let r = minimax_rate(&profile, &d, &Tuning::default()).unwrap();
        let nu = nu_h(&profile, &d).unwrap();
        assert_eq!(r.regime, Regime::Dense);
        assert_eq!(r.eps_sq, (10_000.0 * nu as f64).sqrt() / 10_000.0);
    }

    #[test]
    fn tail_for_rank_one() {
        let d = ProblemDims::new(1_000_000_000, 1, 1e6).unwrap();
        let t = Tuning { d_floor: 1.0, ..Tuning::default() };
        assert_eq!(select_regime(&EigenProfile::finite_rank(1), &d, &t).unwrap(), Regime::SparseTail);
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(ProblemDims::new(3, 4, 1.0).is_err());
        assert!(ProblemDims::new(3, 0, 1.0).is_err());
        assert!(ProblemDims::new(3, 1, 0.0).is_err());
        assert!(ProblemDims::with_budget(3, 1, 1.0, 0.5).is_err());
    }

    fn any_profile() -> impl Strategy<Value = EigenProfile> {
        prop_oneof![
            (0.25f64..3.0).prop_map(EigenProfile::sobolev),
            (1u64..50).prop_map(EigenProfile::finite_rank),
            ((0.01f64..2.0), (0.3f64..2.0)).prop_map(|(c, g)| EigenProfile::exp_decay(c, g)),
        ]
    }

    proptest! {
        #[test]
        fn crossing_is_exact(profile in any_profile(), p in 1u64..100_000, sf in 0.0f64..1.0,
                             ln_n in 0.0f64..12.0, a in 1.0f64..10.0) {
            let s = ((p as f64 * sf) as u64).clamp(1, p);
            let d = ProblemDims::with_budget(p, s, ln_n.exp(), a).unwrap();
            let l = d.log_term();
            let nu = nu_h(&profile, &d).unwrap();
            prop_assert!(profile.eigenvalue(nu) <= (nu as f64 * l).sqrt() / d.n);
            if nu > 1 {
                prop_assert!(profile.eigenvalue(nu - 1) > ((nu - 1) as f64 * l).sqrt() / d.n);
            }
            let g = gamma_h(&profile, &d).unwrap();
            let brute = brute_gamma(&profile, &d, 4 * nu);
            prop_assert!((g - brute).abs() <= 1e-12 * brute);
            prop_assert!(g >= 1.0 / d.n * l.sqrt().min(d.n));
        }

        #[test]
        fn monotone_in_s_and_a(profile in any_profile(), p in 2u64..10_000, ln_n in 2.0f64..12.0,
                               a in 1.0f64..5.0, da in 0.0f64..5.0) {
            let n = ln_n.exp();
            let nu_at = |s, a| nu_h(&profile, &ProblemDims::with_budget(p, s, n, a).unwrap()).unwrap();
            let g_at = |s, a| gamma_h(&profile, &ProblemDims::with_budget(p, s, n, a).unwrap()).unwrap();
            let s = 1 + p / 3;
            prop_assert!(nu_at(s, a) <= nu_at(s.min(p - 1) + 1, a));
            prop_assert!(nu_at(s, a + da) <= nu_at(s, a));
            prop_assert!(g_at(s, a) <= g_at(s, a + da));
        }
    }
}
