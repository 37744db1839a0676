//! Eigenvalue profiles of the univariate RKHS.
//!
//! A profile is a nonincreasing sequence `μ_1 = 1 ≥ μ_2 ≥ … ≥ 0`. It is the only
//! way the function class enters the rest of the crate.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Largest index probed by [`EigenProfile::validate`].
pub const PROBE_LEN: u64 = 100_000;

/// A kernel spectrum, normalized so that `μ_1 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenProfile {
    /// `μ_k = k^{-2α}`.
    Sobolev { alpha: f64 },
    /// `μ_k = 1` for `k ≤ m`, zero afterwards.
    FiniteRank { m: u64 },
    /// `μ_k = exp(-c2 (k^γ - 1))`.
    ExpDecay { c2: f64, gamma: f64 },
    /// Arbitrary values, padded with zeros past the end.
    Explicit { values: Arc<[f64]> },
}

impl EigenProfile {
    pub fn sobolev(alpha: f64) -> Self {
        EigenProfile::Sobolev { alpha }
    }

    pub fn finite_rank(m: u64) -> Self {
        EigenProfile::FiniteRank { m }
    }

    pub fn exp_decay(c2: f64, gamma: f64) -> Self {
        EigenProfile::ExpDecay { c2, gamma }
    }

    pub fn explicit(values: impl Into<Vec<f64>>) -> Self {
        EigenProfile::Explicit { values: values.into().into() }
    }

    /// The eigenvalue `μ_k`, for `k ≥ 1`.
    ///
    /// ```
    /// use samtest::EigenProfile;
    /// assert_eq!(EigenProfile::sobolev(1.0).eigenvalue(2), 0.25);
    /// assert_eq!(EigenProfile::finite_rank(3).eigenvalue(4), 0.0);
    /// ```
    pub fn eigenvalue(&self, k: u64) -> f64 {
        debug_assert!(k >= 1, "eigenvalues are indexed from 1");
        match self {
            EigenProfile::Sobolev { alpha } => {
                if k == 1 {
                    1.0
                } else {
                    (k as f64).powf(-2.0 * alpha)
                }
            }
            EigenProfile::FiniteRank { m } => {
                if k <= *m {
                    1.0
                } else {
                    0.0
                }
            }
            EigenProfile::ExpDecay { c2, gamma } => {
                if k == 1 {
                    1.0
                } else {
                    (-c2 * ((k as f64).powf(*gamma) - 1.0)).exp()
                }
            }
            EigenProfile::Explicit { values } => {
                values.get((k - 1) as usize).copied().unwrap_or(0.0)
            }
        }
    }

    /// Checks parameters, `μ_1 = 1` and monotonicity on `k ≤ 10^5`.
    ///
    /// The reported index is 1-based and points at the first offending entry.
    ///
    /// ```
    /// use samtest::{EigenProfile, Error};
    /// let bad = EigenProfile::explicit([1.0, 0.5, 0.7]);
    /// assert!(matches!(bad.validate(), Err(Error::InvalidProfile { index: 3, .. })));
    /// ```
    pub fn validate(&self) -> Result<()> {
        let invalid = |index, reason: &str| {
            Err(Error::InvalidProfile { index, reason: reason.to_string() })
        };
        match self {
            EigenProfile::Sobolev { alpha } if !(alpha.is_finite() && *alpha > 0.0) => {
                return invalid(1, "alpha must be positive and finite");
            }
            EigenProfile::FiniteRank { m } if *m == 0 => {
                return invalid(1, "rank must be at least 1");
            }
            EigenProfile::ExpDecay { c2, gamma }
                if !(c2.is_finite() && *c2 > 0.0 && gamma.is_finite() && *gamma > 0.0) =>
            {
                return invalid(1, "c2 and gamma must be positive and finite");
            }
            EigenProfile::Explicit { values } if values.is_empty() => {
                return invalid(1, "explicit profile is empty");
            }
            _ => {}
        }

        let first = self.eigenvalue(1);
        if first != 1.0 {
            return invalid(1, "first eigenvalue must equal 1");
        }
        let probe = match self {
            EigenProfile::Explicit { values } => (values.len() as u64 + 1).min(PROBE_LEN),
            _ => PROBE_LEN,
        };
        let mut prev = first;
        for k in 2..=probe {
            let mu = self.eigenvalue(k);
            if !mu.is_finite() || mu < 0.0 {
                return invalid(k, "eigenvalue must be finite and nonnegative");
            }
            if mu > prev {
                return invalid(k, "eigenvalues must be nonincreasing");
            }
            prev = mu;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formulas() {
        assert_eq!(EigenProfile::sobolev(1.0).eigenvalue(2), 0.25);
        assert_eq!(EigenProfile::finite_rank(3).eigenvalue(4), 0.0);
        assert_eq!(EigenProfile::finite_rank(3).eigenvalue(3), 1.0);
        assert_eq!(EigenProfile::exp_decay(1.0, 1.0).eigenvalue(1), 1.0);
        assert!((EigenProfile::exp_decay(1.0, 1.0).eigenvalue(3) - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(EigenProfile::explicit([1.0, 0.5]).eigenvalue(7), 0.0);
    }

    #[test]
    fn validation_examples() {
        assert!(EigenProfile::sobolev(0.5).validate().is_ok());
        assert!(EigenProfile::finite_rank(4).validate().is_ok());
        assert!(EigenProfile::exp_decay(0.3, 1.5).validate().is_ok());
        match EigenProfile::explicit([1.0, 0.5, 0.7]).validate() {
            Err(Error::InvalidProfile { index, .. }) => assert_eq!(index, 3),
            other => panic!("{other:?}"),
        }
        match EigenProfile::explicit([0.9, 0.5]).validate() {
            Err(Error::InvalidProfile { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(EigenProfile::sobolev(-1.0).validate().is_err());
        assert!(EigenProfile::finite_rank(0).validate().is_err());
        assert!(EigenProfile::explicit(Vec::new()).validate().is_err());
    }

    #[test]
    fn builtin_profiles_are_monotone() {
        let profiles = [
            EigenProfile::sobolev(0.25),
            EigenProfile::sobolev(3.0),
            EigenProfile::finite_rank(17),
            EigenProfile::exp_decay(0.01, 0.5),
            EigenProfile::exp_decay(2.0, 2.0),
        ];
        for p in &profiles {
            for k in 1..10_000 {
                assert!(p.eigenvalue(k + 1) <= p.eigenvalue(k), "{p:?} at {k}");
            }
        }
    }

    proptest! {
        #[test]
        fn sobolev_log_is_linear(alpha in 0.05f64..5.0, k in 2u64..1_000_000) {
            let mu = EigenProfile::sobolev(alpha).eigenvalue(k);
            let want = -2.0 * alpha * (k as f64).ln();
            prop_assert!(((mu.ln() - want) / want).abs() < 1e-12);
        }
    }
}
