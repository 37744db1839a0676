//! Energies, the thresholded statistic `T_r(d)`, the dense chi-square statistic
//! and the decision rules built from them.

mod spec;

pub use spec::{
    adaptive_plan, decide, make_adaptive_test, make_sobolev_adaptive_test, make_sparse_test,
    sobolev_theoretical_k, sparse_statistic_id, AdaptivePlan, Component, TestSpec,
};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;
use crate::special::alpha_threshold;

/// Noisy coefficients `X_{k,j} ~ N(θ_{k,j}, 1/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    data: CoefficientMatrix,
    n: f64,
}

impl Observation {
    pub fn new(data: CoefficientMatrix, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidDims(format!("n must be positive, got {n}")));
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDims("observation has non-finite entries".into()));
        }
        Ok(Observation { data, n })
    }

    pub fn data(&self) -> &CoefficientMatrix {
        &self.data
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.data.k_max()
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    fn check_rows(&self, d: u64) -> Result<()> {
        if d == 0 || d as usize > self.k_max() {
            return Err(Error::DimensionMismatch {
                expected: format!("1 <= d <= k_max = {}", self.k_max()),
                found: format!("d = {d}"),
            });
        }
        Ok(())
    }
}

/// `E_j(d) = n Σ_{k ≤ d} X²_{k,j}` for zero-based column `j`.
///
/// ```
/// use samtest::{CoefficientMatrix, statistics::{energy, Observation}};
/// let mut x = CoefficientMatrix::zeros(2, 1);
/// x.set(0, 0, 2.0);
/// let obs = Observation::new(x, 1.0).unwrap();
/// assert_eq!(energy(&obs, 0, 1).unwrap(), 4.0);
/// ```
pub fn energy(obs: &Observation, j: usize, d: u64) -> Result<f64> {
    obs.check_rows(d)?;
    if j >= obs.p() {
        return Err(Error::DimensionMismatch {
            expected: format!("column < {}", obs.p()),
            found: format!("column {j}"),
        });
    }
    Ok(column_energy(obs.data.column(j), d as usize, obs.n))
}

fn column_energy(column: &[f64], d: usize, n: f64) -> f64 {
    n * column[..d].iter().map(|v| v * v).sum::<f64>()
}

/// `T_r(d) = Σ_j (E_j(d) - α_r(d)) 1{E_j(d) ≥ d + r²}`, in one pass over the columns.
pub fn t_statistic(obs: &Observation, d: u64, r: f64) -> Result<f64> {
    obs.check_rows(d)?;
    let alpha = alpha_threshold(d, r)?;
    let cut = d as f64 + r * r;
    let mut total = 0.0;
    for j in 0..obs.p() {
        let e = column_energy(obs.data.column(j), d as usize, obs.n);
        if e >= cut {
            total += e - alpha;
        }
    }
    Ok(total)
}

/// `n Σ_j Σ_{k ≤ ν} X²_{k,j}`.
pub fn dense_statistic(obs: &Observation, nu: u64) -> Result<f64> {
    obs.check_rows(nu)?;
    Ok((0..obs.p()).map(|j| column_energy(obs.data.column(j), nu as usize, obs.n)).sum())
}

/// Per-column energies at a few truncation levels.
///
/// Every statistic in this crate is a function of these numbers, so the
/// Monte Carlo harness can sample them directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Energies {
    levels: Vec<u64>,
    p: usize,
    /// Level-major: `values[i * p + j]` is `E_j(levels[i])`.
    values: Vec<f64>,
}

impl Energies {
    /// `levels` must be strictly increasing and `values` level-major.
    pub fn from_parts(levels: Vec<u64>, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != levels.len() * p || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DimensionMismatch {
                expected: "strictly increasing levels with levels * p values".into(),
                found: format!("{} levels, {} values", levels.len(), values.len()),
            });
        }
        Ok(Energies { levels, p, values })
    }

    pub fn from_observation(obs: &Observation, levels: &[u64]) -> Result<Self> {
        let levels = normalize_levels(levels);
        if let Some(&top) = levels.last() {
            obs.check_rows(top)?;
        }
        let p = obs.p();
        let mut values = vec![0.0; levels.len() * p];
        for j in 0..p {
            let col = obs.data.column(j);
            let mut acc = 0.0;
            let mut k = 0usize;
            for (i, &d) in levels.iter().enumerate() {
                while k < d as usize {
                    acc += col[k] * col[k];
                    k += 1;
                }
                values[i * p + j] = obs.n * acc;
            }
        }
        Ok(Energies { levels, p, values })
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `E_·(d)` across all columns, if `d` is one of the stored levels.
    pub fn at(&self, d: u64) -> Option<&[f64]> {
        let i = self.levels.binary_search(&d).ok()?;
        Some(&self.values[i * self.p..(i + 1) * self.p])
    }
}

/// Sorted, deduplicated, nonzero.
pub(crate) fn normalize_levels(levels: &[u64]) -> Vec<u64> {
    let mut v: Vec<u64> = levels.iter().copied().filter(|&d| d > 0).collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub(crate) fn sparse_from_energies(e: &[f64], cut: f64, alpha: f64) -> f64 {
    let mut total = 0.0;
    for &x in e {
        if x >= cut {
            total += x - alpha;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_obs(seed: u64, k: usize, p: usize, n: f64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..k * p).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.4).collect();
        Observation::new(CoefficientMatrix::from_columns(k, p, data).unwrap(), n).unwrap()
    }

    #[test]
    fn zero_data() {
        let obs = Observation::new(CoefficientMatrix::zeros(4, 3), 10.0).unwrap();
        assert_eq!(energy(&obs, 2, 4).unwrap(), 0.0);
        assert_eq!(t_statistic(&obs, 2, 1.0).unwrap(), 0.0);
        assert_eq!(dense_statistic(&obs, 3).unwrap(), 0.0);
    }

    #[test]
    fn t_statistic_example() {
        // E_1 = 5 with d = 2, r = 0 gives 5 - α_0(2) = 1.
        let mut x = CoefficientMatrix::zeros(2, 1);
        x.set(0, 0, 2.0);
        x.set(1, 0, 1.0);
        let obs = Observation::new(x, 1.0).unwrap();
        assert!((t_statistic(&obs, 2, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_checks() {
        let obs = Observation::new(CoefficientMatrix::zeros(4, 3), 1.0).unwrap();
        assert!(matches!(energy(&obs, 0, 5), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(energy(&obs, 3, 1), Err(Error::DimensionMismatch { .. })));
        assert!(t_statistic(&obs, 0, 1.0).is_err());
        assert!(Observation::new(CoefficientMatrix::zeros(1, 1), 0.0).is_err());
    }

    #[test]
    fn streaming_equals_two_pass() {
        for seed in 0..100 {
            let obs = random_obs(seed, 12, 30, 7.0);
            let (d, r) = (1 + seed % 12, 0.3 * (seed % 5) as f64);
            let streamed = t_statistic(&obs, d, r).unwrap();
            let energies = Energies::from_observation(&obs, &[d, 12]).unwrap();
            let alpha = alpha_threshold(d, r).unwrap();
            let two_pass = sparse_from_energies(energies.at(d).unwrap(), d as f64 + r * r, alpha);
            assert_eq!(streamed.to_bits(), two_pass.to_bits());
            let dense: f64 = energies.at(12).unwrap().iter().sum();
            assert_eq!(dense.to_bits(), dense_statistic(&obs, 12).unwrap().to_bits());
        }
    }

    #[test]
    fn energies_layout() {
        let obs = random_obs(3, 6, 4, 2.0);
        let e = Energies::from_observation(&obs, &[5, 2, 2, 0]).unwrap();
        assert_eq!(e.levels(), &[2, 5]);
        for j in 0..4 {
            assert!((e.at(2).unwrap()[j] - energy(&obs, j, 2).unwrap()).abs() < 1e-12);
            assert!((e.at(5).unwrap()[j] - energy(&obs, j, 5).unwrap()).abs() < 1e-12);
        }
        assert!(e.at(3).is_none());
        assert!(Energies::from_observation(&obs, &[7]).is_err());
        assert!(Energies::from_parts(vec![2, 1], 1, vec![0.0, 0.0]).is_err());
    }
}
