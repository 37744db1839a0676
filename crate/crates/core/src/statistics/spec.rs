use super::{normalize_levels, sparse_from_energies, Energies, Observation};
use crate::error::{Error, Result};
use crate::harness::{CalibrationTable, StatisticId};
use crate::rates::{
    fixed_point, grid_s, loglog_floor, nu_h, sobolev_adaptive_rates, FixedPoint, ProblemDims,
    Regime, Tuning,
};
use crate::special::alpha_threshold;
use crate::spectra::EigenProfile;

/// A fully resolved test: statistic plus rejection threshold.
///
/// Every variant rejects when its statistic is at least the threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum TestSpec {
    /// Reject when `T_r(d) ≥ threshold`. `alpha` caches `α_r(d)`.
    SparseThreshold { d: u64, r: f64, alpha: f64, threshold: f64 },
    /// Reject when `n Σ_j Σ_{k≤ν} X² ≥ threshold`.
    DenseChi2 { nu: u64, threshold: f64 },
    /// Reject when any component rejects.
    AdaptiveMax { components: Vec<Component> },
    /// Reject when the dense statistic at some `ν` in the grid reaches its threshold.
    SobolevDenseAdaptive { grid: Vec<u64>, thresholds: Vec<f64> },
}

/// One `φ_{ν,s}` of the adaptive test.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub nu: u64,
    pub s: u64,
    pub test: TestSpec,
}

impl TestSpec {
    pub fn sparse(d: u64, r: f64, threshold: f64) -> Result<Self> {
        let alpha = alpha_threshold(d, r)?;
        Ok(TestSpec::SparseThreshold { d, r, alpha, threshold })
    }

    pub fn dense(nu: u64, threshold: f64) -> Self {
        TestSpec::DenseChi2 { nu, threshold }
    }

    /// Truncation levels whose energies the test reads, ascending.
    pub fn levels(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect_levels(&mut out);
        normalize_levels(&out)
    }

    fn collect_levels(&self, out: &mut Vec<u64>) {
        match self {
            TestSpec::SparseThreshold { d, .. } => out.push(*d),
            TestSpec::DenseChi2 { nu, .. } => out.push(*nu),
            TestSpec::AdaptiveMax { components } => {
                components.iter().for_each(|c| c.test.collect_levels(out))
            }
            TestSpec::SobolevDenseAdaptive { grid, .. } => out.extend(grid),
        }
    }

    /// Largest row the test reads.
    pub fn max_row(&self) -> u64 {
        self.levels().last().copied().unwrap_or(0)
    }

    /// Number of elementary tests combined.
    pub fn component_count(&self) -> usize {
        match self {
            TestSpec::AdaptiveMax { components } => components.len(),
            TestSpec::SobolevDenseAdaptive { grid, .. } => grid.len(),
            _ => 1,
        }
    }

    /// Statistic of a single-statistic variant.
    pub fn statistic(&self, e: &Energies) -> Result<f64> {
        match self {
            TestSpec::SparseThreshold { d, r, alpha, .. } => {
                Ok(sparse_from_energies(level(e, *d)?, *d as f64 + r * r, *alpha))
            }
            TestSpec::DenseChi2 { nu, .. } => Ok(level(e, *nu)?.iter().sum()),
            _ => Err(Error::DimensionMismatch {
                expected: "a single-statistic test".into(),
                found: "a combined test".into(),
            }),
        }
    }

    /// The decision from precomputed energies.
    pub fn decide_energies(&self, e: &Energies) -> Result<bool> {
        match self {
            TestSpec::SparseThreshold { threshold, .. } | TestSpec::DenseChi2 { threshold, .. } => {
                Ok(self.statistic(e)? >= *threshold)
            }
            TestSpec::AdaptiveMax { components } => {
                for c in components {
                    if c.test.decide_energies(e)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            TestSpec::SobolevDenseAdaptive { grid, thresholds } => {
                for (nu, t) in grid.iter().zip(thresholds) {
                    if level(e, *nu)?.iter().sum::<f64>() >= *t {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

fn level(e: &Energies, d: u64) -> Result<&[f64]> {
    e.at(d).ok_or_else(|| Error::DimensionMismatch {
        expected: format!("energies at level {d}"),
        found: format!("levels {:?}", e.levels()),
    })
}

/// `true` to reject the null.
///
/// ```
/// use samtest::{CoefficientMatrix, statistics::{decide, Observation, TestSpec}};
/// let obs = Observation::new(CoefficientMatrix::zeros(4, 5), 100.0).unwrap();
/// assert!(!decide(&TestSpec::dense(4, 1.0), &obs).unwrap());
/// ```
pub fn decide(spec: &TestSpec, obs: &Observation) -> Result<bool> {
    let e = Energies::from_observation(obs, &spec.levels())?;
    spec.decide_energies(&e)
}

fn sparse_radius(regime: Regime, tuning: &Tuning, d: u64, log_term: f64) -> Result<f64> {
    match regime {
        Regime::SparseBulk => Ok(tuning.k2 * (d as f64 * log_term).powf(0.25)),
        Regime::SparseTail => Ok(tuning.k2 * log_term.sqrt()),
        other => Err(Error::InvalidDims(format!("sparse test requested in the {other} regime"))),
    }
}

/// The `(d, r)` a sparse test uses: `d = ν_H ∨ ⌈D⌉`, and `r = K2 (d L)^{1/4}`
/// in the bulk or `r = K2 sqrt(L)` in the tail.
pub fn sparse_statistic_id(
    profile: &EigenProfile,
    dims: &ProblemDims,
    regime: Regime,
    tuning: &Tuning,
) -> Result<StatisticId> {
    let d = tuning.dimension(nu_h(profile, dims)?);
    let r = sparse_radius(regime, tuning, d, dims.log_term())?;
    Ok(StatisticId::sparse(d, r))
}

/// Sparse test with a calibrated threshold at `level`.
pub fn make_sparse_test(
    profile: &EigenProfile,
    dims: &ProblemDims,
    regime: Regime,
    tuning: &Tuning,
    level: f64,
    table: &CalibrationTable,
) -> Result<TestSpec> {
    let id = sparse_statistic_id(profile, dims, regime, tuning)?;
    let threshold = table.require(&id, dims.p, level)?;
    let (d, r) = id.sparse_parts().expect("sparse id");
    TestSpec::sparse(d, r, threshold)
}

/// The grids and component statistics of the sparsity-adaptive test.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivePlan {
    pub p: u64,
    pub fixed_point: FixedPoint,
    pub grid_s: Vec<u64>,
    /// `(ν, s, statistic)` for every `ν ∈ 𝒱_H`, `s ∈ 𝒮`.
    pub components: Vec<(u64, u64, StatisticId)>,
}

impl AdaptivePlan {
    /// Bonferroni level `η / (2 · #components)` for each component.
    pub fn component_level(&self, eta: f64) -> f64 {
        eta / (2.0 * self.components.len() as f64)
    }

    /// Distinct statistics, for calibration.
    pub fn statistics(&self) -> Vec<StatisticId> {
        let mut ids: Vec<StatisticId> = self.components.iter().map(|c| c.2).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Lays out `φ_{ν,s}`: bulk or tail `T` for `s < sqrt(p𝒜_H)`, the dense
/// statistic otherwise.
pub fn adaptive_plan(profile: &EigenProfile, p: u64, n: f64, tuning: &Tuning) -> Result<AdaptivePlan> {
    let fp = fixed_point(profile, p, n)?;
    let a = fp.a;
    let grid_s = grid_s(p, a);
    let mut components = Vec::with_capacity(fp.v_h.len() * grid_s.len());
    for &nu in &fp.v_h {
        for &s in &grid_s {
            let dims = ProblemDims::with_budget(p, s, n, a)?;
            let id = if dims.is_dense() {
                StatisticId::dense(nu)
            } else {
                let d = tuning.dimension(nu);
                let l = dims.log_term();
                let regime = if l.sqrt() <= tuning.k3 * (d as f64).sqrt() {
                    Regime::SparseBulk
                } else {
                    Regime::SparseTail
                };
                StatisticId::sparse(d, sparse_radius(regime, tuning, d, l)?)
            };
            components.push((nu, s, id));
        }
    }
    Ok(AdaptivePlan { p, fixed_point: fp, grid_s, components })
}

/// Max-test over the plan with each component at the Bonferroni level.
pub fn make_adaptive_test(plan: &AdaptivePlan, eta: f64, table: &CalibrationTable) -> Result<TestSpec> {
    let level = plan.component_level(eta);
    let components = plan
        .components
        .iter()
        .map(|&(nu, s, id)| {
            let threshold = table.require(&id, plan.p, level)?;
            let test = match id.sparse_parts() {
                Some((d, r)) => TestSpec::sparse(d, r, threshold)?,
                None => TestSpec::dense(id.level(), threshold),
            };
            Ok(Component { nu, s, test })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestSpec::AdaptiveMax { components })
}

/// Max over `ν ∈ 𝒱_test` of dense tests with thresholds
/// `νp + K (sqrt(νp loglog(np)) + loglog(np))`.
pub fn make_sobolev_adaptive_test(alpha0: f64, alpha1: f64, p: u64, n: f64, k: f64) -> Result<TestSpec> {
    if !(alpha0 > 0.0 && alpha0 < alpha1) {
        return Err(Error::InvalidDims(format!("need 0 < alpha0 < alpha1, got {alpha0}, {alpha1}")));
    }
    let grid = sobolev_adaptive_rates(alpha0, alpha0, p, 1, n).v_test;
    let ll = loglog_floor(n * p as f64);
    let thresholds = grid
        .iter()
        .map(|&nu| {
            let np = nu as f64 * p as f64;
            np + k * ((np * ll).sqrt() + ll)
        })
        .collect();
    Ok(TestSpec::SobolevDenseAdaptive { grid, thresholds })
}

/// A `K` for which the union bound with Laurent–Massart gives level `η`:
/// with `u = log(|grid| / η)`, `K sqrt(LL) ≥ 2 sqrt(u)` and `K LL ≥ 2u`.
pub fn sobolev_theoretical_k(grid_len: usize, p: u64, n: f64, eta: f64) -> f64 {
    let ll = loglog_floor(n * p as f64);
    let u = (grid_len as f64 / eta).ln().max(0.0);
    (2.0 * (u / ll).sqrt()).max(2.0 * u / ll)
}
