//! Monte Carlo: observation generation, null calibration, risk estimation and
//! power curves.
//!
//! Each replication draws from its own ChaCha stream indexed by the replication
//! number, so results do not depend on how work is split across threads.

mod calibrate;

pub use calibrate::{
    calibrate_sobolev_k, calibrate_table, calibrate_threshold, null_samples, quantile_threshold,
    Calibration, CalibrationKey, CalibrationTable, StatisticId,
};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;
use crate::priors::Prior;
use crate::spectra::EigenProfile;
use crate::statistics::{Energies, Observation, TestSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const PURPOSE_NULL: u64 = 0x6e75_6c6c;
const PURPOSE_ALT: u64 = 0x0061_6c74;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for replication `rep` of the experiment `(seed, purpose)`.
pub fn replication_rng(seed: u64, purpose: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose)));
    rng.set_stream(rep);
    rng
}

/// Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// An error rate with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci: (f64, f64),
}

impl Proportion {
    pub fn new(count: u64, trials: u64) -> Self {
        let rate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        Proportion { count, trials, rate, ci: wilson_interval(count, trials, Z95) }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci.1 - self.ci.0) / 2.0
    }

    /// Binomial standard error at the point estimate.
    pub fn std_err(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials.max(1) as f64).sqrt()
    }
}

/// Type I and type II error of one test against one alternative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub type1: f64,
    pub type2: f64,
    pub reps: u64,
    pub type1_ci: (f64, f64),
    pub type2_ci: (f64, f64),
    /// Larger of the two Wilson half-widths.
    pub ci_half_width: f64,
    pub seed: u64,
}

impl RiskEstimate {
    pub fn from_counts(rejected_null: Proportion, accepted_alt: Proportion, seed: u64) -> Self {
        RiskEstimate {
            type1: rejected_null.rate,
            type2: accepted_alt.rate,
            reps: rejected_null.trials,
            type1_ci: rejected_null.ci,
            type2_ci: accepted_alt.ci,
            ci_half_width: rejected_null.half_width().max(accepted_alt.half_width()),
            seed,
        }
    }

    pub fn total(&self) -> f64 {
        self.type1 + self.type2
    }
}

/// `k_max = max(4ν, 64)` over the orders in play.
pub fn default_k_max(nus: impl IntoIterator<Item = u64>) -> usize {
    nus.into_iter().map(|nu| 4 * nu as usize).max().unwrap_or(0).max(64)
}

/// Bound `s μ_{k_max}` on the squared norm lost by truncating at `k_max` rows.
pub fn truncation_bias(profile: &EigenProfile, s: u64, k_max: usize) -> f64 {
    s as f64 * profile.eigenvalue(k_max as u64)
}

/// `X = θ + g / sqrt(n)` with standard normal `g`, drawn column by column.
pub fn generate_observation<R: Rng + ?Sized>(theta: &CoefficientMatrix, n: f64, rng: &mut R) -> Observation {
    let sd = 1.0 / n.sqrt();
    let data = theta
        .as_slice()
        .iter()
        .map(|&t| t + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let m = CoefficientMatrix::from_columns(theta.k_max(), theta.p(), data).expect("same shape");
    Observation::new(m, n).expect("finite data")
}

/// `λ_j(d) = n Σ_{k ≤ d} θ²_{k,j}` at each level, level-major.
pub fn signal_lambdas(theta: &CoefficientMatrix, n: f64, levels: &[u64]) -> Vec<f64> {
    let p = theta.p();
    let mut out = vec![0.0; levels.len() * p];
    for j in 0..p {
        let col = theta.column(j);
        let mut acc = 0.0;
        let mut k = 0usize;
        for (i, &d) in levels.iter().enumerate() {
            while k < (d as usize).min(col.len()) {
                acc += col[k] * col[k];
                k += 1;
            }
            out[i * p + j] = n * acc;
        }
    }
    out
}

/// Samples the energies `E_j(d)` at fixed levels directly.
///
/// Under the model `E_j(d) ~ χ²_d(λ_j(d))`, and increments between consecutive
/// levels are independent noncentral chi-squares, so this has exactly the law
/// of `Energies::from_observation(generate_observation(θ))` at a fraction of
/// the cost.
#[derive(Debug, Clone)]
pub struct EnergySampler {
    levels: Vec<u64>,
    p: usize,
    full: Vec<ChiSquared<f64>>,
    reduced: Vec<Option<ChiSquared<f64>>>,
}

impl EnergySampler {
    pub fn new(levels: &[u64], p: usize) -> Result<Self> {
        let levels = crate::statistics::normalize_levels(levels);
        if levels.is_empty() {
            return Err(Error::DimensionMismatch { expected: "at least one level".into(), found: "none".into() });
        }
        let mut full = Vec::new();
        let mut reduced = Vec::new();
        let mut prev = 0;
        for &d in &levels {
            let k = (d - prev) as f64;
            full.push(ChiSquared::new(k).expect("positive degrees of freedom"));
            reduced.push((k > 1.0).then(|| ChiSquared::new(k - 1.0).expect("positive")));
            prev = d;
        }
        Ok(EnergySampler { levels, p, full, reduced })
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    /// One draw; `lambdas` as produced by [`signal_lambdas`], `None` under the null.
    pub fn sample<R: Rng + ?Sized>(&self, lambdas: Option<&[f64]>, rng: &mut R) -> Energies {
        let (p, nl) = (self.p, self.levels.len());
        let mut values = vec![0.0; nl * p];
        for j in 0..p {
            let mut acc = 0.0;
            let mut prev_lambda = 0.0;
            for i in 0..nl {
                let lambda = lambdas.map_or(0.0, |l| l[i * p + j]);
                let dl = lambda - prev_lambda;
                prev_lambda = lambda;
                acc += if dl > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    let rest = self.reduced[i].as_ref().map_or(0.0, |c| c.sample(rng));
                    (z + dl.sqrt()).powi(2) + rest
                } else {
                    self.full[i].sample(rng)
                };
                values[i * p + j] = acc;
            }
        }
        Energies::from_parts(self.levels.clone(), p, values).expect("consistent layout")
    }
}

/// What the alternative replications draw from.
#[derive(Debug, Clone, Copy)]
pub enum Alternative<'a> {
    Fixed(&'a CoefficientMatrix),
    Prior(&'a Prior),
}

impl Alternative<'_> {
    fn p(&self) -> usize {
        match self {
            Alternative::Fixed(t) => t.p(),
            Alternative::Prior(pr) => pr.p(),
        }
    }
}

fn count_rejections(
    spec: &TestSpec,
    p: usize,
    reps: u64,
    seed: u64,
    purpose: u64,
    lambdas_for: impl Fn(&mut ChaCha8Rng) -> Option<Vec<f64>> + Sync,
) -> Result<u64> {
    let sampler = EnergySampler::new(&spec.levels(), p)?;
    let decisions = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, purpose, rep);
            let lambdas = lambdas_for(&mut rng);
            let e = sampler.sample(lambdas.as_deref(), &mut rng);
            spec.decide_energies(&e)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(decisions.into_iter().filter(|&d| d).count() as u64)
}

/// Null rejection rate of `spec` over `reps` replications.
pub fn estimate_type1(spec: &TestSpec, p: usize, reps: u64, seed: u64) -> Result<Proportion> {
    let rejected = count_rejections(spec, p, reps, seed, PURPOSE_NULL, |_| None)?;
    Ok(Proportion::new(rejected, reps))
}

/// Acceptance rate of `spec` under the alternative.
pub fn estimate_type2(spec: &TestSpec, alt: Alternative<'_>, n: f64, reps: u64, seed: u64) -> Result<Proportion> {
    let levels = spec.levels();
    let p = alt.p();
    let rejected = match alt {
        Alternative::Fixed(theta) => {
            let lambdas = signal_lambdas(theta, n, &levels);
            count_rejections(spec, p, reps, seed, PURPOSE_ALT, |_| Some(lambdas.clone()))?
        }
        Alternative::Prior(prior) => {
            let rows = levels.last().copied().unwrap_or(1) as usize;
            count_rejections(spec, p, reps, seed, PURPOSE_ALT, |rng| {
                let theta = prior.sample(rows, rng);
                Some(signal_lambdas(&theta, n, &levels))
            })?
        }
    };
    Ok(Proportion::new(reps - rejected, reps))
}

/// Type I error under the null and type II error under `alt`, `reps` each.
pub fn estimate_risk(spec: &TestSpec, alt: Alternative<'_>, n: f64, reps: u64, seed: u64) -> Result<RiskEstimate> {
    let type1 = estimate_type1(spec, alt.p(), reps, seed)?;
    let type2 = estimate_type2(spec, alt, n, reps, seed)?;
    Ok(RiskEstimate::from_counts(type1, type2, seed))
}

/// One point of a power curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub scale: f64,
    pub risk: RiskEstimate,
}

/// Risk of a fixed test as the alternative's scale moves along `grid`.
///
/// The null replications are shared across the grid.
pub fn power_curve(
    spec: &TestSpec,
    make_prior: impl Fn(f64) -> Result<Prior>,
    grid: &[f64],
    n: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<PowerPoint>> {
    let first = make_prior(*grid.first().ok_or_else(|| Error::InvalidDims("empty scale grid".into()))?)?;
    let type1 = estimate_type1(spec, first.p(), reps, seed)?;
    grid.iter()
        .map(|&scale| {
            let prior = make_prior(scale)?;
            let type2 = estimate_type2(spec, Alternative::Prior(&prior), n, reps, seed)?;
            Ok(PowerPoint { scale, risk: RiskEstimate::from_counts(type1, type2, seed) })
        })
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / m, ry.iter().sum::<f64>() / m);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
