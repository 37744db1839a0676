use super::{replication_rng, EnergySampler};
use crate::error::{Error, Result};
use crate::statistics::{sparse_from_energies, TestSpec};
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use std::collections::BTreeMap;

const PURPOSE_CALIBRATE: u64 = 0x0063_616c_6962;
const PURPOSE_SOBOLEV: u64 = 0x736f_626f;

/// Which null statistic a threshold belongs to. The null law depends only on
/// this and `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatisticId {
    /// `T_r(d)`; `r` is stored by bit pattern so ids can key maps.
    Sparse { d: u64, r_bits: u64 },
    /// `n Σ_j Σ_{k≤ν} X²`.
    Dense { nu: u64 },
}

impl StatisticId {
    pub fn sparse(d: u64, r: f64) -> Self {
        StatisticId::Sparse { d, r_bits: r.to_bits() }
    }

    pub fn dense(nu: u64) -> Self {
        StatisticId::Dense { nu }
    }

    /// Truncation level read by the statistic.
    pub fn level(&self) -> u64 {
        match *self {
            StatisticId::Sparse { d, .. } => d,
            StatisticId::Dense { nu } => nu,
        }
    }

    pub fn sparse_parts(&self) -> Option<(u64, f64)> {
        match *self {
            StatisticId::Sparse { d, r_bits } => Some((d, f64::from_bits(r_bits))),
            StatisticId::Dense { .. } => None,
        }
    }

    /// The single-statistic test at `threshold`.
    pub fn test(&self, threshold: f64) -> Result<TestSpec> {
        match self.sparse_parts() {
            Some((d, r)) => TestSpec::sparse(d, r, threshold),
            None => Ok(TestSpec::dense(self.level(), threshold)),
        }
    }
}

impl std::fmt::Display for StatisticId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sparse_parts() {
            Some((d, r)) => write!(f, "sparse(d={d}, r={r})"),
            None => write!(f, "dense(nu={})", self.level()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CalibrationKey {
    pub stat: StatisticId,
    pub p: u64,
    level_bits: u64,
}

impl CalibrationKey {
    pub fn new(stat: StatisticId, p: u64, level: f64) -> Self {
        CalibrationKey { stat, p, level_bits: level.to_bits() }
    }

    pub fn level(&self) -> f64 {
        f64::from_bits(self.level_bits)
    }
}

/// One calibrated threshold and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub key: CalibrationKey,
    pub threshold: f64,
    pub reps: u64,
    pub seed: u64,
}

/// Thresholds keyed by statistic, dimension and level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationTable {
    entries: BTreeMap<CalibrationKey, Calibration>,
}

impl CalibrationTable {
    pub fn insert(&mut self, c: Calibration) {
        self.entries.insert(c.key, c);
    }

    pub fn extend(&mut self, other: CalibrationTable) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, stat: &StatisticId, p: u64, level: f64) -> Option<f64> {
        self.entries.get(&CalibrationKey::new(*stat, p, level)).map(|c| c.threshold)
    }

    pub fn require(&self, stat: &StatisticId, p: u64, level: f64) -> Result<f64> {
        self.get(stat, p, level)
            .ok_or_else(|| Error::MissingCalibration(format!("{stat} at p={p}, level={level}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Calibration> {
        self.entries.values()
    }
}

/// Smallest value strictly above the `⌈(1 - level) reps⌉`-th order statistic.
///
/// Tests reject on `stat ≥ threshold`; the sparse statistic has an atom at 0,
/// so using the order statistic itself would reject the whole atom.
pub fn quantile_threshold(sorted: &[f64], level: f64) -> f64 {
    let reps = sorted.len();
    let k = ((1.0 - level) * reps as f64 - 1e-9).ceil().clamp(1.0, reps as f64) as usize;
    sorted[k - 1].next_up()
}

fn check_reps(reps: u64, level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidDims(format!("level must lie in (0, 1), got {level}")));
    }
    let needed = (10.0 / level).ceil() as u64;
    if reps < needed {
        return Err(Error::InsufficientReps { reps, needed });
    }
    Ok(())
}

/// Joint null draws of several statistics; one ascending sample per statistic.
pub fn null_samples(stats: &[StatisticId], p: u64, reps: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let levels: Vec<u64> = stats.iter().map(|s| s.level()).collect();
    let sampler = EnergySampler::new(&levels, p as usize)?;
    let evals: Vec<(u64, f64, f64)> = stats
        .iter()
        .map(|s| match s.sparse_parts() {
            Some((d, r)) => Ok((d, d as f64 + r * r, crate::special::alpha_threshold(d, r)?)),
            None => Ok((s.level(), f64::NAN, f64::NAN)),
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, PURPOSE_CALIBRATE, rep);
            let e = sampler.sample(None, &mut rng);
            evals
                .iter()
                .map(|&(d, cut, alpha)| {
                    let col = e.at(d).expect("sampled level");
                    if cut.is_nan() {
                        col.iter().sum()
                    } else {
                        sparse_from_energies(col, cut, alpha)
                    }
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<f64>> = (0..stats.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    for v in &mut out {
        v.sort_by(f64::total_cmp);
    }
    Ok(out)
}

/// Calibrates one statistic at one level.
///
/// ```
/// use samtest::harness::{calibrate_threshold, StatisticId};
/// let c = calibrate_threshold(StatisticId::dense(4), 50, 0.5, 2000, 1).unwrap();
/// assert!((c.threshold - 199.33).abs() < 3.0);
/// ```
pub fn calibrate_threshold(stat: StatisticId, p: u64, level: f64, reps: u64, seed: u64) -> Result<Calibration> {
    check_reps(reps, level)?;
    let sample = &null_samples(&[stat], p, reps, seed)?[0];
    Ok(Calibration {
        key: CalibrationKey::new(stat, p, level),
        threshold: quantile_threshold(sample, level),
        reps,
        seed,
    })
}

/// Calibrates every statistic at every level from one shared set of null draws.
pub fn calibrate_table(
    stats: &[StatisticId],
    p: u64,
    levels: &[f64],
    reps: u64,
    seed: u64,
) -> Result<CalibrationTable> {
    for &level in levels {
        check_reps(reps, level)?;
    }
    let samples = null_samples(stats, p, reps, seed)?;
    let mut table = CalibrationTable::default();
    for (stat, sample) in stats.iter().zip(&samples) {
        for &level in levels {
            table.insert(Calibration {
                key: CalibrationKey::new(*stat, p, level),
                threshold: quantile_threshold(sample, level),
                reps,
                seed,
            });
        }
    }
    Ok(table)
}

/// Calibrates the constant `K` of the smoothness-adaptive test so the max over
/// the grid has null level `level`.
pub fn calibrate_sobolev_k(grid: &[u64], p: u64, n: f64, level: f64, reps: u64, seed: u64) -> Result<f64> {
    check_reps(reps, level)?;
    let grid = crate::statistics::normalize_levels(grid);
    let ll = crate::rates::loglog_floor(n * p as f64);
    let pf = p as f64;
    let mut increments = Vec::with_capacity(grid.len());
    let mut prev = 0;
    for &nu in &grid {
        increments.push(ChiSquared::new((nu - prev) as f64 * pf).expect("positive"));
        prev = nu;
    }
    let mut scores: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, PURPOSE_SOBOLEV, rep);
            let mut total = 0.0;
            let mut best = f64::NEG_INFINITY;
            for (nu, inc) in grid.iter().zip(&increments) {
                total += inc.sample(&mut rng);
                let np = *nu as f64 * pf;
                best = best.max((total - np) / ((np * ll).sqrt() + ll));
            }
            best
        })
        .collect();
    scores.sort_by(f64::total_cmp);
    Ok(quantile_threshold(&scores, level))
}
