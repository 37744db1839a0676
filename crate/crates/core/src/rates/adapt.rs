use super::{gamma_for, log_term, nu_for, ProblemDims, RateReport, Regime, Tuning};
use crate::error::Result;
use crate::spectra::EigenProfile;
use std::collections::BTreeSet;

/// Multiplicative step of the scan over the budget `a`.
const A_STEP: f64 = 1.01;
const BISECT_STEPS: usize = 60;
/// Below `(p𝒜)^{1/2 - δ}` the adaptive lower bound is vacuous anyway; between
/// that and `sqrt(p𝒜)` the rate is computed but flagged.
const UNVERIFIED_DELTA: f64 = 0.1;

fn bucket(nu: u64) -> u64 {
    nu.next_power_of_two()
}

/// Dyadic buckets hit by `ν_H(s, a)` for `s ∈ [lo, hi]`.
///
/// `ν_H(·, a)` is nondecreasing in `s`, so an interval whose endpoints share a
/// bucket lies entirely inside it and only crossings need refining.
fn buckets_over(
    profile: &EigenProfile,
    p: u64,
    n: f64,
    a: f64,
    lo: u64,
    hi: u64,
) -> Result<BTreeSet<u64>> {
    let nu_at = |s: u64| nu_for(profile, log_term(p, s, a), n);
    let mut out = BTreeSet::new();
    if lo > hi {
        return Ok(out);
    }
    let mut stack = vec![(lo, bucket(nu_at(lo)?), hi, bucket(nu_at(hi)?))];
    while let Some((l, bl, h, bh)) = stack.pop() {
        out.insert(bl);
        out.insert(bh);
        if bl == bh || h - l <= 1 {
            continue;
        }
        let m = l + (h - l) / 2;
        let bm = bucket(nu_at(m)?);
        stack.push((l, bl, m, bm));
        stack.push((m, bm, h, bh));
    }
    Ok(out)
}

/// `𝒱_a = {2^k : 2^{k-1} < ν_H(s, a) ≤ 2^k for some s ∈ [p]}`, ascending.
///
/// ```
/// use samtest::{EigenProfile, rates::grid_v};
/// // A rank-one space has ν_H = 2 for every s once n is large.
/// assert_eq!(grid_v(&EigenProfile::finite_rank(1), 1000, 1e4, 1.0).unwrap(), vec![2]);
/// ```
pub fn grid_v(profile: &EigenProfile, p: u64, n: f64, a: f64) -> Result<Vec<u64>> {
    Ok(buckets_over(profile, p, n, a, 1, p)?.into_iter().collect())
}

/// The adaptation fixed point `𝒜_H = sup{a ≥ 1 : log(e|𝒱_a|) ≥ a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub a: f64,
    /// The sup lies in `[bracket.0, bracket.1]`; `a` is the left end.
    pub bracket: (f64, f64),
    /// `𝒱_H = 𝒱_{𝒜_H}`.
    pub v_h: Vec<u64>,
}

impl FixedPoint {
    /// `log(e|𝒱_H|)`.
    pub fn log_e_card(&self) -> f64 {
        1.0 + (self.v_h.len() as f64).ln()
    }
}

/// Computes `𝒜_H` and `𝒱_H`.
///
/// The budget is scanned on a 1.01-geometric grid over `[1, log(ep)]`; the last
/// grid point satisfying the defining inequality is then refined by bisection
/// against its right neighbour.
///
/// ```
/// use samtest::{EigenProfile, rates::fixed_point};
/// let fp = fixed_point(&EigenProfile::finite_rank(3), 500, 1e4).unwrap();
/// assert_eq!(fp.a, 1.0);
/// ```
pub fn fixed_point(profile: &EigenProfile, p: u64, n: f64) -> Result<FixedPoint> {
    let upper = 1.0 + (p as f64).ln();
    let holds = |a: f64| -> Result<(bool, Vec<u64>)> {
        let v = grid_v(profile, p, n, a)?;
        Ok((1.0 + (v.len() as f64).ln() >= a, v))
    };

    let (_, v1) = holds(1.0)?;
    let mut best = (1.0, v1);
    let mut next_false: Option<f64> = None;
    let mut a = 1.0;
    while a < upper {
        a = (a * A_STEP).min(upper);
        let (ok, v) = holds(a)?;
        if ok {
            best = (a, v);
            next_false = None;
        } else if next_false.is_none() {
            next_false = Some(a);
        }
    }

    let (mut lo, mut v_lo) = best;
    let Some(mut hi) = next_false else {
        return Ok(FixedPoint { a: lo, bracket: (lo, lo), v_h: v_lo });
    };
    for _ in 0..BISECT_STEPS {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (ok, v) = holds(mid)?;
        if ok {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
        }
    }
    Ok(FixedPoint { a: lo, bracket: (lo, hi), v_h: v_lo })
}

/// Smallest `s` with `s² ≥ p a`, or `None` when it exceeds `p`.
pub fn min_adaptive_sparsity(p: u64, a: f64) -> Option<u64> {
    let target = p as f64 * a;
    let mut s = target.sqrt().ceil().max(1.0) as u64;
    while s > 1 && ((s - 1) as f64).powi(2) >= target {
        s -= 1;
    }
    while (s as f64).powi(2) < target {
        s += 1;
    }
    (s <= p).then_some(s)
}

/// `𝒮 = {1, 2, 4, …, 2^{⌈log2 sqrt(p a)⌉ - 1}} ∪ {p}`, ascending.
///
/// ```
/// assert_eq!(samtest::rates::grid_s(16, 1.0), vec![1, 2, 16]);
/// ```
pub fn grid_s(p: u64, a: f64) -> Vec<u64> {
    let top = (0.5 * (p as f64 * a).log2()).ceil() as i64 - 1;
    let mut out: BTreeSet<u64> = (0..=top.max(-1))
        .filter_map(|k| u32::try_from(k).ok())
        .map(|k| 1u64 << k)
        .filter(|&s| s <= p)
        .collect();
    out.insert(p);
    out.into_iter().collect()
}

/// `Ṽ_H`: the dyadic buckets of `ν_H(s, 𝒜_H)` over `s ≥ sqrt(p𝒜_H)`.
pub fn grid_tilde_v(profile: &EigenProfile, p: u64, n: f64, fp: &FixedPoint) -> Result<Vec<u64>> {
    match min_adaptive_sparsity(p, fp.a) {
        Some(lo) => Ok(buckets_over(profile, p, n, fp.a, lo, p)?.into_iter().collect()),
        None => Ok(Vec::new()),
    }
}

/// Adaptive squared rate `τ²_adapt(p, s, n)`, evaluated at budget `𝒜_H`.
///
/// `dims.a` is ignored. The regime field reports which test branch is in force.
pub fn adaptive_rate(
    profile: &EigenProfile,
    dims: &ProblemDims,
    fp: &FixedPoint,
    tuning: &Tuning,
) -> Result<RateReport> {
    let d = ProblemDims { a: fp.a, ..*dims };
    let l = d.log_term();
    let nu = nu_for(profile, l, d.n)?;
    let gamma = gamma_for(profile, nu, l, d.n);
    let (s, n) = (d.s as f64, d.n);
    let pa = d.p as f64 * fp.a;
    let unverified = s * s < pa && s > pa.powf(0.5 - UNVERIFIED_DELTA);
    let root = s / n * (nu as f64 * l).sqrt();
    let (eps_sq, regime) = if d.is_trivial() {
        (s, Regime::Trivial)
    } else if d.is_dense() {
        (root, Regime::Dense)
    } else {
        let tail = l.sqrt() > tuning.k3 * (tuning.dimension(nu) as f64).sqrt();
        let regime = if tail { Regime::SparseTail } else { Regime::SparseBulk };
        ((s / n * l).max(root), regime)
    };
    Ok(RateReport { nu, gamma, eps_sq: eps_sq.min(s), regime, unverified })
}

/// Lower-bound candidate `ψ²_adapt(p, s, n)` at budget `𝒜_H`.
pub fn psi_adapt_sq(profile: &EigenProfile, p: u64, s: u64, n: f64, a: f64) -> Result<f64> {
    let l = log_term(p, s, a);
    let nu = nu_for(profile, l, n)?;
    let sg = s as f64 * gamma_for(profile, nu, l, n);
    if (s as f64).powi(2) < p as f64 * a {
        Ok((s as f64 / n * l).max(sg))
    } else {
        Ok(sg)
    }
}
