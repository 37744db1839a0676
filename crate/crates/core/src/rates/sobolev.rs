/// `log log x`, floored at 1 (also when `log x ≤ e`).
pub fn loglog_floor(x: f64) -> f64 {
    let l = x.ln();
    if l > std::f64::consts::E {
        l.ln()
    } else {
        1.0
    }
}

/// Rates for joint adaptation to sparsity and Sobolev smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevRates {
    /// `s (ns / sqrt(p loglog(np)))^{-4α/(4α+1)}`
    pub tau_dense_sq: f64,
    /// `s log(p loglog n)/n + s (n / sqrt(log(p loglog n)))^{-4α/(4α+1)}`
    pub tau_sparse_sq: f64,
    /// `{1, 2, 4, …, 2^K}` with `2^K ≥ (np / sqrt(p loglog(np)))^{2/(4α0+1)}`.
    pub v_test: Vec<u64>,
}

/// Smoothness-adaptive rates at true smoothness `alpha`, with grid built from
/// the smallest candidate smoothness `alpha0`.
///
/// `log(p loglog n)` is floored at 1 like the iterated logs.
///
/// ```
/// let r = samtest::rates::sobolev_adaptive_rates(1.0, 0.5, 1, 1, 1e6);
/// let spokoiny = (1e6 / samtest::rates::loglog_floor(1e6).sqrt()).powf(-0.8);
/// assert!((r.tau_dense_sq - spokoiny).abs() < 1e-15);
/// ```
pub fn sobolev_adaptive_rates(alpha: f64, alpha0: f64, p: u64, s: u64, n: f64) -> SobolevRates {
    let (pf, sf) = (p as f64, s as f64);
    let expo = -4.0 * alpha / (4.0 * alpha + 1.0);
    let ll_np = loglog_floor(n * pf);
    let tau_dense_sq = sf * (n * sf / (pf * ll_np).sqrt()).powf(expo);
    let lp = (pf * loglog_floor(n)).ln().max(1.0);
    let tau_sparse_sq = sf * lp / n + sf * (n / lp.sqrt()).powf(expo);
    let top = (n * pf / (pf * ll_np).sqrt()).powf(2.0 / (4.0 * alpha0 + 1.0));
    let k = top.log2().ceil().clamp(0.0, 62.0) as u32;
    let v_test = (0..=k).map(|i| 1u64 << i).collect();
    SobolevRates { tau_dense_sq, tau_sparse_sq, v_test }
}
