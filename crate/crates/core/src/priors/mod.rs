//! Priors from the lower-bound constructions and their chi-square divergence
//! against the null.

mod divergence;

pub use divergence::{
    chi2_divergence_bound, chi2_divergence_exact, chi2_divergence_mc, divergence_report,
    total_risk_lower_bound, DivergenceMethod, DivergenceReport, MAX_EXACT_P, MAX_EXACT_S,
};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;
use crate::rates::{
    fixed_point, gamma_h, grid_tilde_v, log_term, loglog_floor, min_adaptive_sparsity, nu_for,
    nu_h, psi_adapt_sq, ProblemDims,
};
use crate::spectra::EigenProfile;
use rand::seq::index::sample as sample_indices;
use rand::Rng;

/// Slack allowed in the ellipsoid check.
const ELLIPSOID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimaxCase {
    /// Rows `k < ν_H` at level `ρ = sqrt(Γ_H / ν_H)`.
    Bulk,
    /// First row only, at level `ρ = sqrt(log(1 + p/s²) / n)`.
    Spike,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorVariant {
    /// `θ_{1,j} = c` on a uniform support.
    Trivial { c: f64 },
    /// Rademacher `±cρ` on a uniform support.
    Minimax { c: f64, case: MinimaxCase },
    /// The bulk prior's per-column energy `c² Γ_H (ν_H - 1)/ν_H`, spread evenly
    /// over the largest number of leading rows `m ≤ ν_H - 1` that keeps each
    /// column inside the ellipsoid. Lets the signal scale past `c = 1`.
    MinimaxCompressed { c: f64 },
    /// Sparsity drawn through `v ~ Uniform(Ṽ_H)`, Rademacher `±sqrt(2) c ρ_s`.
    Adaptive { c: f64 },
    /// The adaptive prior's per-column energy packed into leading rows, as
    /// [`PriorVariant::MinimaxCompressed`] does for the bulk prior.
    AdaptiveCompressed { c: f64 },
    /// Smoothness drawn through `ν ~ Uniform(V_s)`, dense normalization.
    SobolevDense { c: f64, alpha0: f64, alpha1: f64 },
    /// As the dense variant with the sparse normalization; needs `s < p^{1/2-δ}`.
    SobolevSparse { c: f64, alpha0: f64, alpha1: f64, delta: f64 },
}

impl PriorVariant {
    pub fn c(&self) -> f64 {
        match *self {
            PriorVariant::Trivial { c }
            | PriorVariant::Minimax { c, .. }
            | PriorVariant::MinimaxCompressed { c }
            | PriorVariant::Adaptive { c }
            | PriorVariant::AdaptiveCompressed { c }
            | PriorVariant::SobolevDense { c, .. }
            | PriorVariant::SobolevSparse { c, .. } => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub variant: PriorVariant,
    pub dims: ProblemDims,
    pub profile: EigenProfile,
}

/// Precomputed sampling layout.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layout {
    /// `support` columns, rows `1..=rows` each `±value` (or `+value` if unsigned).
    Block { support: u64, rows: usize, value: f64, signed: bool },
    /// One of several blocks, chosen uniformly; `alpha` is the smoothness the
    /// draw belongs to (Sobolev priors only).
    Mixture { options: Vec<MixtureOption> },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MixtureOption {
    pub support: u64,
    pub rows: usize,
    pub value: f64,
    pub alpha: Option<f64>,
}

/// One support pattern a prior can draw: `support` columns, each with
/// `±value` (or `value` when unsigned) on rows `1..=rows`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorComponent {
    pub support: u64,
    pub rows: usize,
    pub value: f64,
}

impl PriorComponent {
    /// `‖Θ‖²_F` of any draw from this component.
    pub fn frobenius_sq(&self) -> f64 {
        self.support as f64 * self.rows as f64 * self.value * self.value
    }
}

/// A validated prior ready for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    spec: PriorSpec,
    layout: Layout,
}

/// `c_η` of the triviality construction: `1 ∧ sqrt(κ) ∧ sqrt(κ log(1 + 4η²))`
/// with `κ = log(1 + p/s'²)/n` and `s'` the effective support size.
pub fn trivial_c_eta(dims: &ProblemDims, eta: f64) -> f64 {
    let s = trivial_support(dims);
    let kappa = log_term(dims.p, s, 1.0) / dims.n;
    1f64.min(kappa.sqrt()).min((kappa * (4.0 * eta * eta).ln_1p()).sqrt())
}

/// `c_η = 1 ∧ 2^{1/4} ∧ log(1 + 4η²)^{1/4}` of the minimax construction.
pub fn minimax_c_eta(eta: f64) -> f64 {
    1f64.min(2f64.powf(0.25)).min((4.0 * eta * eta).ln_1p().powf(0.25))
}

/// Support size used by the triviality prior: `s`, or `⌈sqrt p⌉` once `s ≥ sqrt p`.
fn trivial_support(dims: &ProblemDims) -> u64 {
    if (dims.s as f64).powi(2) < dims.p as f64 {
        dims.s
    } else {
        min_adaptive_sparsity(dims.p, 1.0).unwrap_or(dims.p)
    }
}

fn block_ellipsoid(profile: &EigenProfile, rows: usize, value: f64) -> f64 {
    (1..=rows as u64).map(|k| value * value / profile.eigenvalue(k)).sum()
}

/// Largest `m ≤ max_rows` for which `energy` spread over `m` rows fits the ellipsoid.
fn compressed_rows(profile: &EigenProfile, max_rows: usize, energy: f64) -> Option<usize> {
    (1..=max_rows)
        .rev()
        .find(|&m| block_ellipsoid(profile, m, (energy / m as f64).sqrt()) <= 1.0 + ELLIPSOID_TOL)
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::InfeasibleSpec(format!("scale c must be finite and nonnegative, got {c}")))
    }
}

fn infeasible(what: &str, sum: f64) -> Error {
    Error::InfeasibleSpec(format!("{what}: ellipsoid sum {sum:.6} exceeds 1"))
}

impl Prior {
    pub fn new(spec: PriorSpec) -> Result<Self> {
        spec.profile.validate()?;
        check_c(spec.variant.c())?;
        let layout = match spec.variant {
            PriorVariant::Trivial { c } => {
                if c > 1.0 {
                    return Err(infeasible("trivial prior", c * c));
                }
                Layout::Block { support: trivial_support(&spec.dims), rows: 1, value: c, signed: false }
            }
            PriorVariant::Minimax { c, case: MinimaxCase::Spike } => {
                let rho = (spec.dims.log_term() / spec.dims.n).sqrt();
                let sum = (c * rho).powi(2);
                if sum > 1.0 + ELLIPSOID_TOL {
                    return Err(infeasible("spike prior", sum));
                }
                Layout::Block { support: spec.dims.s, rows: 1, value: c * rho, signed: true }
            }
            PriorVariant::Minimax { c, case: MinimaxCase::Bulk } => {
                let nu = nu_h(&spec.profile, &spec.dims)?;
                if nu < 2 {
                    return Err(Error::InfeasibleSpec("bulk prior needs nu_H >= 2".into()));
                }
                let rho = (gamma_h(&spec.profile, &spec.dims)? / nu as f64).sqrt();
                let rows = (nu - 1) as usize;
                let sum = block_ellipsoid(&spec.profile, rows, c * rho);
                if sum > 1.0 + ELLIPSOID_TOL {
                    return Err(infeasible("bulk prior", sum));
                }
                Layout::Block { support: spec.dims.s, rows, value: c * rho, signed: true }
            }
            PriorVariant::MinimaxCompressed { c } => {
                let nu = nu_h(&spec.profile, &spec.dims)?;
                if nu < 2 {
                    return Err(Error::InfeasibleSpec("bulk prior needs nu_H >= 2".into()));
                }
                let gamma = gamma_h(&spec.profile, &spec.dims)?;
                let energy = c * c * gamma * (nu - 1) as f64 / nu as f64;
                let rows = compressed_rows(&spec.profile, (nu - 1) as usize, energy)
                    .ok_or_else(|| infeasible("compressed prior", energy))?;
                let value = (energy / rows as f64).sqrt();
                Layout::Block { support: spec.dims.s, rows, value, signed: true }
            }
            PriorVariant::Adaptive { c } => adaptive_layout(&spec, c, false)?,
            PriorVariant::AdaptiveCompressed { c } => adaptive_layout(&spec, c, true)?,
            PriorVariant::SobolevDense { c, alpha0, alpha1 } => {
                let (p, s, n) = (spec.dims.p as f64, spec.dims.s as f64, spec.dims.n);
                let b = n * s / (p * loglog_floor(n * p)).sqrt();
                sobolev_layout(spec.dims.s, c, alpha0, alpha1, b)?
            }
            PriorVariant::SobolevSparse { c, alpha0, alpha1, delta } => {
                let (p, s, n) = (spec.dims.p as f64, spec.dims.s as f64, spec.dims.n);
                if !(delta > 0.0 && delta < 0.5) || s >= p.powf(0.5 - delta) {
                    return Err(Error::InfeasibleSpec(
                        "sparse Sobolev prior needs s < p^(1/2 - delta) with delta in (0, 1/2)".into(),
                    ));
                }
                let b = n / (p * loglog_floor(n)).ln().max(1.0).sqrt();
                sobolev_layout(spec.dims.s, c, alpha0, alpha1, b)?
            }
        };
        Ok(Prior { spec, layout })
    }

    pub fn spec(&self) -> &PriorSpec {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.spec.dims.p as usize
    }

    /// Largest row any draw can populate.
    pub fn rows(&self) -> usize {
        match &self.layout {
            Layout::Block { rows, .. } => *rows,
            Layout::Mixture { options } => options.iter().map(|o| o.rows).max().unwrap_or(1),
        }
    }

    /// The support patterns, drawn uniformly when there is more than one.
    pub fn components(&self) -> Vec<PriorComponent> {
        match &self.layout {
            Layout::Block { support, rows, value, .. } => {
                vec![PriorComponent { support: *support, rows: *rows, value: *value }]
            }
            Layout::Mixture { options } => options
                .iter()
                .map(|o| PriorComponent { support: o.support, rows: o.rows, value: o.value })
                .collect(),
        }
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Draws `Θ` with at least `k_max` rows.
    ///
    /// In debug builds every draw is checked against the parameter space.
    pub fn sample<R: Rng + ?Sized>(&self, k_max: usize, rng: &mut R) -> CoefficientMatrix {
        let p = self.p();
        let k = k_max.max(self.rows());
        let mut theta = CoefficientMatrix::zeros(k, p);
        let (support, rows, value, signed, alpha) = match &self.layout {
            Layout::Block { support, rows, value, signed } => (*support, *rows, *value, *signed, None),
            Layout::Mixture { options } => {
                let o = &options[rng.random_range(0..options.len())];
                (o.support, o.rows, o.value, true, o.alpha)
            }
        };
        for j in sample_indices(rng, p, support as usize) {
            let col = theta.column_mut(j);
            for v in col.iter_mut().take(rows) {
                *v = if signed && rng.random::<bool>() { -value } else { value };
            }
        }
        if cfg!(debug_assertions) {
            let profile = match alpha {
                Some(a) => EigenProfile::sobolev(a),
                None => self.spec.profile.clone(),
            };
            debug_assert!(
                theta.in_parameter_space(&profile, support as usize, ELLIPSOID_TOL),
                "prior draw left the parameter space"
            );
        }
        theta
    }
}

fn adaptive_layout(spec: &PriorSpec, c: f64, compress: bool) -> Result<Layout> {
    let (p, n) = (spec.dims.p, spec.dims.n);
    let fp = fixed_point(&spec.profile, p, n)?;
    let tilde = grid_tilde_v(&spec.profile, p, n, &fp)?;
    let s_lo = min_adaptive_sparsity(p, fp.a)
        .ok_or_else(|| Error::InfeasibleSpec("no sparsity reaches sqrt(p A_H)".into()))?;
    let nu_at = |s: u64| nu_for(&spec.profile, log_term(p, s, fp.a), n);
    let mut options = Vec::with_capacity(tilde.len());
    for v in tilde {
        // ν_H(·, 𝒜_H) is nondecreasing, so the first s whose ν exceeds v/2 is the minimum.
        let (mut lo, mut hi) = (s_lo, p);
        if nu_at(lo)? * 2 <= v {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if nu_at(mid)? * 2 > v {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo = hi;
        }
        let s = lo;
        let nu = nu_at(s)?;
        debug_assert!(2 * nu > v && nu <= v);
        if nu < 2 {
            return Err(Error::InfeasibleSpec("adaptive prior needs nu_H >= 2".into()));
        }
        let psi_sq = psi_adapt_sq(&spec.profile, p, s, n, fp.a)?;
        let rho = (psi_sq / s as f64 / nu as f64).sqrt();
        let mut value = 2f64.sqrt() * c * rho;
        let mut rows = (nu - 1) as usize;
        if compress {
            let energy = value * value * rows as f64;
            rows = compressed_rows(&spec.profile, rows, energy)
                .ok_or_else(|| infeasible("compressed adaptive prior", energy))?;
            value = (energy / rows as f64).sqrt();
        }
        let sum = block_ellipsoid(&spec.profile, rows, value);
        if sum > 1.0 + ELLIPSOID_TOL {
            return Err(infeasible("adaptive prior", sum));
        }
        options.push(MixtureOption { support: s, rows, value, alpha: None });
    }
    if options.is_empty() {
        return Err(Error::InfeasibleSpec("empty adaptive grid".into()));
    }
    Ok(Layout::Mixture { options })
}

/// `V_s = {2^k ≥ 2 : B^{2/(4α1+1)} ≤ 2^k ≤ B^{2/(4α0+1)}}`; each `ν` belongs to
/// the smoothness `α(ν)` solving `ν = B^{2/(4α+1)}` and carries level
/// `ρ_ν = B^{-(2α+1)/(4α+1)}`.
fn sobolev_layout(s: u64, c: f64, alpha0: f64, alpha1: f64, b: f64) -> Result<Layout> {
    if !(alpha0 > 0.0 && alpha0 < alpha1) {
        return Err(Error::InfeasibleSpec(format!("need 0 < alpha0 < alpha1, got {alpha0}, {alpha1}")));
    }
    let lo = b.powf(2.0 / (4.0 * alpha1 + 1.0));
    let hi = b.powf(2.0 / (4.0 * alpha0 + 1.0));
    let mut options = Vec::new();
    let mut nu = 2u64;
    while (nu as f64) <= hi {
        if nu as f64 >= lo {
            let alpha = (2.0 * b.ln() / (nu as f64).ln() - 1.0) / 4.0;
            let rho = b.powf(-(2.0 * alpha + 1.0) / (4.0 * alpha + 1.0));
            let value = c * rho;
            let sum = block_ellipsoid(&EigenProfile::sobolev(alpha), nu as usize, value);
            if sum > 1.0 + ELLIPSOID_TOL {
                return Err(infeasible("Sobolev prior", sum));
            }
            options.push(MixtureOption { support: s, rows: nu as usize, value, alpha: Some(alpha) });
        }
        nu *= 2;
    }
    if options.is_empty() {
        return Err(Error::InfeasibleSpec("smoothness grid V_s is empty".into()));
    }
    Ok(Layout::Mixture { options })
}
