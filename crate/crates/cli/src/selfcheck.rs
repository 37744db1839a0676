//! Fast property checks of the library, runnable from an installed binary.

use crate::config::ExperimentConfig;
use rand::Rng;
use samtest::harness::{calibrate_threshold, replication_rng, StatisticId};
use samtest::priors::{chi2_divergence_bound, chi2_divergence_exact, MinimaxCase, Prior, PriorSpec, PriorVariant};
use samtest::rates::{fixed_point, gamma_h, nu_h};
use samtest::special::{alpha_threshold, chi2_sf, reg_upper_gamma, temme_q_order1};
use samtest::statistics::{t_statistic, Energies, Observation, TestSpec};
use samtest::{CoefficientMatrix, EigenProfile, ProblemDims};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = fn(u64) -> samtest::Result<(bool, String)>;

const CHECKS: [(&str, Check); 8] = [
    ("special values", special_values),
    ("temme envelope", temme),
    ("gamma_h oracle and sandwich", rate_oracle),
    ("fixed point sandwich", fixed_points),
    ("divergence below bound", divergence),
    ("calibrated level", calibration),
    ("streaming statistic", streaming),
    ("config round trip", config_round_trip),
];

pub fn run(seed: u64) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| match check(seed) {
            Ok((pass, detail)) => CheckResult { name, pass, detail },
            Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
        })
        .collect()
}

fn profile(rng: &mut impl Rng) -> EigenProfile {
    match rng.random_range(0..3) {
        0 => EigenProfile::sobolev(rng.random_range(0.25..3.0)),
        1 => EigenProfile::finite_rank(rng.random_range(1..50)),
        _ => EigenProfile::exp_decay(rng.random_range(0.1..2.0), rng.random_range(0.5..2.0)),
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn special_values(_: u64) -> samtest::Result<(bool, String)> {
    let e1 = (-1f64).exp();
    let a = (alpha_threshold(2, 0.0)? - 4.0).abs();
    let q1 = (reg_upper_gamma(1.0, 1.0)? - e1).abs();
    let q2 = (reg_upper_gamma(2.0, 1.0)? - 2.0 * e1).abs();
    Ok((a <= 1e-10 && q1 <= 1e-12 && q2 <= 1e-12, format!("errors {a:.1e} {q1:.1e} {q2:.1e}")))
}

fn temme(_: u64) -> samtest::Result<(bool, String)> {
    let mut worst = 0f64;
    for a in [25.0, 100.0] {
        for i in 0..10 {
            let x = a * (0.1 + 3.9 * i as f64 / 9.0);
            let t = temme_q_order1(a, x);
            worst = worst.max((reg_upper_gamma(a, x)? - t.approx).abs() / t.envelope);
        }
    }
    Ok((worst <= 10.0, format!("max error/envelope {worst:.2e}")))
}

fn rate_oracle(seed: u64) -> samtest::Result<(bool, String)> {
    let mut rng = replication_rng(seed, 1, 0);
    let mut ok = true;
    let mut checked = 0;
    while checked < 200 {
        let pr = profile(&mut rng);
        let p = log_uniform(&mut rng, 2.0, 1e5) as u64;
        let s = rng.random_range(1..=p);
        let n = log_uniform(&mut rng, 1.0, 1e4);
        let dims = ProblemDims::new(p, s, n)?;
        let l = dims.log_term();
        if l > n / 2.0 {
            continue;
        }
        checked += 1;
        let nu = nu_h(&pr, &dims)?;
        let g = gamma_h(&pr, &dims)?;
        let brute = (1..=2 * nu + 5)
            .map(|k| pr.eigenvalue(k).min((k as f64 * l).sqrt() / n))
            .fold(0f64, f64::max);
        let mid = (nu as f64 * l).sqrt() / n;
        ok &= (g - brute).abs() <= 1e-12 * brute
            && g <= mid * (1.0 + 1e-12)
            && mid <= 2f64.sqrt() * g * (1.0 + 1e-12);
    }
    Ok((ok, format!("{checked} configs")))
}

fn fixed_points(seed: u64) -> samtest::Result<(bool, String)> {
    let mut rng = replication_rng(seed, 2, 0);
    let mut ok = true;
    let mut checked = 0;
    while checked < 30 {
        let pr = profile(&mut rng);
        let p = log_uniform(&mut rng, 2.0, 1e4) as u64;
        let n = log_uniform(&mut rng, 10.0, 1e5);
        let fp = fixed_point(&pr, p, n)?;
        if (1.0 + p as f64 * fp.a).ln() > n / 2.0 {
            continue;
        }
        checked += 1;
        let le = fp.log_e_card();
        ok &= fp.a <= le + 1e-12 && le <= 2.0 * fp.a + 1e-12;
    }
    ok &= fixed_point(&EigenProfile::finite_rank(4), 1000, 1e4)?.a == 1.0;
    Ok((ok, format!("{checked} configs plus finite rank")))
}

fn divergence(seed: u64) -> samtest::Result<(bool, String)> {
    let mut rng = replication_rng(seed, 3, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    while checked < 30 {
        let p = rng.random_range(2..100u64);
        let s = rng.random_range(1..=p.min(10));
        let n = log_uniform(&mut rng, 1.0, 50.0);
        let variant = match rng.random_range(0..3) {
            0 => PriorVariant::Trivial { c: rng.random_range(0.0..1.0) },
            1 => PriorVariant::Minimax { c: rng.random_range(0.1..1.0), case: MinimaxCase::Spike },
            _ => PriorVariant::Minimax { c: rng.random_range(0.1..1.0), case: MinimaxCase::Bulk },
        };
        let spec = PriorSpec { variant, dims: ProblemDims::new(p, s, n)?, profile: EigenProfile::sobolev(1.0) };
        let Ok(prior) = Prior::new(spec) else { continue };
        let exact = chi2_divergence_exact(&prior)?;
        if !exact.is_finite() {
            continue;
        }
        checked += 1;
        let bound = chi2_divergence_bound(&prior)?;
        worst = worst.max((exact - bound) / bound.max(1e-300));
    }
    Ok((worst <= 1e-10, format!("max relative excess {worst:.1e}")))
}

fn calibration(seed: u64) -> samtest::Result<(bool, String)> {
    let c = calibrate_threshold(StatisticId::dense(3), 20, 0.05, 20_000, seed)?;
    let sf = chi2_sf(60, c.threshold)?;
    Ok(((sf - 0.05).abs() < 0.01, format!("exact tail at calibrated threshold {sf:.4}")))
}

fn streaming(seed: u64) -> samtest::Result<(bool, String)> {
    let mut rng = replication_rng(seed, 4, 0);
    let (k, p) = (12, 40);
    let data: Vec<f64> = (0..k * p).map(|_| rng.random_range(-0.3..0.3)).collect();
    let obs = Observation::new(CoefficientMatrix::from_columns(k, p, data).expect("shape"), 50.0)?;
    let spec = TestSpec::sparse(8, 1.0, 0.0)?;
    let e = Energies::from_observation(&obs, &spec.levels())?;
    let a = t_statistic(&obs, 8, 1.0)?;
    let b = spec.statistic(&e)?;
    Ok(((a - b).abs() <= 1e-9 * a.abs().max(1.0), format!("streaming {a:?} vs energies {b:?}")))
}

fn config_round_trip(_: u64) -> samtest::Result<(bool, String)> {
    let text = include_str!("../configs/power.toml");
    let Ok(cfg) = ExperimentConfig::parse(text) else {
        return Ok((false, "bundled example does not parse".into()));
    };
    let ok = ExperimentConfig::parse(&cfg.to_toml()).map(|c| c == cfg).unwrap_or(false);
    Ok((ok, "bundled power example".into()))
}
