use crate::cache::Cache;
use crate::config::{ExperimentConfig, TestKind};
use crate::error::CliError;
use crate::output::{Cell, Provenance, Table};
use samtest::harness::{estimate_risk, power_curve, spearman, Alternative, StatisticId};
use samtest::priors::{divergence_report, total_risk_lower_bound, Prior, PriorSpec};
use samtest::rates::{adaptive_rate, fixed_point, grid_s, grid_tilde_v, minimax_rate, FixedPoint};
use samtest::statistics::{
    adaptive_plan, make_adaptive_test, make_sobolev_adaptive_test, sparse_statistic_id, TestSpec,
};
use samtest::{ProblemDims, Regime};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Where a subcommand writes and what it stamps on its output.
pub struct Context {
    pub out: PathBuf,
    pub cache: Cache,
    pub provenance: Provenance,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig, out: &Path) -> Self {
        Context {
            out: out.to_path_buf(),
            cache: Cache::locate(out),
            provenance: Provenance { seed: cfg.seed, config_hash: cfg.hash() },
        }
    }

    fn write(&self, table: &Table, name: &str) -> Result<PathBuf, CliError> {
        table.write(&self.out, name, &self.provenance)
    }
}

fn cell_opt(v: Option<f64>) -> Cell {
    v.map(Cell::Num).unwrap_or_else(|| Cell::Text(String::new()))
}

/// One `(s, n)` point of the configured sweep.
fn sweep(cfg: &ExperimentConfig) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    for s in cfg.dims.s.values() {
        for n in cfg.dims.n.values() {
            out.push((s, n));
        }
    }
    out
}

/// Fixed points are shared by every `s` at the same `n`.
struct FixedPoints<'a> {
    cfg: &'a ExperimentConfig,
    memo: BTreeMap<u64, FixedPoint>,
}

impl<'a> FixedPoints<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        FixedPoints { cfg, memo: BTreeMap::new() }
    }

    fn get(&mut self, n: f64) -> Result<&FixedPoint, CliError> {
        let key = n.to_bits();
        if !self.memo.contains_key(&key) {
            let fp = fixed_point(&self.cfg.profile(), self.cfg.dims.p, n)?;
            self.memo.insert(key, fp);
        }
        Ok(&self.memo[&key])
    }
}

pub fn rates(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let profile = cfg.profile();
    let tuning = cfg.tuning();
    let mut fps = FixedPoints::new(cfg);
    let mut table = Table::new(&[
        "p", "s", "n", "nu", "gamma", "eps_sq", "regime", "a_h", "adaptive_nu", "adaptive_eps_sq",
        "adaptive_regime", "unverified",
    ]);
    for (s, n) in sweep(cfg) {
        let dims = ProblemDims::new(cfg.dims.p, s, n)?;
        let r = minimax_rate(&profile, &dims, &tuning)?;
        let fp = fps.get(n)?;
        let a = adaptive_rate(&profile, &dims, fp, &tuning)?;
        table.push(vec![
            dims.p.into(),
            s.into(),
            n.into(),
            r.nu.into(),
            r.gamma.into(),
            r.eps_sq.into(),
            r.regime.as_str().into(),
            fp.a.into(),
            a.nu.into(),
            a.eps_sq.into(),
            a.regime.as_str().into(),
            a.unverified.into(),
        ]);
    }
    ctx.write(&table, "rates.csv")
}

pub fn grids(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let profile = cfg.profile();
    let p = cfg.dims.p;
    let mut table = Table::new(&["p", "n", "object", "index", "value"]);
    for n in cfg.dims.n.values() {
        let fp = fixed_point(&profile, p, n)?;
        let mut push = |object: &str, index: usize, value: Cell| {
            table.push(vec![p.into(), n.into(), object.into(), index.into(), value]);
        };
        push("a_h", 0, fp.a.into());
        push("a_h_bracket", 0, fp.bracket.0.into());
        push("a_h_bracket", 1, fp.bracket.1.into());
        push("log_e_card_v_h", 0, fp.log_e_card().into());
        for (i, &v) in fp.v_h.iter().enumerate() {
            push("v_h", i, v.into());
        }
        for (i, s) in grid_s(p, fp.a).into_iter().enumerate() {
            push("s_grid", i, s.into());
        }
        for (i, v) in grid_tilde_v(&profile, p, n, &fp)?.into_iter().enumerate() {
            push("tilde_v_h", i, v.into());
        }
    }
    ctx.write(&table, "grids.csv")
}

/// A calibrated test plus the thresholds it consumed.
pub struct BuiltTest {
    pub spec: TestSpec,
    pub label: String,
    pub calibrations: Vec<(String, f64, f64)>,
}

pub fn build_test(cfg: &ExperimentConfig, ctx: &Context, s: u64, n: f64) -> Result<BuiltTest, CliError> {
    let profile = cfg.profile();
    let tuning = cfg.tuning();
    let p = cfg.dims.p;
    let level = cfg.test.level;
    let reps = cfg.calibration_reps();
    match cfg.test.kind {
        TestKind::Minimax => {
            let dims = ProblemDims::new(p, s, n)?;
            let rate = minimax_rate(&profile, &dims, &tuning)?;
            let id = match rate.regime {
                Regime::Dense => StatisticId::dense(rate.nu),
                // No test has power here; the tail test is the natural stand-in.
                Regime::Trivial => sparse_statistic_id(&profile, &dims, Regime::SparseTail, &tuning)?,
                regime => sparse_statistic_id(&profile, &dims, regime, &tuning)?,
            };
            let threshold = ctx.cache.threshold(id, p, level, reps, cfg.seed)?;
            Ok(BuiltTest {
                spec: id.test(threshold)?,
                label: format!("{} {id}", rate.regime),
                calibrations: vec![(id.to_string(), level, threshold)],
            })
        }
        TestKind::Adaptive => {
            let plan = adaptive_plan(&profile, p, n, &tuning)?;
            let component_level = plan.component_level(level);
            let stats = plan.statistics();
            let table = ctx.cache.table(&stats, p, component_level, reps, cfg.seed)?;
            let calibrations = table
                .iter()
                .map(|c| (c.key.stat.to_string(), component_level, c.threshold))
                .collect();
            Ok(BuiltTest {
                spec: make_adaptive_test(&plan, level, &table)?,
                label: format!("adaptive max over {} components", plan.components.len()),
                calibrations,
            })
        }
        TestKind::SobolevAdaptive => {
            let (a0, a1) = (cfg.test.alpha0.unwrap_or(0.0), cfg.test.alpha1.unwrap_or(0.0));
            let TestSpec::SobolevDenseAdaptive { grid, .. } = make_sobolev_adaptive_test(a0, a1, p, n, 1.0)? else {
                unreachable!("smoothness-adaptive test")
            };
            let k = ctx.cache.sobolev_k(&grid, p, n, level, reps, cfg.seed)?;
            Ok(BuiltTest {
                spec: make_sobolev_adaptive_test(a0, a1, p, n, k)?,
                label: format!("sobolev adaptive over {} levels", grid.len()),
                calibrations: vec![("sobolev-k".to_string(), level, k)],
            })
        }
    }
}

fn prior_at(cfg: &ExperimentConfig, s: u64, n: f64, c: f64) -> Result<Prior, CliError> {
    let prior = cfg.prior()?;
    Ok(Prior::new(PriorSpec {
        variant: prior.variant(c),
        dims: ProblemDims::new(cfg.dims.p, s, n)?,
        profile: cfg.profile(),
    })?)
}

pub fn calibrate(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let mut table = Table::new(&["p", "s", "n", "test", "statistic", "level", "threshold", "reps"]);
    for (s, n) in sweep(cfg) {
        let built = build_test(cfg, ctx, s, n)?;
        for (stat, level, threshold) in built.calibrations {
            table.push(vec![
                cfg.dims.p.into(),
                s.into(),
                n.into(),
                built.label.clone().into(),
                stat.into(),
                level.into(),
                threshold.into(),
                cfg.calibration_reps().into(),
            ]);
        }
    }
    ctx.write(&table, "calibration.csv")
}

pub fn simulate(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let mut table = Table::new(&[
        "p", "s", "n", "test", "c", "type1", "type1_lo", "type1_hi", "type2", "type2_lo", "type2_hi",
        "total", "reps",
    ]);
    for (s, n) in sweep(cfg) {
        let built = build_test(cfg, ctx, s, n)?;
        for c in cfg.prior()?.c.values() {
            let prior = prior_at(cfg, s, n, c)?;
            let risk = estimate_risk(&built.spec, Alternative::Prior(&prior), n, cfg.reps, cfg.seed)?;
            table.push(vec![
                cfg.dims.p.into(),
                s.into(),
                n.into(),
                built.label.clone().into(),
                c.into(),
                risk.type1.into(),
                risk.type1_ci.0.into(),
                risk.type1_ci.1.into(),
                risk.type2.into(),
                risk.type2_ci.0.into(),
                risk.type2_ci.1.into(),
                risk.total().into(),
                cfg.reps.into(),
            ]);
        }
    }
    ctx.write(&table, "simulate.csv")
}

pub fn power(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let mut table = Table::new(&["p", "s", "n", "test", "c", "type1", "type2", "total", "spearman", "reps"]);
    let grid = cfg.prior()?.c.values();
    for (s, n) in sweep(cfg) {
        let built = build_test(cfg, ctx, s, n)?;
        let curve = power_curve(
            &built.spec,
            |c| prior_at(cfg, s, n, c).map_err(|e| match e {
                CliError::Library(e) => e,
                other => samtest::Error::InfeasibleSpec(other.to_string()),
            }),
            &grid,
            n,
            cfg.reps,
            cfg.seed,
        )?;
        let totals: Vec<f64> = curve.iter().map(|pt| pt.risk.total()).collect();
        let rho = if grid.len() > 1 { spearman(&grid, &totals) } else { f64::NAN };
        for pt in curve {
            table.push(vec![
                cfg.dims.p.into(),
                s.into(),
                n.into(),
                built.label.clone().into(),
                pt.scale.into(),
                pt.risk.type1.into(),
                pt.risk.type2.into(),
                pt.risk.total().into(),
                rho.into(),
                cfg.reps.into(),
            ]);
        }
    }
    ctx.write(&table, "power.csv")
}

pub fn divergence(cfg: &ExperimentConfig, ctx: &Context) -> Result<PathBuf, CliError> {
    let eta = cfg.prior()?.eta;
    let mut table = Table::new(&[
        "p", "s", "n", "c", "method", "exact", "upper_bound", "monte_carlo", "monte_carlo_se", "value",
        "target", "risk_lower_bound",
    ]);
    for (s, n) in sweep(cfg) {
        for c in cfg.prior()?.c.values() {
            let prior = prior_at(cfg, s, n, c)?;
            let r = divergence_report(&prior, eta, cfg.reps, cfg.seed)?;
            table.push(vec![
                cfg.dims.p.into(),
                s.into(),
                n.into(),
                c.into(),
                format!("{:?}", r.method).to_lowercase().into(),
                cell_opt(r.exact),
                cell_opt(r.upper_bound),
                cell_opt(r.monte_carlo.map(|m| m.0)),
                cell_opt(r.monte_carlo.map(|m| m.1)),
                r.value().into(),
                r.target.into(),
                total_risk_lower_bound(r.value()).into(),
            ]);
        }
    }
    ctx.write(&table, "divergence.csv")
}
