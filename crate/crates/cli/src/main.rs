use clap::{Parser, Subcommand};
use samtest_cli::commands::{self, Context};
use samtest_cli::config::ExperimentConfig;
use samtest_cli::{selfcheck, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Separation rates, calibrated tests and lower-bound priors for sparse
/// additive signal detection.
#[derive(Parser)]
#[command(name = "samtest", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the Monte Carlo harness.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Minimax and adaptive rates over the (s, n) sweep.
    Rates,
    /// Adaptation grids and the fixed point for each n.
    Grids,
    /// Type I and type II error of the configured test against the prior.
    Simulate,
    /// Fill the calibration cache for the configured test.
    Calibrate,
    /// Risk along the prior's c grid.
    Power,
    /// Chi-square divergence of the prior from the null.
    Divergence,
    /// Run the built-in property checks.
    Selfcheck,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config {
        field: "--config".into(),
        message: "this subcommand needs a config file".into(),
    })?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config { field: "--jobs".into(), message: "must be positive".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    if let Command::Selfcheck = cli.command {
        let seed = cli.seed.unwrap_or(0);
        let results = selfcheck::run(seed);
        let failed = results.iter().filter(|r| !r.pass).count();
        for r in &results {
            println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
        return if failed == 0 { Ok(()) } else { Err(CliError::SelfCheck(failed)) };
    }
    let cfg = load(cli)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context::new(&cfg, &out);
    let path = match cli.command {
        Command::Rates => commands::rates(&cfg, &ctx)?,
        Command::Grids => commands::grids(&cfg, &ctx)?,
        Command::Simulate => commands::simulate(&cfg, &ctx)?,
        Command::Calibrate => commands::calibrate(&cfg, &ctx)?,
        Command::Power => commands::power(&cfg, &ctx)?,
        Command::Divergence => commands::divergence(&cfg, &ctx)?,
        Command::Selfcheck => unreachable!(),
    };
    println!("{}", path.display());
    if ctx.cache.hits() + ctx.cache.misses() > 0 {
        eprintln!(
            "calibration cache {}: {} hit(s), {} computed",
            ctx.cache.dir().display(),
            ctx.cache.hits(),
            ctx.cache.misses()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
