use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use advection_dg::config::RunConfig;
use advection_dg::experiments::{self, Outcome};
use advection_dg::Error;

/// Upwind DG experiments for linear advection-reaction problems.
#[derive(Debug, Parser)]
#[command(name = "advection-dg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Check the thresholds of the `[assert]` section; exit 3 on failure.
    #[arg(long)]
    assert: bool,
    /// Directory for the CSV tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convergence study over mesh sizes and degrees.
    Converge(Common),
    /// Long-time error growth against the Gronwall factor.
    Growth(Common),
    /// Pathline time-in-domain field and its diagnostics.
    Mu(Common),
    /// Single backward pathline trace.
    Pathline(Common),
    /// Ellipticity margins of the exponential scalings.
    Ellipticity(Common),
}

type Runner = fn(&RunConfig, &Path) -> advection_dg::Result<Outcome>;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_ASSERT: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Expression { .. }
        | Error::Io(_)
        | Error::Parse { .. }
        | Error::UnsupportedDim(_)
        | Error::UnsupportedDegree(_)
        | Error::OutsideDomain { .. } => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("DG_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the worker pool: {e}");
            }
        }
        _ => log::warn!("ignoring DG_THREADS = {v:?}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();

    let (common, run): (&Common, Runner) = match &cli.command {
        Command::Converge(c) => (c, experiments::cmd_converge),
        Command::Growth(c) => (c, experiments::cmd_growth),
        Command::Mu(c) => (c, experiments::cmd_mu),
        Command::Pathline(c) => (c, experiments::cmd_pathline),
        Command::Ellipticity(c) => (c, experiments::cmd_ellipticity),
    };

    let mut cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if std::env::var("DG_DETERMINISTIC").is_ok_and(|v| v.trim() == "1") {
        cfg.run.deterministic = true;
    }

    let outcome = match run(&cfg, &common.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    print!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if common.assert {
        for c in &outcome.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if outcome.numerical_failure {
        return ExitCode::from(EXIT_NUMERICAL);
    }
    if common.assert && !outcome.all_passed() {
        return ExitCode::from(EXIT_ASSERT);
    }
    ExitCode::SUCCESS
}
