//! `crw`: spectral analysis, evolution and simulation of a correlated random
//! walk on a path.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 validation error,
//! 3 parse or I/O error, 4 model outside the real-spectrum regime.

mod commands;
mod error;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crw_core::{load_model, PathCrwModel};

use commands::{InitArg, Method, Output, VerifyOptions};
use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "crw",
    version,
    about = "Correlated random walk on a path: spectra, limits, simulation"
)]
struct Cli {
    /// Print the full JSON run report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a model file.
    Validate { config: PathBuf },
    /// Spectrum of B, the real-spectrum check and the full spectrum of U.
    Spectrum {
        config: PathBuf,
        /// Emit Spec(U) as CSV.
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long = "dump-b", alias = "dump-B")]
        dump_b: bool,
        /// Also prints pi.
        #[arg(long = "dump-j", alias = "dump-J")]
        dump_j: bool,
    },
    /// Closed-form limiting distribution, cross-checked by power iteration.
    Limit { config: PathBuf },
    /// Vertex marginal after t steps.
    Evolve {
        config: PathBuf,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value = "0,L", value_name = "x,J")]
        init: InitArg,
        #[arg(long, value_enum, default_value_t = Method::Spectral)]
        method: Method,
    },
    /// Monte Carlo histogram against exact evolution at the same t.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        walkers: u64,
        #[arg(long, default_value_t = 1000)]
        t: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0,L", value_name = "x,J")]
        init: InitArg,
        #[arg(long, value_enum)]
        out: Option<Format>,
    },
    /// Run the invariant suite on one model or on random models.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(conflicts_with = "random")]
    config: Option<PathBuf>,
    /// Random sweep: COUNT models per sign of nu2, each with n <= N_MAX.
    /// The default with no config is `--random 8 20`.
    #[arg(long, num_args = 2, value_names = ["N_MAX", "COUNT"])]
    random: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give up on a nu2 < 0 model after this many inadmissible draws.
    #[arg(long, default_value_t = crw_core::verify::DEFAULT_MAX_DRAWS)]
    max_draws: usize,
    /// Add a Monte Carlo agreement check (10^5 walkers, t = 100) per model.
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long, hide = true)]
    corrupt_b_spectrum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(path: &Path) -> Result<PathCrwModel, CliError> {
    let model = load_model(path)?;
    log::debug!(
        "loaded {}: n = {}, nu2 = {}",
        path.display(),
        model.n(),
        model.nu2()
    );
    Ok(model)
}

/// `None` renders text.
fn run(cli: &Cli) -> Result<(Output, Option<Format>), CliError> {
    let (out, fmt) = match &cli.command {
        Command::Validate { config } => (commands::validate(&load(config)?), None),
        Command::Spectrum {
            config,
            csv,
            dump_b,
            dump_j,
        } => (
            commands::spectrum(&load(config)?, *dump_b, *dump_j)?,
            csv.then_some(Format::Csv),
        ),
        Command::Limit { config } => (commands::limit(&load(config)?)?, None),
        Command::Evolve {
            config,
            t,
            init,
            method,
        } => (commands::evolve(&load(config)?, *t, *init, *method)?, None),
        Command::Simulate {
            config,
            walkers,
            t,
            seed,
            init,
            out,
        } => (
            commands::simulate(&load(config)?, *walkers, *t, *seed, *init)?,
            *out,
        ),
        Command::Verify(args) => {
            let opts = VerifyOptions {
                seed: args.seed,
                max_draws: args.max_draws,
                monte_carlo: args.monte_carlo,
                corrupt_b_spectrum: args.corrupt_b_spectrum,
            };
            let out = match (&args.config, &args.random) {
                (Some(path), _) => commands::verify_model(&load(path)?, &opts)?,
                (None, Some(r)) => commands::verify_random(r[0], r[1], &opts),
                (None, None) => commands::verify_random(8, 20, &opts),
            };
            (out, None)
        }
    };
    Ok((out, if cli.json { Some(Format::Json) } else { fmt }))
}

fn render(out: &Output, fmt: Option<Format>) -> Result<String, CliError> {
    Ok(match fmt {
        None => out.text.clone(),
        Some(Format::Json) => serde_json::to_string_pretty(&out.report)? + "\n",
        Some(Format::Csv) => out.csv.clone().ok_or_else(|| {
            CliError::Parse("CSV output is not available for this command".into())
        })?,
    })
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRW_LOG", "off")).init();
    let cli = Cli::parse();
    let start = Instant::now();

    let result = run(&cli).and_then(|(mut out, fmt)| {
        out.report = out.report.clone().timed(start.elapsed());
        emit(&render(&out, fmt)?, cli.output.as_deref())?;
        Ok(out.report)
    });
    match result {
        Ok(report) => {
            let failed = report.failed_checks();
            if failed.is_empty() {
                ExitCode::from(exit::OK)
            } else {
                eprintln!("invariant check(s) failed: {}", failed.join(", "));
                ExitCode::from(exit::INVARIANT)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
