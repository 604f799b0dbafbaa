use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strong_algebra::cli::{run, ExperimentConfig, Task};
use strong_algebra::Error;

#[derive(Parser)]
#[command(name = "strong-algebra", version, about = "Certified inversion and factorization in graded algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the report; defaults to the config's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the strong-algebra inequality on random elements
    Validate(Common),
    /// Invert 1 - a by its Neumann series
    Invert(Common),
    /// Left inverse of a Wiener-algebra element by localization and patching
    WienerInvert(Common),
    /// Check invertibility of a symbol on a grid of the circle
    Scan(Common),
    /// Canonical factorization a = a_- a_+
    Factorize(Common),
    /// Pick a localization window around a point
    Localize(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match cli.command {
        Command::Validate(c) => (Task::Validate, c),
        Command::Invert(c) => (Task::Invert, c),
        Command::WienerInvert(c) => (Task::WienerInvert, c),
        Command::Scan(c) => (Task::Scan, c),
        Command::Factorize(c) => (Task::Factorize, c),
        Command::Localize(c) => (Task::Localize, c),
    };
    let report_error = |e: Error| {
        eprintln!("error[{}]: {e}", e.kind());
        ExitCode::from(e.class().exit_code() as u8)
    };
    let mut config = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => return report_error(e),
    };
    match config.task {
        Some(t) if t != task => {
            return report_error(Error::Schema(format!(
                "config task `{}` does not match subcommand `{}`",
                t.name(),
                task.name()
            )))
        }
        _ => config.task = Some(task),
    }
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    if common.tol.is_some() {
        config.tol = common.tol;
    }
    let base = common.config.parent().map(PathBuf::from).unwrap_or_default();
    let report = run(&config, &base);
    let text = match report.to_json() {
        Ok(t) => t,
        Err(e) => return report_error(e),
    };
    let out = common.out.or_else(|| config.output.map(|p| base.join(p)));
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, text) {
                return report_error(Error::Io(e));
            }
        }
        None => print!("{text}"),
    }
    if let Some(err) = &report.error {
        eprintln!("error[{}]: {}", err.kind, err.message);
    }
    ExitCode::from(report.exit_code as u8)
}
