//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 usage, config or output error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::report::{render, to_text, write_report, Format, Report};
use crate::suites::{run_report, SuiteName};
use crate::sweep::{run_sweep, SweepTarget};

#[derive(Debug, Parser)]
#[command(
    name = "carlab",
    version,
    about = "Numerical checks for CAR shift semigroups perturbed by covariant CP measures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification suite.
    Run(RunArgs),
    /// Estimate convergence orders over refinement levels.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteName,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub target: SweepTarget,
    #[arg(long)]
    pub levels: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat TOML file; missing keys take the default preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for report files; without it the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock time per suite (reports then differ between runs).
    #[arg(long)]
    pub timings: bool,
}

impl CommonArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = Some(out.display().to_string());
        }
        Ok(config)
    }
}

fn emit(report: &Report, common: &CommonArgs, config: &ExperimentConfig) -> Result<(), HarnessError> {
    match &config.out_dir {
        Some(dir) => {
            let written = write_report(report, dir.as_ref(), common.format)?;
            eprint!("{}", to_text(report));
            for path in written {
                eprintln!("wrote {}", path.display());
            }
        }
        None => print!("{}", render(report, common.format)?),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    let (report, common) = match &cli.command {
        Command::Run(args) => {
            let config = args.common.config()?;
            (run_report(args.suite, &config, args.common.timings), &args.common)
        }
        Command::Sweep(args) => {
            let config = args.common.config()?;
            (run_sweep(args.target, args.levels, &config)?, &args.common)
        }
    };
    emit(&report, common, &common.config()?)?;
    Ok(report.exit_code())
}

/// Parse `args` (program name first), run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("carlab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli =
            Cli::try_parse_from(["carlab", "run", "--suite", "car_algebra", "--seed", "5", "--format", "csv"]).unwrap();
        match cli.command {
            Command::Run(a) => {
                assert_eq!(a.suite, SuiteName::CarAlgebra);
                assert_eq!(a.common.seed, Some(5));
                assert_eq!(a.common.format, Format::Csv);
            }
            Command::Sweep(_) => panic!("wrong subcommand"),
        }
        let cli = Cli::try_parse_from(["carlab", "sweep", "--target", "kraus_n", "--levels", "4"]).unwrap();
        assert!(matches!(cli.command, Command::Sweep(SweepArgs { target: SweepTarget::KrausN, levels: 4, .. })));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["carlab", "run", "--suite", "nonsense"]), 2);
        assert_eq!(main_with_args(["carlab", "sweep", "--target", "kraus_n", "--levels", "2"]), 2);
        assert_eq!(main_with_args(["carlab", "run", "--suite", "no_event", "--config", "/nonexistent/cfg.toml"]), 2);
        assert_eq!(main_with_args(["carlab"]), 2);
    }
}
