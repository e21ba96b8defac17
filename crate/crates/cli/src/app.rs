//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Written};
use crate::config::{parse_table, resolve, Command, Overrides};
use crate::error::CliError;
use crate::table::read_provenance;

/// Persistence of populations on a randomly shifting habitat patch.
#[derive(Debug, Parser)]
#[command(name = "ide-persist", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; keys not given fall back to the command's defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed of the environment streams.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Monte Carlo replicates (numerics.replicates).
    #[arg(long, global = true, value_name = "M")]
    replicates: Option<usize>,
    /// Generations per run (numerics.horizon).
    #[arg(long, global = true, value_name = "T")]
    horizon: Option<usize>,
    /// Grid cells (numerics.grid_points).
    #[arg(long = "grid-points", global = true, value_name = "N")]
    grid_points: Option<usize>,
    /// Skip SVG charts.
    #[arg(long = "no-svg", global = true)]
    no_svg: bool,
    /// Override any config key, e.g. `--set env.c_km_per_gen=4.0`.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// λ₀ and its dispersal-success approximations over a variance sweep.
    Eigen,
    /// Critical shifting speed c* over a variance sweep (Gaussian, σ ≡ 0).
    CriticalSpeed,
    /// Monte Carlo Λ for Gaussian and Laplace kernels over a variance sweep.
    LambdaSweep,
    /// Λ along mean-preserving spreads of σ and of r.
    VarianceEffect,
    /// Nonlinear trajectories with persistence/extinction classification.
    Simulate,
    /// Regenerate every output of a run from the config block embedded in FILE.
    Rerun {
        /// A CSV (or summary) file written by a previous run.
        file: PathBuf,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            replicates: self.replicates,
            horizon: self.horizon,
            grid_points: self.grid_points,
            no_svg: self.no_svg,
            set: self.set.clone(),
        }
    }

    fn reproducibility_flags(&self) -> Vec<&'static str> {
        let mut used = Vec::new();
        if self.config.is_some() {
            used.push("--config");
        }
        if self.seed.is_some() {
            used.push("--seed");
        }
        if self.replicates.is_some() {
            used.push("--replicates");
        }
        if self.horizon.is_some() {
            used.push("--horizon");
        }
        if self.grid_points.is_some() {
            used.push("--grid-points");
        }
        if !self.set.is_empty() {
            used.push("--set");
        }
        used
    }
}

fn execute(cli: Cli) -> Result<Written, CliError> {
    let (command, file) = match &cli.command {
        Sub::Eigen => (Command::Eigen, None),
        Sub::CriticalSpeed => (Command::CriticalSpeed, None),
        Sub::LambdaSweep => (Command::LambdaSweep, None),
        Sub::VarianceEffect => (Command::VarianceEffect, None),
        Sub::Simulate => (Command::Simulate, None),
        Sub::Rerun { file } => {
            let used = cli.common.reproducibility_flags();
            if !used.is_empty() {
                return Err(CliError::Config(format!(
                    "rerun takes its configuration from {}; drop {}",
                    file.display(),
                    used.join(", ")
                )));
            }
            let text = fs::read_to_string(file).map_err(CliError::io(file))?;
            let origin = file.display().to_string();
            let prov = read_provenance(&text, &origin)?;
            let table = parse_table(&prov.config_toml, &origin)?;
            (prov.command, Some(table))
        }
    };
    let file = match (&cli.common.config, file) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Some(parse_table(&text, &path.display().to_string())?)
        }
        (_, f) => f,
    };
    let cfg = resolve(command, file, &cli.common.overrides())?;
    commands::run(command, &cfg)
}

/// Runs the tool on `args` (including the program name) and maps errors to
/// exit codes: 0 ok, 1 computation error, 2 config error.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(written) => {
            for path in &written.files {
                println!("wrote {}", path.display());
            }
            for note in &written.notes {
                println!("{note}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
