use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use ksym::commands::{self, GridInput};
use ksym::report::{render_human, RunReport, SystemSummary};
use ksym::schema::load_system_file;
use ksym::selftest::run_selftest;
use ksym::{CliError, CliResult};

/// Batch toolkit for k-symplectic Hamiltonian field theories: classify
/// Cartan symmetries of any order, derive their conserved quantities,
/// and verify conservation symbolically and numerically.
#[derive(Parser)]
#[command(name = "ksym", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the machine-readable JSON report to this path.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the Cartan order of every candidate in a system file.
    Classify {
        file: PathBuf,
        /// Largest order to try (overrides the file's n_max).
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Derive the conserved quantity of a classified candidate.
    Charge {
        file: PathBuf,
        #[arg(long)]
        candidate: String,
        /// Base-point overrides, e.g. --base q_1=1,p_1_1=0
        #[arg(long)]
        base: Option<String>,
    },
    /// Fill a named grid (integrate or sample) and export it as CSV.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        grid: String,
        /// Output CSV path (default: <grid>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check conservation of a candidate's charge along a grid.
    Verify {
        file: PathBuf,
        #[arg(long)]
        candidate: String,
        /// Named grid from the system file.
        #[arg(long)]
        grid: Option<String>,
        /// Previously exported CSV grid.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Numeric tolerance for the pass verdict.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the built-in invariant suites.
    Selftest,
}

fn seed_from_env() -> CliResult<u64> {
    match std::env::var("KSYM_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::Input(format!("KSYM_SEED must be a u64, got `{v}`"))),
        Err(_) => Ok(0xC0FFEE),
    }
}

fn run(command: &Command, seed: u64) -> CliResult<(RunReport, i32)> {
    match command {
        Command::Classify { file, nmax } => {
            let spec = load_system_file(file)?;
            commands::cmd_classify(&spec, *nmax, seed)
        }
        Command::Charge {
            file,
            candidate,
            base,
        } => {
            let spec = load_system_file(file)?;
            commands::cmd_charge(&spec, candidate, base.as_deref(), seed)
        }
        Command::Simulate { file, grid, out } => {
            let spec = load_system_file(file)?;
            commands::cmd_simulate(&spec, grid, out.as_deref(), seed)
        }
        Command::Verify {
            file,
            candidate,
            grid,
            csv,
            tol,
        } => {
            let spec = load_system_file(file)?;
            let input = match (grid, csv) {
                (Some(name), None) => GridInput::Named(name),
                (None, Some(path)) => GridInput::Csv(path),
                _ => {
                    return Err(CliError::Input(
                        "verify needs exactly one of --grid NAME or --csv PATH".into(),
                    ))
                }
            };
            commands::cmd_verify(&spec, candidate, input, *tol, seed)
        }
        Command::Selftest => {
            let st = run_selftest(seed);
            let code = if st.failed == 0 { 0 } else { 2 };
            let mut report = RunReport::new("selftest", seed, SystemSummary::none());
            report.selftest = Some(st);
            Ok((report, code))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let seed = match seed_from_env() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli.command, seed) {
        Ok((report, code)) => {
            print!("{}", render_human(&report));
            // Wall-clock stays out of the JSON document so reports are
            // byte-identical across runs.
            println!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
            if let Some(path) = &cli.json {
                if let Err(e) = std::fs::write(path, report.to_json()) {
                    eprintln!("cannot write report: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
