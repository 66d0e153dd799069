//! `popdyn`: command-line runner for the population-dynamics simulators.

mod config;
mod error;
mod recipes;
mod runner;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, Simulator};
use error::CliError;
use recipes::PsdArgs;

#[derive(Debug, Parser)]
#[command(name = "popdyn", version, about = "Finite-size population dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-population mesoscopic simulation.
    Meso(CommonArgs),
    /// Coupled mesoscopic populations.
    Multi(CommonArgs),
    /// Microscopic network of escape-noise LIF neurons.
    Micro(CommonArgs),
    /// Deterministic macroscopic integral equation.
    Macro(CommonArgs),
    /// Exact PDMP sample path at a fixed modulating factor.
    Pdmp(CommonArgs),
    /// Coupled pair of PDMP paths with shared randomness.
    Couple(CommonArgs),
    /// Bartlett power spectrum of a trace CSV.
    Psd(PsdArgs),
    /// Mesoscopic full/naive/fixed, microscopic and macroscopic runs plus
    /// spectra for the reference population.
    Fig1 {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the microscopic spike raster.
        #[arg(long)]
        raster: bool,
    },
    /// Reduced-scale invariant suite; exits 0 iff every check passes.
    Selftest,
}

fn simulate(sim: Simulator, common: &CommonArgs) -> Result<(), CliError> {
    let cfg = common.resolve(sim)?;
    let out = common.out_dir(Some(&cfg));
    let runs = runner::run_simulation(sim, &cfg, &out)?;
    for run in &runs {
        let summary: Vec<String> = run.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("seed {}: {}", run.seed, summary.join(" "));
    }
    println!("wrote {}", out.join("manifest.toml").display());
    Ok(())
}

fn dispatch(command: &Command) -> Result<bool, CliError> {
    match command {
        Command::Meso(c) => simulate(Simulator::Meso, c)?,
        Command::Multi(c) => simulate(Simulator::MesoMulti, c)?,
        Command::Micro(c) => simulate(Simulator::Micro, c)?,
        Command::Macro(c) => simulate(Simulator::Macro, c)?,
        Command::Pdmp(c) => simulate(Simulator::Pdmp, c)?,
        Command::Couple(c) => simulate(Simulator::Couple, c)?,
        Command::Psd(args) => recipes::psd(args)?,
        Command::Fig1 { common, raster } => recipes::fig1(common, *raster)?,
        Command::Selftest => return Ok(recipes::selftest()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help/version are not.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        // selftest failure counts as a numerical failure
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("popdyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
