//! Command-line front-end for the `convbeam` toolkit: scene simulation,
//! mask-based beamforming, metric evaluation and comparison reports.

pub mod enhance;
pub mod error;
pub mod evaluate;
pub mod report;
pub mod simulate;
pub mod wav;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult, EXIT_DATA, EXIT_INPUT};

#[derive(Debug, Parser)]
#[command(name = "convbeam", version, about = "Mask-based convolutional beamforming toolkit")]
pub struct Cli {
    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene and write its components as WAV files
    Simulate(simulate::SimulateArgs),
    /// Enhance a multichannel recording
    Enhance(enhance::EnhanceArgs),
    /// Score estimates against a clean reference
    Evaluate(evaluate::EvaluateArgs),
    /// Run simulate, enhance and evaluate over a scene set
    Report(report::ReportArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        // a pool that is already initialized keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Simulate(args) => simulate::simulate(&args).map(|_| ()),
        Command::Enhance(args) => enhance::run_enhance(&args),
        Command::Evaluate(args) => {
            print!("{}", evaluate::evaluate(&args)?);
            Ok(())
        }
        Command::Report(args) => report::report(&args).map(|_| ()),
    }
}
