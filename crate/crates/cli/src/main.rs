use std::process::ExitCode;

use clap::{Parser, Subcommand};

use covert_qmac_cli::commands::{
    cmd_check, cmd_lemmas, cmd_region, cmd_simulate, CheckArgs, LemmasArgs, RegionArgs, SimulateArgs,
};

/// Covert communication over a quantum MAC with a helper.
#[derive(Parser)]
#[command(name = "covert-qmac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a channel spec and print its idle state.
    Check(CheckArgs),
    /// Search covert input distributions and write the rate region.
    Region(RegionArgs),
    /// Monte Carlo decoding error and warden statistics per blocklength.
    Simulate(SimulateArgs),
    /// Randomised checks of the operator inequalities.
    Lemmas(LemmasArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Region(a) => cmd_region(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Lemmas(a) => cmd_lemmas(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
