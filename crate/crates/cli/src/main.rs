use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qconv_cli::commands::{self, GenDataArgs, GradcheckArgs, ReproArgs, TrainArgs};
use qconv_cli::{init_threads, CliError};

/// Hybrid quantum-classical CNN simulator and trainer.
///
/// Exit codes: 0 success, 1 configuration error, 2 runtime error or
/// divergence (and a failed gradcheck), 3 I/O error. QCONV_THREADS caps the
/// worker threads (0 or unset = all cores).
#[derive(Parser)]
#[command(name = "qconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Tetris dataset as JSON lines
    GenData(GenDataArgs),
    /// Train one model/architecture/label combination over several seeds
    Train(TrainArgs),
    /// Compare shift-rule gradients with finite differences
    Gradcheck(GradcheckArgs),
    /// Run the qccnn/cnn × one/two-layer comparison and write panel CSVs
    Repro(ReproArgs),
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    init_threads()?;
    let text = match cli.command {
        Command::GenData(a) => commands::gen_data(&a)?,
        Command::Train(a) => commands::train(&a)?,
        Command::Repro(a) => commands::repro(&a)?,
        Command::Gradcheck(a) => {
            let (report, text) = commands::gradcheck(&a)?;
            print!("{text}");
            return Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            });
        }
    };
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qconv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
