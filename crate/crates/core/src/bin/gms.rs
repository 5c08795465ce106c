use std::process::ExitCode;

use clap::Parser;
use gms::cli::{self, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(args) => cli::cmd_sweep(args).map(|report| {
            eprintln!(
                "wrote {} rows to {}",
                report.curve.records.len(),
                report.csv_path.display()
            );
        }),
        Command::Round(args) => cli::cmd_round(args).map(|trace| {
            println!("{}", serde_json::to_string_pretty(&trace).expect("trace serializes"));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
