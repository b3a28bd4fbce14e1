use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ici_cli::args::Cli::parse();
    match ici_cli::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let record = serde_json::json!({ "error": e.kind(), "messages": e.messages() });
            eprintln!("{record}");
            ExitCode::from(if matches!(e, ici_cli::error::CliError::Config(_)) { 2 } else { 3 })
        }
    }
}
