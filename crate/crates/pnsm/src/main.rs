use std::process::ExitCode;

use clap::Parser;
use pnsm::cli::{Cli, Command};
use pnsm::commands::{self, report_error};
use pnsm::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if n == 0 {
            report_error(&CliError::Usage("--threads must be at least 1".into()));
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let outcome = match cli.command {
        Command::Run(cmd) => commands::execute(cmd),
        Command::Replay(r) => commands::replay(&r.manifest, r.out),
    };
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
