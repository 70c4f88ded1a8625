use std::process::ExitCode;

use clap::Parser;
use wattbench_cli::{exit_code, resolve_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = resolve_config(&cli).map(|c| c.log_level).unwrap_or_else(|_| "info".into());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
