use std::process::ExitCode;

use clap::Parser;
use tqm_core::cli::{execute, threads_from_env, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env = std::env::var(THREADS_ENV).ok();
    let result = threads_from_env(env.as_deref()).and_then(|threads| execute(cli, threads, &mut std::io::stdout()));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
