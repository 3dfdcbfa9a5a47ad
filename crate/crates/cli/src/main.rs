use std::process::ExitCode;

use clap::Parser;

use mvalign::{run, Cli, Failure};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse(), &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::NothingSolved => log::error!("no object could be solved"),
                Failure::Input(e) => log::error!("{e:#}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
