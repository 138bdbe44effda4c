mod args;
mod commands;

use std::process::ExitCode;

use args::{Cli, Command, SimulateCommand};
use clap::Parser;

/// Exit codes: 1 I/O, 2 invalid input, 3 infeasible bounds, 4 fit did not converge.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn validation(msg: &str) -> Self {
        Self { code: 2, error: anyhow::anyhow!(msg.to_owned()) }
    }

    pub fn not_converged() -> Self {
        Self { code: 4, error: anyhow::anyhow!("fit did not converge within the iteration budget") }
    }
}

impl From<crashlens::Error> for Failure {
    fn from(e: crashlens::Error) -> Self {
        use crashlens::Error as E;
        let code = match &e {
            E::Io(_) => 1,
            E::Csv(c) if c.is_io_error() => 1,
            E::Infeasible(_) => 3,
            _ => 2,
        };
        Self { code, error: e.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let outcome = match &cli.command {
        Command::Minima(a) => commands::minima(a),
        Command::Fit(a) => commands::fit_command(a),
        Command::Simulate(SimulateCommand::Lppl(a)) => commands::lppl(a),
        Command::Simulate(SimulateCommand::Path(a)) => commands::path(a),
        Command::Simulate(SimulateCommand::Nocrash(a)) => commands::nocrash(a),
        Command::Simulate(SimulateCommand::Lattice(a)) => commands::lattice(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
