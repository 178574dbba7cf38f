mod args;
mod config;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::Problems;
use run::Outcome;

const EXIT_ERROR: u8 = 1;
const EXIT_REJECT: u8 = 2;

fn dispatch(command: Command) -> Result<Outcome, Problems> {
    let lib = |r: markov_gof::Result<Outcome>| r.map_err(|e| Problems(vec![e.to_string()]));
    match command {
        Command::Test(a) => lib(run::test(config::test_run(&a)?)),
        Command::Simulate(a) => lib(run::simulate_cmd(config::simulate_run(&a)?)),
        Command::Mc(a) => lib(run::mc(config::mc_run(&a)?)),
        Command::ReproduceTable(a) => lib(run::reproduce_table(config::table_run(&a)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses status 2 for usage errors, which is our "reject" code
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR),
            };
        }
    };
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_ERROR);
    }
    match markov_gof::par::with_workers(cli.workers, || dispatch(cli.command)) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(EXIT_REJECT),
        Err(Problems(list)) => {
            for msg in list {
                eprintln!("error: {msg}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}
