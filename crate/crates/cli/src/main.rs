//! `skewlink` command-line front end.
//!
//! Exit status: 0 on success, 1 for load or configuration errors, 2 when a
//! report was produced but some fit did not converge.

mod args;
mod commands;
mod error;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, OutputArgs};
use commands::Outcome;
use error::CliError;

fn output_of(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Fit(a) => &a.output,
        Command::Bayes(a) => &a.output,
        Command::Multinomial(a) => &a.output,
        Command::Compare(a) => &a.output,
        Command::Reproduce(a) => &a.output,
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Bayes(a) => commands::bayes(a),
        Command::Multinomial(a) => commands::multinomial(a),
        Command::Compare(a) => commands::compare_cmd(a),
        Command::Reproduce(a) => commands::reproduce(a),
    }
}

fn emit(outcome: &Outcome, out: &OutputArgs) -> Result<(), CliError> {
    let text = outcome.report.render(out.format)?;
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|o| emit(&o, output_of(&cli.command)).map(|()| o.converged));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("skewlink: at least one fit did not converge; see the report");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("skewlink: {e}");
            ExitCode::from(1)
        }
    }
}
