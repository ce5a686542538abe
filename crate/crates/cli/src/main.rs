mod args;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use run::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (result, out) = match &cli.command {
        Command::Sum(a) => (run::sum(a), &a.output.out),
        Command::Table(a) => (run::table(a), &a.output.out),
        Command::Limits(a) => (run::limits(a), &a.output.out),
        Command::Verify(a) => (run::verify(a), &a.output.out),
        Command::Oracle(a) => (run::oracle(a), &a.output.out),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(f) => return report(&f),
    };
    let written = match out {
        Some(path) => std::fs::write(path, &outcome.text),
        None => std::io::stdout().lock().write_all(outcome.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("irwin: cannot write output: {e}");
        return ExitCode::from(1);
    }
    match outcome.failure {
        Some(f) => report(&f),
        None => ExitCode::SUCCESS,
    }
}

fn report(f: &Failure) -> ExitCode {
    let msg = match f {
        Failure::Usage(m) | Failure::NotConverged(m) | Failure::Check(m) => m,
    };
    eprintln!("irwin: {msg}");
    ExitCode::from(f.exit_code() as u8)
}
