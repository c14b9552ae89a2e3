//! The `bnlu` command line. [`run`] is the whole program minus process
//! plumbing, so tests drive it in-process.

pub mod args;
pub mod commands;
pub mod error;

use std::ffi::OsString;
use std::io::{BufRead, Write};

use clap::Parser;

use args::{Cli, Command};
use error::CliResult;

pub struct Streams<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

fn dispatch(command: &Command, io: &mut Streams<'_>) -> CliResult {
    match command {
        Command::DataValidate(a) => commands::data_validate(a, io.stdout),
        Command::Train(a) => commands::train(a, io.stdout),
        Command::Evaluate(a) => commands::evaluate(a, io.stdout),
        Command::Ablate(a) => commands::ablate(a, io.stdout),
        Command::Serve(a) => commands::serve(a, io.stdout),
        Command::Shell(a) => commands::shell(a, io.stdin, io.stdout),
        Command::GenCorpus(a) => commands::gen_corpus(a, io.stdout),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code: 0 success, 1 data or runtime failure, 2 usage error.
pub fn run<I, T>(argv: I, io: &mut Streams<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            let _ = write!(io.stdout, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let headline = lines.next().unwrap_or_default().trim_start_matches("error:").trim();
            let _ = writeln!(io.stderr, "error:usage: {headline}");
            for line in lines {
                let _ = writeln!(io.stderr, "{line}");
            }
            return 2;
        }
    };
    match dispatch(&cli.command, io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "{e}");
            e.category.exit_code()
        }
    }
}
