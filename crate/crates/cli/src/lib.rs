//! The `recurlab` command line: argument parsing, config merging and output.
//! Every number it prints comes from a library call.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::output::{render, requested_format, write_output, Manifest};

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for failures while running an experiment.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit code for malformed command lines.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<recurlab::Error> for CliError {
    fn from(e: recurlab::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the experiment and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// [`dispatch`] with explicit streams.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match try_run(argv.into_iter().map(Into::into).collect(), stdout, stderr) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}\n\nRun `recurlab --help` for usage.");
            EXIT_USAGE
        }
        Err(CliError::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RECURLAB_THREADS") else {
        return Ok(());
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            recurlab::exec::configure_threads(n);
            Ok(())
        }
        _ => Err(CliError::Usage(format!(
            "RECURLAB_THREADS must be a positive integer, got {v:?}"
        ))),
    }
}

fn try_run(
    argv: Vec<OsString>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let argv = config::merge_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return Ok(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            });
        }
    };
    configure_threads()?;
    let common = cli.command.common();
    let format = requested_format(common.emit, common.out.as_deref())?;
    let output = match &cli.command {
        Command::Recur(a) => commands::recur(a, format)?,
        Command::HaarBaseline(a) => {
            let (out, summary) = commands::haar(a)?;
            let _ = writeln!(stderr, "{summary}");
            out
        }
        Command::Amplify(a) => commands::amplify(a)?,
        Command::TensorFactor(a) => commands::tensor_factor(a)?,
        Command::Sternfeld(a) => commands::sternfeld(a)?,
        Command::Nusg(a) => commands::nusg(a)?,
        Command::PaperNumbers(a) => commands::paper_numbers(a)?,
    };
    let manifest = Manifest::new(cli.command.name(), cli.command.flags(), common.seed);
    let text = render(&output, format, &manifest)?;
    write_output(&text, common.out.as_deref(), stdout)?;
    Ok(EXIT_OK)
}
