pub mod args;
pub mod commands;
pub mod manifest;
pub mod svg;
pub mod synth;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;

/// Parses `args` (program name first) and runs the subcommand. Usage and
/// data errors exit with 1, file-system errors with 2.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_VALIDATION })
        }
    }
}
