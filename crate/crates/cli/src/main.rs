use std::process::ExitCode;

fn main() -> ExitCode {
    geoprobe_cli::run(std::env::args_os())
}
