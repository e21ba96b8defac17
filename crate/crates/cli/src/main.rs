use std::process::ExitCode;

fn main() -> ExitCode {
    ide_persist_cli::run_cli(std::env::args_os())
}
