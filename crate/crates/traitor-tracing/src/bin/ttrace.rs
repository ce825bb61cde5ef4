use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(traitor_tracing::harness::cli::run(std::env::args_os()) as u8)
}
