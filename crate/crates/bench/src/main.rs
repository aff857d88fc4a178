use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mtaar_harness::cli::run(std::env::args_os()))
}
