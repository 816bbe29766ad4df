use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bpmf_cli::run(std::env::args_os()))
}
