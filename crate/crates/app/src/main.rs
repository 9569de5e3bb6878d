use std::process::ExitCode;

fn main() -> ExitCode {
    cryscreen_app::cli::run(std::env::args_os())
}
