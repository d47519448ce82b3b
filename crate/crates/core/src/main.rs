use std::process::ExitCode;

fn main() -> ExitCode {
    let code = worldline_lab::cli::main_with_args(std::env::args_os());
    ExitCode::from(code)
}
