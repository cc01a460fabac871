use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(homcell::cli::main_impl() as u8)
}
