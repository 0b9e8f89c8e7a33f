use std::process::ExitCode;

fn main() -> ExitCode {
    match eval_cli::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
