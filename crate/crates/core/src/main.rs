use std::process::ExitCode;

fn main() -> ExitCode {
    match harnack_lab::cli::run_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
