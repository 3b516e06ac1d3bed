use std::io;
use std::process::ExitCode;

use wdm_ep::cli::{parse_config, run_experiment, ConfigError};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args()) {
        Ok(cfg) => cfg,
        Err(ConfigError::Help(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run_experiment(&cfg, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
