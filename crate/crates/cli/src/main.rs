use std::process::ExitCode;

use clap::Parser;

use ordgame_cli::{error_report, execute, report_path, write_atomic, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the error code; 2 is reserved for failed checks
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match execute(&cli, &argv).and_then(|outcome| outcome.flush().map(|_| outcome.exit)) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let report = error_report(&argv, &err).to_json();
            let written = match report_path(&cli) {
                Some(path) => write_atomic(path, &report),
                None => {
                    print!("{report}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}
