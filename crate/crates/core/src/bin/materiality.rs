use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let start = Instant::now();
    let outcome = materiality::cli::run(std::env::args_os());
    if let Some(report) = &outcome.report {
        print!("{report}");
    }
    if let Some(err) = &outcome.error {
        eprintln!("{err}");
    }
    if outcome.report.is_some() {
        eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    }
    ExitCode::from(outcome.code as u8)
}
