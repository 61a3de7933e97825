use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use rdlab_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(failure), _) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.kind.exit_code() as u8)
        }
        (Ok(()), Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
