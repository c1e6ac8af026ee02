use clap::Parser;

use curvprobe::cli::{configure_threads, execute, render, Cli};
use curvprobe::report::VerificationReport;

fn main() {
    let cli = Cli::parse();
    let report = match configure_threads() {
        Ok(()) => execute(&cli),
        Err(e) => VerificationReport::error(cli.command.name(), e.to_string()),
    };
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    print!("{}", render(&cli, &report));
    std::process::exit(report.exit_code());
}
