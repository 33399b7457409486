mod commands;
mod config;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let started = Instant::now();
    match commands::dispatch(&cli) {
        Ok(outcome) => {
            let report = json!({
                "command": cli.command.name(),
                "config": cli.echo(),
                "results": outcome.results,
                "check": outcome.check,
                "wall_clock_ms": started.elapsed().as_millis() as u64,
                "version": env!("CARGO_PKG_VERSION"),
            });
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(path) = &cli.opts.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            println!("{text}");
            match outcome.check {
                Some(false) => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
