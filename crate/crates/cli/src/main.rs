mod commands;
mod config;
mod format;
mod spec;

use std::io::Write;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use commands::{CmdError, Outcome, EXIT_USAGE};
use config::{Cli, Command, OutputFormat, RunConfig};

/// Caps the global rayon pool when `MIXGEO_THREADS` is set.
fn configure_threads() -> Result<usize, CmdError> {
    match std::env::var("MIXGEO_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CmdError::usage(format!("MIXGEO_THREADS must be a positive integer, got '{v}'")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CmdError::usage(format!("cannot size thread pool: {e}")))?;
            Ok(n)
        }
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn render(outcome: &Outcome, fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Json => format::to_json(&outcome.report),
        OutputFormat::Csv => outcome.csv.clone().unwrap_or_else(|| format::flatten_csv(&outcome.report)),
        OutputFormat::Text => outcome.text.clone(),
    }
}

fn run(cli: Cli) -> Result<i32, CmdError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let threads = configure_threads()?;
    let default_format = match cli.command {
        Command::Profile { .. } => OutputFormat::Csv,
        _ => OutputFormat::Text,
    };
    let cfg = RunConfig::resolve(cli.command.common(), default_format).map_err(|e| CmdError::usage(e.to_string()))?;
    let outcome = match &cli.command {
        Command::Analyze(_) => commands::analyze(&cfg)?,
        Command::Profile { quantity, .. } => commands::profile(&cfg, *quantity)?,
        Command::Verify(_) => commands::verify(&cfg)?,
        Command::CanonicalLink(_) => commands::canonical(&cfg)?,
        Command::Decompose(_) => commands::decompose(&cfg)?,
        Command::SlideCheck(_) => commands::slide_check(&cfg)?,
    };
    let body = render(&outcome, cfg.format);
    match &cfg.out {
        Some(path) => {
            let io = |e: std::io::Error| CmdError { code: commands::EXIT_EVAL, message: format!("{}: {e}", path.display()) };
            format::write_atomic(path, &body).map_err(io)?;
            // run metadata lives only here so data files stay byte-identical
            let meta = json!({
                "schema": 1,
                "tool": "mixgeo",
                "version": env!("CARGO_PKG_VERSION"),
                "command": cli.command.name(),
                "args": std::env::args().skip(1).collect::<Vec<_>>(),
                "format": cfg.format.as_str(),
                "output": path.display().to_string(),
                "exit_code": outcome.code,
                "threads": threads,
                "started_unix_ms": started.duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0),
                "elapsed_ms": clock.elapsed().as_secs_f64() * 1e3,
            });
            format::write_atomic(&format::sidecar_path(path), &format::to_json(&meta)).map_err(io)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(body.as_bytes());
            let _ = out.flush();
        }
    }
    if let Some(d) = &outcome.diagnostic {
        eprintln!("mixgeo: {d}");
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("mixgeo: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
