//! `cstsim`: spin-acoustic resonance toolkit command line.
//!
//! Subcommands: `levels`, `spectrum`, `fit`, `cst`. Exit codes: 0 success,
//! 1 configuration/input error, 2 fit failure, 3 undefined trapping
//! frequency.

mod commands;
mod config;
mod output;

use commands::{CliError, CommonOpts};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage: cstsim <levels|spectrum|fit|cst> --config <path> [--out <path>] [--svg <path>] [--envelope <path>]

  levels    level tables vs field plus resonance fields (CSV)
  spectrum  PL-contrast spectrum vs field (CSV, optional --svg plot)
  fit       Fano-line fit of a two-column CSV spectrum (JSON)
  cst       trapping-frequency report with full-model cross-check (JSON)

options:
  --config <path>    configuration file (required)
  --out <path>       write the primary output to a file instead of stdout
  --svg <path>       also render an SVG plot (spectrum only)
  --envelope <path>  also write a JSON result envelope (levels/spectrum)

environment:
  CSTSIM_THREADS     cap for worker threads in field sweeps
";

fn parse_args() -> Result<(String, CommonOpts), String> {
    let mut args = std::env::args().skip(1);
    let Some(command) = args.next() else {
        return Err("missing subcommand".into());
    };
    if command == "--help" || command == "-h" || command == "help" {
        print!("{USAGE}");
        std::process::exit(0);
    }
    if !matches!(command.as_str(), "levels" | "spectrum" | "fit" | "cst") {
        return Err(format!("unknown subcommand '{command}'"));
    }
    let mut config_path: Option<PathBuf> = None;
    let mut out = None;
    let mut svg = None;
    let mut envelope = None;
    while let Some(flag) = args.next() {
        let mut take = |name: &str| -> Result<PathBuf, String> {
            args.next().map(PathBuf::from).ok_or_else(|| format!("{name} requires a path"))
        };
        match flag.as_str() {
            "--config" => config_path = Some(take("--config")?),
            "--out" => out = Some(take("--out")?),
            "--svg" => svg = Some(take("--svg")?),
            "--envelope" => envelope = Some(take("--envelope")?),
            other => return Err(format!("unknown option '{other}'")),
        }
    }
    let Some(config_path) = config_path else {
        return Err("--config <path> is required".into());
    };
    let config_text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("cannot read config '{}': {e}", config_path.display()))?;
    let config_dir = config_path
        .parent()
        .map(PathBuf::from)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((command, CommonOpts { config_text, config_dir, out, svg, envelope }))
}

fn main() -> ExitCode {
    let (command, opts) = match parse_args() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };

    let mut cfg = match config::Config::parse(&opts.config_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let result: Result<i32, CliError> = match command.as_str() {
        "levels" => commands::levels::run(&mut cfg, &opts).map(|()| 0),
        "spectrum" => commands::spectrum::run(&mut cfg, &opts).map(|()| 0),
        "fit" => commands::fit::run(&mut cfg, &opts),
        "cst" => commands::cst::run(&mut cfg, &opts).map(|()| 0),
        _ => unreachable!("validated above"),
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
