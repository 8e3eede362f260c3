// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use coherent_bridge::cli::{self, error_exit_code, write_atomic, Command, RunConfig, EXIT_DOMAIN, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "coherent-bridge", version, about = "Coherent-state quadrature, dynamics and bridge checks")]
struct Args {
    /// TOML run configuration; defaults reproduce the reference checks.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed recorded in the run metadata for randomized suites.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Resolution-of-identity defect on the default probe states.
    CheckIdentity,
    /// Fubini-Study metric on a lattice of phase points.
    Metric,
    /// Lower symbol and its correction to the classical expression.
    Symbol,
    /// Classical, semi-classical or quantum time evolution.
    Evolve,
    /// Semi-classical versus classical deviation across decreasing hbar.
    Sweep,
    /// Bridge reconstruction of both action integrands along an orbit.
    Bridge,
    /// Half-line spectrum and its level gaps.
    Spectrum,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CheckIdentity => Command::CheckIdentity,
            Cmd::Metric => Command::Metric,
            Cmd::Symbol => Command::Symbol,
            Cmd::Evolve => Command::Evolve,
            Cmd::Sweep => Command::Sweep,
            Cmd::Bridge => Command::Bridge,
            Cmd::Spectrum => Command::Spectrum,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd: Command = args.command.into();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_DOMAIN as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(EXIT_DOMAIN as u8);
        }
    }
    let cfg = match &args.config {
        Some(path) => RunConfig::from_path(path),
        None => Ok(RunConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let result = cli::run(cmd, &cfg, &args.out);
    let code = cli::exit_code(&result);
    match &result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            if !outcome.passed {
                eprintln!("{}: tolerance not met", cmd.name());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    // timestamps live only here, never in the artifacts
    if std::fs::create_dir_all(&args.out).is_ok() {
        let meta = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": cmd.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "config_path": args.config.as_ref().map(|p| p.display().to_string()),
            "threads": args.threads.unwrap_or_else(rayon::current_num_threads),
            "seed": args.seed,
            "started_unix": started,
            "elapsed_seconds": clock.elapsed().as_secs_f64(),
            "exit_code": code,
        });
        let path = args.out.join(format!("{}.meta.json", cmd.name()));
        let _ = write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &meta).map_err(std::io::Error::other)?;
            Ok(())
        });
    }
    ExitCode::from(code as u8)
}
