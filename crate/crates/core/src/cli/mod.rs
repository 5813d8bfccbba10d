//! Command-line driver:
//! `thermolab <classify|greens-check|spectrum|sweep|simulate|report> --config <path> [--out <dir>]`.
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 unsupported
//! problem, 3 numerical failure, 4 acceptance-check failure.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::Error;
use output::Artifacts;

pub use commands::DECAY_CROSS_CHECK;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNSUPPORTED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "thermolab", version, about = "Wave / degenerate-heat system: classification, Green's solutions, spectra, resolvent sweeps, decay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Degeneracy class, int W and the Hilbert-Schmidt norm of the kernel.
    Classify,
    /// Green's solutions, residual refinement ladder and flux bound.
    GreensCheck,
    /// Dense spectrum and spectral abscissa of the discrete generator.
    Spectrum,
    /// Resolvent norms along the imaginary axis.
    Sweep,
    /// Time integration, energy decay and decay-rate fit.
    Simulate,
    /// All of the above into one directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::GreensCheck => "greens-check",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

/// Exit code for an error escaping a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::Io(_) | Error::InvalidArgument(_) | Error::InvalidProfile(_) | Error::InvalidMesh(_) => EXIT_USAGE,
        Error::UnsupportedClass(_) | Error::TooLarge { .. } => EXIT_UNSUPPORTED,
        _ => EXIT_NUMERICAL,
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig, art: &mut Artifacts, out: &mut dyn Write) -> crate::Result<i32> {
    match cmd {
        Command::Classify => commands::classify(cfg, art, out),
        Command::GreensCheck => commands::greens_check(cfg, art, out),
        Command::Spectrum => commands::spectrum_cmd(cfg, art, out),
        Command::Sweep => commands::sweep(cfg, art, out),
        Command::Simulate => commands::simulate_cmd(cfg, art, out),
        Command::Report => report(cfg, art, out),
    }
}

fn report(cfg: &RunConfig, art: &mut Artifacts, out: &mut dyn Write) -> crate::Result<i32> {
    let start = Instant::now();
    let mut worst = EXIT_OK;
    let mut parts = Vec::new();
    for cmd in [Command::Classify, Command::GreensCheck, Command::Spectrum, Command::Sweep, Command::Simulate] {
        writeln!(out, "== {}", cmd.name()).map_err(|e| Error::Io(e.to_string()))?;
        let (code, message) = match dispatch(cmd, cfg, art, out) {
            Ok(code) => (code, None),
            Err(e) => {
                writeln!(out, "error: {e}").map_err(|e| Error::Io(e.to_string()))?;
                (exit_code(&e), Some(e.to_string()))
            }
        };
        worst = worst.max(code);
        parts.push(json!({ "command": cmd.name(), "exit_code": code, "error": message }));
        if cmd == Command::Classify && code == EXIT_UNSUPPORTED {
            break;
        }
    }
    let status = if worst == EXIT_OK { "pass" } else { "fail" };
    art.summary("report.json", "report", status, &parts, start.elapsed().as_secs_f64())?;
    Ok(worst)
}

/// Runs the command line `args` (including the program name), writing
/// human-readable lines to `out` and diagnostics to `err`; returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let cfg = match cli.config.as_deref().map(RunConfig::load).unwrap_or_else(|| Ok(RunConfig::default())) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    // sequential dense kernels keep outputs bit-identical across runs
    faer::set_global_parallelism(faer::Par::Seq);
    let dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut art = match Artifacts::new(dir, &cfg) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    match dispatch(cli.command, &cfg, &mut art, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
