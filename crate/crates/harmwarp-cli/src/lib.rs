//! Command-line front end: JSON config in, JSON or CSV report out.
//!
//! Exit codes: 0 when the verdict holds (or the command has none), 1 when it
//! fails, 2 on any error, with a JSON error object on stderr.

pub mod commands;
pub mod config;

use clap::Parser;
use commands::{run, CliError, Outcome, Overrides};
use config::{parse_config, Format, RunConfig, COMMANDS};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "harmwarp", version, about = "Harmonic vector fields and maps on warped products I x_f G")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One of classify, solve, check, map-check, oracle, table1, sweep.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(COMMANDS))]
    pub command: String,
    /// Residual tolerance, overriding check.tol.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout (overrides output.path).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Oracle finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
}

fn positive(name: &str, x: Option<f64>) -> Result<(), CliError> {
    match x {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(CliError::Usage(format!("--{name} must be a positive number"))),
        _ => Ok(()),
    }
}

/// Loads and validates a config file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(CliError::Schema)
}

fn execute(args: &Args) -> Result<(Outcome, Format, Option<PathBuf>), CliError> {
    positive("tol", args.tol)?;
    positive("h", args.h)?;
    let cfg = args.config.as_deref().map(load_config).transpose()?;
    let ov = Overrides { tol: args.tol, h: args.h };
    let outcome = run(&args.command, cfg.as_ref(), &ov)?;
    let format = match (&cfg, args.command.as_str()) {
        (_, "table1") => Format::Csv,
        (Some(c), _) => c.output.format,
        (None, _) => Format::Json,
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.path.clone()).map(PathBuf::from));
    Ok((outcome, format, out))
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn main_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return 2;
        }
    };
    match execute(&args) {
        Ok((outcome, format, out)) => {
            let text = outcome.render(format);
            let written = match out {
                Some(p) => std::fs::write(p, text),
                None => stdout.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => outcome.exit_code(),
                Err(e) => {
                    let _ = writeln!(stderr, "{}", CliError::Io(e).to_json());
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            2
        }
    }
}
