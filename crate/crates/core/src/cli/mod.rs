//! Command-line front end: `run`, `validate`, `rays`, `mie`, `scaling`, `go`.
//!
//! Exit status is 0 on success, 1 when `validate` finds a failing check,
//! 2 for configuration errors, 3 for geometry/certification failures and 4
//! for numerical failures. Errors also print one JSON line on stderr.

pub mod commands;
pub mod config;
pub mod records;
pub mod validate;

use crate::error::{Error, Result};
use clap::{Args, Parser, Subcommand};
use config::{OutputFormat, RunConfig};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "msbie", version, about = "High-frequency multiple scattering by sound-hard convex obstacles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file (defaults apply when omitted)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides MSBIE_OUT_DIR and the config)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Record file format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Log progress to stderr
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the iteration and write one record per step
    Run(CommonArgs),
    /// Run the built-in check suite and print a JSON report
    Validate(CommonArgs),
    /// Broken rays, phases and partition on a uniform grid
    Rays(CommonArgs),
    /// Mie-series boundary values of a circle
    Mie(CommonArgs),
    /// Scaling report over the configured k list
    Scaling(CommonArgs),
    /// Leading geometrical-optics amplitude against the computed field
    Go(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Run(a)
            | Command::Validate(a)
            | Command::Rays(a)
            | Command::Mie(a)
            | Command::Scaling(a)
            | Command::Go(a) => a,
        }
    }
}

/// One-line machine-readable error report.
pub fn error_line(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "exit": e.exit_code(), "message": e.to_string() }).to_string()
}

/// Parse `args`, run the command and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Runs a parsed command; `Ok` carries the exit status.
pub fn execute(cli: &Cli) -> Result<i32> {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a pool already built by an earlier call in this process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load_config(common)?;
    let out = cfg.out_dir(common.out.as_deref());
    let format = common.format.unwrap_or(cfg.run.format);
    match &cli.command {
        Command::Run(_) => {
            let summary = commands::cmd_run(&cfg, &out, format)?;
            if let Some(m) = summary.resumed_from {
                println!("resumed after record {m}");
            }
            println!("{} records in {}", summary.records.len(), out.display());
            Ok(0)
        }
        Command::Validate(_) => {
            let scene = cfg.scene.to_scene()?;
            let report = validate::run_suite(&cfg.validate, &scene);
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
            println!("{text}");
            Ok(if report.all_passed { 0 } else { 1 })
        }
        Command::Rays(_) => print_written(commands::cmd_rays(&cfg, &out)?, &out),
        Command::Mie(_) => print_written(commands::cmd_mie(&cfg, &out)?, &out),
        Command::Scaling(_) => print_written(commands::cmd_scaling(&cfg, &out)?, &out),
        Command::Go(_) => print_written(commands::cmd_go(&cfg, &out)?, &out),
    }
}

fn print_written(name: String, out: &std::path::Path) -> Result<i32> {
    println!("{}", out.join(name).display());
    Ok(0)
}
