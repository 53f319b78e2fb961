//! The `proctens` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::acceptance;
use crate::config::RunConfig;
use crate::error::Error;
use crate::report::run_config;
use crate::scenarios::registry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "proctens", version, about = "Process tensors of open quantum dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the analyses listed in a config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// report path; overrides the config's `output`, stdout if neither is set
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in scenarios and their parameters
    ListScenarios,
    /// Run the acceptance corpus
    Check,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Caps the worker pool from `PROCTENS_THREADS`.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PROCTENS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PROCTENS_THREADS must be a positive integer, got '{raw}'"))?;
    // a pool built earlier in the process already fixes the size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(config: PathBuf, out: Option<PathBuf>) -> i32 {
    let cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("proctens: {e}");
            return EXIT_CONFIG;
        }
    };
    let text = match run_config(&cfg).and_then(|r| r.to_json()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("proctens: {e}");
            return exit_code(&e);
        }
    };
    match out.or_else(|| cfg.output.clone()) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("proctens: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    EXIT_OK
}

fn list_scenarios() -> i32 {
    for info in registry() {
        let params: Vec<String> = info.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let seed = if info.needs_seed { " (seed required)" } else { "" };
        println!("{:<18} {}{seed}", info.name, info.summary);
        if !params.is_empty() {
            println!("{:<18} {}", "", params.join(" "));
        }
    }
    EXIT_OK
}

fn check() -> i32 {
    let outcomes = acceptance::run_all(|o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_ACCEPTANCE
    }
}

/// Parses `args` (program name first) and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("proctens: {msg}");
        return EXIT_CONFIG;
    }
    match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::ListScenarios => list_scenarios(),
        Command::Check => check(),
    }
}
