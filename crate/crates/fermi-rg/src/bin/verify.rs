//! Verification runner: loads a JSON config, runs the requested suites, and
//! writes deterministic reports.
//!
//! Exit codes: 0 all asserted suites pass, 1 at least one failed,
//! 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fermi_rg::suites::{self, SuiteConfig};

#[derive(Parser)]
#[command(
    name = "verify",
    about = "Run the exact-identity, inequality and scaling suites"
)]
struct Cli {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Suite ids to run (repeatable); overrides the config list.
    #[arg(long = "suite")]
    suites: Vec<String>,

    /// Output directory for summary.json, records.json and checks.csv.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// List the available suites and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        println!("{:<30} description", "suite");
        for id in suites::SUITE_IDS {
            println!("{id:<30} {}", suites::describe(id));
        }
        return ExitCode::SUCCESS;
    }

    let mut cfg = match &cli.config {
        Some(path) => match SuiteConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        },
        None => SuiteConfig::default(),
    };
    if !cli.suites.is_empty() {
        cfg.suites = cli.suites.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e}");
        return ExitCode::from(2);
    }

    let workers: usize = std::env::var("VERIFY_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);

    let out_dir = cli
        .out
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("reports"));

    let reports = suites::run_all(&cfg, workers.max(1));
    match suites::emit_report(&reports, &out_dir, &cfg.config_hash(), cfg.seed) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("report error: {e}");
            return ExitCode::from(2);
        }
    }
}
