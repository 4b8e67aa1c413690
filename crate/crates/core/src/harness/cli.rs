use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::config::ExperimentConfig;
use super::records::{emit_csv, write_records, CsvHeader};
use super::sweep::{run_ber_sweep, run_capacity_sweep, run_ofdm_sweep, SweepOptions};
use super::validate::run_validation;
use crate::Result;

#[derive(Debug, Parser)]
#[command(
    name = "atomic-mimo",
    version,
    about = "Monte Carlo link simulation for Rydberg atomic receivers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BER sweep of a MIMO link
    Ber(RunArgs),
    /// PRSS capacity and envelope mutual information sweep
    Capacity(RunArgs),
    /// BER sweep of a single-antenna OFDM link
    Ofdm(RunArgs),
    /// Fast invariant self-check
    Validate {
        /// Worker threads (default: all cores)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Override the configured master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress per-point progress on stderr
    #[arg(long)]
    pub quiet: bool,
}

/// Parse `argv`, run, and return the process exit code: 0 on success, 1 on a
/// usage or configuration error, 2 on a runtime failure.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Ber(args) => sweep(&args, run_ber_sweep),
        Command::Ofdm(args) => sweep(&args, run_ofdm_sweep),
        Command::Capacity(args) => sweep(&args, run_capacity_sweep),
        Command::Validate { jobs } => {
            let started = Instant::now();
            let checks = run_validation(jobs.map(|j| j as usize));
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {:<28} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            println!("{} checks in {:.1}s", checks.len(), started.elapsed().as_secs_f64());
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn sweep<T, F>(args: &RunArgs, f: F) -> Result<i32>
where
    T: CsvHeader + Serialize,
    F: Fn(&ExperimentConfig, &SweepOptions) -> Result<Vec<T>>,
{
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let opts = SweepOptions {
        jobs: args.jobs.map(|j| j as usize),
        progress: !args.quiet,
    };
    let records = f(&cfg, &opts)?;
    match &args.out {
        Some(path) => emit_csv(&records, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_records(&records, &mut lock, Path::new("<stdout>"))?;
            let _ = lock.flush();
        }
    }
    Ok(0)
}
