//! Command-line front end. Every command writes its outputs plus a
//! `manifest.json` into `--out`.
//!
//! Exit codes: 0 on success, 2 on bad arguments or invalid input, 1 on
//! internal failure.

mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::calibration::Tier;
use crate::error::{Error, Result};
use crate::lattice::Parity;

pub use commands::{CalibrateConfig, HoldoutRunConfig, LooRunConfig, SimulateAsset, SimulateConfig};
pub use manifest::{RunManifest, MANIFEST_FILE};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "synthvol", version, about = "Synthetic American-option markets with emergent IV surfaces")]
pub struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Option ladder CSV.
    #[arg(long)]
    pub ladder: PathBuf,
    /// Ticker-to-sector CSV.
    #[arg(long)]
    pub sectors: PathBuf,
    /// Earnings calendar CSV.
    #[arg(long)]
    pub earnings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LatticeArg {
    Crr,
    Lr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    American,
    European,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a shape tier to a ladder and report RMSE.
    Calibrate {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// parametric, global-nn, sector-nn or per-ticker-nn.
        #[arg(long)]
        tier: Tier,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SYNTHVOL_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Temporal holdout under the three feature/exclusion configurations.
    Holdout {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SYNTHVOL_SEED")]
        seed: Option<u64>,
    },
    /// Leave one capture date out and score it per sector.
    Loo {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Held-out capture date (YYYY-MM-DD).
        #[arg(long)]
        date: NaiveDate,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SYNTHVOL_SEED")]
        seed: Option<u64>,
    },
    /// Dollar pricing errors of a fitted model on one capture date.
    PriceReport {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Model bundle written by `calibrate`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        date: NaiveDate,
        #[arg(long, value_enum, default_value = "lr")]
        lattice: LatticeArg,
        #[arg(long, default_value_t = 201)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raw JumpHMM price paths, optionally copula-coupled.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SYNTHVOL_SEED")]
        seed: Option<u64>,
    },
    /// Forward simulation of short-option P&L with daily repricing.
    Scenario {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SYNTHVOL_SEED")]
        seed: Option<u64>,
    },
    /// Finite-difference Greeks of one contract.
    Greeks {
        #[arg(long)]
        spot: f64,
        #[arg(long)]
        strike: f64,
        /// Trading days to expiry.
        #[arg(long)]
        dte: f64,
        #[arg(long)]
        vol: f64,
        #[arg(long)]
        parity: Parity,
        #[arg(long, value_enum, default_value = "american")]
        style: StyleArg,
        #[arg(long, default_value_t = crate::lattice::DEFAULT_RATE)]
        rate: f64,
        #[arg(long, value_enum, default_value = "lr")]
        lattice: LatticeArg,
        #[arg(long, default_value_t = 201)]
        steps: usize,
        /// Also write `greeks.json` and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_INTERNAL
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| commands::dispatch(cli.command))
        }
        None => commands::dispatch(cli.command),
    }
}

/// Versioned JSON config.
pub trait Versioned {
    fn schema_version(&self) -> u32;
}

pub fn read_config<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T> {
    let json = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
    let c: T = serde_json::from_str(&json)?;
    crate::error::ensure(c.schema_version() == CONFIG_SCHEMA_VERSION, || {
        format!("{}: unsupported schema version {}", path.display(), c.schema_version())
    })?;
    Ok(c)
}
