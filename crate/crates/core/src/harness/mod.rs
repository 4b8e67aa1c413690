//! Experiment orchestration: configuration, parallel Monte Carlo sweeps, CSV
//! output and the command-line front end.

mod cli;
mod config;
mod records;
mod sweep;
mod validate;

pub use cli::{cli_main, Cli, Command};
pub use config::{
    CapacityChannel, CapacitySettings, DetectorKind, EmgsSettings, EslsSettings,
    ExperimentConfig, OfdmSettings, SystemKind,
};
pub use records::{emit_csv, parse_csv, write_records, BerRecord, CapacityRecord, CsvHeader};
pub use sweep::{
    noise_variance, run_ber_sweep, run_capacity_sweep, run_ofdm_sweep, substream, SweepOptions,
};
pub use validate::{run_validation, Check};
