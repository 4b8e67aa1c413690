//! CSV persistence for sweep results.
//!
//! BER files carry the twelve identity and count columns first, then the
//! confidence half-width, the comparability group and the wall time. Timing is
//! always the last column so reproducibility checks can drop it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_simulated: u64,
    pub trials: u64,
    pub system: String,
    pub detector: String,
    pub n_tx: usize,
    pub k_rx: usize,
    pub modulation: String,
    pub seed: u64,
    pub config_hash: String,
    /// 95% normal-approximation half-width on `ber`.
    pub ci_half_width: f64,
    pub comparability_group: String,
    pub wall_time_s: f64,
}

impl BerRecord {
    /// `1.96 sqrt(p (1 - p) / n)`.
    pub fn confidence_half_width(bit_errors: u64, bits: u64) -> f64 {
        if bits == 0 {
            return f64::NAN;
        }
        let p = bit_errors as f64 / bits as f64;
        1.96 * (p * (1.0 - p) / bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub snr_db: f64,
    /// Linear-model capacity of the de-spread PRSS link, bits per channel use.
    pub c_prss: f64,
    /// Closed-form envelope mutual information summed over receivers.
    pub c_env: f64,
    /// Closed-form single-link envelope mutual information at the per-receiver
    /// energy `G P / N`.
    pub mi_scalar: f64,
    /// Monte Carlo estimate of the same single-link quantity; empty when
    /// disabled.
    pub mi_scalar_mc: Option<f64>,
    pub channel: String,
    pub n_tx: usize,
    pub k_rx: usize,
    pub g_atom_db: f64,
    pub seed: u64,
    pub config_hash: String,
    pub wall_time_s: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| {
        if source.is_io_error() {
            if let csv::ErrorKind::Io(e) = source.into_kind() {
                return Error::Io {
                    path: path.to_path_buf(),
                    source: e,
                };
            }
            unreachable!("is_io_error implies an Io kind");
        }
        Error::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Write `records` with a header row, to `out` or to the file at `path`.
pub fn write_records<T: CsvHeader + Serialize, W: std::io::Write>(
    records: &[T],
    out: W,
    path: &Path,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::COLUMNS).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn emit_csv<T: CsvHeader + Serialize>(records: &[T], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_records(records, std::io::BufWriter::new(file), path)
}

pub fn parse_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// Column names, written even when there are no rows.
pub trait CsvHeader {
    const COLUMNS: &'static [&'static str];
}

impl CsvHeader for BerRecord {
    const COLUMNS: &'static [&'static str] = &[
        "snr_db",
        "ber",
        "bit_errors",
        "bits_simulated",
        "trials",
        "system",
        "detector",
        "n_tx",
        "k_rx",
        "modulation",
        "seed",
        "config_hash",
        "ci_half_width",
        "comparability_group",
        "wall_time_s",
    ];
}

impl CsvHeader for CapacityRecord {
    const COLUMNS: &'static [&'static str] = &[
        "snr_db",
        "c_prss",
        "c_env",
        "mi_scalar",
        "mi_scalar_mc",
        "channel",
        "n_tx",
        "k_rx",
        "g_atom_db",
        "seed",
        "config_hash",
        "wall_time_s",
    ];
}
