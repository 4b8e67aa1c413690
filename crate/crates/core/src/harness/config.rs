//! Experiment configuration: a TOML file with `[system]`, `[detector]`,
//! `[sweep]`, `[ofdm]` and `[capacity]` sections. Unknown keys are errors.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::detect::{EmfCombining, EmgsConfig, EslsConfig, LinearKind, MLD_BIT_LIMIT};
use crate::sigcore::Modulation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SystemKind {
    EnvelopeOnly,
    Prss,
    RfBaseline,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::EnvelopeOnly => "ENVELOPE_ONLY",
            SystemKind::Prss => "PRSS",
            SystemKind::RfBaseline => "RF_BASELINE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DetectorKind {
    Mld,
    Emf,
    Esls,
    Emgs,
    Zf,
    Lmmse,
    Mf,
}

impl DetectorKind {
    /// Detectors that operate on envelope observations.
    pub fn is_envelope(self) -> bool {
        matches!(
            self,
            DetectorKind::Mld | DetectorKind::Emf | DetectorKind::Esls | DetectorKind::Emgs
        )
    }

    pub fn linear_kind(self) -> Option<LinearKind> {
        match self {
            DetectorKind::Zf => Some(LinearKind::Zf),
            DetectorKind::Lmmse => Some(LinearKind::Lmmse),
            DetectorKind::Mf => Some(LinearKind::Mf),
            _ => None,
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Mld => "MLD",
            DetectorKind::Emf => "EMF",
            DetectorKind::Esls => "ESLS",
            DetectorKind::Emgs => "EMGS",
            DetectorKind::Zf => "ZF",
            DetectorKind::Lmmse => "LMMSE",
            DetectorKind::Mf => "MF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityChannel {
    /// Haar-random unitary `H` (requires `k_rx == n_tx`).
    Unitary,
    /// i.i.d. CN(0, 1) entries, averaged over realizations.
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    kind: SystemKind,
    n_tx: usize,
    k_rx: usize,
    modulation: Modulation,
    #[serde(default = "default_ref_offset_db")]
    ref_offset_db: f64,
    #[serde(default = "default_g_atom_db")]
    g_atom_db: f64,
    #[serde(default = "default_theta")]
    prss_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    kind: DetectorKind,
    #[serde(default)]
    emf_combining: EmfCombining,
    #[serde(default)]
    esls_step_size: Option<f64>,
    #[serde(default = "default_esls_iters")]
    esls_max_iters: usize,
    #[serde(default = "default_esls_tol")]
    esls_grad_tol: f64,
    #[serde(default = "default_gibbs")]
    gibbs_samples: usize,
    #[serde(default = "default_em_iters")]
    em_iters: usize,
    #[serde(default)]
    burn_in: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    snr_grid_db: Vec<f64>,
    #[serde(default = "default_min_errors")]
    min_errors: u64,
    #[serde(default = "default_max_trials")]
    max_trials: u64,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_batch")]
    batch_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OfdmSection {
    #[serde(default = "default_subcarriers")]
    n_subcarriers: usize,
    #[serde(default = "default_cp")]
    cp_length: usize,
    #[serde(default = "default_taps")]
    n_taps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacitySection {
    #[serde(default = "default_capacity_channel")]
    channel: CapacityChannel,
    #[serde(default = "default_realizations")]
    realizations: usize,
    #[serde(default)]
    mi_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemSection,
    detector: Option<DetectorSection>,
    sweep: SweepSection,
    ofdm: Option<OfdmSection>,
    capacity: Option<CapacitySection>,
}

fn default_ref_offset_db() -> f64 {
    35.0
}
fn default_g_atom_db() -> f64 {
    20.0
}
fn default_theta() -> f64 {
    1.5 * std::f64::consts::PI
}
fn default_esls_iters() -> usize {
    EslsConfig::default().max_iters
}
fn default_esls_tol() -> f64 {
    EslsConfig::default().grad_tol
}
fn default_gibbs() -> usize {
    EmgsConfig::default().gibbs_samples
}
fn default_em_iters() -> usize {
    EmgsConfig::default().em_iters
}
fn default_min_errors() -> u64 {
    200
}
fn default_max_trials() -> u64 {
    10_000_000
}
fn default_batch() -> u64 {
    256
}
fn default_subcarriers() -> usize {
    64
}
fn default_cp() -> usize {
    3
}
fn default_taps() -> usize {
    4
}
fn default_capacity_channel() -> CapacityChannel {
    CapacityChannel::Unitary
}
fn default_realizations() -> usize {
    1
}

/// OFDM geometry; taps are redrawn as i.i.d. CN(0, 1/n_taps) every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OfdmSettings {
    pub n_subcarriers: usize,
    pub cp_length: usize,
    pub n_taps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySettings {
    pub channel: CapacityChannel,
    pub realizations: usize,
    /// Samples per Monte Carlo mutual-information point; 0 disables it.
    pub mi_samples: usize,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub detector: Option<DetectorKind>,
    pub n_tx: usize,
    pub k_rx: usize,
    pub modulation: Modulation,
    #[serde(serialize_with = "grid_as_text")]
    pub snr_grid_db: Vec<f64>,
    #[serde(serialize_with = "float_as_text")]
    pub ref_offset_db: f64,
    pub g_atom_db: f64,
    pub prss_theta: f64,
    pub min_errors: u64,
    pub max_trials: u64,
    pub master_seed: u64,
    pub batch_size: u64,
    pub emf_combining: EmfCombining,
    pub esls: EslsSettings,
    pub emgs: EmgsSettings,
    pub ofdm: Option<OfdmSettings>,
    pub capacity: Option<CapacitySettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EslsSettings {
    pub step_size: Option<f64>,
    pub max_iters: usize,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmgsSettings {
    pub gibbs_samples: usize,
    pub em_iters: usize,
    pub burn_in: usize,
}

// JSON has no infinities; the hash input spells every grid value out.
fn grid_as_text<S: Serializer>(grid: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(grid.iter().map(|v| format!("{v:?}")))
}

fn float_as_text<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:?}"))
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn from_file(f: ConfigFile) -> Result<Self> {
        let d = f.detector.clone();
        let cfg = Self {
            system: f.system.kind,
            detector: d.as_ref().map(|d| d.kind),
            n_tx: f.system.n_tx,
            k_rx: f.system.k_rx,
            modulation: f.system.modulation,
            snr_grid_db: f.sweep.snr_grid_db,
            ref_offset_db: f.system.ref_offset_db,
            g_atom_db: f.system.g_atom_db,
            prss_theta: f.system.prss_theta,
            min_errors: f.sweep.min_errors,
            max_trials: f.sweep.max_trials,
            master_seed: f.sweep.master_seed,
            batch_size: f.sweep.batch_size,
            emf_combining: d.as_ref().map(|d| d.emf_combining).unwrap_or_default(),
            esls: EslsSettings {
                step_size: d.as_ref().and_then(|d| d.esls_step_size),
                max_iters: d.as_ref().map_or_else(default_esls_iters, |d| d.esls_max_iters),
                grad_tol: d.as_ref().map_or_else(default_esls_tol, |d| d.esls_grad_tol),
            },
            emgs: EmgsSettings {
                gibbs_samples: d.as_ref().map_or_else(default_gibbs, |d| d.gibbs_samples),
                em_iters: d.as_ref().map_or_else(default_em_iters, |d| d.em_iters),
                burn_in: d.as_ref().map_or(0, |d| d.burn_in),
            },
            ofdm: f.ofdm.map(|o| OfdmSettings {
                n_subcarriers: o.n_subcarriers,
                cp_length: o.cp_length,
                n_taps: o.n_taps,
            }),
            capacity: f.capacity.map(|c| CapacitySettings {
                channel: c.channel,
                realizations: c.realizations,
                mi_samples: c.mi_samples,
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level checks shared by every subcommand.
    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.k_rx == 0 {
            return Err(config_err("n_tx and k_rx must be positive"));
        }
        let grid = &self.snr_grid_db;
        if grid.is_empty() {
            return Err(config_err("snr_grid_db is empty"));
        }
        if grid.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(config_err("snr_grid_db entries must be numbers or inf"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(config_err("snr_grid_db must be strictly ascending"));
        }
        if self.ref_offset_db.is_nan() || self.ref_offset_db == f64::INFINITY {
            return Err(config_err("ref_offset_db must be finite or -inf"));
        }
        if !self.g_atom_db.is_finite() || !self.prss_theta.is_finite() {
            return Err(config_err("g_atom_db and prss_theta must be finite"));
        }
        if self.prss_theta.sin().abs() < 1e-9 {
            return Err(config_err(format!(
                "prss_theta {} has no quadrature component",
                self.prss_theta
            )));
        }
        if self.max_trials == 0 || self.batch_size == 0 {
            return Err(config_err("max_trials and batch_size must be positive"));
        }
        self.esls_config().validate().map_err(|e| config_err(e.to_string()))?;
        self.emgs_config().validate().map_err(|e| config_err(e.to_string()))?;
        if let Some(o) = &self.ofdm {
            if o.n_subcarriers == 0 || !o.n_subcarriers.is_power_of_two() {
                return Err(config_err("ofdm.n_subcarriers must be a power of two"));
            }
            if o.n_taps == 0 || o.n_taps > o.n_subcarriers || o.cp_length + 1 < o.n_taps {
                return Err(config_err(
                    "ofdm needs 1 <= n_taps <= n_subcarriers and cp_length >= n_taps - 1",
                ));
            }
        }
        if let Some(c) = &self.capacity {
            if c.realizations == 0 {
                return Err(config_err("capacity.realizations must be positive"));
            }
            if c.channel == CapacityChannel::Unitary && self.k_rx != self.n_tx {
                return Err(config_err("a unitary capacity channel needs k_rx == n_tx"));
            }
            if c.mi_samples > 0 && c.mi_samples < crate::capacity::MI_MIN_SAMPLES {
                return Err(config_err(format!(
                    "capacity.mi_samples must be 0 or at least {}",
                    crate::capacity::MI_MIN_SAMPLES
                )));
            }
        }
        Ok(())
    }

    /// Checks for a MIMO BER sweep.
    pub fn check_ber(&self) -> Result<DetectorKind> {
        let det = self.detector_required()?;
        let ok = match self.system {
            SystemKind::EnvelopeOnly => det.is_envelope(),
            SystemKind::Prss => true,
            // MLD has a linear-model form, the others need envelopes
            SystemKind::RfBaseline => !det.is_envelope() || det == DetectorKind::Mld,
        };
        if !ok {
            return Err(Error::Incompatible(format!(
                "{det} cannot run on {} observations",
                self.system
            )));
        }
        if det == DetectorKind::Mld {
            let bits = self.n_tx * self.modulation.bits_per_symbol();
            if bits > MLD_BIT_LIMIT {
                return Err(config_err(format!(
                    "MLD over 2^{bits} candidates exceeds the 2^{MLD_BIT_LIMIT} limit"
                )));
            }
        }
        // the stacked PRSS envelope problem has 2K rows
        let rows = match (self.system, det.is_envelope()) {
            (SystemKind::Prss, true) => 2 * self.k_rx,
            _ => self.k_rx,
        };
        let needs_full_rank = det.linear_kind().is_some() || det == DetectorKind::Emgs;
        if needs_full_rank && rows < self.n_tx {
            return Err(config_err(format!(
                "{det} needs at least as many observations as streams ({rows} < {})",
                self.n_tx
            )));
        }
        Ok(det)
    }

    /// Checks for an OFDM BER sweep.
    pub fn check_ofdm(&self) -> Result<OfdmSettings> {
        let o = self
            .ofdm
            .ok_or_else(|| config_err("ofdm sweep needs an [ofdm] section"))?;
        if self.system == SystemKind::EnvelopeOnly {
            return Err(Error::Incompatible(
                "OFDM runs on PRSS or RF_BASELINE observations".into(),
            ));
        }
        let det = self.detector_required()?;
        if det != DetectorKind::Zf {
            return Err(Error::Incompatible(format!(
                "OFDM equalization is one-tap ZF, got {det}"
            )));
        }
        Ok(o)
    }

    pub fn check_capacity(&self) -> Result<CapacitySettings> {
        // field checks in validate() already cover a present [capacity]
        Ok(self.capacity.unwrap_or(CapacitySettings {
            channel: CapacityChannel::Rayleigh,
            realizations: default_realizations(),
            mi_samples: 0,
        }))
    }

    fn detector_required(&self) -> Result<DetectorKind> {
        self.detector
            .ok_or_else(|| config_err("missing [detector] section"))
    }

    pub fn esls_config(&self) -> EslsConfig {
        EslsConfig {
            step_size: self.esls.step_size,
            max_iters: self.esls.max_iters,
            grad_tol: self.esls.grad_tol,
        }
    }

    pub fn emgs_config(&self) -> EmgsConfig {
        EmgsConfig {
            gibbs_samples: self.emgs.gibbs_samples,
            em_iters: self.emgs.em_iters,
            burn_in: self.emgs.burn_in,
        }
    }

    /// SHA-256 over the canonical JSON of every field, hex encoded.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Bits carried by two channel uses (slots or OFDM blocks), the quantity
    /// that must match for two curves to be comparable.
    pub fn comparability_group(&self) -> String {
        self.comparability_group_for(self.n_tx)
    }

    pub(crate) fn comparability_group_for(&self, streams: usize) -> String {
        let per_use = streams * self.modulation.bits_per_symbol();
        let bits = match self.system {
            SystemKind::Prss => per_use,
            SystemKind::EnvelopeOnly | SystemKind::RfBaseline => 2 * per_use,
        };
        format!("{bits}b/2slot")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[system]
kind = "PRSS"
n_tx = 2
k_rx = 8
modulation = "QAM16"

[detector]
kind = "MLD"

[sweep]
snr_grid_db = [0.0, 5.0, inf]
min_errors = 100
max_trials = 1000
master_seed = 7
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.system, SystemKind::Prss);
        assert_eq!(c.detector, Some(DetectorKind::Mld));
        assert_eq!(c.ref_offset_db, 35.0);
        assert_eq!(c.g_atom_db, 20.0);
        assert_eq!(c.snr_grid_db[2], f64::INFINITY);
        assert_eq!(c.check_ber().unwrap(), DetectorKind::Mld);
        assert_eq!(c.comparability_group(), "8b/2slot");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = BASE.replace("master_seed = 7", "master_seed = 7\nseeed = 3");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn grid_must_ascend() {
        let text = BASE.replace("[0.0, 5.0, inf]", "[5.0, 0.0]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = BASE.replace("[0.0, 5.0, inf]", "[]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn pairing_rules() {
        let env_zf = BASE
            .replace("\"PRSS\"", "\"ENVELOPE_ONLY\"")
            .replace("\"MLD\"", "\"ZF\"");
        let c = ExperimentConfig::from_toml_str(&env_zf).unwrap();
        assert!(matches!(c.check_ber(), Err(Error::Incompatible(_))));
        let rf_emgs = BASE
            .replace("\"PRSS\"", "\"RF_BASELINE\"")
            .replace("\"MLD\"", "\"EMGS\"");
        let c = ExperimentConfig::from_toml_str(&rf_emgs).unwrap();
        assert!(matches!(c.check_ber(), Err(Error::Incompatible(_))));
        let big = BASE.replace("n_tx = 2", "n_tx = 6");
        let c = ExperimentConfig::from_toml_str(&big).unwrap();
        assert!(c.check_ber().unwrap_err().is_config());
    }

    #[test]
    fn hash_tracks_fields() {
        let a = ExperimentConfig::from_toml_str(BASE).unwrap();
        let b = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.snr_grid_db[2] = 1e300;
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
