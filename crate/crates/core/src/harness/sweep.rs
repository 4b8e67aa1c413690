//! Monte Carlo sweeps.
//!
//! Trial `t` at grid point `p` draws everything from the substream
//! `(p << 32) | t`, so results depend only on the seed and never on how
//! trials are scheduled. Trials run in fixed-size batches; the stopping rule
//! is checked between batches and at least one batch always runs.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{CapacityChannel, DetectorKind, ExperimentConfig, SystemKind};
use super::records::{BerRecord, CapacityRecord};
use crate::capacity::{capacity_prss, envelope_mi_scalar, mi_monte_carlo, CapacityConfig};
use crate::detect::{
    emf_with, emgs, esls, linear_detect, mld_envelope, mld_linear, spectral_init, DetectorResult,
};
use crate::frontend::{
    envelope_observe, observe_frame, prss_despread_with, prss_spread, EnvelopeObservation,
    PrssConfig, ReferenceInjection, Slot,
};
use crate::ofdm::{build_circulant, equalize, idft, ofdm_receive, ofdm_transmit, rayleigh_taps, OfdmConfig};
use crate::sigcore::{
    awgn, bit_errors_between, db_to_linear, make_constellation, rayleigh_channel,
    unitary_channel, ChannelMatrix, Constellation, RngStream,
};
use crate::{Error, Result, C64};

/// Noise floor handed to detectors that need a positive variance when the
/// grid point is noiseless.
const NOISELESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Per-point progress lines on stderr.
    pub progress: bool,
}

/// Substream id of trial `trial` at grid point `point`.
pub fn substream(point: usize, trial: u64) -> u64 {
    ((point as u64) << 32) | (trial & 0xffff_ffff)
}

/// Noise variance at `snr_db` for transmit power `power`.
///
/// Atomic systems use `P / SNR`; the RF baseline lacks the atomic gain, so its
/// noise is `G_atom` times larger at the same axis value. `snr_db = inf` is
/// noiseless.
pub fn noise_variance(system: SystemKind, snr_db: f64, power: f64, g_atom_db: f64) -> f64 {
    let base = power / db_to_linear(snr_db);
    match system {
        SystemKind::RfBaseline => db_to_linear(g_atom_db) * base,
        SystemKind::EnvelopeOnly | SystemKind::Prss => base,
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

struct PointTally {
    bit_errors: u64,
    bits: u64,
    trials: u64,
}

fn run_point<F>(cfg: &ExperimentConfig, point: usize, pool: &rayon::ThreadPool, trial: F) -> Result<PointTally>
where
    F: Fn(&mut RngStream) -> Result<(u64, u64)> + Sync,
{
    let mut tally = PointTally {
        bit_errors: 0,
        bits: 0,
        trials: 0,
    };
    loop {
        let start = tally.trials;
        let end = (start + cfg.batch_size).min(cfg.max_trials);
        let batch: Vec<(u64, u64)> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|t| trial(&mut RngStream::new(cfg.master_seed, substream(point, t))))
                .collect::<Result<_>>()
        })?;
        for (e, b) in batch {
            tally.bit_errors += e;
            tally.bits += b;
        }
        tally.trials = end;
        if tally.bit_errors >= cfg.min_errors || tally.trials >= cfg.max_trials {
            return Ok(tally);
        }
    }
}

fn record(
    cfg: &ExperimentConfig,
    snr_db: f64,
    tally: PointTally,
    detector: DetectorKind,
    dims: (usize, usize),
    group: String,
    hash: &str,
    started: Instant,
) -> BerRecord {
    BerRecord {
        snr_db,
        ber: if tally.bits == 0 {
            0.0
        } else {
            tally.bit_errors as f64 / tally.bits as f64
        },
        bit_errors: tally.bit_errors,
        bits_simulated: tally.bits,
        trials: tally.trials,
        system: cfg.system.to_string(),
        detector: detector.to_string(),
        n_tx: dims.0,
        k_rx: dims.1,
        modulation: cfg.modulation.to_string(),
        seed: cfg.master_seed,
        config_hash: hash.to_string(),
        ci_half_width: BerRecord::confidence_half_width(tally.bit_errors, tally.bits),
        comparability_group: group,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

fn count_errors(c: &Constellation, sent: &[usize], detected: &[usize]) -> u64 {
    sent.iter()
        .zip(detected)
        .map(|(&s, &d)| bit_errors_between(c, s, d) as u64)
        .sum()
}

struct MimoContext<'a> {
    cfg: &'a ExperimentConfig,
    detector: DetectorKind,
    c: Constellation,
    prss: PrssConfig,
    reference: ReferenceInjection,
}

impl MimoContext<'_> {
    fn envelope_detect(
        &self,
        y: &EnvelopeObservation,
        h: &ChannelMatrix,
        noise_var: f64,
        rng: &mut RngStream,
    ) -> Result<DetectorResult> {
        match self.detector {
            DetectorKind::Mld => mld_envelope(y, h, &self.c),
            DetectorKind::Emf => emf_with(y, h, &self.c, self.cfg.emf_combining),
            DetectorKind::Esls => {
                let init = spectral_init(y, h);
                esls(y, h, &self.cfg.esls_config(), &self.c, &init)
            }
            DetectorKind::Emgs => emgs(
                y,
                h,
                noise_var.max(NOISELESS_FLOOR),
                &self.cfg.emgs_config(),
                &self.c,
                None,
                rng,
            ),
            other => Err(Error::Incompatible(format!("{other} on envelope observations"))),
        }
    }

    fn linear_model_detect(&self, z: &[C64], h: &ChannelMatrix, noise_var: f64) -> Result<DetectorResult> {
        match self.detector {
            DetectorKind::Mld => mld_linear(z, h, &self.c),
            other => {
                let kind = other
                    .linear_kind()
                    .ok_or_else(|| Error::Incompatible(format!("{other} on a linear model")))?;
                linear_detect(z, h, noise_var.max(NOISELESS_FLOOR), kind, &self.c)
            }
        }
    }

    fn trial(&self, noise_var: f64, rng: &mut RngStream) -> Result<(u64, u64)> {
        let (k, n) = (self.cfg.k_rx, self.cfg.n_tx);
        let h = rayleigh_channel(k, n, rng)?;
        let sent: Vec<usize> = (0..n).map(|_| rng.below(self.c.len())).collect();
        let x: Vec<C64> = sent.iter().map(|&i| self.c.points()[i]).collect();
        let det = match self.cfg.system {
            SystemKind::EnvelopeOnly => {
                let y = envelope_observe(&h, &x, noise_var, &self.reference, Slot::First, rng)?;
                self.envelope_detect(&y, &h, noise_var, rng)?
            }
            SystemKind::Prss => {
                let frame = prss_spread(&x, &self.prss);
                let (o1, o2) = observe_frame(&h, &frame, noise_var, &self.reference, rng)?;
                if self.detector.is_envelope() && self.detector != DetectorKind::Mld {
                    // both slots as one 2K-row envelope problem
                    let y = o1.stack(&o2);
                    let hs = h.stack(&h.scaled(self.prss.code()[1]))?;
                    self.envelope_detect(&y, &hs, noise_var, rng)?
                } else {
                    let z = prss_despread_with(&o1, &o2, &self.prss)?;
                    self.linear_model_detect(&z, &h, noise_var)?
                }
            }
            SystemKind::RfBaseline => {
                let v = awgn(k, noise_var, rng)?;
                let y: Vec<C64> = h.apply(&x)?.iter().zip(&v).map(|(a, b)| a + b).collect();
                self.linear_model_detect(&y, &h, noise_var)?
            }
        };
        let bits = (n * self.c.bits_per_symbol()) as u64;
        Ok((count_errors(&self.c, &sent, &det.indices), bits))
    }
}

fn progress(opts: &SweepOptions, r: &BerRecord) {
    if opts.progress {
        eprintln!(
            "{} {} {} snr {:>6} dB  ber {:.3e}  ({} errors / {} bits, {} trials, {:.1}s)",
            r.system, r.detector, r.modulation, r.snr_db, r.ber, r.bit_errors, r.bits_simulated, r.trials, r.wall_time_s
        );
    }
}

/// BER versus SNR for the MIMO link described by `cfg`.
pub fn run_ber_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let detector = cfg.check_ber()?;
    let pool = pool(opts.jobs)?;
    let power = cfg.n_tx as f64;
    let ctx = MimoContext {
        cfg,
        detector,
        c: make_constellation(cfg.modulation),
        prss: PrssConfig::new(cfg.prss_theta)?,
        reference: ReferenceInjection::above_signal(cfg.k_rx, power, cfg.ref_offset_db)?,
    };
    let hash = cfg.config_hash();
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for (point, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let started = Instant::now();
        let nv = noise_variance(cfg.system, snr_db, power, cfg.g_atom_db);
        let tally = run_point(cfg, point, &pool, |rng| ctx.trial(nv, rng))?;
        let r = record(
            cfg,
            snr_db,
            tally,
            detector,
            (cfg.n_tx, cfg.k_rx),
            cfg.comparability_group(),
            &hash,
            started,
        );
        progress(opts, &r);
        out.push(r);
    }
    Ok(out)
}

/// BER versus SNR for single-antenna OFDM, PRSS-atomic or RF baseline.
///
/// Every trial draws a fresh i.i.d. Rayleigh impulse response. One atomic
/// sensor samples the `N` time-domain outputs of each block, and the reference
/// sits `ref_offset_db` above the unit per-sample signal power.
pub fn run_ofdm_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let settings = cfg.check_ofdm()?;
    let pool = pool(opts.jobs)?;
    let n = settings.n_subcarriers;
    let base = OfdmConfig::new(n, settings.cp_length, vec![C64::new(1.0, 0.0)])?;
    let prss = PrssConfig::new(cfg.prss_theta)?;
    if (prss.theta() - PrssConfig::default().theta()).abs() > 1e-12 {
        return Err(Error::Incompatible(
            "OFDM de-spreading uses the default 3pi/2 spreading phase".into(),
        ));
    }
    let c = make_constellation(cfg.modulation);
    let reference = ReferenceInjection::above_signal(n, 1.0, cfg.ref_offset_db)?;
    let hash = cfg.config_hash();

    let trial = |nv: f64, rng: &mut RngStream| -> Result<(u64, u64)> {
        let ocfg = base.with_taps(rayleigh_taps(settings.n_taps, rng))?;
        let sent: Vec<usize> = (0..n).map(|_| rng.below(c.len())).collect();
        let s: Vec<C64> = sent.iter().map(|&i| c.points()[i]).collect();
        let h = build_circulant(&ocfg)?;
        let detected = match cfg.system {
            SystemKind::Prss => {
                let frame = ofdm_transmit(&s, &ocfg, &prss)?;
                let (o1, o2) = observe_frame(&h, &frame, nv, &reference, rng)?;
                ofdm_receive(&o1, &o2, &ocfg, nv, &c)?.indices
            }
            _ => {
                let v = awgn(n, nv, rng)?;
                let y: Vec<C64> = h.apply(&idft(&s))?.iter().zip(&v).map(|(a, b)| a + b).collect();
                equalize(&y, &ocfg)?.iter().map(|&z| c.nearest_index(z)).collect()
            }
        };
        Ok((count_errors(&c, &sent, &detected), (n * c.bits_per_symbol()) as u64))
    };

    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for (point, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let started = Instant::now();
        let nv = noise_variance(cfg.system, snr_db, 1.0, cfg.g_atom_db);
        let tally = run_point(cfg, point, &pool, |rng| trial(nv, rng))?;
        let r = record(
            cfg,
            snr_db,
            tally,
            DetectorKind::Zf,
            (1, n),
            cfg.comparability_group_for(n),
            &hash,
            started,
        );
        progress(opts, &r);
        out.push(r);
    }
    Ok(out)
}

/// PRSS capacity and envelope mutual information over the SNR grid.
///
/// The axis is total transmit power over `sigma_RF^2 = 1` with isotropic input
/// `Q = (P/N) I`, and both atomic links receive the gain `G_atom`. The
/// envelope figure sums the scalar closed form over receivers at each row's
/// received energy `G (P/N) |h_k|^2`, which is `K/2 log2(1 + G P/N)` for a
/// unitary channel. Channel realizations are shared by all grid points.
pub fn run_capacity_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<Vec<CapacityRecord>> {
    cfg.validate()?;
    let settings = cfg.check_capacity()?;
    if cfg.snr_grid_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("capacity grid must be finite".into()));
    }
    let pool = pool(opts.jobs)?;
    let (n, k) = (cfg.n_tx, cfg.k_rx);
    let channels: Vec<ChannelMatrix> = (0..settings.realizations)
        .map(|r| {
            let mut rng = RngStream::new(cfg.master_seed, r as u64);
            match settings.channel {
                CapacityChannel::Unitary => unitary_channel(n, &mut rng),
                CapacityChannel::Rayleigh => rayleigh_channel(k, n, &mut rng),
            }
        })
        .collect::<Result<_>>()?;
    let g = db_to_linear(cfg.g_atom_db);
    let hash = cfg.config_hash();
    let channel_name = match settings.channel {
        CapacityChannel::Unitary => "unitary",
        CapacityChannel::Rayleigh => "rayleigh",
    };

    let out: Vec<CapacityRecord> = pool.install(|| {
        cfg.snr_grid_db
            .par_iter()
            .enumerate()
            .map(|(point, &snr_db)| {
                let started = Instant::now();
                let per_stream = db_to_linear(snr_db) / n as f64;
                let cap = CapacityConfig::isotropic(g, 1.0, n, per_stream)?;
                let mut c_prss = 0.0;
                let mut c_env = 0.0;
                for h in &channels {
                    c_prss += capacity_prss(h, &cap)?;
                    for row in 0..h.k_receivers() {
                        c_env += envelope_mi_scalar(g * per_stream * h.row_norm(row).powi(2), 1.0)?;
                    }
                }
                let reps = channels.len() as f64;
                let mi_scalar_mc = if settings.mi_samples > 0 {
                    let mut rng = RngStream::new(cfg.master_seed, substream(point + 1, 0));
                    Some(mi_monte_carlo(g * per_stream, 1.0, settings.mi_samples, &mut rng)?)
                } else {
                    None
                };
                Ok(CapacityRecord {
                    snr_db,
                    c_prss: c_prss / reps,
                    c_env: c_env / reps,
                    mi_scalar: envelope_mi_scalar(g * per_stream, 1.0)?,
                    mi_scalar_mc,
                    channel: channel_name.to_string(),
                    n_tx: n,
                    k_rx: k,
                    g_atom_db: cfg.g_atom_db,
                    seed: cfg.master_seed,
                    config_hash: hash.clone(),
                    wall_time_s: started.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    if opts.progress {
        for r in &out {
            eprintln!(
                "snr {:>6} dB  c_prss {:.4}  c_env {:.4}",
                r.snr_db, r.c_prss, r.c_env
            );
        }
    }
    Ok(out)
}
