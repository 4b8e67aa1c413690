//! PRSS-assisted OFDM over a frequency-selective channel.
//!
//! The channel after cyclic-prefix removal is the circulant matrix `C` whose
//! first column is the zero-padded impulse response, so the unitary DFT `F`
//! diagonalizes it: `F C F^H = diag(DFT(taps))`. A single atomic sensor takes
//! one envelope sample per time index, so the observation model is the
//! envelope model with `H = C` and `K = N`.

use rustfft::FftPlanner;

use crate::detect::DetectorResult;
use crate::frontend::{prss_despread, prss_spread, EnvelopeObservation, PrssConfig, PrssFrame};
use crate::sigcore::{ChannelMatrix, Constellation, RngStream};
use crate::{Error, Result, C64};

/// Frequency-response magnitudes below this fraction of the largest one are
/// treated as erased subcarriers.
const ZERO_RESPONSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    n_subcarriers: usize,
    cp_length: usize,
    taps: Vec<C64>,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            cp_length: 3,
            taps: vec![C64::new(1.0, 0.0)],
        }
    }
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, cp_length: usize, taps: Vec<C64>) -> Result<Self> {
        if n_subcarriers == 0 || !n_subcarriers.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "subcarrier count {n_subcarriers} is not a power of two"
            )));
        }
        if taps.is_empty() {
            return Err(Error::InvalidParameter("channel needs at least one tap".into()));
        }
        if taps.len() > n_subcarriers {
            return Err(Error::InvalidParameter(format!(
                "{} taps exceed {n_subcarriers} subcarriers",
                taps.len()
            )));
        }
        if cp_length + 1 < taps.len() {
            return Err(Error::InvalidParameter(format!(
                "cyclic prefix {cp_length} shorter than {} taps minus one",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite channel tap".into()));
        }
        Ok(Self {
            n_subcarriers,
            cp_length,
            taps,
        })
    }

    /// Same geometry with a new impulse response.
    pub fn with_taps(&self, taps: Vec<C64>) -> Result<Self> {
        Self::new(self.n_subcarriers, self.cp_length, taps)
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_length(&self) -> usize {
        self.cp_length
    }

    pub fn taps(&self) -> &[C64] {
        &self.taps
    }
}

/// `count` i.i.d. CN(0, 1/count) taps (unit total energy on average).
pub fn rayleigh_taps(count: usize, rng: &mut RngStream) -> Vec<C64> {
    let var = 1.0 / count as f64;
    (0..count).map(|_| rng.complex_normal(var)).collect()
}

/// Unitary DFT, `F x`.
pub fn dft(x: &[C64]) -> Vec<C64> {
    transform(x, false)
}

/// Unitary inverse DFT, `F^H x`.
pub fn idft(x: &[C64]) -> Vec<C64> {
    transform(x, true)
}

fn transform(x: &[C64], inverse: bool) -> Vec<C64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = x.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Per-subcarrier gains `sum_l taps[l] e^{-j 2 pi k l / N}` (non-normalized DFT).
pub fn frequency_response(cfg: &OfdmConfig) -> Vec<C64> {
    let n = cfg.n_subcarriers;
    let mut padded = vec![C64::new(0.0, 0.0); n];
    padded[..cfg.taps.len()].copy_from_slice(&cfg.taps);
    let scale = (n as f64).sqrt();
    dft(&padded).into_iter().map(|v| v * scale).collect()
}

/// `N x N` circulant channel with first column equal to the zero-padded taps.
pub fn build_circulant(cfg: &OfdmConfig) -> Result<ChannelMatrix> {
    let n = cfg.n_subcarriers;
    if cfg.taps.len() > n {
        return Err(Error::InvalidParameter(format!(
            "{} taps exceed {n} subcarriers",
            cfg.taps.len()
        )));
    }
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (l, &t) in cfg.taps.iter().enumerate() {
            data[i * n + (i + n - l) % n] = t;
        }
    }
    ChannelMatrix::from_rows(n, n, &data)
}

/// `F^H s`, PRSS-spread over two consecutive OFDM blocks.
pub fn ofdm_transmit(freq_symbols: &[C64], cfg: &OfdmConfig, prss: &PrssConfig) -> Result<PrssFrame> {
    if freq_symbols.len() != cfg.n_subcarriers {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols for {} subcarriers",
            freq_symbols.len(),
            cfg.n_subcarriers
        )));
    }
    Ok(prss_spread(&idft(freq_symbols), prss))
}

/// One-tap zero-forcing equalization `F y / DFT(taps)`.
pub fn equalize(time_samples: &[C64], cfg: &OfdmConfig) -> Result<Vec<C64>> {
    if time_samples.len() != cfg.n_subcarriers {
        return Err(Error::DimensionMismatch(format!(
            "{} time samples for {} subcarriers",
            time_samples.len(),
            cfg.n_subcarriers
        )));
    }
    let response = frequency_response(cfg);
    let peak = response.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if let Some(k) = response
        .iter()
        .position(|v| !(v.norm() > ZERO_RESPONSE_TOL * peak))
    {
        return Err(Error::ZeroSubcarrier(k));
    }
    Ok(dft(time_samples)
        .into_iter()
        .zip(&response)
        .map(|(y, g)| y / g)
        .collect())
}

/// De-spread both blocks, demultiplex, equalize each subcarrier and quantize.
pub fn ofdm_receive(
    obs1: &EnvelopeObservation,
    obs2: &EnvelopeObservation,
    cfg: &OfdmConfig,
    noise_var: f64,
    c: &Constellation,
) -> Result<DetectorResult> {
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be nonnegative, got {noise_var}"
        )));
    }
    let z = prss_despread(obs1, obs2)?;
    let soft = equalize(&z, cfg)?;
    Ok(DetectorResult::from_soft(soft, c, 1, true))
}
