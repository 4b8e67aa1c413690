//! Capacity of the PRSS linear model and mutual information of the envelope
//! channel.
//!
//! [`rayleigh_entropy`] is evaluated exactly as its closed form is written,
//! with a `log2` term and the additive constant `1 + gamma/2`. Those constants
//! are nats-derived, so the absolute value is not a differential entropy in
//! bits. Only the difference [`envelope_mi_scalar`] carries meaning, and the
//! constants cancel in it.

mod mi;

use nalgebra::DMatrix;

pub use mi::{mi_monte_carlo, MI_BINS, MI_MIN_SAMPLES};

use crate::sigcore::ChannelMatrix;
use crate::{Error, Result, C64};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    pub g_atom: f64,
    pub sigma_rf_sq: f64,
    pub input_cov: DMatrix<C64>,
    pub signal_energy: f64,
    pub euler_gamma: f64,
}

impl CapacityConfig {
    pub fn new(
        g_atom: f64,
        sigma_rf_sq: f64,
        input_cov: DMatrix<C64>,
        signal_energy: f64,
    ) -> Result<Self> {
        let cfg = Self {
            g_atom,
            sigma_rf_sq,
            input_cov,
            signal_energy,
            euler_gamma: EULER_GAMMA,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `Q = energy * I_n`.
    pub fn isotropic(g_atom: f64, sigma_rf_sq: f64, n: usize, energy: f64) -> Result<Self> {
        Self::new(
            g_atom,
            sigma_rf_sq,
            DMatrix::from_diagonal_element(n, n, C64::new(energy, 0.0)),
            energy,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_atom > 0.0) || !(self.sigma_rf_sq > 0.0) {
            return Err(Error::InvalidParameter(
                "atomic gain and RF noise power must be positive".into(),
            ));
        }
        let q = &self.input_cov;
        if !q.is_square() {
            return Err(Error::InvalidParameter("input covariance must be square".into()));
        }
        let scale = q.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        if (q - q.adjoint()).iter().any(|v| v.norm() > 1e-12 * scale) {
            return Err(Error::InvalidParameter(
                "input covariance must be Hermitian".into(),
            ));
        }
        let min_eig = q.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "input covariance is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }
}

/// `1/2 log2 det(I_K + G/sigma_RF^2 H Q H^H)`, in bits per channel use.
pub fn capacity_prss(h: &ChannelMatrix, cfg: &CapacityConfig) -> Result<f64> {
    cfg.validate()?;
    let n = h.n_transmitters();
    if cfg.input_cov.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} input covariance for {n} transmitters",
            cfg.input_cov.nrows(),
            cfg.input_cov.ncols()
        )));
    }
    let hm = h.matrix();
    let k = h.k_receivers();
    let snr = C64::new(cfg.g_atom / cfg.sigma_rf_sq, 0.0);
    let mut m = hm * &cfg.input_cov * hm.adjoint() * snr;
    for i in 0..k {
        m[(i, i)] += C64::new(1.0, 0.0);
    }
    // symmetrize away rounding so Cholesky sees an exactly Hermitian matrix
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let chol = m.cholesky().ok_or_else(|| {
        Error::InvalidParameter("I + H Q H^H is not positive definite".into())
    })?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum();
    Ok((0.5 * log_det / std::f64::consts::LN_2).max(0.0))
}

/// Rayleigh output density `2y/s exp(-y^2/s)` with `s = e_x + sigma^2`.
pub fn rayleigh_density(y: f64, e_x: f64, sigma_sq: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let s = e_x + sigma_sq;
    2.0 * y / s * (-y * y / s).exp()
}

fn check_energies(e_x: f64, sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise power must be positive, got {sigma_sq}"
        )));
    }
    if !(e_x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "signal energy must be nonnegative, got {e_x}"
        )));
    }
    Ok(())
}

/// `log2(sqrt(e_x + sigma^2)) + 1 + gamma/2`.
pub fn rayleigh_entropy(e_x: f64, sigma_sq: f64) -> Result<f64> {
    check_energies(e_x, sigma_sq)?;
    Ok((e_x + sigma_sq).sqrt().log2() + 1.0 + EULER_GAMMA / 2.0)
}

/// `1/2 log2(1 + e_x / sigma^2)`.
pub fn envelope_mi_scalar(e_x: f64, sigma_sq: f64) -> Result<f64> {
    check_energies(e_x, sigma_sq)?;
    Ok(0.5 * (e_x / sigma_sq).ln_1p() / std::f64::consts::LN_2)
}

/// `K/2 log2(1 + e_x / sigma^2)`: K decoupled scalar envelope links.
pub fn envelope_mi_mimo(k: usize, e_x: f64, sigma_sq: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one receiver".into()));
    }
    Ok(k as f64 * envelope_mi_scalar(e_x, sigma_sq)?)
}
