//! Atomic receiver front end.
//!
//! A Rydberg receiver outputs the envelope of the incident field, so receiver
//! `k` observes `y_k = |h_k^T x + v_k + r_k|` where `r_k >= 0` is an optional
//! injected reference tone. Phase-rotated symbol spreading (PRSS) sends every
//! symbol twice, the second time rotated by `theta`. With `theta = 3pi/2` and a
//! reference much stronger than the signal, the two envelopes are
//! approximately `r + Re z` and `r + Im z`, so `(y_1 + j y_2) - r(1 + j)`
//! recovers the linear observation `z = h_k^T x + v_k`.
//!
//! Signal generation always evaluates the exact modulus; the linear
//! approximation only appears when de-spreading interprets the envelopes.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::sigcore::{awgn, ChannelMatrix, RngStream};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    dipole_moment: f64,
    reduced_planck: f64,
}

impl PhysicalConstants {
    pub fn new(dipole_moment: f64, reduced_planck: f64) -> Result<Self> {
        if !(dipole_moment > 0.0 && reduced_planck > 0.0) {
            return Err(Error::InvalidParameter(
                "dipole moment and reduced Planck constant must be positive".into(),
            ));
        }
        Ok(Self {
            dipole_moment,
            reduced_planck,
        })
    }

    pub fn dipole_moment(&self) -> f64 {
        self.dipole_moment
    }

    pub fn reduced_planck(&self) -> f64 {
        self.reduced_planck
    }
}

/// Autler-Townes splitting `mu * E_RF / hbar` of the EIT peak.
pub fn autler_townes_splitting(e_rf: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(e_rf >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "RF field amplitude must be nonnegative, got {e_rf}"
        )));
    }
    Ok(consts.dipole_moment * e_rf / consts.reduced_planck)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrssConfig {
    theta: f64,
}

impl Default for PrssConfig {
    fn default() -> Self {
        Self { theta: 1.5 * PI }
    }
}

impl PrssConfig {
    pub fn new(theta: f64) -> Result<Self> {
        let wrapped = theta.rem_euclid(TAU);
        if !theta.is_finite() || wrapped.min(TAU - wrapped) < 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "spreading phase must be nonzero mod 2pi, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Spreading code `[1, e^{j theta}]`.
    pub fn code(&self) -> [C64; 2] {
        [C64::new(1.0, 0.0), C64::from_polar(1.0, self.theta)]
    }
}

/// Two-slot PRSS block: `slot2 = slot1 * e^{j theta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrssFrame {
    pub slot1: Vec<C64>,
    pub slot2: Vec<C64>,
}

pub fn prss_spread(x: &[C64], cfg: &PrssConfig) -> PrssFrame {
    let rot = cfg.code()[1];
    PrssFrame {
        slot1: x.to_vec(),
        slot2: x.iter().map(|&s| s * rot).collect(),
    }
}

/// Per-receiver reference amplitudes `r_k` (real, nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInjection {
    levels: Vec<f64>,
}

impl ReferenceInjection {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter(
                "reference levels must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn none(k: usize) -> Self {
        Self {
            levels: vec![0.0; k],
        }
    }

    pub fn uniform(k: usize, level: f64) -> Result<Self> {
        Self::new(vec![level; k])
    }

    /// Uniform reference whose power sits `offset_db` above `signal_power`.
    pub fn above_signal(k: usize, signal_power: f64, offset_db: f64) -> Result<Self> {
        Self::uniform(k, (signal_power * 10f64.powf(offset_db / 10.0)).sqrt())
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_active(&self) -> bool {
        self.levels.iter().all(|&r| r > 0.0)
    }

    /// The same levels repeated twice, matching a stacked two-slot channel.
    pub fn repeated(&self) -> Self {
        let mut levels = self.levels.clone();
        levels.extend_from_slice(&self.levels);
        Self { levels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    First,
    Second,
}

impl Slot {
    pub fn index(self) -> u8 {
        match self {
            Slot::First => 1,
            Slot::Second => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeObservation {
    pub magnitudes: Vec<f64>,
    pub reference: ReferenceInjection,
    pub slot: Slot,
}

impl EnvelopeObservation {
    pub fn new(magnitudes: Vec<f64>, reference: ReferenceInjection, slot: Slot) -> Result<Self> {
        if magnitudes.len() != reference.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} magnitudes but {} reference levels",
                magnitudes.len(),
                reference.len()
            )));
        }
        if magnitudes.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(Error::InvalidParameter(
                "envelope magnitudes must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            magnitudes,
            reference,
            slot,
        })
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Concatenate two observations (e.g. both PRSS slots) into one 2K problem.
    pub fn stack(&self, other: &EnvelopeObservation) -> Self {
        let mut magnitudes = self.magnitudes.clone();
        magnitudes.extend_from_slice(&other.magnitudes);
        let mut levels = self.reference.levels.clone();
        levels.extend_from_slice(&other.reference.levels);
        Self {
            magnitudes,
            reference: ReferenceInjection { levels },
            slot: self.slot,
        }
    }
}

/// `y_k = |h_k^T x + v_k + r_k|` with `v_k ~ CN(0, noise_var)`.
pub fn envelope_observe(
    h: &ChannelMatrix,
    x: &[C64],
    noise_var: f64,
    reference: &ReferenceInjection,
    slot: Slot,
    rng: &mut RngStream,
) -> Result<EnvelopeObservation> {
    let k = h.k_receivers();
    if reference.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} reference levels for {k} receivers",
            reference.len()
        )));
    }
    let hx = h.apply(x)?;
    let noise = awgn(k, noise_var, rng)?;
    let magnitudes = hx
        .iter()
        .zip(&noise)
        .zip(reference.levels())
        .map(|((&s, &v), &r)| (s + v + r).norm())
        .collect();
    Ok(EnvelopeObservation {
        magnitudes,
        reference: reference.clone(),
        slot,
    })
}

/// Observe both slots of a PRSS frame through the same channel with
/// independent noise.
pub fn observe_frame(
    h: &ChannelMatrix,
    frame: &PrssFrame,
    noise_var: f64,
    reference: &ReferenceInjection,
    rng: &mut RngStream,
) -> Result<(EnvelopeObservation, EnvelopeObservation)> {
    let first = envelope_observe(h, &frame.slot1, noise_var, reference, Slot::First, rng)?;
    let second = envelope_observe(h, &frame.slot2, noise_var, reference, Slot::Second, rng)?;
    Ok((first, second))
}

fn check_pair(obs1: &EnvelopeObservation, obs2: &EnvelopeObservation) -> Result<()> {
    if obs1.slot != Slot::First || obs2.slot != Slot::Second {
        return Err(Error::SlotOrder(obs1.slot.index(), obs2.slot.index()));
    }
    if obs1.len() != obs2.len() {
        return Err(Error::DimensionMismatch(format!(
            "slot observations of length {} and {}",
            obs1.len(),
            obs2.len()
        )));
    }
    if obs1.reference != obs2.reference {
        return Err(Error::ReferenceMismatch);
    }
    Ok(())
}

/// `(y_1 + j y_2) - r (1 + j)` for the default `theta = 3pi/2` code.
pub fn prss_despread(obs1: &EnvelopeObservation, obs2: &EnvelopeObservation) -> Result<Vec<C64>> {
    check_pair(obs1, obs2)?;
    Ok(obs1
        .magnitudes
        .iter()
        .zip(&obs2.magnitudes)
        .zip(obs1.reference.levels())
        .map(|((&y1, &y2), &r)| C64::new(y1 - r, y2 - r))
        .collect())
}

/// De-spreading for an arbitrary spreading phase.
///
/// To first order `y_1 - r = Re z` and `y_2 - r = cos(t) Re z - sin(t) Im z`,
/// which is invertible whenever `sin(t) != 0`.
pub fn prss_despread_with(
    obs1: &EnvelopeObservation,
    obs2: &EnvelopeObservation,
    cfg: &PrssConfig,
) -> Result<Vec<C64>> {
    let (sin, cos) = cfg.theta.sin_cos();
    if sin.abs() < 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "spreading phase {} carries no quadrature component",
            cfg.theta
        )));
    }
    check_pair(obs1, obs2)?;
    Ok(obs1
        .magnitudes
        .iter()
        .zip(&obs2.magnitudes)
        .zip(obs1.reference.levels())
        .map(|((&y1, &y2), &r)| {
            let a = y1 - r;
            let b = y2 - r;
            C64::new(a, (cos * a - b) / sin)
        })
        .collect())
}

/// Noiseless scalar de-spreading with the exact modulus (`theta = 3pi/2`).
pub fn despread_exact(z: C64, r: f64) -> C64 {
    let y1 = (z + r).norm();
    let y2 = (z * C64::new(0.0, -1.0) + r).norm();
    C64::new(y1 - r, y2 - r)
}

/// `|despread_exact(z, r) - z|`, the error of the strong-reference linearization.
pub fn linearization_error(z: C64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference level must be positive, got {r}"
        )));
    }
    Ok((despread_exact(z, r) - z).norm())
}
