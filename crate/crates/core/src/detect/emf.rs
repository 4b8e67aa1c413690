use serde::{Deserialize, Serialize};

use super::DetectorResult;
use crate::frontend::EnvelopeObservation;
use crate::sigcore::{ChannelMatrix, Constellation};
use crate::{Error, Result, C64};

/// How the envelope matched filter weights each channel row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmfCombining {
    /// `sum_k y_k conj(h_k) / ||h_k||`, the matched filter for `h_k^T x`.
    #[default]
    Conjugate,
    /// `sum_k y_k h_k / ||h_k||` without conjugation.
    Literal,
}

/// Envelope matched filter with conjugate combining.
pub fn emf(y: &EnvelopeObservation, h: &ChannelMatrix, c: &Constellation) -> Result<DetectorResult> {
    emf_with(y, h, c, EmfCombining::Conjugate)
}

/// Envelope matched filter.
///
/// The reference level is removed before combining (`y_k - r_k`). The
/// combined vector is divided per stream by the gain that stream sees through
/// the combiner, `sum_k |h_kn|^2 / ||h_k||`, halved when a reference is present
/// because then only the in-phase projection `Re(h_k^T x)` survives in the
/// envelope. The division leaves the QAM4 decision unchanged and puts higher
/// orders on the right amplitude scale.
pub fn emf_with(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    c: &Constellation,
    combining: EmfCombining,
) -> Result<DetectorResult> {
    let k = h.k_receivers();
    let n = h.n_transmitters();
    if y.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {k} receivers",
            y.len()
        )));
    }
    let norms: Vec<f64> = (0..k).map(|row| h.row_norm(row)).collect();
    if let Some(row) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroNormRow(row));
    }
    let with_reference = y.reference.levels().iter().any(|&r| r > 0.0);

    let mut soft = vec![C64::new(0.0, 0.0); n];
    let mut gain = vec![0.0; n];
    for row in 0..k {
        let weight = (y.magnitudes[row] - y.reference.levels()[row]) / norms[row];
        for (stream, (s, g)) in soft.iter_mut().zip(gain.iter_mut()).enumerate() {
            let hk = h.get(row, stream);
            let tap = match combining {
                EmfCombining::Conjugate => hk.conj(),
                EmfCombining::Literal => hk,
            };
            *s += tap * weight;
            *g += hk.norm_sqr() / norms[row];
        }
    }
    for (s, g) in soft.iter_mut().zip(&gain) {
        let g = if with_reference { 0.5 * g } else { *g };
        if g > 0.0 {
            *s /= g;
        }
    }
    Ok(DetectorResult::from_soft(soft, c, 1, true))
}
