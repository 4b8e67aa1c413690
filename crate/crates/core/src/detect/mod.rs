//! Detectors for envelope observations and for the de-spread linear model.
//!
//! Envelope-domain detectors work on `y_k = |h_k^T x + v_k + r_k|` and accept
//! the reference levels carried by the observation (`r_k = 0` is the plain
//! envelope-only model):
//!
//! * [`mld_envelope`]: exhaustive maximum likelihood over the product
//!   constellation.
//! * [`emf`]: envelope matched filter, a one-shot linear combiner.
//! * [`esls`]: gradient descent on the squared-envelope least-squares objective.
//! * [`emgs`]: expectation-maximization with Gibbs-sampled latent phases.
//!
//! Linear detectors work on `y = H x + v`, which is what PRSS de-spreading
//! produces: [`mld_linear`] and [`linear_detect`] (ZF, LMMSE, MF).

mod emf;
mod emgs;
mod esls;
mod linear;
mod mld;
mod vonmises;

pub use emf::{emf, emf_with, EmfCombining};
pub use emgs::{emgs, emgs_with_trace, EmgsConfig, EmgsStep};
pub use esls::{esls, esls_gradient, esls_objective, spectral_init, EslsConfig};
pub use linear::{least_squares_operator, linear_detect, LinearKind};
pub use mld::{envelope_cost, linear_cost, mld_envelope, mld_linear, MLD_BIT_LIMIT, TIE_RTOL};
pub use vonmises::sample_von_mises;

use crate::sigcore::Constellation;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorResult {
    /// Hard decisions, one constellation point per stream.
    pub symbols: Vec<C64>,
    /// Constellation indices of `symbols`.
    pub indices: Vec<usize>,
    /// Estimate before quantization.
    pub soft_estimate: Vec<C64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl DetectorResult {
    pub(crate) fn from_soft(
        soft_estimate: Vec<C64>,
        c: &Constellation,
        iterations_used: usize,
        converged: bool,
    ) -> Self {
        let indices: Vec<usize> = soft_estimate.iter().map(|&s| c.nearest_index(s)).collect();
        Self {
            symbols: indices.iter().map(|&i| c.points()[i]).collect(),
            indices,
            soft_estimate,
            iterations_used,
            converged,
        }
    }
}
