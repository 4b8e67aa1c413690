//! Expectation-maximization with Gibbs-sampled latent phases.
//!
//! The latent variable is the complex field `w_k = h_k^T x + v_k + r_k` whose
//! modulus `y_k` is observed. Given `x` and the Gaussian noise model, the phase
//! of `w_k` has the exact conditional VM(arg m_k, 2 y_k |m_k| / sigma^2) with
//! `m_k = h_k^T x + r_k`, and the `w_k` are conditionally independent, so one
//! Gibbs sweep draws all `K` phases. The E-step averages
//! `z_k = y_k e^{j psi_k} - r_k` over the retained sweeps. The M-step solves the
//! least-squares problem `min_x sum_k |z_k - h_k^T x|^2` in closed form and
//! projects each entry onto the constellation for the hard decision; the
//! unprojected solution seeds the next E-step.

use super::{least_squares_operator, sample_von_mises, spectral_init, DetectorResult};
use crate::frontend::EnvelopeObservation;
use crate::sigcore::{ChannelMatrix, Constellation, RngStream};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmgsConfig {
    /// Gibbs sweeps per E-step.
    pub gibbs_samples: usize,
    pub em_iters: usize,
    /// Leading sweeps discarded from each E-step average.
    pub burn_in: usize,
}

impl Default for EmgsConfig {
    fn default() -> Self {
        Self {
            gibbs_samples: 200,
            em_iters: 20,
            burn_in: 0,
        }
    }
}

impl EmgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gibbs_samples == 0 || self.em_iters == 0 {
            return Err(Error::InvalidParameter(
                "EM-GS needs at least one Gibbs sample and one EM iteration".into(),
            ));
        }
        if self.burn_in >= self.gibbs_samples {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below the {} Gibbs samples",
                self.burn_in, self.gibbs_samples
            )));
        }
        Ok(())
    }
}

/// Sample-averaged M-step objective before and after one EM iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmgsStep {
    /// `(1/L) sum_l sum_k |z_k^(l) - h_k^T x_prev|^2`.
    pub before: f64,
    /// Same average at the least-squares update.
    pub after: f64,
}

/// EM-GS detector. `init = None` starts from zero when every reference level
/// is positive, otherwise from the spectral initializer.
pub fn emgs(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    noise_var: f64,
    cfg: &EmgsConfig,
    c: &Constellation,
    init: Option<&[C64]>,
    rng: &mut RngStream,
) -> Result<DetectorResult> {
    run(y, h, noise_var, cfg, c, init, rng, None)
}

/// [`emgs`] that also records the M-step objective of every iteration.
#[allow(clippy::too_many_arguments)]
pub fn emgs_with_trace(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    noise_var: f64,
    cfg: &EmgsConfig,
    c: &Constellation,
    init: Option<&[C64]>,
    rng: &mut RngStream,
) -> Result<(DetectorResult, Vec<EmgsStep>)> {
    let mut trace = Vec::with_capacity(cfg.em_iters);
    let r = run(y, h, noise_var, cfg, c, init, rng, Some(&mut trace))?;
    Ok((r, trace))
}

#[allow(clippy::too_many_arguments)]
fn run(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    noise_var: f64,
    cfg: &EmgsConfig,
    c: &Constellation,
    init: Option<&[C64]>,
    rng: &mut RngStream,
    mut trace: Option<&mut Vec<EmgsStep>>,
) -> Result<DetectorResult> {
    cfg.validate()?;
    if !(noise_var > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "EM-GS needs a positive noise variance, got {noise_var}"
        )));
    }
    let k = h.k_receivers();
    if y.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {k} receivers",
            y.len()
        )));
    }
    let pinv = least_squares_operator(h)?;
    let refs = y.reference.levels();

    let mut x = match init {
        Some(x0) => {
            h.check_input(x0)?;
            x0.to_vec()
        }
        None if y.reference.is_active() => vec![C64::new(0.0, 0.0); h.n_transmitters()],
        None => spectral_init(y, h),
    };

    let kept = (cfg.gibbs_samples - cfg.burn_in) as f64;
    let mut z_mean = vec![C64::new(0.0, 0.0); k];
    let mut z_sq = vec![0.0; k];
    let mut prev: Option<Vec<usize>> = None;
    let mut stable = false;
    let mut soft = x.clone();

    for _ in 0..cfg.em_iters {
        // E-step
        for kk in 0..k {
            let m = h.row_dot(kk, &x) + refs[kk];
            let kappa = 2.0 * y.magnitudes[kk] * m.norm() / noise_var;
            let mu = m.arg();
            let mut sum = C64::new(0.0, 0.0);
            let mut sq = 0.0;
            for l in 0..cfg.gibbs_samples {
                let psi = sample_von_mises(mu, kappa, rng);
                if l >= cfg.burn_in {
                    let z = C64::from_polar(y.magnitudes[kk], psi) - refs[kk];
                    sum += z;
                    sq += z.norm_sqr();
                }
            }
            z_mean[kk] = sum / kept;
            z_sq[kk] = sq / kept;
        }

        // M-step
        let update: Vec<C64> = (0..h.n_transmitters())
            .map(|n| (0..k).map(|kk| pinv[(n, kk)] * z_mean[kk]).sum())
            .collect();
        if let Some(t) = trace.as_deref_mut() {
            t.push(EmgsStep {
                before: sampled_objective(h, &z_mean, &z_sq, &x),
                after: sampled_objective(h, &z_mean, &z_sq, &update),
            });
        }
        let hard: Vec<usize> = update.iter().map(|&s| c.nearest_index(s)).collect();
        stable = prev.as_ref() == Some(&hard);
        prev = Some(hard);
        soft = update.clone();
        x = update;
    }

    let mut result = DetectorResult::from_soft(soft, c, cfg.em_iters, stable);
    if let Some(hard) = prev {
        result.indices = hard;
    }
    Ok(result)
}

/// `sum_k E|z_k - h_k^T x|^2 = sum_k (E|z_k|^2 - 2 Re(conj(E z_k) h_k^T x) + |h_k^T x|^2)`.
fn sampled_objective(h: &ChannelMatrix, z_mean: &[C64], z_sq: &[f64], x: &[C64]) -> f64 {
    (0..h.k_receivers())
        .map(|kk| {
            let hx = h.row_dot(kk, x);
            z_sq[kk] - 2.0 * (z_mean[kk].conj() * hx).re + hx.norm_sqr()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{envelope_observe, ReferenceInjection, Slot};
    use crate::sigcore::{make_constellation, rayleigh_channel, Modulation};

    #[test]
    fn fixed_point_at_truth_with_tiny_noise() {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(21, 0);
        let h = rayleigh_channel(8, 2, &mut rng).unwrap();
        let x = vec![c.points()[2], c.points()[1]];
        for reference in [ReferenceInjection::none(8), ReferenceInjection::uniform(8, 10.0).unwrap()] {
            let y = envelope_observe(&h, &x, 0.0, &reference, Slot::First, &mut rng).unwrap();
            let cfg = EmgsConfig {
                gibbs_samples: 20,
                em_iters: 3,
                burn_in: 0,
            };
            let r = emgs(&y, &h, 1e-9, &cfg, &c, Some(&x), &mut rng).unwrap();
            assert_eq!(r.symbols, x);
            assert!(r.converged);
            for (a, b) in r.soft_estimate.iter().zip(&x) {
                assert!((a - b).norm() < 1e-3);
            }
        }
    }

    #[test]
    fn m_step_never_increases_sampled_objective() {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(22, 0);
        for _ in 0..20 {
            let h = rayleigh_channel(8, 2, &mut rng).unwrap();
            let x = vec![c.points()[0], c.points()[3]];
            let reference = ReferenceInjection::uniform(8, 20.0).unwrap();
            let y = envelope_observe(&h, &x, 0.1, &reference, Slot::First, &mut rng).unwrap();
            let (_, trace) =
                emgs_with_trace(&y, &h, 0.1, &EmgsConfig::default(), &c, None, &mut rng).unwrap();
            assert_eq!(trace.len(), 20);
            for step in trace {
                assert!(step.after <= step.before + 1e-9 * step.before.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(23, 0);
        let h = rayleigh_channel(1, 2, &mut rng).unwrap();
        let y = EnvelopeObservation::new(vec![1.0], ReferenceInjection::none(1), Slot::First).unwrap();
        let cfg = EmgsConfig::default();
        assert!(matches!(
            emgs(&y, &h, 0.1, &cfg, &c, None, &mut rng),
            Err(Error::RankDeficient { .. })
        ));
        let h = rayleigh_channel(1, 1, &mut rng).unwrap();
        assert!(emgs(&y, &h, 0.0, &cfg, &c, None, &mut rng).is_err());
        let bad = EmgsConfig {
            burn_in: 200,
            ..cfg
        };
        assert!(emgs(&y, &h, 0.1, &bad, &c, None, &mut rng).is_err());
    }
}
