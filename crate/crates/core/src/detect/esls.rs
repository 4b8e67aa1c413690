//! Envelope-squared least squares.
//!
//! Minimizes `f(x) = sum_k (|h_k^T x + r_k|^2 - y_k^2)^2` over `x in C^N` by
//! gradient descent, then quantizes each entry. The gradient with respect to
//! the real coordinates `(Re x_n, Im x_n)`, packed as a complex vector, is
//! `4 sum_k e_k a_k conj(h_k)` with `a_k = h_k^T x + r_k` and
//! `e_k = |a_k|^2 - y_k^2`.

use nalgebra::DMatrix;

use super::DetectorResult;
use crate::frontend::EnvelopeObservation;
use crate::sigcore::{ChannelMatrix, Constellation};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EslsConfig {
    /// Initial step size; `None` uses `1 / ||H||_F^4`. Halved whenever a step
    /// would increase the objective.
    pub step_size: Option<f64>,
    pub max_iters: usize,
    /// Stop once the gradient norm relative to its natural scale drops below this.
    pub grad_tol: f64,
}

impl Default for EslsConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            max_iters: 500,
            grad_tol: 1e-9,
        }
    }
}

impl EslsConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "ES-LS step size must be positive, got {eta}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "ES-LS needs at least one iteration".into(),
            ));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "ES-LS gradient tolerance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

pub fn esls_objective(y: &EnvelopeObservation, h: &ChannelMatrix, x: &[C64]) -> f64 {
    (0..h.k_receivers())
        .map(|k| {
            let a = h.row_dot(k, x) + y.reference.levels()[k];
            (a.norm_sqr() - y.magnitudes[k].powi(2)).powi(2)
        })
        .sum()
}

pub fn esls_gradient(y: &EnvelopeObservation, h: &ChannelMatrix, x: &[C64]) -> Vec<C64> {
    gradient_and_scale(y, h, x).0
}

/// Gradient plus the scale `4 sum_k (|a_k|^2 + y_k^2) |a_k| ||h_k||` it is
/// measured against for the stopping rule.
fn gradient_and_scale(y: &EnvelopeObservation, h: &ChannelMatrix, x: &[C64]) -> (Vec<C64>, f64) {
    let n = h.n_transmitters();
    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut scale = 0.0;
    for k in 0..h.k_receivers() {
        let a = h.row_dot(k, x) + y.reference.levels()[k];
        let y2 = y.magnitudes[k].powi(2);
        let e = a.norm_sqr() - y2;
        for (stream, gn) in g.iter_mut().enumerate() {
            *gn += h.get(k, stream).conj() * a * (4.0 * e);
        }
        scale += 4.0 * (a.norm_sqr() + y2) * a.norm() * h.row_norm(k);
    }
    (g, scale)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
}

/// Leading eigenvector of `sum_k w_k conj(h_k) h_k^T` with `w_k = y_k^2 - r_k^2`,
/// scaled so that `||x||^2` matches the average received power per unit row energy.
pub fn spectral_init(y: &EnvelopeObservation, h: &ChannelMatrix) -> Vec<C64> {
    let n = h.n_transmitters();
    let k = h.k_receivers();
    let weights: Vec<f64> = (0..k)
        .map(|row| y.magnitudes[row].powi(2) - y.reference.levels()[row].powi(2))
        .collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        (0..k)
            .map(|row| h.get(row, i).conj() * h.get(row, j) * weights[row])
            .sum::<C64>()
    });
    let eig = m.symmetric_eigen();
    let (lead, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let fro2 = h.frobenius_norm().powi(2);
    let power = (weights.iter().sum::<f64>() * n as f64 / fro2).max(0.0);
    let v = eig.eigenvectors.column(lead);
    let vn = v.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|&s| s * (power.sqrt() / vn)).collect()
}

/// Gradient-descent ES-LS detector starting from `init`.
pub fn esls(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    cfg: &EslsConfig,
    c: &Constellation,
    init: &[C64],
) -> Result<DetectorResult> {
    cfg.validate()?;
    h.check_input(init)?;
    if y.len() != h.k_receivers() {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {} receivers",
            y.len(),
            h.k_receivers()
        )));
    }

    let mut eta = cfg
        .step_size
        .unwrap_or_else(|| h.frobenius_norm().powi(4).recip());
    let limit = 1e6 * norm(init).max(1.0);
    let mut x = init.to_vec();
    let mut f = esls_objective(y, h, &x);
    let mut converged = false;
    let mut iterations = 0;

    for i in 1..=cfg.max_iters {
        iterations = i;
        let (g, scale) = gradient_and_scale(y, h, &x);
        let gnorm = norm(&g);
        if gnorm <= cfg.grad_tol * scale || gnorm == 0.0 {
            converged = true;
            break;
        }
        // backtracking: halve until the objective does not increase
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<C64> = x.iter().zip(&g).map(|(&xi, &gi)| xi - gi * eta).collect();
            let f_trial = esls_objective(y, h, &trial);
            if f_trial <= f {
                x = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // no descent at machine precision: numerically stationary
            converged = true;
            break;
        }
        let xn = norm(&x);
        if !xn.is_finite() || xn > limit {
            return Err(Error::Divergence {
                iteration: i,
                norm: xn,
                limit,
            });
        }
    }
    Ok(DetectorResult::from_soft(x, c, iterations, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{envelope_observe, ReferenceInjection, Slot};
    use crate::sigcore::{make_constellation, rayleigh_channel, Modulation, RngStream};

    #[test]
    fn stationary_at_truth() {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(11, 0);
        let h = rayleigh_channel(6, 2, &mut rng).unwrap();
        let x = vec![c.points()[0], c.points()[3]];
        for reference in [ReferenceInjection::none(6), ReferenceInjection::uniform(6, 4.0).unwrap()] {
            let y = envelope_observe(&h, &x, 0.0, &reference, Slot::First, &mut rng).unwrap();
            let r = esls(&y, &h, &EslsConfig::default(), &c, &x).unwrap();
            assert_eq!(r.iterations_used, 1);
            assert!(r.converged);
            assert_eq!(r.symbols, x);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(5, 1);
        let h = rayleigh_channel(4, 2, &mut rng).unwrap();
        let x: Vec<C64> = (0..2).map(|_| rng.complex_normal(1.0)).collect();
        let y = EnvelopeObservation::new(
            (0..4).map(|_| rng.uniform() * 2.0).collect(),
            ReferenceInjection::uniform(4, 0.5).unwrap(),
            Slot::First,
        )
        .unwrap();
        let g = esls_gradient(&y, &h, &x);
        let step = 1e-6;
        for n in 0..2 {
            for (dir, comp) in [(C64::new(step, 0.0), 0), (C64::new(0.0, step), 1)] {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[n] += dir;
                xm[n] -= dir;
                let fd = (esls_objective(&y, &h, &xp) - esls_objective(&y, &h, &xm)) / (2.0 * step);
                let an = if comp == 0 { g[n].re } else { g[n].im };
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn spectral_init_recovers_direction_noiseless() {
        let mut rng = RngStream::new(8, 8);
        let h = rayleigh_channel(64, 2, &mut rng).unwrap();
        let x = vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2)];
        let y = envelope_observe(&h, &x, 0.0, &ReferenceInjection::none(64), Slot::First, &mut rng)
            .unwrap();
        let x0 = spectral_init(&y, &h);
        let overlap: C64 = x0.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        let cos = overlap.norm() / (norm(&x0) * norm(&x));
        assert!(cos > 0.9, "{cos}");
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = EslsConfig {
            step_size: Some(-1.0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EslsConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
