//! Monte Carlo estimate of `I(x; |x + v|)` for `x ~ CN(0, e_x)`,
//! `v ~ CN(0, sigma^2)`.
//!
//! The output depends on `x` only through `|x|` (the noise is circularly
//! symmetric), so `I(x; y) = I(|x|; y)`. Both amplitudes are binned on 256
//! equal-width bins over `[0, max]`, and the plug-in entropies
//! `H(A) + H(Y) - H(A, Y)` each get the Miller-Madow correction
//! `(m - 1) / (2 n)` nats, where `m` counts occupied bins.

use super::check_energies;
use crate::sigcore::RngStream;
use crate::{Error, Result};

pub const MI_BINS: usize = 256;
pub const MI_MIN_SAMPLES: usize = 10_000;

/// Estimated mutual information in bits.
pub fn mi_monte_carlo(e_x: f64, sigma_sq: f64, samples: usize, rng: &mut RngStream) -> Result<f64> {
    check_energies(e_x, sigma_sq)?;
    if samples < MI_MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "mutual-information estimate needs at least {MI_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut amp = Vec::with_capacity(samples);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = rng.complex_normal(e_x);
        let v = rng.complex_normal(sigma_sq);
        amp.push(x.norm());
        out.push((x + v).norm());
    }
    let a_bins = bin(&amp);
    let y_bins = bin(&out);

    let mut joint = vec![0u32; MI_BINS * MI_BINS];
    let mut a_hist = vec![0u32; MI_BINS];
    let mut y_hist = vec![0u32; MI_BINS];
    for (&a, &y) in a_bins.iter().zip(&y_bins) {
        joint[a * MI_BINS + y] += 1;
        a_hist[a] += 1;
        y_hist[y] += 1;
    }
    let n = samples as f64;
    let mi_nats = miller_madow(&a_hist, n) + miller_madow(&y_hist, n) - miller_madow(&joint, n);
    Ok(mi_nats.max(0.0) / std::f64::consts::LN_2)
}

fn bin(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![0; values.len()];
    }
    let width = max / MI_BINS as f64;
    values
        .iter()
        .map(|&v| ((v / width) as usize).min(MI_BINS - 1))
        .collect()
}

/// Plug-in entropy in nats plus the Miller-Madow bias correction.
fn miller_madow(counts: &[u32], n: f64) -> f64 {
    let mut h = 0.0;
    let mut occupied = 0usize;
    for &c in counts {
        if c > 0 {
            occupied += 1;
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h + (occupied as f64 - 1.0) / (2.0 * n)
}
