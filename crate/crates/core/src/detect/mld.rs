use super::DetectorResult;
use crate::frontend::EnvelopeObservation;
use crate::sigcore::{ChannelMatrix, Constellation};
use crate::{Error, Result, C64};

/// Exhaustive search is allowed up to `N * bits_per_symbol` of this many bits.
pub const MLD_BIT_LIMIT: usize = 20;

/// Costs within this relative distance of the running best count as ties,
/// so rotation-equivalent candidates resolve to the lowest index regardless
/// of summation order.
pub const TIE_RTOL: f64 = 1e-9;

/// `sum_k (y_k - |h_k^T x + r_k|)^2`.
pub fn envelope_cost(y: &EnvelopeObservation, h: &ChannelMatrix, x: &[C64]) -> f64 {
    (0..h.k_receivers())
        .map(|k| {
            let a = h.row_dot(k, x) + y.reference.levels()[k];
            (y.magnitudes[k] - a.norm()).powi(2)
        })
        .sum()
}

/// `||y - H x||^2`.
pub fn linear_cost(y: &[C64], h: &ChannelMatrix, x: &[C64]) -> f64 {
    (0..h.k_receivers())
        .map(|k| (y[k] - h.row_dot(k, x)).norm_sqr())
        .sum()
}

/// Walk every `x` in `S^N` in lexicographic index order (stream 0 most
/// significant) and keep the first minimizer of `cost(H x)` up to [`TIE_RTOL`].
fn exhaustive_search<F>(h: &ChannelMatrix, c: &Constellation, cost: F) -> Result<DetectorResult>
where
    F: Fn(&[C64]) -> f64,
{
    let n = h.n_transmitters();
    let k = h.k_receivers();
    let m = c.len();
    let bits = n * c.bits_per_symbol();
    if bits > MLD_BIT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            bits,
            limit: MLD_BIT_LIMIT,
        });
    }

    // table[(stream * m + point) * k + receiver] = h_{receiver, stream} * s_point
    let mut table = vec![C64::new(0.0, 0.0); n * m * k];
    for stream in 0..n {
        for (p, &s) in c.points().iter().enumerate() {
            for rx in 0..k {
                table[(stream * m + p) * k + rx] = h.get(rx, stream) * s;
            }
        }
    }
    let column = |stream: usize, p: usize| &table[(stream * m + p) * k..(stream * m + p + 1) * k];

    let mut digits = vec![0usize; n];
    let mut acc = vec![C64::new(0.0, 0.0); k];
    for stream in 0..n {
        for (a, t) in acc.iter_mut().zip(column(stream, 0)) {
            *a += t;
        }
    }

    let total = m.pow(n as u32);
    let mut best = digits.clone();
    let mut best_cost = f64::INFINITY;
    for count in 0..total {
        let cost_here = cost(&acc);
        if !best_cost.is_finite() || cost_here < best_cost - TIE_RTOL * (1.0 + best_cost) {
            best_cost = cost_here;
            best.copy_from_slice(&digits);
        }
        if count + 1 == total {
            break;
        }
        // odometer increment, last stream fastest
        let mut stream = n - 1;
        loop {
            let old = digits[stream];
            let new = if old + 1 == m { 0 } else { old + 1 };
            digits[stream] = new;
            let (from, to) = (column(stream, old), column(stream, new));
            for ((a, f), t) in acc.iter_mut().zip(from).zip(to) {
                *a += t - f;
            }
            if new != 0 || stream == 0 {
                break;
            }
            stream -= 1;
        }
        // the running sum drifts; resync once per full sweep of the last stream
        if digits[n - 1] == 0 {
            acc.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            for (stream, &d) in digits.iter().enumerate() {
                for (a, t) in acc.iter_mut().zip(column(stream, d)) {
                    *a += t;
                }
            }
        }
    }

    let symbols: Vec<C64> = best.iter().map(|&i| c.points()[i]).collect();
    Ok(DetectorResult {
        soft_estimate: symbols.clone(),
        symbols,
        indices: best,
        iterations_used: total,
        converged: true,
    })
}

/// Exact envelope-domain ML detection over `S^N`.
pub fn mld_envelope(
    y: &EnvelopeObservation,
    h: &ChannelMatrix,
    c: &Constellation,
) -> Result<DetectorResult> {
    if y.len() != h.k_receivers() {
        return Err(Error::DimensionMismatch(format!(
            "{} envelopes for {} receivers",
            y.len(),
            h.k_receivers()
        )));
    }
    let mags = &y.magnitudes;
    let refs = y.reference.levels();
    exhaustive_search(h, c, |hx| {
        hx.iter()
            .zip(mags)
            .zip(refs)
            .map(|((&s, &yk), &r)| (yk - (s + r).norm()).powi(2))
            .sum()
    })
}

/// Exact ML detection for `y = H x + v` with white Gaussian noise.
pub fn mld_linear(y_lin: &[C64], h: &ChannelMatrix, c: &Constellation) -> Result<DetectorResult> {
    if y_lin.len() != h.k_receivers() {
        return Err(Error::DimensionMismatch(format!(
            "{} observations for {} receivers",
            y_lin.len(),
            h.k_receivers()
        )));
    }
    exhaustive_search(h, c, |hx| {
        hx.iter().zip(y_lin).map(|(&s, &yk)| (yk - s).norm_sqr()).sum()
    })
}
