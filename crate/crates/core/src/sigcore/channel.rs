use nalgebra::DMatrix;

use super::RngStream;
use crate::{Error, Result, C64};

/// K x N complex channel; row `k` is the gain vector seen by receiver `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<C64>,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "channel dimensions must be positive".into(),
            ));
        }
        if entries.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "channel entries must be finite".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Build from row-major data.
    pub fn from_rows(k: usize, n: usize, data: &[C64]) -> Result<Self> {
        if data.len() != k * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {k}x{n} channel",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(k, n, data))
    }

    pub fn k_receivers(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_transmitters(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, k: usize, n: usize) -> C64 {
        self.entries[(k, n)]
    }

    /// `h_k^T x` (no conjugation).
    pub fn row_dot(&self, k: usize, x: &[C64]) -> C64 {
        x.iter()
            .enumerate()
            .map(|(n, &xn)| self.entries[(k, n)] * xn)
            .sum()
    }

    pub fn row_norm(&self, k: usize) -> f64 {
        self.entries.row(k).iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `H x`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_input(x)?;
        Ok((0..self.k_receivers()).map(|k| self.row_dot(k, x)).collect())
    }

    pub fn check_input(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.n_transmitters() {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a channel with {} transmitters",
                x.len(),
                self.n_transmitters()
            )));
        }
        Ok(())
    }

    /// Every entry multiplied by `s`.
    pub fn scaled(&self, s: C64) -> Self {
        Self {
            entries: self.entries.map(|h| h * s),
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &ChannelMatrix) -> Result<Self> {
        if self.n_transmitters() != other.n_transmitters() {
            return Err(Error::DimensionMismatch(
                "stacked channels need the same number of transmitters".into(),
            ));
        }
        let (k1, k2, n) = (
            self.k_receivers(),
            other.k_receivers(),
            self.n_transmitters(),
        );
        let entries = DMatrix::from_fn(k1 + k2, n, |r, c| {
            if r < k1 {
                self.entries[(r, c)]
            } else {
                other.entries[(r - k1, c)]
            }
        });
        Ok(Self { entries })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// K x N channel with i.i.d. CN(0, 1) entries.
pub fn rayleigh_channel(k: usize, n: usize, rng: &mut RngStream) -> Result<ChannelMatrix> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "channel dimensions must be positive, got {k}x{n}"
        )));
    }
    // row-major draw order
    let data: Vec<C64> = (0..k * n).map(|_| rng.complex_normal(1.0)).collect();
    ChannelMatrix::from_rows(k, n, &data)
}

/// Haar-distributed `n x n` unitary matrix: QR of a Gaussian matrix with the
/// phases of `R`'s diagonal folded back into `Q`.
pub fn unitary_channel(n: usize, rng: &mut RngStream) -> Result<ChannelMatrix> {
    let g = rayleigh_channel(n, n, rng)?;
    let qr = g.entries.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        col *= phase;
    }
    ChannelMatrix::new(q)
}

/// `len` i.i.d. CN(0, variance) samples.
pub fn awgn(len: usize, variance: f64, rng: &mut RngStream) -> Result<Vec<C64>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and nonnegative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); len]);
    }
    Ok((0..len).map(|_| rng.complex_normal(variance)).collect())
}
