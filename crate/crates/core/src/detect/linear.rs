use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::DetectorResult;
use crate::sigcore::{ChannelMatrix, Constellation};
use crate::{Error, Result, C64};

/// Relative singular-value threshold below which `H` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "LMMSE")]
    Lmmse,
    #[serde(rename = "MF")]
    Mf,
}

/// Moore-Penrose left inverse `(H^H H)^{-1} H^H` (N x K). Requires `K >= N`
/// and full column rank.
pub fn least_squares_operator(h: &ChannelMatrix) -> Result<DMatrix<C64>> {
    let (k, n) = (h.k_receivers(), h.n_transmitters());
    if k < n {
        return Err(Error::RankDeficient {
            rows: k,
            cols: n,
            condition: f64::INFINITY,
        });
    }
    let svd = h.matrix().clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient {
            rows: k,
            cols: n,
            condition: smax / smin,
        });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^H");
    let inv_s = DMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(1.0 / s, 0.0)));
    Ok(v_t.adjoint() * inv_s * u.adjoint())
}

/// ZF, LMMSE or per-stream-normalized MF on `y = H x + v`, followed by
/// entrywise quantization.
pub fn linear_detect(
    y_lin: &[C64],
    h: &ChannelMatrix,
    noise_var: f64,
    kind: LinearKind,
    c: &Constellation,
) -> Result<DetectorResult> {
    let (k, n) = (h.k_receivers(), h.n_transmitters());
    if y_lin.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} observations for {k} receivers",
            y_lin.len()
        )));
    }
    let y = DVector::from_column_slice(y_lin);
    let hm = h.matrix();
    let soft: DVector<C64> = match kind {
        LinearKind::Zf => least_squares_operator(h)? * y,
        LinearKind::Lmmse => {
            if !(noise_var > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "LMMSE needs a positive noise variance, got {noise_var}"
                )));
            }
            // unit symbol energy, so the regularizer is sigma^2 I
            let gram = hm.adjoint() * hm
                + DMatrix::from_diagonal_element(n, n, C64::new(noise_var, 0.0));
            let rhs = hm.adjoint() * y;
            gram.cholesky()
                .ok_or(Error::RankDeficient {
                    rows: k,
                    cols: n,
                    condition: f64::INFINITY,
                })?
                .solve(&rhs)
        }
        LinearKind::Mf => {
            let rhs = hm.adjoint() * y;
            let mut out = rhs.clone();
            for stream in 0..n {
                let energy: f64 = hm.column(stream).iter().map(|s| s.norm_sqr()).sum();
                if energy == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "channel column {stream} is zero"
                    )));
                }
                out[stream] = rhs[stream] / energy;
            }
            out
        }
    };
    Ok(DetectorResult::from_soft(
        soft.iter().copied().collect(),
        c,
        1,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{make_constellation, rayleigh_channel, Modulation, RngStream};

    fn unitary(n: usize, seed: u64) -> ChannelMatrix {
        let g = rayleigh_channel(n, n, &mut RngStream::new(seed, 0)).unwrap();
        ChannelMatrix::new(g.matrix().clone().qr().q()).unwrap()
    }

    #[test]
    fn zf_exact_when_noiseless() {
        let c = make_constellation(Modulation::Qam16);
        let h = rayleigh_channel(6, 3, &mut RngStream::new(1, 0)).unwrap();
        let x = vec![c.points()[1], c.points()[9], c.points()[14]];
        let y = h.apply(&x).unwrap();
        let r = linear_detect(&y, &h, 0.0, LinearKind::Zf, &c).unwrap();
        assert_eq!(r.symbols, x);
        for (a, b) in r.soft_estimate.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn lmmse_tends_to_zf() {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(2, 0);
        let h = rayleigh_channel(4, 2, &mut rng).unwrap();
        let y: Vec<C64> = (0..4).map(|_| rng.complex_normal(1.0)).collect();
        let zf = linear_detect(&y, &h, 0.0, LinearKind::Zf, &c).unwrap();
        let mmse = linear_detect(&y, &h, 1e-12, LinearKind::Lmmse, &c).unwrap();
        let diff: f64 = zf
            .soft_estimate
            .iter()
            .zip(&mmse.soft_estimate)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-6, "{diff}");
        assert!(linear_detect(&y, &h, 0.0, LinearKind::Lmmse, &c).is_err());
    }

    #[test]
    fn unitary_channel_all_agree() {
        let c = make_constellation(Modulation::Qam16);
        let h = unitary(4, 3);
        let mut rng = RngStream::new(3, 1);
        let y: Vec<C64> = (0..4).map(|_| rng.complex_normal(1.0)).collect();
        let zf = linear_detect(&y, &h, 0.1, LinearKind::Zf, &c).unwrap();
        let mf = linear_detect(&y, &h, 0.1, LinearKind::Mf, &c).unwrap();
        let mmse = linear_detect(&y, &h, 0.1, LinearKind::Lmmse, &c).unwrap();
        assert_eq!(zf.symbols, mf.symbols);
        // LMMSE shrinks by 1/(1 + sigma^2); decisions agree away from boundaries
        for (a, b) in zf.soft_estimate.iter().zip(&mmse.soft_estimate) {
            assert!((a / (1.0 + 0.1) - b).norm() < 1e-12);
        }
        let c4 = make_constellation(Modulation::Qam4);
        let zf = linear_detect(&y, &h, 0.1, LinearKind::Zf, &c4).unwrap();
        let mf = linear_detect(&y, &h, 0.1, LinearKind::Mf, &c4).unwrap();
        let mmse = linear_detect(&y, &h, 0.1, LinearKind::Lmmse, &c4).unwrap();
        assert_eq!(zf.symbols, mf.symbols);
        assert_eq!(zf.symbols, mmse.symbols);
    }

    #[test]
    fn rank_deficiency_reported() {
        let c = make_constellation(Modulation::Qam4);
        let col = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let h = ChannelMatrix::from_rows(2, 2, &[col[0], col[0], col[1], col[1]]).unwrap();
        let y = vec![C64::new(1.0, 0.0); 2];
        assert!(matches!(
            linear_detect(&y, &h, 0.0, LinearKind::Zf, &c),
            Err(Error::RankDeficient { .. })
        ));
        let wide = rayleigh_channel(2, 3, &mut RngStream::new(0, 0)).unwrap();
        assert!(linear_detect(&y, &wide, 0.0, LinearKind::Zf, &c).is_err());
        assert!(linear_detect(&y[..1], &h, 0.0, LinearKind::Zf, &c).is_err());
    }
}
