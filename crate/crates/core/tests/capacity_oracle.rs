//! Envelope-channel information quantities checked against direct numerical
//! integration of the Rician conditional law.

use std::f64::consts::{LN_2, PI};

use atomic_mimo::capacity::{mi_monte_carlo, rayleigh_density, rayleigh_entropy, EULER_GAMMA};
use atomic_mimo::sigcore::RngStream;

/// `exp(-x) I0(x)`.
fn i0e(x: f64) -> f64 {
    if x < 15.0 {
        let q = x * x / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..200 {
            term *= q / (k * k) as f64;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let t = 1.0 / x;
        (1.0 + t / 8.0 + 9.0 * t * t / 128.0 + 225.0 * t.powi(3) / 3072.0
            + 11025.0 * t.powi(4) / 98304.0)
            / (2.0 * PI * x).sqrt()
    }
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `x ~ CN(0, e_x)`, `y = |x + v|`, `v ~ CN(0, s2)`. Returns `I(x; y)` in bits.
fn rician_mi(e_x: f64, s2: f64) -> f64 {
    let s = e_x + s2;
    let h_y = 1.0 + (s.sqrt() / 2.0).ln() + EULER_GAMMA / 2.0;
    let sd = s2.sqrt();
    // h(y | |x| = a), Rician with amplitude a
    let cond = |a: f64| {
        let lo = (a - 9.0 * sd).max(0.0);
        simpson(lo, a + 9.0 * sd, 1200, |y| {
            if y <= 0.0 {
                return 0.0;
            }
            let ln_p = (2.0 * y / s2).ln() - (y - a).powi(2) / s2 + i0e(2.0 * a * y / s2).ln();
            -ln_p.exp() * ln_p
        })
    };
    let a_max = (e_x * 40.0).sqrt();
    let h_y_x = simpson(0.0, a_max, 600, |a| 2.0 * a / e_x * (-a * a / e_x).exp() * cond(a));
    (h_y - h_y_x) / LN_2
}

#[test]
fn i0e_branches_agree_at_switch() {
    let t: f64 = 1.0 / 15.0;
    let series = {
        let q = 15.0f64 * 15.0 / 4.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..200 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        sum * (-15.0f64).exp()
    };
    let asym = (1.0 + t / 8.0 + 9.0 * t * t / 128.0 + 225.0 * t.powi(3) / 3072.0
        + 11025.0 * t.powi(4) / 98304.0)
        / (2.0 * PI * 15.0).sqrt();
    assert!((series - asym).abs() / series < 1e-6);
    assert!((i0e(0.0) - 1.0).abs() < 1e-15);
}

#[test]
fn quadrature_recovers_rayleigh_entropy_without_signal_structure() {
    // a = 0 reduces the Rician law to Rayleigh with s = s2
    let s2: f64 = 0.7;
    let sd = s2.sqrt();
    let h = simpson(0.0, 9.0 * sd, 4000, |y| {
        let p = rayleigh_density(y, 0.0, s2);
        if p > 0.0 {
            -p * p.ln()
        } else {
            0.0
        }
    });
    let closed = 1.0 + (sd / 2.0).ln() + EULER_GAMMA / 2.0;
    // y ln y at the origin limits Simpson to about 1e-6 here
    assert!((h - closed).abs() < 1e-5, "{h} vs {closed}");
}

#[test]
fn rayleigh_density_is_normalized() {
    for (e, s2) in [(0.0f64, 1.0f64), (3.0, 0.5), (100.0, 1.0)] {
        let total = simpson(0.0, 12.0 * (e + s2).sqrt(), 6000, |y| rayleigh_density(y, e, s2));
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }
}

#[test]
fn output_entropy_formula_differs_from_numeric_by_a_constant() {
    let offsets: Vec<f64> = [0.1, 1.0, 10.0, 300.0]
        .iter()
        .map(|&e| {
            let s: f64 = e + 1.0;
            let numeric_bits = (1.0 + (s.sqrt() / 2.0).ln() + EULER_GAMMA / 2.0) / LN_2;
            rayleigh_entropy(e, 1.0).unwrap() - numeric_bits
        })
        .collect();
    for o in &offsets {
        assert!((o - offsets[0]).abs() < 1e-12);
    }
    let expect = 1.0 + EULER_GAMMA / 2.0 - (1.0 - LN_2 + EULER_GAMMA / 2.0) / LN_2;
    assert!((offsets[0] - expect).abs() < 1e-12);
}

#[test]
fn monte_carlo_estimator_matches_quadrature() {
    for (i, snr_db) in [0.0f64, 5.0, 10.0, 15.0].into_iter().enumerate() {
        let e_x = 10f64.powf(snr_db / 10.0);
        let oracle = rician_mi(e_x, 1.0);
        let mut rng = RngStream::new(31, i as u64);
        let mc = mi_monte_carlo(e_x, 1.0, 1_000_000, &mut rng).unwrap();
        assert!((mc - oracle).abs() < 0.02, "{snr_db} dB: MC {mc} vs quadrature {oracle}");
    }
}

#[test]
fn quadrature_mi_sits_below_half_log() {
    for e_x in [1.0, 10.0, 31.6] {
        let mi = rician_mi(e_x, 1.0);
        assert!(mi > 0.0 && mi < 0.5 * (1.0 + e_x).log2());
    }
}
