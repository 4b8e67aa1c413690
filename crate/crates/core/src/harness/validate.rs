//! Fast self-check run by the `validate` subcommand.

use std::f64::consts::PI;

use super::config::ExperimentConfig;
use super::sweep::{run_ber_sweep, SweepOptions};
use crate::capacity::{capacity_prss, envelope_mi_mimo, envelope_mi_scalar, CapacityConfig};
use crate::detect::{esls_gradient, esls_objective, mld_envelope, mld_linear};
use crate::frontend::{
    envelope_observe, linearization_error, observe_frame, prss_despread, prss_spread,
    PrssConfig, ReferenceInjection, Slot,
};
use crate::ofdm::{build_circulant, frequency_response, rayleigh_taps, OfdmConfig};
use crate::sigcore::{
    make_constellation, rayleigh_channel, unitary_channel, Modulation, RngStream,
};
use crate::C64;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn run_validation(jobs: Option<usize>) -> Vec<Check> {
    vec![
        check("constellations", constellations),
        check("prss linearization", linearization),
        check("circulant diagonalization", circulant),
        check("capacity identities", capacity),
        check("noiseless mld", noiseless_mld),
        check("es-ls gradient", gradient),
        check("sweep determinism", || determinism(jobs)),
    ]
}

fn constellations() -> Result<String, String> {
    for m in [Modulation::Qam4, Modulation::Qam16, Modulation::Qam256] {
        let c = make_constellation(m);
        let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
        ensure((e - 1.0).abs() < 1e-12, || format!("{m} energy {e}"))?;
        for i in 0..c.len() {
            let bits: Vec<bool> = c.label_bits(i).collect();
            let back = c.modulate(&bits).map_err(|e| e.to_string())?;
            ensure(c.demodulate_hard(&back) == bits, || format!("{m} index {i} round trip"))?;
        }
    }
    Ok("unit energy, Gray round trip".into())
}

fn linearization() -> Result<String, String> {
    let mut rng = RngStream::new(0x11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let z = rng.complex_normal(1.0);
        let r = z.norm() * (10.0 + 1000.0 * rng.uniform());
        let err = linearization_error(z, r).map_err(|e| e.to_string())?;
        let bound = z.norm_sqr() / (2.0 * r);
        worst = worst.max(err / bound);
    }
    ensure(worst <= 2.0, || format!("error/bound ratio {worst}"))?;
    Ok(format!("max error/bound {worst:.3}"))
}

fn circulant() -> Result<String, String> {
    let mut rng = RngStream::new(0x12, 0);
    let n = 16;
    let f = |k: usize, m: usize| C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * PI * (k * m) as f64 / n as f64);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let cfg = OfdmConfig::new(n, 4, rayleigh_taps(5, &mut rng)).map_err(|e| e.to_string())?;
        let c = build_circulant(&cfg).map_err(|e| e.to_string())?;
        let resp = frequency_response(&cfg);
        let (mut off, mut total) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let mut v = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        v += f(a, i) * c.get(i, j) * f(b, j).conj();
                    }
                }
                total += v.norm_sqr();
                if a != b {
                    off += v.norm_sqr();
                } else {
                    ensure((v - resp[a]).norm() < 1e-10, || "diagonal mismatch".into())?;
                }
            }
        }
        worst = worst.max(off / total);
    }
    ensure(worst < 1e-10, || format!("off-diagonal fraction {worst:e}"))?;
    Ok(format!("off-diagonal fraction {worst:.1e}"))
}

fn capacity() -> Result<String, String> {
    let one = envelope_mi_scalar(3.0, 1.0).map_err(|e| e.to_string())?;
    ensure(one == 1.0, || format!("scalar identity gave {one}"))?;
    let mut rng = RngStream::new(0x13, 0);
    for k in [1, 2, 4, 8] {
        let h = unitary_channel(k, &mut rng).map_err(|e| e.to_string())?;
        let cfg = CapacityConfig::isotropic(1.0, 1.0, k, 2.5).map_err(|e| e.to_string())?;
        let a = capacity_prss(&h, &cfg).map_err(|e| e.to_string())?;
        let b = envelope_mi_mimo(k, 2.5, 1.0).map_err(|e| e.to_string())?;
        ensure((a - b).abs() < 1e-9, || format!("K={k}: {a} vs {b}"))?;
    }
    Ok("scalar = 1 bit, unitary equivalence".into())
}

fn noiseless_mld() -> Result<String, String> {
    let c = make_constellation(Modulation::Qam16);
    let c4 = make_constellation(Modulation::Qam4);
    let mut rng = RngStream::new(0x14, 0);
    for _ in 0..20 {
        let h = rayleigh_channel(8, 2, &mut rng).map_err(|e| e.to_string())?;
        let x = vec![c.points()[rng.below(16)], c.points()[rng.below(16)]];
        let reference = ReferenceInjection::above_signal(8, 2.0, 35.0).map_err(|e| e.to_string())?;
        let frame = prss_spread(&x, &PrssConfig::default());
        let (o1, o2) = observe_frame(&h, &frame, 0.0, &reference, &mut rng).map_err(|e| e.to_string())?;
        let z = prss_despread(&o1, &o2).map_err(|e| e.to_string())?;
        let r = mld_linear(&z, &h, &c).map_err(|e| e.to_string())?;
        ensure(r.symbols == x, || "PRSS + linear MLD missed a noiseless frame".into())?;

        let x4 = vec![c4.points()[rng.below(4)], c4.points()[rng.below(4)]];
        let y = envelope_observe(&h, &x4, 0.0, &reference, Slot::First, &mut rng).map_err(|e| e.to_string())?;
        let r = mld_envelope(&y, &h, &c4).map_err(|e| e.to_string())?;
        ensure(r.symbols == x4, || "envelope MLD missed a noiseless frame".into())?;
    }
    Ok("20 frames each".into())
}

fn gradient() -> Result<String, String> {
    let mut rng = RngStream::new(0x15, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let h = rayleigh_channel(4, 2, &mut rng).map_err(|e| e.to_string())?;
        let truth = vec![rng.complex_normal(1.0), rng.complex_normal(1.0)];
        let y = envelope_observe(&h, &truth, 0.1, &ReferenceInjection::none(4), Slot::First, &mut rng)
            .map_err(|e| e.to_string())?;
        let x = vec![rng.complex_normal(1.0), rng.complex_normal(1.0)];
        let g = esls_gradient(&y, &h, &x);
        let step = 1e-6;
        let mut num = Vec::new();
        for i in 0..2 {
            let d = [C64::new(step, 0.0), C64::new(0.0, step)].map(|delta| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[i] += delta;
                m[i] -= delta;
                (esls_objective(&y, &h, &p) - esls_objective(&y, &h, &m)) / (2.0 * step)
            });
            num.push(C64::new(d[0], d[1]));
        }
        let diff: f64 = g.iter().zip(&num).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = num.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    ensure(worst < 1e-5, || format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn determinism(jobs: Option<usize>) -> Result<String, String> {
    let text = r#"
[system]
kind = "ENVELOPE_ONLY"
n_tx = 2
k_rx = 8
modulation = "QAM4"
[detector]
kind = "MLD"
[sweep]
snr_grid_db = [0.0, 6.0]
min_errors = 50
max_trials = 4000
master_seed = 99
batch_size = 64
"#;
    let cfg = ExperimentConfig::from_toml_str(text).map_err(|e| e.to_string())?;
    let other = match jobs {
        Some(1) => Some(3),
        _ => Some(1),
    };
    let a = run_ber_sweep(&cfg, &SweepOptions { jobs, progress: false }).map_err(|e| e.to_string())?;
    let b = run_ber_sweep(&cfg, &SweepOptions { jobs: other, progress: false }).map_err(|e| e.to_string())?;
    for (x, y) in a.iter().zip(&b) {
        ensure(
            (x.bit_errors, x.bits_simulated, x.trials) == (y.bit_errors, y.bits_simulated, y.trials),
            || format!("snr {}: worker count changed the result", x.snr_db),
        )?;
    }
    Ok("identical across worker counts".into())
}
