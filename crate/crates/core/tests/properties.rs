use atomic_mimo::capacity::{capacity_prss, envelope_mi_scalar, CapacityConfig};
use atomic_mimo::detect::{linear_cost, mld_linear};
use atomic_mimo::frontend::{despread_exact, PrssConfig};
use atomic_mimo::ofdm::{build_circulant, dft, frequency_response, idft, ofdm_transmit, OfdmConfig};
use atomic_mimo::sigcore::{
    make_constellation, rayleigh_channel, ChannelMatrix, Modulation, RngStream,
};
use atomic_mimo::C64;
use proptest::prelude::*;

fn modulation() -> impl Strategy<Value = Modulation> {
    prop_oneof![
        Just(Modulation::Qam4),
        Just(Modulation::Qam16),
        Just(Modulation::Qam256)
    ]
}

fn complex(scale: f64) -> impl Strategy<Value = C64> {
    (-scale..scale, -scale..scale).prop_map(|(a, b)| C64::new(a, b))
}

proptest! {
    #[test]
    fn gray_round_trip(m in modulation(), seed in any::<u64>(), n in 1usize..40) {
        let c = make_constellation(m);
        let bits = RngStream::new(seed, 0).bits(n * c.bits_per_symbol());
        let s = c.modulate(&bits).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert_eq!(c.demodulate_hard(&s), bits);
    }

    #[test]
    fn quantizer_snaps_within_half_min_distance(m in modulation(), idx in 0usize..256, nudge in complex(1.0)) {
        let c = make_constellation(m);
        let i = idx % c.len();
        let d = nudge * (0.49 * c.min_distance() / 2f64.sqrt());
        prop_assert_eq!(c.nearest_index(c.points()[i] + d), i);
    }

    #[test]
    fn despread_error_within_linearization_bound(z in complex(10.0), ratio in 10.0f64..1e5) {
        prop_assume!(z.norm() > 1e-6);
        let r = z.norm() * ratio;
        let err = (despread_exact(z, r) - z).norm();
        prop_assert!(err <= 2.0 * z.norm_sqr() / (2.0 * r) * (1.0 + 1e-9) + 1e-12 * r);
    }

    #[test]
    fn capacity_grows_with_gain_and_energy(seed in any::<u64>(), k in 1usize..6, n in 1usize..4, e in 0.01f64..100.0) {
        let mut rng = RngStream::new(seed, 0);
        let h = rayleigh_channel(k, n, &mut rng).unwrap();
        let base = capacity_prss(&h, &CapacityConfig::isotropic(1.0, 1.0, n, e).unwrap()).unwrap();
        let more_e = capacity_prss(&h, &CapacityConfig::isotropic(1.0, 1.0, n, 2.0 * e).unwrap()).unwrap();
        let more_g = capacity_prss(&h, &CapacityConfig::isotropic(100.0, 1.0, n, e).unwrap()).unwrap();
        let shifted = capacity_prss(&h, &CapacityConfig::isotropic(1.0, 1.0, n, 100.0 * e).unwrap()).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!(more_e >= base);
        prop_assert!(more_g >= base);
        prop_assert!((more_g - shifted).abs() < 1e-9 * (1.0 + shifted));
    }

    #[test]
    fn scalar_mi_monotone(e in 0.0f64..1e4, de in 1e-6f64..10.0, s2 in 0.01f64..10.0) {
        let a = envelope_mi_scalar(e, s2).unwrap();
        let b = envelope_mi_scalar(e + de, s2).unwrap();
        prop_assert!(a >= 0.0 && b > a);
    }

    #[test]
    fn mld_never_worse_than_truth(seed in any::<u64>(), noise in 0.0f64..2.0) {
        let c = make_constellation(Modulation::Qam4);
        let mut rng = RngStream::new(seed, 1);
        let h = rayleigh_channel(4, 3, &mut rng).unwrap();
        let x: Vec<C64> = (0..3).map(|_| c.points()[rng.below(4)]).collect();
        let y: Vec<C64> = h.apply(&x).unwrap().iter().map(|v| v + rng.complex_normal(noise)).collect();
        let r = mld_linear(&y, &h, &c).unwrap();
        prop_assert!(linear_cost(&y, &h, &r.symbols) <= linear_cost(&y, &h, &x) + 1e-12);
    }

    #[test]
    fn dft_round_trip_and_parseval(v in prop::collection::vec(complex(5.0), 1..80)) {
        let f = dft(&v);
        let back = idft(&f);
        let e1: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let e2: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((e1 - e2).abs() <= 1e-9 * (1.0 + e1));
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn circulant_acts_as_subcarrier_gains(taps in prop::collection::vec(complex(1.0), 1..8), s in prop::collection::vec(complex(1.0), 16)) {
        let cfg = OfdmConfig::new(16, 7, taps).unwrap();
        let c = build_circulant(&cfg).unwrap();
        let out = dft(&c.apply(&idft(&s)).unwrap());
        let resp = frequency_response(&cfg);
        for k in 0..16 {
            prop_assert!((out[k] - resp[k] * s[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn ofdm_second_block_is_rotated_first(s in prop::collection::vec(complex(1.0), 8), theta in 0.1f64..6.2) {
        let cfg = OfdmConfig::new(8, 1, vec![C64::new(1.0, 0.0)]).unwrap();
        let prss = PrssConfig::new(theta).unwrap();
        let frame = ofdm_transmit(&s, &cfg, &prss).unwrap();
        let rot = C64::from_polar(1.0, theta);
        for (a, b) in frame.slot1.iter().zip(&frame.slot2) {
            prop_assert!((a * rot - b).norm() < 1e-12);
        }
    }
}

#[test]
fn unit_channel_capacity_is_half_log() {
    let h = ChannelMatrix::from_rows(1, 1, &[C64::new(1.0, 0.0)]).unwrap();
    let c = capacity_prss(&h, &CapacityConfig::isotropic(1.0, 1.0, 1, 3.0).unwrap()).unwrap();
    assert!((c - 1.0).abs() < 1e-12);
}
