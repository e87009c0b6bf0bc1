use proptest::prelude::*;
use qlst::config::RunConfig;
use qlst::replica::equivalent_system;
use qlst::scalar_awgn::{mmse_awgn, mutual_info_awgn};
use qlst::ser::ser_qpsk_theory;
use qlst::special::truncated_normal_moments;
use qlst::{InputPrior, QuantizerSpec, Resolution};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn level_cell_contains_the_input(bits in 1u32..=6, w in -20.0f64..20.0, rho in 0.0f64..100.0) {
        let q = QuantizerSpec::calibrated(Resolution::Bits(bits), rho).unwrap();
        let k = q.level_of(w);
        prop_assert!((1..=q.levels()).contains(&k));
        prop_assert!(q.threshold(k - 1) < w && w <= q.threshold(k));
    }

    #[test]
    fn kernels_form_a_distribution(bits in 1u32..=5, w in -10.0f64..10.0, s in 0.01f64..20.0) {
        let q = QuantizerSpec::calibrated(Resolution::Bits(bits), 3.0).unwrap();
        let (mut sum, mut dsum) = (0.0, 0.0);
        for k in 1..=q.levels() {
            let p = q.psi(k, w, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            sum += p;
            dsum += q.psi_prime(k, w, s).unwrap();
        }
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(dsum.abs() < 1e-12);
    }

    #[test]
    fn equivalent_system_conserves_power(rho in 0.0f64..1e4, s2 in 0.0f64..10.0, m in 0.0f64..=1.0) {
        let (rb, sb) = equivalent_system(rho, s2, m).unwrap();
        prop_assert!(rb >= 0.0 && sb >= s2);
        prop_assert!(((rb + sb) - (rho + s2)).abs() <= 1e-12 * (1.0 + rho + s2));
    }

    #[test]
    fn discrete_inputs_respect_the_gaussian_bounds(a in 1u32..=3, lambda in 0.001f64..100.0) {
        let p = InputPrior::discrete(a).unwrap();
        let mmse = mmse_awgn(lambda, &p).unwrap();
        let info = mutual_info_awgn(lambda, &p).unwrap();
        prop_assert!(mmse >= 0.0 && mmse <= 1.0 / (1.0 + lambda) + 1e-12);
        prop_assert!(info >= 0.0 && info <= (1.0 + lambda).log2() + 1e-12);
        prop_assert!(info <= p.entropy_bits() + 1e-12);
    }

    #[test]
    fn ser_decreases_with_snr(x in 0.0f64..50.0, dx in 0.01f64..5.0) {
        let a = ser_qpsk_theory(x).unwrap();
        let b = ser_qpsk_theory(x + dx).unwrap();
        prop_assert!(b < a && a <= 0.75 && b >= 0.0);
    }

    #[test]
    fn truncated_moments_stay_inside_the_cell(lo in -30.0f64..30.0, width in 1e-6f64..10.0) {
        let hi = lo + width;
        let (mean, var) = truncated_normal_moments(lo, hi);
        prop_assert!(mean >= lo - 1e-9 && mean <= hi + 1e-9, "mean {mean} outside ({lo}, {hi}]");
        // a distribution on an interval of width w has variance at most w²/4
        prop_assert!(var >= 0.0 && var <= width * width / 4.0 + 1e-12);
    }

    #[test]
    fn config_json_round_trips(rho_db in -20.0f64..40.0, alpha in 0.01f64..100.0, tau in 0.001f64..0.99, bits in 1u32..=8) {
        let cfg = RunConfig { rho_db, alpha, tau: Some(tau), b: Resolution::Bits(bits), ..Default::default() };
        let back = RunConfig::from_json(&cfg.to_json_pretty().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
