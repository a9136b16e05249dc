//! Property-based invariants of the channel and the Fisher information.

use proptest::prelude::*;
use satcam_core::*;

fn policy() -> TruncationPolicy {
    TruncationPolicy::default()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn channel_rows_are_stochastic(
        n in 0u64..20_000,
        k_bits in 2usize..9,
        n_sat in 5.0f64..5_000.0,
        sigma in 0.05f64..30.0,
    ) {
        let cfg = DetectorConfig::saturating(1 << k_bits, n_sat, sigma).unwrap();
        let row = channel_row(n, &cfg).unwrap();
        let total: f64 = row.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "row mass {total}");
        prop_assert!(row.probs.iter().all(|&p| p >= 0.0));
        prop_assert!(row.mu >= 0.0 && row.mu <= cfg.k_max as f64);
    }

    #[test]
    fn outcome_probs_normalized_and_derivative_sums_to_zero(
        n_bar in 0.01f64..5_000.0,
        dn_scale in -0.3f64..0.3,
        sigma in 0.0f64..20.0,
    ) {
        let cfg = DetectorConfig::saturating(256, 500.0, sigma).unwrap();
        let dn_bar = dn_scale * n_bar;
        let out = outcome_probs(n_bar, dn_bar, &cfg, &policy()).unwrap();
        let total: f64 = out.p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "outcome mass {total}");
        let dsum: f64 = out.dp.iter().sum();
        prop_assert!(dsum.abs() <= 1e-10 * dn_bar.abs().max(1.0), "derivative sum {dsum}");
    }

    #[test]
    fn data_processing_never_beats_poisson(
        n_bar in 0.1f64..10_000.0,
        dn_scale in -0.3f64..0.3,
        n_sat in 5.0f64..5_000.0,
        sigma in 0.0f64..20.0,
        digitization in any::<bool>(),
    ) {
        let cfg = DetectorConfig::new(
            256,
            Saturation::Saturating { n_sat },
            if digitization { sigma } else { 0.0 },
            digitization,
        ).unwrap();
        let dn_bar = dn_scale * n_bar;
        let (f, _) = fisher_per_pixel(n_bar, dn_bar, &cfg, &policy()).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(
            f <= dn_bar * dn_bar / n_bar + 1e-9,
            "channel FI {f} exceeds Poisson bound {}",
            dn_bar * dn_bar / n_bar
        );
    }

    #[test]
    fn saturation_is_invariant_without_digitization(
        n_bar in 0.1f64..50_000.0,
        dn_scale in -0.3f64..0.3,
        n_sat in 1.0f64..1e6,
    ) {
        let dn_bar = dn_scale * n_bar;
        let sat = DetectorConfig::new(256, Saturation::Saturating { n_sat }, 0.0, false).unwrap();
        let lin = DetectorConfig::new(256, Saturation::Linear { n_ref: 1e7 }, 0.0, false).unwrap();
        let (a, _) = fisher_per_pixel(n_bar, dn_bar, &sat, &policy()).unwrap();
        let (b, _) = fisher_per_pixel(n_bar, dn_bar, &lin, &policy()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "sat {a} vs lin {b}");
    }

    #[test]
    fn shift_equivariance_of_pixel_means(
        g in -0.2f64..0.2,
        a_w in prop::sample::select(vec![1.2, 1.8, 2.4, 3.2, 4.0]),
    ) {
        // WVA means equal (a_w * g)-shifted unit-weak-value means, scaled by
        // the post-selection probability; same code path, so near-exact.
        let grid = PixelGrid::symmetric(40, 5.0).unwrap();
        let wva = MeasurementScheme::wva(a_w).unwrap();
        let beam = BeamSpec::new(1.0, 1000.0, g).unwrap();
        let means = pixel_mean_photons(&beam, &wva, &grid);
        let forced = MeasurementScheme { kind: SchemeKind::Wva, a_w: 1.0, p_ps: 1.0 };
        let unit = pixel_mean_photons(&BeamSpec::new(1.0, 1000.0, a_w * g).unwrap(), &forced, &grid);
        for j in 0..grid.len() {
            prop_assert!(
                (means[j] - wva.p_ps * unit[j]).abs() <= 1e-15 * unit[j].max(1e-300),
                "pixel {j}: {} vs {}", means[j], wva.p_ps * unit[j]
            );
        }
    }

    #[test]
    fn fi_even_in_shift_for_symmetric_camera(g in 0.001f64..0.45) {
        let grid = PixelGrid::symmetric(30, 5.0).unwrap();
        let cfg = DetectorConfig::saturating(64, 200.0, 3.2).unwrap();
        let cm = MeasurementScheme::cm();
        let plus = fisher_total(&BeamSpec::new(1.0, 800.0, g).unwrap(), &cm, &grid, &cfg, &policy())
            .unwrap();
        let minus = fisher_total(&BeamSpec::new(1.0, 800.0, -g).unwrap(), &cm, &grid, &cfg, &policy())
            .unwrap();
        prop_assert!(
            (plus.total - minus.total).abs() <= 1e-10 * plus.total.max(1e-300),
            "F(g) {} vs F(-g) {}", plus.total, minus.total
        );
    }

    #[test]
    fn sampled_counts_stay_in_range(
        seed in any::<u64>(),
        n_bar in 0.0f64..5_000.0,
        sigma in 0.0f64..20.0,
    ) {
        let sc = Scenario {
            beam: BeamSpec::new(1.0, n_bar, 0.01).unwrap(),
            scheme: MeasurementScheme::cm(),
            grid: PixelGrid::symmetric(16, 5.0).unwrap(),
            detector: DetectorConfig::saturating(64, 500.0, sigma).unwrap(),
            policy: policy(),
        };
        let frame = sample_frame(&sc, seed, 0).unwrap();
        prop_assert_eq!(frame.counts.len(), 16);
        prop_assert!(frame.counts.iter().all(|&k| k < 64));
    }
}
