use proptest::prelude::*;
use wavefront_core::channel::stream_seed;
use wavefront_core::geometry::{extra_distance_exact, extra_distance_fresnel, fraunhofer_distance};
use wavefront_core::harness::ScenarioConfig;
use wavefront_core::interference::{sir_exact, InterferenceScenario};
use wavefront_core::{ApertureSpec, Architecture, Frontend, SourcePosition, SurfacePoint};

proptest! {
    #[test]
    fn extra_distance_within_triangle_bounds(
        d in 0.5f64..60.0,
        theta in -1.5f64..1.5,
        phi in -1.5f64..1.5,
        y in 0.0f64..0.3,
        z in 0.0f64..0.3,
    ) {
        let p = SourcePosition::with_phi(d, theta, phi, 0.0).unwrap();
        let s = SurfacePoint::new(y, z);
        let a = extra_distance_exact(&p, &s);
        prop_assert!(a >= -s.d_0yz - 1e-12 && a <= s.d_0yz + 1e-12);
    }

    #[test]
    fn fresnel_error_is_third_order(
        scale in 10.0f64..200.0,
        theta in -1.0f64..1.0,
        y in 0.0f64..0.2,
        z in 0.0f64..0.2,
    ) {
        let s = SurfacePoint::new(y, z);
        prop_assume!(s.d_0yz > 1e-6);
        let d = scale * s.d_0yz;
        let p = SourcePosition::new(d, theta, 0.0).unwrap();
        let err = (extra_distance_exact(&p, &s) - extra_distance_fresnel(&p, &s)).abs();
        prop_assert!(err <= s.d_0yz.powi(3) / (d * d));
    }

    #[test]
    fn fraunhofer_distance_grows_with_size_and_frequency(
        dia in 0.01f64..2.0,
        grow in 1.01f64..3.0,
        lambda in 1e-4f64..0.1,
    ) {
        let base = fraunhofer_distance(dia, lambda).unwrap();
        prop_assert!(fraunhofer_distance(dia * grow, lambda).unwrap() > base);
        prop_assert!(fraunhofer_distance(dia, lambda / grow).unwrap() > base);
    }

    #[test]
    fn cartesian_round_trip(d in 0.1f64..100.0, theta in 0.01f64..3.1, phi in -3.1f64..3.1) {
        let p = SourcePosition::with_phi(d, theta, phi, 0.0).unwrap();
        let q = SourcePosition::from_cartesian(p.to_cartesian(), 0.0).unwrap();
        let (a, b) = (p.to_cartesian(), q.to_cartesian());
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() < 1e-9 * d);
        }
    }

    #[test]
    fn stream_seeds_separate_tags(global in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        prop_assert_eq!(stream_seed(global, &[a, b]), stream_seed(global, &[a, b]));
        prop_assert_ne!(stream_seed(global, &[a]), stream_seed(global, &[b]));
        prop_assert_ne!(stream_seed(global, &[a, b]), stream_seed(global, &[b, a]));
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), n_mc in 1usize..10_000, step in 0.05f64..1.0) {
        let cfg = ScenarioConfig { seed, n_mc, quadrature_step_lambda: step, ..ScenarioConfig::default() };
        let back = ScenarioConfig::from_toml_str(&cfg.to_canonical_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nolens_single_interferer_never_below_zero_db(
        du in 1.0f64..40.0, tu in -1.4f64..1.4,
        di in 1.0f64..40.0, ti in -1.4f64..1.4,
        chi in -3.1f64..3.1,
    ) {
        let fe = Frontend::standard(Architecture::NoLens, ApertureSpec::mm_wave(0.025, 0.1)).unwrap();
        let scn = InterferenceScenario::new(
            SourcePosition::new(du, tu, 0.0).unwrap(),
            vec![SourcePosition::new(di, ti, chi).unwrap()],
            false,
        ).unwrap();
        prop_assert!(sir_exact(&scn, &fe).sir_db >= -1e-9);
    }
}
