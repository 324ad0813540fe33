use proptest::prelude::*;
use vcc_core::analysis::{alpha2_closed_form, intra_interference_term, xi_moments_closed_form};
use vcc_core::caching::{build_schedule, subsets, verify_completeness, CacheLayout, Demands};
use vcc_core::channel::{complex_gaussian, ShadowingParams};
use vcc_core::linkphy::{full_signal_roundtrip, sinr_from_coupling, unit_symbols, ChannelBlock, SystemConfig};
use vcc_core::rng::substream;

fn layouts() -> impl Strategy<Value = (CacheLayout, usize)> {
    (2usize..=7, 1usize..=2, 0usize..=1).prop_flat_map(|(lambda, q, double)| {
        (1..lambda).prop_map(move |t| {
            let b = q * (1 + double);
            (CacheLayout::new(lambda, t, lambda * b, b).unwrap(), q)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_needed_subfile_arrives_once((layout, q) in layouts(), shift in 0usize..100) {
        let k = layout.users();
        // any permutation of distinct demands
        let demands = Demands((0..k).map(|u| (u + shift) % k + 1).collect());
        let schedule = build_schedule(&layout, q, &demands).unwrap();
        let report = verify_completeness(&schedule, &layout, &demands);
        prop_assert!(report.complete, "{:?}", report);
        let expected = subsets(layout.lambda - 1, layout.t).count() as u64;
        prop_assert_eq!(report.needed_per_user, expected);
        prop_assert_eq!(report.deliveries as u64, expected * k as u64);
    }

    #[test]
    fn cancellation_leaves_intra_group_signal(
        g in 1usize..=6, q in 1usize..=4, l in 4usize..=16, seed in any::<u64>(), block in 0u64..1000,
    ) {
        let l = l.max(q);
        let config = SystemConfig::new(ShadowingParams::AS, 10.0).with_groups(g).with_q(q).with_antennas(l);
        let blk = ChannelBlock::sample(&config, seed, block).unwrap();
        let mut rng = substream(seed ^ 0x5a5a, block, 0);
        let symbols = unit_symbols(g * q, &mut rng);
        let noise: Vec<_> = (0..g * q).map(|_| complex_gaussian(1.0, &mut rng)).collect();
        let r = full_signal_roundtrip(&blk, alpha2_closed_form(&config).unwrap(), &symbols, &noise).unwrap();
        prop_assert!(r.max_relative_residual() < 1e-10);
    }

    #[test]
    fn interference_identity(
        m in 0.5f64..30.0, beta in 0.01f64..0.5, omega in 0.0f64..2.0, sigma in 0.0f64..0.5,
        l in 1usize..=32, g in 1usize..=8, q in 1usize..=10, pt_db in -10.0f64..30.0,
    ) {
        let p = ShadowingParams::new(m, beta, omega).unwrap();
        let config = SystemConfig::new(p, pt_db).with_antennas(l).with_groups(g).with_q(q).with_sigma_e2(sigma);
        let a2 = alpha2_closed_form(&config).unwrap();
        let xi2 = xi_moments_closed_form(&p, sigma, l).unwrap().xi2;
        let lhs = a2 * (q as f64 - 1.0) * xi2;
        let rhs = config.p_t * (q as f64 - 1.0) * (2.0 * beta + omega) / (g * q) as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(f64::MIN_POSITIVE));
        prop_assert_eq!(intra_interference_term(&config), intra_interference_term(&config.with_sigma_e2(0.0)));
    }

    #[test]
    fn sinr_falls_as_interference_grows(
        q in 2usize..=6, alpha2 in 1e-4f64..1.0, seed in any::<u64>(), extra in 0.0f64..10.0,
    ) {
        let mut rng = substream(seed, 0, 0);
        let coupling: Vec<f64> = (0..q * q).map(|_| rand::Rng::gen_range(&mut rng, 0.0..5.0)).collect();
        let mut raised = coupling.clone();
        raised[1] += extra; // user 0 hears more from user 1
        let a = sinr_from_coupling(&[coupling], q, alpha2);
        let b = sinr_from_coupling(&[raised], q, alpha2);
        prop_assert!(b.values[0] <= a.values[0]);
        prop_assert_eq!(&a.values[1..], &b.values[1..]);
    }

    #[test]
    fn sinr_rises_with_power(q in 1usize..=6, alpha2 in 1e-4f64..1.0, seed in any::<u64>()) {
        let mut rng = substream(seed, 0, 0);
        let coupling: Vec<f64> = (0..q * q).map(|_| rand::Rng::gen_range(&mut rng, 0.01..5.0)).collect();
        let lo = sinr_from_coupling(std::slice::from_ref(&coupling), q, alpha2);
        let hi = sinr_from_coupling(&[coupling], q, alpha2 * 2.0);
        for (a, b) in lo.values.iter().zip(&hi.values) {
            prop_assert!(b >= a);
        }
    }
}
