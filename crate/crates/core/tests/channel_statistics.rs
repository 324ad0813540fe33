use vcc_core::channel::{
    apply_estimation_error, elevation_angle, los_probability, sample_channel, sample_dynamic_channel,
    sample_user_position, DynamicScenario, LinkState, ShadowingParams,
};
use vcc_core::experiments::{mc_sum_rate, RunningStats};
use vcc_core::linkphy::SystemConfig;
use vcc_core::rng::substream;

const N: u64 = 200_000;

fn z(stats: &RunningStats, target: f64) -> f64 {
    (stats.mean() - target) / stats.std_error()
}

#[test]
fn element_power_and_zero_mean() {
    for p in [ShadowingParams::FHS, ShadowingParams::AS, ShadowingParams::ILS] {
        let mut power = RunningStats::default();
        let mut re = RunningStats::default();
        let mut im = RunningStats::default();
        for i in 0..N {
            let h = sample_channel(&p, 2, &mut substream(1, i, 0)).unwrap();
            power.push(h.h[0].norm_sqr());
            re.push(h.h[1].re);
            im.push(h.h[1].im);
        }
        let mean_power = 2.0 * p.beta + p.omega;
        assert!(z(&power, mean_power).abs() < 4.0, "{p:?} power {}", power.mean());
        assert!(z(&re, 0.0).abs() < 4.0 && z(&im, 0.0).abs() < 4.0, "{p:?} mean");
    }
}

#[test]
fn elements_share_the_los_amplitude() {
    // distinct elements are uncorrelated but their powers co-vary through
    // the common Nakagami amplitude: Cov(|h1|², |h2|²) = Var(Z²) = Ω²/m
    let p = ShadowingParams::AS;
    let (mut cross_re, mut prod) = (RunningStats::default(), RunningStats::default());
    let (mut p1, mut p2) = (RunningStats::default(), RunningStats::default());
    for i in 0..N {
        let h = sample_channel(&p, 2, &mut substream(2, i, 0)).unwrap();
        cross_re.push((h.h[0] * h.h[1].conj()).re);
        let (a, b) = (h.h[0].norm_sqr(), h.h[1].norm_sqr());
        prod.push(a * b);
        p1.push(a);
        p2.push(b);
    }
    assert!(z(&cross_re, 0.0).abs() < 4.0);
    let cov = prod.mean() - p1.mean() * p2.mean();
    let expected = p.omega * p.omega / p.m;
    assert!(
        (cov - expected).abs() < 0.1 * expected + 4.0 * prod.std_error(),
        "{cov} vs {expected}"
    );
}

#[test]
fn estimation_error_variance() {
    let p = ShadowingParams::ILS;
    for sigma in [0.05, 0.125, 0.25] {
        let mut err = RunningStats::default();
        for i in 0..N / 4 {
            let mut rng = substream(3, i, 0);
            let h = sample_channel(&p, 4, &mut rng).unwrap();
            let est = apply_estimation_error(&h, sigma, &mut rng).unwrap();
            for (a, b) in est.h_hat.iter().zip(&h.h) {
                err.push((a - b).norm_sqr());
            }
        }
        assert!(z(&err, sigma).abs() < 4.0, "σ²={sigma}: {}", err.mean());
    }
}

#[test]
fn dynamic_los_frequency_matches_geometry() {
    let s = DynamicScenario::urban_leo();
    // independent E[P] by midpoint quadrature over the disk, pdf 2r/D²
    let n = 20_000;
    let expected: f64 = (0..n)
        .map(|i| {
            let r = s.radius_km * (i as f64 + 0.5) / n as f64;
            let elev = (s.altitude_km / r).atan().to_degrees();
            let p = (-s.eta / elev.to_radians().tan()).exp();
            p * 2.0 * r / (s.radius_km * s.radius_km) * (s.radius_km / n as f64)
        })
        .sum();
    let mut los = RunningStats::default();
    for i in 0..N {
        let mut rng = substream(4, i, 0);
        let pos = sample_user_position(s.radius_km, &mut rng);
        let elev = elevation_angle(pos.distance_km(), s.altitude_km).unwrap();
        let ch = sample_dynamic_channel(&s, elev, 1, &mut rng).unwrap();
        los.push(f64::from(ch.state == LinkState::Los));
    }
    assert!(
        (los.mean() - expected).abs() < 4.0 * los.std_error().max(1e-4),
        "{} vs {expected}",
        los.mean()
    );
    assert!((s.mean_los_probability() - expected).abs() < 1e-6);
}

#[test]
fn los_probability_matches_formula() {
    for elev in [10.0, 30.0, 60.0, 89.0] {
        let p = los_probability(0.35, elev).unwrap();
        let expected = (-0.35 * (90.0f64 - elev).to_radians().tan()).exp();
        assert!((p - expected).abs() < 1e-12);
    }
}

#[test]
fn users_fill_the_disk_uniformly() {
    let d = 10.0;
    let (mut radius, mut inner) = (RunningStats::default(), RunningStats::default());
    for i in 0..N {
        let r = sample_user_position(d, &mut substream(5, i, 0)).distance_km();
        assert!(r <= d);
        radius.push(r);
        inner.push(f64::from(r < d / 2.0));
    }
    assert!(z(&radius, 2.0 * d / 3.0).abs() < 4.0, "{}", radius.mean());
    assert!(z(&inner, 0.25).abs() < 4.0, "{}", inner.mean());
}

#[test]
fn std_error_shrinks_with_root_trials() {
    let config = SystemConfig::new(ShadowingParams::AS, 12.0).with_groups(2).with_q(2);
    let small = mc_sum_rate(&config, 4_096, 6).unwrap();
    let large = mc_sum_rate(&config, 16_384, 6).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}
