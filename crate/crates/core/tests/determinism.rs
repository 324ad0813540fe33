use vcc_core::channel::{DynamicScenario, ShadowingParams};
use vcc_core::experiments::figures::{figure_rows, run_figure, write_csv};
use vcc_core::experiments::{mc_gain_over_power, mc_sum_rate, with_workers, ChannelModel, Evaluator};
use vcc_core::linkphy::{db_to_linear, SystemConfig};

#[test]
fn rate_is_bit_identical_across_worker_counts() {
    let config = SystemConfig::new(ShadowingParams::FHS, 15.0);
    // 5000 trials leave a partial final chunk
    let runs: Vec<_> = [1, 2, 3, 8]
        .iter()
        .map(|&w| with_workers(w, || mc_sum_rate(&config, 5_000, 17).unwrap()))
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.mean.to_bits(), runs[0].mean.to_bits());
        assert_eq!(r.std_error.to_bits(), runs[0].std_error.to_bits());
    }
}

#[test]
fn power_grid_pass_equals_single_points() {
    let template = SystemConfig::new(ShadowingParams::AS, 0.0).with_antennas(8);
    let model = ChannelModel::Dynamic(DynamicScenario::urban_leo());
    let dbs = [3.0, 12.0, 21.0];
    let pts: Vec<f64> = dbs.iter().map(|&d| db_to_linear(d)).collect();
    let joint = mc_gain_over_power(&template, &model, &pts, &[2, 4], &[2, 4], 1_000, 5).unwrap();
    for (i, p) in pts.iter().enumerate() {
        let single = mc_gain_over_power(&template, &model, &[*p], &[2, 4], &[2, 4], 1_000, 5).unwrap();
        assert_eq!(single[0], joint[i]);
    }
}

#[test]
fn figure_csv_is_byte_identical() {
    let render = |workers: usize| {
        with_workers(workers, || {
            let mut buf = Vec::new();
            for (curve, table) in run_figure(6, Evaluator::Both { trials: 1_500 }, 11).unwrap() {
                write_csv(&figure_rows(&curve.scenario, &table), &mut buf).unwrap();
            }
            buf
        })
    };
    assert_eq!(render(1), render(4));
}

#[test]
fn different_seeds_differ() {
    let config = SystemConfig::new(ShadowingParams::ILS, 9.0);
    let a = mc_sum_rate(&config, 1_000, 1).unwrap();
    let b = mc_sum_rate(&config, 1_000, 2).unwrap();
    assert_ne!(a.mean, b.mean);
}
