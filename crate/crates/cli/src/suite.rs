//! Oracle suite: simulated statistics checked against their closed forms.

use serde::Serialize;
use vcc_core::analysis::{desired_signal_moment, xi_moments_closed_form};
use vcc_core::caching::{build_schedule, verify_completeness, CacheLayout, Demands};
use vcc_core::channel::complex_gaussian;
use vcc_core::experiments::{mc_moment_oracle, mc_power_oracle, sample_block, ChannelModel, Estimate};
use vcc_core::linkphy::{full_signal_roundtrip, unit_symbols, SystemConfig};
use vcc_core::rng::substream;

/// Estimates must land within this many standard errors.
pub const SIGMAS: f64 = 3.0;
pub const RESIDUAL_TOL: f64 = 1e-10;
const ROUNDTRIP_BLOCKS: u64 = 200;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn estimate(name: String, est: &Estimate, target: f64) -> Self {
        Check {
            name,
            passed: est.within_sigmas(target, SIGMAS),
            detail: format!(
                "mc {:.6e} ± {:.2e}, closed form {:.6e}, z = {:+.2}",
                est.mean,
                est.std_error,
                target,
                est.z_score(target)
            ),
        }
    }

    fn error(name: String, e: impl std::fmt::Display) -> Self {
        Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub moment_trials: u64,
    pub power_trials: u64,
    pub seed: u64,
}

pub fn run(config: &SystemConfig, model: &ChannelModel, opts: SuiteOptions) -> Vec<Check> {
    let mut checks = Vec::new();
    let p = &config.shadowing;
    let (l, s) = (config.l_antennas, config.sigma_e2);

    if *model == ChannelModel::Static {
        match (
            mc_moment_oracle(p, s, l, opts.moment_trials, opts.seed),
            xi_moments_closed_form(p, s, l),
            desired_signal_moment(p, s, l),
        ) {
            (Ok(mc), Ok(cf), Ok(d)) => {
                checks.push(Check::estimate("moment E‖h‖⁴".into(), &mc.xi1, cf.xi1));
                checks.push(Check::estimate("moment cross-user".into(), &mc.xi2, cf.xi2));
                checks.push(Check::estimate("moment desired".into(), &mc.desired, d));
            }
            (a, b, c) => {
                let e = a
                    .err()
                    .or(b.err())
                    .or(c.err())
                    .map(|e| e.to_string())
                    .unwrap_or_default();
                checks.push(Check::error("moments".into(), e));
            }
        }
    }

    for (label, cfg) in [("VCC", *config), ("baseline", config.baseline(config.q_mux))] {
        let name = format!("power contract {label} (G={})", cfg.g_groups);
        checks.push(match mc_power_oracle(&cfg, model, opts.power_trials, opts.seed) {
            Ok(est) => Check::estimate(name, &est, cfg.p_t),
            Err(e) => Check::error(name, e),
        });
    }

    checks.push(roundtrip_check(config, model, opts.seed));
    checks.push(schedule_check(config));
    checks
}

fn roundtrip_check(config: &SystemConfig, model: &ChannelModel, seed: u64) -> Check {
    let name = "inter-group cancellation".to_string();
    let alpha2 = match model.alpha2(config) {
        Ok(a) => a,
        Err(e) => return Check::error(name, e),
    };
    let k = config.users();
    let mut worst = 0.0f64;
    for block in 0..ROUNDTRIP_BLOCKS {
        let blk = match sample_block(config, model, seed, block) {
            Ok(b) => b,
            Err(e) => return Check::error(name, e),
        };
        let mut rng = substream(seed, block, k as u64);
        let symbols = unit_symbols(k, &mut rng);
        let noise: Vec<_> = (0..k).map(|_| complex_gaussian(1.0, &mut rng)).collect();
        match full_signal_roundtrip(&blk, alpha2, &symbols, &noise) {
            Ok(r) => worst = worst.max(r.max_relative_residual()),
            Err(e) => return Check::error(name, e),
        }
    }
    Check {
        name,
        passed: worst < RESIDUAL_TOL,
        detail: format!("max relative residual {worst:.2e} over {ROUNDTRIP_BLOCKS} blocks"),
    }
}

/// Delivery schedule for `Λ = G` cache states, `t = G − 1`, `B = Q`.
fn schedule_check(config: &SystemConfig) -> Check {
    let name = "delivery schedule".to_string();
    let (g, q) = (config.g_groups, config.q_mux);
    if g < 2 {
        return Check {
            name,
            passed: true,
            detail: "cacheless configuration, nothing to deliver by stages".into(),
        };
    }
    let layout = match CacheLayout::new(g, g - 1, g * q, q) {
        Ok(l) => l,
        Err(e) => return Check::error(name, e),
    };
    let demands = Demands::identity(layout.users());
    match build_schedule(&layout, q, &demands) {
        Ok(s) => {
            let r = verify_completeness(&s, &layout, &demands);
            Check {
                name,
                passed: r.complete,
                detail: format!(
                    "{} users, {} deliveries, {} missing, {} duplicated",
                    r.users_checked,
                    r.deliveries,
                    r.missing.len(),
                    r.duplicated.len()
                ),
            }
        }
        Err(e) => Check::error(name, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vcc_core::channel::ShadowingParams;

    #[test]
    fn small_suite_passes() {
        let config = SystemConfig::new(ShadowingParams::AS, 10.0).with_groups(3).with_q(2);
        let opts = SuiteOptions {
            moment_trials: 20_000,
            power_trials: 5_000,
            seed: 4,
        };
        let checks = run(&config, &ChannelModel::Static, opts);
        assert_eq!(checks.len(), 7);
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }
}
