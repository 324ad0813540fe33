use serde::{Deserialize, Serialize};

use super::estimate::{Estimate, RateEstimate, RunningStats};
use super::run_chunks;
use crate::analysis::{argmax_q, GainResult};
use crate::channel::{
    apply_estimation_error, elevation_angle, sample_channel, sample_dynamic_channel, sample_user_position,
    DynamicScenario, ShadowingParams,
};
use crate::error::{Error, Result};
use crate::linkphy::{
    inner_conj, sinr_from_coupling, transmit_signal, unit_symbols, ChannelBlock, SystemConfig, MAX_Q,
};
use crate::rng::substream;

/// Which channel statistics a block is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelModel {
    /// Every user sees `config.shadowing`.
    Static,
    /// Users uniform over a coverage disk with per-block LOS/NLOS states.
    Dynamic(DynamicScenario),
}

impl ChannelModel {
    /// Average per-element power of an estimated channel.
    pub fn mean_estimated_power(&self, config: &SystemConfig) -> f64 {
        match self {
            ChannelModel::Static => config.shadowing.mean_power() + config.sigma_e2,
            ChannelModel::Dynamic(s) => s.mean_estimated_power(config.sigma_e2),
        }
    }

    /// Statistical power normalisation keeping `E‖x‖² = P_t`.
    pub fn alpha2(&self, config: &SystemConfig) -> Result<f64> {
        config.validate()?;
        let denom = (config.users() * config.l_antennas) as f64 * self.mean_estimated_power(config);
        if !(denom > 0.0) {
            return Err(Error::config("shadowing", "mean estimated channel power is zero"));
        }
        Ok(config.p_t / denom)
    }

    fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Static => Ok(()),
            ChannelModel::Dynamic(s) => s.validate(),
        }
    }
}

/// Block `block` under `model`. For the dynamic model each user draws, from
/// its own substream, a position, then its LOS state and channel, then the
/// estimation error.
pub fn sample_block(config: &SystemConfig, model: &ChannelModel, seed: u64, block: u64) -> Result<ChannelBlock> {
    let scenario = match model {
        ChannelModel::Static => return ChannelBlock::sample(config, seed, block),
        ChannelModel::Dynamic(s) => s,
    };
    let k = config.users();
    let mut true_h = Vec::with_capacity(k);
    let mut est_h = Vec::with_capacity(k);
    for user in 0..k {
        let mut rng = substream(seed, block, user as u64);
        let pos = sample_user_position(scenario.radius_km, &mut rng);
        let elevation = elevation_angle(pos.distance_km(), scenario.altitude_km)?;
        let ch = sample_dynamic_channel(scenario, elevation, config.l_antennas, &mut rng)?.channel;
        let est = apply_estimation_error(&ch, config.sigma_e2, &mut rng)?;
        true_h.push(ch.h);
        est_h.push(est.h_hat);
    }
    ChannelBlock::new(config.g_groups, config.q_mux, true_h, est_h)
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(Error::param("trials", format!("need at least {min}, got {trials}")));
    }
    Ok(())
}

/// Effective sum rate estimates for one configuration at several linear
/// powers. Channels are drawn once per block and shared by all powers, so
/// each entry equals what [`mc_sum_rate`] returns at that power alone.
pub fn mc_sum_rate_over_power(
    config: &SystemConfig,
    model: &ChannelModel,
    p_t_linear: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<RateEstimate>> {
    check_trials(trials, 100)?;
    model.validate()?;
    let configs: Vec<SystemConfig> = p_t_linear.iter().map(|&p| SystemConfig { p_t: p, ..*config }).collect();
    let alphas = configs.iter().map(|c| model.alpha2(c)).collect::<Result<Vec<f64>>>()?;
    let xi = config.overhead_factor();
    let q = config.q_mux;

    let partials = run_chunks(trials, |range| {
        let mut stats = vec![RunningStats::default(); alphas.len()];
        for block in range {
            let coupling = sample_block(config, model, seed, block)?.coupling();
            for (s, &a2) in stats.iter_mut().zip(&alphas) {
                let sinr = sinr_from_coupling(&coupling, q, a2);
                s.push(xi * sinr.values.iter().map(|v| (1.0 + v).log2()).sum::<f64>());
            }
        }
        Ok(stats)
    })?;

    let mut totals = vec![RunningStats::default(); alphas.len()];
    for part in &partials {
        for (t, p) in totals.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(totals
        .iter()
        .zip(configs)
        .map(|(t, config)| RateEstimate {
            mean: t.mean(),
            std_error: t.std_error(),
            trials: t.count(),
            config,
        })
        .collect())
}

/// Average effective sum rate of a static configuration.
pub fn mc_sum_rate(config: &SystemConfig, trials: u64, seed: u64) -> Result<RateEstimate> {
    let mut v = mc_sum_rate_over_power(config, &ChannelModel::Static, &[config.p_t], trials, seed)?;
    Ok(v.remove(0))
}

/// Simulated effective gain with the optimising rates behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McGain {
    pub gain: GainResult,
    pub vcc: RateEstimate,
    pub baseline: RateEstimate,
    /// Delta-method standard error of the ratio.
    pub gain_std_error: f64,
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("Q_max", "empty Q grid"));
    }
    if let Some(q) = grid.iter().find(|&&q| !(2..=MAX_Q).contains(&q)) {
        return Err(Error::config("Q", format!("grid value {q} outside {{2, …, {MAX_Q}}}")));
    }
    Ok(())
}

/// Q-optimised gain at each linear power of `p_t_linear`. Every grid point
/// reuses `seed`, so rate differences between Q values are not sampling noise.
pub fn mc_gain_over_power(
    template: &SystemConfig,
    model: &ChannelModel,
    p_t_linear: &[f64],
    q_grid: &[usize],
    q_grid_baseline: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<McGain>> {
    check_grid(q_grid)?;
    check_grid(q_grid_baseline)?;
    let sweep_q = |cfgs: Vec<SystemConfig>| -> Result<Vec<Vec<RateEstimate>>> {
        cfgs.iter()
            .map(|c| mc_sum_rate_over_power(c, model, p_t_linear, trials, seed))
            .collect()
    };
    let vcc = sweep_q(q_grid.iter().map(|&q| template.with_q(q)).collect())?;
    let base = sweep_q(q_grid_baseline.iter().map(|&q| template.baseline(q)).collect())?;

    (0..p_t_linear.len())
        .map(|i| {
            let (qv, _) = argmax_q(q_grid, |q| Ok(vcc[index_of(q_grid, q)][i].mean))?;
            let (qb, _) = argmax_q(q_grid_baseline, |q| Ok(base[index_of(q_grid_baseline, q)][i].mean))?;
            let v = vcc[index_of(q_grid, qv)][i];
            let b = base[index_of(q_grid_baseline, qb)][i];
            let gain = v.mean / b.mean;
            let rel = ((v.std_error / v.mean).powi(2) + (b.std_error / b.mean).powi(2)).sqrt();
            Ok(McGain {
                gain: GainResult {
                    gain,
                    best_q_vcc: qv,
                    best_q_baseline: qb,
                    rate_vcc: v.mean,
                    rate_baseline: b.mean,
                },
                vcc: v,
                baseline: b,
                gain_std_error: gain * rel,
            })
        })
        .collect()
}

fn index_of(grid: &[usize], q: usize) -> usize {
    grid.iter().position(|&g| g == q).expect("q drawn from grid")
}

/// Simulated effective gain for a static configuration at `template.p_t`.
pub fn mc_effective_gain(
    template: &SystemConfig,
    q_grid: &[usize],
    q_grid_baseline: &[usize],
    trials: u64,
    seed: u64,
) -> Result<McGain> {
    let mut v = mc_gain_over_power(
        template,
        &ChannelModel::Static,
        &[template.p_t],
        q_grid,
        q_grid_baseline,
        trials,
        seed,
    )?;
    Ok(v.remove(0))
}

/// Simulated effective gain over a mixed LOS/NLOS coverage area.
pub fn mc_dynamic_gain(
    scenario: &DynamicScenario,
    template: &SystemConfig,
    q_grid: &[usize],
    q_grid_baseline: &[usize],
    trials: u64,
    seed: u64,
) -> Result<McGain> {
    let mut v = mc_gain_over_power(
        template,
        &ChannelModel::Dynamic(*scenario),
        &[template.p_t],
        q_grid,
        q_grid_baseline,
        trials,
        seed,
    )?;
    Ok(v.remove(0))
}

/// Empirical `E‖x‖²` with the model's power normalisation and i.i.d.
/// `CN(0,1)` symbols (drawn from the unit right after the last user).
pub fn mc_power_oracle(config: &SystemConfig, model: &ChannelModel, trials: u64, seed: u64) -> Result<Estimate> {
    check_trials(trials, 100)?;
    let alpha2 = model.alpha2(config)?;
    let k = config.users();
    let partials = run_chunks(trials, |range| {
        let mut s = RunningStats::default();
        for block in range {
            let blk = sample_block(config, model, seed, block)?;
            let mut rng = substream(seed, block, k as u64);
            let symbols = unit_symbols(k, &mut rng);
            let x = transmit_signal(&blk, alpha2, &symbols)?;
            s.push(x.iter().map(|v| v.norm_sqr()).sum());
        }
        Ok(s)
    })?;
    let mut total = RunningStats::default();
    partials.iter().for_each(|p| total.merge(p));
    Ok(total.estimate())
}

/// Empirical channel moments next to their closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    /// `E‖h‖⁴`.
    pub xi1: Estimate,
    /// `E|h^T ĥ'^*|²`, `ĥ'` another user's estimate.
    pub xi2: Estimate,
    /// `E|h^T ĥ^*|²`, the user's own estimate.
    pub desired: Estimate,
}

pub fn mc_moment_oracle(
    params: &ShadowingParams,
    sigma_e2: f64,
    l: usize,
    trials: u64,
    seed: u64,
) -> Result<MomentEstimates> {
    check_trials(trials, 10_000)?;
    params.validate()?;
    let partials = run_chunks(trials, |range| {
        let mut s = [RunningStats::default(); 3];
        for trial in range {
            let mut rng = substream(seed, trial, 0);
            let h = sample_channel(params, l, &mut rng)?;
            let own = apply_estimation_error(&h, sigma_e2, &mut rng)?;
            let mut rng = substream(seed, trial, 1);
            let other = sample_channel(params, l, &mut rng)?;
            let other = apply_estimation_error(&other, sigma_e2, &mut rng)?;
            let norm2: f64 = h.h.iter().map(|v| v.norm_sqr()).sum();
            s[0].push(norm2 * norm2);
            s[1].push(inner_conj(&h.h, &other.h_hat).norm_sqr());
            s[2].push(inner_conj(&h.h, &own.h_hat).norm_sqr());
        }
        Ok(s)
    })?;
    let mut total = [RunningStats::default(); 3];
    for p in &partials {
        for (t, s) in total.iter_mut().zip(p) {
            t.merge(s);
        }
    }
    Ok(MomentEstimates {
        xi1: total[0].estimate(),
        xi2: total[1].estimate(),
        desired: total[2].estimate(),
    })
}
