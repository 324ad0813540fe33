//! Closed-form performance of MF-precoded vector coded caching.
//!
//! Everything here is a function of channel moments only. The sum-rate
//! expression moves the expectation inside the logarithm and is therefore an
//! approximation; this module does not qualify its accuracy; the Monte Carlo
//! engine in [`crate::experiments`] does.

use serde::{Deserialize, Serialize};

use crate::channel::ShadowingParams;
use crate::error::{Error, Result};
use crate::linkphy::SystemConfig;

/// Squared MF power-normalisation factor `P_t / (G Q L (2β + σ_e² + Ω))`.
///
/// With `G = 1` this is the baseline factor `α₀²`.
pub fn alpha2_closed_form(config: &SystemConfig) -> Result<f64> {
    config.validate()?;
    let per_element = config.shadowing.mean_power() + config.sigma_e2;
    let denom = (config.users() * config.l_antennas) as f64 * per_element;
    if !(denom > 0.0) {
        return Err(Error::config(
            "shadowing",
            "2β + σ_e² + Ω is zero; the transmit power cannot be normalised",
        ));
    }
    Ok(config.p_t / denom)
}

/// `Ξ₁ = E‖h‖⁴` and `Ξ₂ = E|h^T ĥ'^*|²` for distinct users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub xi1: f64,
    pub xi2: f64,
}

pub fn xi_moments_closed_form(params: &ShadowingParams, sigma_e2: f64, l: usize) -> Result<MomentPair> {
    params.validate()?;
    if !(sigma_e2 >= 0.0) {
        return Err(Error::param("sigma_e2", "must be nonnegative"));
    }
    if l == 0 {
        return Err(Error::param("L", "must be at least 1"));
    }
    let (m, b, o) = (params.m, params.beta, params.omega);
    let lf = l as f64;
    let p = params.mean_power();
    let diagonal = params.element_fourth_moment();
    let cross = (1.0 + 1.0 / m) * o * o + 4.0 * b * o + 4.0 * b * b;
    Ok(MomentPair {
        xi1: lf * diagonal + lf * (lf - 1.0) * cross,
        xi2: lf * p * (p + sigma_e2),
    })
}

/// `E|h^T ĥ^*|² = Ξ₁ + σ_e² L (2β + Ω)` for a user's own estimate.
pub fn desired_signal_moment(params: &ShadowingParams, sigma_e2: f64, l: usize) -> Result<f64> {
    let xi = xi_moments_closed_form(params, sigma_e2, l)?;
    Ok(xi.xi1 + sigma_e2 * l as f64 * params.mean_power())
}

/// Approximate average effective sum rate
/// `ξ G Q log₂(1 + α²(Ξ₁ + σ_e² L(2β+Ω)) / (1 + α²(Q−1)Ξ₂))`.
pub fn avg_sum_rate_closed_form(config: &SystemConfig) -> Result<f64> {
    let alpha2 = alpha2_closed_form(config)?;
    let xi = config.overhead_factor();
    let l = config.l_antennas;
    let moments = xi_moments_closed_form(&config.shadowing, config.sigma_e2, l)?;
    let desired = desired_signal_moment(&config.shadowing, config.sigma_e2, l)?;
    let interference = alpha2 * (config.q_mux as f64 - 1.0) * moments.xi2;
    let sinr = alpha2 * desired / (1.0 + interference);
    Ok(xi * config.users() as f64 * (1.0 + sinr).log2())
}

/// Same-group interference power `α²(Q−1)Ξ₂` in reduced form.
///
/// The `L(2β+σ_e²+Ω)` factors cancel between `α²` and `Ξ₂`, leaving
/// `P_t (Q−1)(2β+Ω) / (G Q)`, which does not involve the CSIT error.
pub fn intra_interference_term(config: &SystemConfig) -> f64 {
    let q = config.q_mux as f64;
    config.p_t * (q - 1.0) * config.shadowing.mean_power() / (config.g_groups as f64 * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub gain: f64,
    pub best_q_vcc: usize,
    pub best_q_baseline: usize,
    pub rate_vcc: f64,
    pub rate_baseline: f64,
}

/// `{2, …, q_max}`.
pub fn q_grid(q_max: usize) -> Result<Vec<usize>> {
    if q_max < 2 {
        return Err(Error::config("Q_max", "the Q grid {2, …, Q_max} is empty"));
    }
    if q_max > crate::linkphy::MAX_Q {
        return Err(Error::config(
            "Q_max",
            format!("must not exceed {}", crate::linkphy::MAX_Q),
        ));
    }
    Ok((2..=q_max).collect())
}

/// Maximise `rate(q)` over a grid, keeping the smallest `q` on ties.
pub fn argmax_q<F>(grid: &[usize], mut rate: F) -> Result<(usize, f64)>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for &q in grid {
        let r = rate(q)?;
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((q, r));
        }
    }
    best.ok_or_else(|| Error::config("Q_max", "empty Q grid"))
}

/// Effective gain: best VCC rate over `{2..q_max}` at `config.g_groups`
/// divided by the best baseline (`G = 1`) rate over `{2..q_max_baseline}`.
pub fn effective_gain_closed_form(
    config_vcc: &SystemConfig,
    q_max: usize,
    q_max_baseline: usize,
) -> Result<GainResult> {
    let grid = q_grid(q_max)?;
    let grid_base = q_grid(q_max_baseline)?;
    let (best_q_vcc, rate_vcc) = argmax_q(&grid, |q| avg_sum_rate_closed_form(&config_vcc.with_q(q)))?;
    let (best_q_baseline, rate_baseline) = argmax_q(&grid_base, |q| avg_sum_rate_closed_form(&config_vcc.baseline(q)))?;
    Ok(GainResult {
        gain: rate_vcc / rate_baseline,
        best_q_vcc,
        best_q_baseline,
        rate_vcc,
        rate_baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn alpha2_unit_case() {
        let mut cfg = SystemConfig::new(
            ShadowingParams {
                m: 1.0,
                beta: 0.5,
                omega: 0.0,
            },
            0.0,
        )
        .with_groups(1)
        .with_q(1)
        .with_antennas(1)
        .with_sigma_e2(0.0);
        cfg.p_t = 1.0;
        assert!((alpha2_closed_form(&cfg).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha2_hand_value() {
        let mut cfg = SystemConfig::new(ShadowingParams::AS, 0.0);
        cfg.p_t = 1.0;
        let a = alpha2_closed_form(&cfg).unwrap();
        assert!(rel(a, 1.0 / (6.0 * 4.0 * 8.0 * 1.212)) < 1e-12);
        assert!((a - 4.298e-3).abs() < 1e-6);
    }

    #[test]
    fn alpha2_degenerate_params() {
        let cfg = SystemConfig::new(
            ShadowingParams {
                m: 1.0,
                beta: 0.0,
                omega: 0.0,
            },
            0.0,
        )
        .with_sigma_e2(0.0);
        assert!(alpha2_closed_form(&cfg).is_err());
    }

    #[test]
    fn xi_limits() {
        let p = ShadowingParams::AS;
        let x = xi_moments_closed_form(&p, 0.0, 8).unwrap();
        assert!(rel(x.xi2, 8.0 * p.mean_power().powi(2)) < 1e-14);

        let b = 0.3;
        let rayleigh = ShadowingParams {
            m: 2.0,
            beta: b,
            omega: 0.0,
        };
        for l in [1, 4, 16] {
            let x = xi_moments_closed_form(&rayleigh, 0.1, l).unwrap();
            let lf = l as f64;
            assert!(rel(x.xi1, 4.0 * b * b * lf * (lf + 1.0)) < 1e-14);
        }
        assert!(xi_moments_closed_form(
            &ShadowingParams {
                m: 0.0,
                beta: 0.1,
                omega: 0.1
            },
            0.0,
            4
        )
        .is_err());
    }

    #[test]
    fn xi1_satisfies_jensen() {
        for p in [ShadowingParams::FHS, ShadowingParams::AS, ShadowingParams::ILS] {
            for l in [1, 8, 16] {
                let x = xi_moments_closed_form(&p, 0.125, l).unwrap();
                assert!(x.xi1 >= (l as f64 * p.mean_power()).powi(2));
                assert!(x.xi2 > 0.0);
            }
        }
    }

    #[test]
    fn single_user_rate_has_no_interference() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0).with_groups(1).with_q(1);
        let a0 = alpha2_closed_form(&cfg).unwrap();
        let d = desired_signal_moment(&cfg.shadowing, cfg.sigma_e2, 8).unwrap();
        let expected = cfg.overhead_factor() * (1.0 + a0 * d).log2();
        assert!(rel(avg_sum_rate_closed_form(&cfg).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn intra_interference_identity() {
        let mut cfg = SystemConfig::new(ShadowingParams::AS, 0.0);
        cfg.p_t = 1.0;
        let reduced = intra_interference_term(&cfg);
        assert!(rel(reduced, 3.0 * 1.087 / 24.0) < 1e-12);
        let a = alpha2_closed_form(&cfg).unwrap();
        let x = xi_moments_closed_form(&cfg.shadowing, cfg.sigma_e2, 8).unwrap();
        assert!(rel(a * 3.0 * x.xi2, reduced) < 1e-12);
        assert_eq!(intra_interference_term(&cfg.with_q(1)), 0.0);
        let vals: Vec<f64> = [0.0, 0.125, 0.25]
            .iter()
            .map(|&s| intra_interference_term(&cfg.with_sigma_e2(s)))
            .collect();
        assert!(vals.iter().all(|v| v.to_bits() == vals[0].to_bits()));
    }

    #[test]
    fn self_ratio_is_unity() {
        let cfg = SystemConfig::new(ShadowingParams::ILS, 12.0).with_groups(1);
        let g = effective_gain_closed_form(&cfg, 8, 8).unwrap();
        assert_eq!(g.gain, 1.0);
        assert_eq!(g.best_q_vcc, g.best_q_baseline);
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 12.0);
        assert!(effective_gain_closed_form(&cfg, 1, 8).is_err());
        assert!(effective_gain_closed_form(&cfg, 8, 11).is_err());
    }

    #[test]
    fn ties_prefer_smaller_q() {
        let (q, r) = argmax_q(&[2, 3, 4], |_| Ok(1.0)).unwrap();
        assert_eq!((q, r), (2, 1.0));
        let (q, _) = argmax_q(&[2, 3, 4], |q| Ok(if q == 3 { 2.0 } else { 1.0 })).unwrap();
        assert_eq!(q, 3);
    }
}
