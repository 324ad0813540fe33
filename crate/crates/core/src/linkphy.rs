//! Matched-filter link evaluation for one coherence block.
//!
//! The transmitter superimposes `G` MF-precoded vectors, one per served cache
//! state, each carrying `Q` users: `x = α Σ_ψ Ĥ_ψ^H s_ψ`. A receiver regenerates
//! the `G − 1` foreign vectors from its cache and the composite CSI and
//! subtracts them, leaving only the `Q − 1` same-group interferers. `G = 1`
//! is the cacheless MU-MISO baseline.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_estimation_error, sample_channel, ShadowingParams};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Largest per-group multiplexing a spot beam supports.
pub const MAX_Q: usize = 10;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Full operating point. `p_t` is linear and already folds in pathloss and
/// antenna gains; the noise power is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub l_antennas: usize,
    pub g_groups: usize,
    pub q_mux: usize,
    pub p_t: f64,
    pub sigma_e2: f64,
    pub t_coherence: usize,
    pub theta_pilot: usize,
    pub shadowing: ShadowingParams,
}

impl SystemConfig {
    /// Defaults: L = 8, G = 6, Q = 4, σ_e² = 1/8, T = 10⁴, Θ = 12.
    pub fn new(shadowing: ShadowingParams, p_t_db: f64) -> Self {
        SystemConfig {
            l_antennas: 8,
            g_groups: 6,
            q_mux: 4,
            p_t: db_to_linear(p_t_db),
            sigma_e2: 0.125,
            t_coherence: 10_000,
            theta_pilot: 12,
            shadowing,
        }
    }

    pub fn with_antennas(mut self, l: usize) -> Self {
        self.l_antennas = l;
        self
    }

    pub fn with_groups(mut self, g: usize) -> Self {
        self.g_groups = g;
        self
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q_mux = q;
        self
    }

    pub fn with_pt_db(mut self, db: f64) -> Self {
        self.p_t = db_to_linear(db);
        self
    }

    pub fn with_sigma_e2(mut self, sigma_e2: f64) -> Self {
        self.sigma_e2 = sigma_e2;
        self
    }

    pub fn with_coherence(mut self, t: usize) -> Self {
        self.t_coherence = t;
        self
    }

    pub fn p_t_db(&self) -> f64 {
        linear_to_db(self.p_t)
    }

    /// The cacheless counterpart with `q` users.
    pub fn baseline(&self, q: usize) -> Self {
        SystemConfig {
            g_groups: 1,
            q_mux: q,
            ..*self
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.g_groups == 1
    }

    pub fn users(&self) -> usize {
        self.g_groups * self.q_mux
    }

    /// Fraction of the block left for data, `1 − GQΘ/T`.
    pub fn overhead_factor(&self) -> f64 {
        1.0 - (self.users() * self.theta_pilot) as f64 / self.t_coherence as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_antennas == 0 {
            return Err(Error::config("L", "must be at least 1"));
        }
        if self.g_groups == 0 {
            return Err(Error::config("G", "must be at least 1"));
        }
        if self.q_mux == 0 || self.q_mux > MAX_Q {
            return Err(Error::config(
                "Q",
                format!("must lie in [1, {MAX_Q}], got {}", self.q_mux),
            ));
        }
        if !(self.p_t > 0.0 && self.p_t.is_finite()) {
            return Err(Error::config("P_t", "must be positive and finite"));
        }
        if !(self.sigma_e2 >= 0.0 && self.sigma_e2.is_finite()) {
            return Err(Error::config("sigma_e2", "must be nonnegative"));
        }
        if self.t_coherence == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        if self.users() * self.theta_pilot >= self.t_coherence {
            return Err(Error::config(
                "T",
                format!(
                    "GQΘ must be < T (G={}, Q={}, Θ={}, T={})",
                    self.g_groups, self.q_mux, self.theta_pilot, self.t_coherence
                ),
            ));
        }
        self.shadowing
            .validate()
            .map_err(|e| Error::config("shadowing", e.to_string()))
    }

    /// Gain comparisons exclude the unprecoded `Q = 1` case.
    pub fn validate_for_gain(&self) -> Result<()> {
        self.validate()?;
        if self.q_mux < 2 {
            return Err(Error::config(
                "Q",
                "gain comparisons require Q >= 2 (Q = Q' = 1 runs without precoding)",
            ));
        }
        Ok(())
    }
}

/// True and estimated channels of all `G·Q` users served in one block,
/// user `(ψ, b)` stored at index `ψ·Q + b` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBlock {
    pub groups: usize,
    pub per_group: usize,
    pub true_h: Vec<Vec<Complex64>>,
    pub est_h: Vec<Vec<Complex64>>,
}

impl ChannelBlock {
    pub fn new(
        groups: usize,
        per_group: usize,
        true_h: Vec<Vec<Complex64>>,
        est_h: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let k = groups * per_group;
        if true_h.len() != k || est_h.len() != k {
            return Err(Error::Dimension(format!(
                "expected {k} users, got {} true and {} estimated channels",
                true_h.len(),
                est_h.len()
            )));
        }
        let l = true_h.first().map_or(0, Vec::len);
        if l == 0 || true_h.iter().chain(&est_h).any(|h| h.len() != l) {
            return Err(Error::Dimension("channel vectors differ in length".into()));
        }
        Ok(ChannelBlock {
            groups,
            per_group,
            true_h,
            est_h,
        })
    }

    /// Draw block `block` of a static scenario; user `k` uses substream
    /// `(seed, block, k)`.
    pub fn sample(config: &SystemConfig, seed: u64, block: u64) -> Result<Self> {
        let k = config.users();
        let mut true_h = Vec::with_capacity(k);
        let mut est_h = Vec::with_capacity(k);
        for user in 0..k {
            let mut rng = substream(seed, block, user as u64);
            let ch = sample_channel(&config.shadowing, config.l_antennas, &mut rng)?;
            let est = apply_estimation_error(&ch, config.sigma_e2, &mut rng)?;
            true_h.push(ch.h);
            est_h.push(est.h_hat);
        }
        Ok(ChannelBlock {
            groups: config.g_groups,
            per_group: config.q_mux,
            true_h,
            est_h,
        })
    }

    pub fn antennas(&self) -> usize {
        self.true_h[0].len()
    }

    pub fn users(&self) -> usize {
        self.groups * self.per_group
    }

    fn index(&self, group: usize, slot: usize) -> usize {
        group * self.per_group + slot
    }

    pub fn group_estimates(&self, group: usize) -> &[Vec<Complex64>] {
        let start = self.index(group, 0);
        &self.est_h[start..start + self.per_group]
    }

    /// `|h_{ψ,b}^T ĥ_{ψ,b'}^*|²` for every same-group pair, row-major per
    /// group: entry `[ψ][b·Q + b']`.
    pub fn coupling(&self) -> Vec<Vec<f64>> {
        let q = self.per_group;
        (0..self.groups)
            .map(|g| {
                let mut out = Vec::with_capacity(q * q);
                for b in 0..q {
                    let h = &self.true_h[self.index(g, b)];
                    for bp in 0..q {
                        out.push(inner_conj(h, &self.est_h[self.index(g, bp)]).norm_sqr());
                    }
                }
                out
            })
            .collect()
    }
}

/// `a^T b^*`.
pub fn inner_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `L × Q` matrix stored by columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    pub columns: Vec<Vec<Complex64>>,
}

impl Precoder {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// `V s`.
    pub fn apply(&self, symbols: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows()];
        for (col, s) in self.columns.iter().zip(symbols) {
            for (o, v) in out.iter_mut().zip(col) {
                *o += v * s;
            }
        }
        out
    }
}

/// Matched filter `V = Ĥ^H`: column `b` is the conjugate of estimate `b`.
pub fn mf_precoder(estimates: &[Vec<Complex64>]) -> Result<Precoder> {
    let l = match estimates.first() {
        Some(h) if !h.is_empty() => h.len(),
        _ => return Err(Error::Dimension("precoder needs at least one nonempty channel".into())),
    };
    if estimates.iter().any(|h| h.len() != l) {
        return Err(Error::Dimension("estimated channels differ in length".into()));
    }
    Ok(Precoder {
        columns: estimates
            .iter()
            .map(|h| h.iter().map(Complex64::conj).collect())
            .collect(),
    })
}

/// Per-user SINRs in block order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrVector {
    pub values: Vec<f64>,
}

/// SINRs from a block's same-group coupling powers (see
/// [`ChannelBlock::coupling`]).
pub fn sinr_from_coupling(coupling: &[Vec<f64>], q: usize, alpha2: f64) -> SinrVector {
    let mut values = Vec::with_capacity(coupling.len() * q);
    for group in coupling {
        for b in 0..q {
            let row = &group[b * q..(b + 1) * q];
            let desired = row[b];
            let interference: f64 = row.iter().sum::<f64>() - desired;
            values.push(alpha2 * desired / (1.0 + alpha2 * interference));
        }
    }
    SinrVector { values }
}

/// SINR of every served user after cache-aided inter-group cancellation.
pub fn compute_sinr(block: &ChannelBlock, alpha2: f64) -> Result<SinrVector> {
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(Error::param("alpha2", "must be positive and finite"));
    }
    Ok(sinr_from_coupling(&block.coupling(), block.per_group, alpha2))
}

/// `ξ_{G,Q} Σ log₂(1 + SINR)`.
pub fn effective_sum_rate(sinrs: &SinrVector, config: &SystemConfig) -> Result<f64> {
    let xi = config.overhead_factor();
    if !(xi > 0.0) {
        return Err(Error::config("T", "GQΘ must be < T"));
    }
    Ok(xi * sinrs.values.iter().map(|s| (1.0 + s).log2()).sum::<f64>())
}

/// Superimposed transmit vector `α Σ_ψ Ĥ_ψ^H s_ψ`.
pub fn transmit_signal(block: &ChannelBlock, alpha2: f64, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    if symbols.len() != block.users() {
        return Err(Error::Dimension(format!(
            "{} symbols for {} users",
            symbols.len(),
            block.users()
        )));
    }
    let alpha = alpha2.sqrt();
    let q = block.per_group;
    let mut x = vec![Complex64::new(0.0, 0.0); block.antennas()];
    for g in 0..block.groups {
        let v = mf_precoder(block.group_estimates(g))?;
        for (xi, vi) in x.iter_mut().zip(v.apply(&symbols[g * q..(g + 1) * q])) {
            *xi += alpha * vi;
        }
    }
    Ok(x)
}

/// Draw `n` i.i.d. `CN(0, 1)` symbols.
pub fn unit_symbols<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| crate::channel::complex_gaussian(1.0, rng)).collect()
}

/// Per-user signals through one transmission and cache-aided cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripSignals {
    /// `y = h^T x + z`.
    pub received: Vec<Complex64>,
    /// Inter-group term regenerated at the receiver from cached symbols and
    /// composite CSI `h^T V_φ`.
    pub regenerated: Vec<Complex64>,
    /// `y' = y − regenerated`.
    pub cleaned: Vec<Complex64>,
    /// Desired plus same-group interference plus noise, computed directly.
    pub intra_direct: Vec<Complex64>,
}

impl RoundtripSignals {
    /// Largest `|y' − direct| / |direct|` over users.
    pub fn max_relative_residual(&self) -> f64 {
        self.cleaned
            .iter()
            .zip(&self.intra_direct)
            .map(|(c, d)| (c - d).norm() / d.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

pub fn full_signal_roundtrip(
    block: &ChannelBlock,
    alpha2: f64,
    symbols: &[Complex64],
    noise: &[Complex64],
) -> Result<RoundtripSignals> {
    let k = block.users();
    if noise.len() != k {
        return Err(Error::Dimension(format!("{} noise samples for {k} users", noise.len())));
    }
    let x = transmit_signal(block, alpha2, symbols)?;
    let alpha = alpha2.sqrt();
    let q = block.per_group;
    let precoders = (0..block.groups)
        .map(|g| mf_precoder(block.group_estimates(g)))
        .collect::<Result<Vec<_>>>()?;

    let mut out = RoundtripSignals {
        received: Vec::with_capacity(k),
        regenerated: Vec::with_capacity(k),
        cleaned: Vec::with_capacity(k),
        intra_direct: Vec::with_capacity(k),
    };
    for g in 0..block.groups {
        for b in 0..q {
            let idx = g * q + b;
            let h = &block.true_h[idx];
            let y = h.iter().zip(&x).map(|(hl, xl)| hl * xl).sum::<Complex64>() + noise[idx];

            let mut foreign = Complex64::new(0.0, 0.0);
            for (phi, v) in precoders.iter().enumerate().filter(|(phi, _)| *phi != g) {
                // composite CSI h^T V_φ, one entry per foreign user
                for (col, s) in v.columns.iter().zip(&symbols[phi * q..(phi + 1) * q]) {
                    foreign += h.iter().zip(col).map(|(hl, vl)| hl * vl).sum::<Complex64>() * s;
                }
            }
            let foreign = alpha * foreign;

            let mut intra = Complex64::new(0.0, 0.0);
            for bp in 0..q {
                intra += inner_conj(h, &block.est_h[g * q + bp]) * symbols[g * q + bp];
            }
            out.received.push(y);
            out.regenerated.push(foreign);
            out.cleaned.push(y - foreign);
            out.intra_direct.push(alpha * intra + noise[idx]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn overhead_factor_arithmetic() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0);
        assert!((cfg.overhead_factor() - 0.9712).abs() < 1e-12);
        let base = cfg.baseline(8).with_coherence(1000);
        assert!((base.overhead_factor() - 0.904).abs() < 1e-12);
    }

    #[test]
    fn validation_names_fields() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0);
        assert!(cfg.validate().is_ok());
        let bad = cfg.with_coherence(288);
        match bad.validate() {
            Err(Error::Config { field, constraint }) => {
                assert_eq!(field, "T");
                assert!(constraint.contains("GQΘ must be < T"));
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.with_q(11).validate().is_err());
        assert!(cfg.with_q(0).validate().is_err());
        assert!(cfg.with_antennas(0).validate().is_err());
        assert!(cfg.with_q(1).validate().is_ok());
        assert!(cfg.with_q(1).validate_for_gain().is_err());
    }

    #[test]
    fn precoder_conjugates_columns() {
        let e1 = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let v = mf_precoder(std::slice::from_ref(&e1)).unwrap();
        assert_eq!(v.columns, vec![e1]);

        let h = vec![c(1.0, 2.0), c(-3.0, 0.5)];
        let v = mf_precoder(&[h.clone(), h.clone()]).unwrap();
        assert_eq!((v.rows(), v.cols()), (2, 2));
        assert_eq!(v.columns[1][0], c(1.0, -2.0));
        assert!(mf_precoder(&[]).is_err());
        assert!(mf_precoder(&[h, vec![c(1.0, 0.0)]]).is_err());
    }

    #[test]
    fn mf_gain_splits_into_norm_and_error() {
        let mut rng = seeded(11);
        let ch = crate::channel::sample_channel(&ShadowingParams::AS, 8, &mut rng).unwrap();
        let est = crate::channel::apply_estimation_error(&ch, 0.125, &mut rng).unwrap();
        let err: Vec<Complex64> = est.h_hat.iter().zip(&ch.h).map(|(a, b)| a - b).collect();
        let v = mf_precoder(std::slice::from_ref(&est.h_hat)).unwrap();
        let lhs: Complex64 = ch.h.iter().zip(&v.columns[0]).map(|(a, b)| a * b).sum();
        let norm2: f64 = ch.h.iter().map(|z| z.norm_sqr()).sum();
        let rhs = norm2 + inner_conj(&ch.h, &err);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn single_user_sinr_is_beamforming_gain() {
        let ones = vec![c(1.0, 0.0); 4];
        let block = ChannelBlock::new(1, 1, vec![ones.clone()], vec![ones]).unwrap();
        let s = compute_sinr(&block, 1.0).unwrap();
        assert!((s.values[0] - 16.0).abs() < 1e-12);
        assert!(compute_sinr(&block, 0.0).is_err());
    }

    #[test]
    fn sinr_ignores_other_groups() {
        let mut rng = seeded(12);
        let mut draw = || {
            crate::channel::sample_channel(&ShadowingParams::AS, 4, &mut rng)
                .unwrap()
                .h
        };
        let hs: Vec<_> = (0..4).map(|_| draw()).collect();
        let block = ChannelBlock::new(2, 2, hs.clone(), hs.clone()).unwrap();
        let s = compute_sinr(&block, 0.3).unwrap();
        let solo = ChannelBlock::new(1, 2, hs[..2].to_vec(), hs[..2].to_vec()).unwrap();
        let t = compute_sinr(&solo, 0.3).unwrap();
        assert_eq!(&s.values[..2], &t.values[..]);
    }

    #[test]
    fn sinr_monotone_and_interference_limited() {
        let mut rng = seeded(13);
        let hs: Vec<_> = (0..3)
            .map(|_| {
                crate::channel::sample_channel(&ShadowingParams::ILS, 8, &mut rng)
                    .unwrap()
                    .h
            })
            .collect();
        let block = ChannelBlock::new(1, 3, hs.clone(), hs).unwrap();
        let cpl = block.coupling();
        let mut prev = [0.0; 3];
        for e in -3..=12 {
            let s = compute_sinr(&block, 10f64.powi(e)).unwrap();
            for (p, v) in prev.iter_mut().zip(&s.values) {
                assert!(*v >= *p);
                *p = *v;
            }
        }
        for b in 0..3 {
            let row = &cpl[0][b * 3..b * 3 + 3];
            let ceiling = row[b] / (row.iter().sum::<f64>() - row[b]);
            assert!((prev[b] - ceiling).abs() / ceiling < 1e-9);
        }
    }

    #[test]
    fn sum_rate_scales_with_overhead() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0);
        let zeros = SinrVector { values: vec![0.0; 24] };
        assert_eq!(effective_sum_rate(&zeros, &cfg).unwrap(), 0.0);
        let ones = SinrVector { values: vec![1.0; 24] };
        assert!((effective_sum_rate(&ones, &cfg).unwrap() - 0.9712 * 24.0).abs() < 1e-12);
        let mut broken = cfg;
        broken.t_coherence = 200;
        assert!(effective_sum_rate(&ones, &broken).is_err());
    }

    #[test]
    fn block_dimension_checks() {
        let h = vec![c(1.0, 0.0); 3];
        assert!(ChannelBlock::new(2, 1, vec![h.clone()], vec![h.clone()]).is_err());
        assert!(ChannelBlock::new(1, 2, vec![h.clone(), vec![c(0.0, 0.0)]], vec![h.clone(), h]).is_err());
    }

    #[test]
    fn sampled_block_is_reproducible() {
        let cfg = SystemConfig::new(ShadowingParams::FHS, 0.0).with_groups(3).with_q(2);
        let a = ChannelBlock::sample(&cfg, 5, 9).unwrap();
        let b = ChannelBlock::sample(&cfg, 5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.users(), 6);
        assert_ne!(a, ChannelBlock::sample(&cfg, 5, 10).unwrap());
    }

    #[test]
    fn baseline_roundtrip_has_nothing_to_cancel() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0).with_groups(1).with_q(3);
        let block = ChannelBlock::sample(&cfg, 1, 0).unwrap();
        let mut rng = seeded(14);
        let s = unit_symbols(3, &mut rng);
        let z = unit_symbols(3, &mut rng);
        let r = full_signal_roundtrip(&block, 0.01, &s, &z).unwrap();
        assert!(r.regenerated.iter().all(|v| *v == c(0.0, 0.0)));
        assert_eq!(r.cleaned, r.received);
    }

    #[test]
    fn roundtrip_matches_intra_group_expression() {
        let cfg = SystemConfig::new(ShadowingParams::AS, 10.0)
            .with_groups(3)
            .with_q(2)
            .with_antennas(4);
        let block = ChannelBlock::sample(&cfg, 2, 0).unwrap();
        let mut rng = seeded(15);
        let s = unit_symbols(6, &mut rng);
        let z = unit_symbols(6, &mut rng);
        let r = full_signal_roundtrip(&block, 0.02, &s, &z).unwrap();
        assert!(r.max_relative_residual() < 1e-10);
    }

    #[test]
    fn noiseless_single_user_groups_keep_only_desired_term() {
        let cfg = SystemConfig::new(ShadowingParams::ILS, 10.0)
            .with_groups(2)
            .with_q(1)
            .with_antennas(4);
        let block = ChannelBlock::sample(&cfg, 3, 0).unwrap();
        let s = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let z = vec![c(0.0, 0.0); 2];
        let alpha2: f64 = 0.5;
        let r = full_signal_roundtrip(&block, alpha2, &s, &z).unwrap();
        for (k, sym) in s.iter().enumerate() {
            let expected = alpha2.sqrt() * inner_conj(&block.true_h[k], &block.est_h[k]) * sym;
            assert!((r.cleaned[k] - expected).norm() < 1e-12 * expected.norm());
        }
    }
}
