use serde::{Deserialize, Serialize};

use super::estimate::RateEstimate;
use super::montecarlo::{mc_gain_over_power, mc_sum_rate_over_power, ChannelModel, McGain};
use crate::analysis::{avg_sum_rate_closed_form, effective_gain_closed_form, q_grid, GainResult};
use crate::error::{Error, Result};
use crate::linkphy::{db_to_linear, SystemConfig};

/// The parameter varied across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    PtDb(Vec<f64>),
    Antennas(Vec<usize>),
    SigmaE2(Vec<f64>),
    Coherence(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::PtDb(_) => "pt_db",
            SweepAxis::Antennas(_) => "L",
            SweepAxis::SigmaE2(_) => "sigma_e2",
            SweepAxis::Coherence(_) => "T",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::PtDb(v) | SweepAxis::SigmaE2(v) => v.clone(),
            SweepAxis::Antennas(v) | SweepAxis::Coherence(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    fn apply(&self, template: &SystemConfig, i: usize) -> SystemConfig {
        match self {
            SweepAxis::PtDb(v) => template.with_pt_db(v[i]),
            SweepAxis::Antennas(v) => template.with_antennas(v[i]),
            SweepAxis::SigmaE2(v) => template.with_sigma_e2(v[i]),
            SweepAxis::Coherence(v) => template.with_coherence(v[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluator {
    ClosedForm,
    MonteCarlo { trials: u64 },
    Both { trials: u64 },
}

impl Evaluator {
    fn closed_form(&self) -> bool {
        matches!(self, Evaluator::ClosedForm | Evaluator::Both { .. })
    }

    pub fn trials(&self) -> Option<u64> {
        match *self {
            Evaluator::ClosedForm => None,
            Evaluator::MonteCarlo { trials } | Evaluator::Both { trials } => Some(trials),
        }
    }
}

/// What a sweep evaluates at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepTarget {
    /// Q-optimised effective gain.
    Gain { q_max: usize, q_max_baseline: usize },
    /// Sum rate at the template's fixed `(G, Q)`.
    SumRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub template: SystemConfig,
    pub model: ChannelModel,
    pub axis: SweepAxis,
    pub target: SweepTarget,
    pub evaluator: Evaluator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub config: SystemConfig,
    pub analytic_gain: Option<GainResult>,
    pub mc_gain: Option<McGain>,
    pub analytic_rate: Option<f64>,
    pub mc_rate: Option<RateEstimate>,
    pub error: Option<String>,
}

impl SweepRow {
    fn new(value: f64, config: SystemConfig) -> Self {
        SweepRow {
            value,
            config,
            analytic_gain: None,
            mc_gain: None,
            analytic_rate: None,
            mc_rate: None,
            error: None,
        }
    }

    fn record_error(&mut self, e: &Error) {
        let msg = e.to_string();
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub spec: SweepSpec,
    pub seed: u64,
    pub version: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep table serialises")
    }
}

/// Evaluate every grid point of `spec`. A failing point is recorded in its
/// row and the sweep moves on.
pub fn sweep(spec: &SweepSpec, seed: u64) -> Result<SweepTable> {
    let values = spec.axis.values();
    if values.is_empty() {
        return Err(Error::param("axis", "sweep grid is empty"));
    }
    let mut rows: Vec<SweepRow> = (0..values.len())
        .map(|i| SweepRow::new(values[i], spec.axis.apply(&spec.template, i)))
        .collect();

    // closed forms exist only for the static channel
    if spec.evaluator.closed_form() && spec.model == ChannelModel::Static {
        for row in &mut rows {
            let outcome = match spec.target {
                SweepTarget::Gain { q_max, q_max_baseline } => {
                    effective_gain_closed_form(&row.config, q_max, q_max_baseline).map(|g| row.analytic_gain = Some(g))
                }
                SweepTarget::SumRate => avg_sum_rate_closed_form(&row.config).map(|r| row.analytic_rate = Some(r)),
            };
            if let Err(e) = outcome {
                row.record_error(&e);
            }
        }
    }

    if let Some(trials) = spec.evaluator.trials() {
        match &spec.axis {
            // channels do not depend on power: one pass serves the whole grid
            SweepAxis::PtDb(dbs) => {
                let pts: Vec<f64> = dbs.iter().map(|&d| db_to_linear(d)).collect();
                match evaluate_mc(spec, &spec.template, &pts, trials, seed) {
                    Ok(results) => {
                        for (row, r) in rows.iter_mut().zip(results) {
                            r.store(row);
                        }
                    }
                    Err(e) => rows.iter_mut().for_each(|row| row.record_error(&e)),
                }
            }
            _ => {
                for row in &mut rows {
                    let config = row.config;
                    match evaluate_mc(spec, &config, &[config.p_t], trials, seed) {
                        Ok(mut r) => r.remove(0).store(row),
                        Err(e) => row.record_error(&e),
                    }
                }
            }
        }
    }

    Ok(SweepTable {
        parameter: spec.axis.name().to_string(),
        spec: spec.clone(),
        seed,
        version: crate::VERSION.to_string(),
        rows,
    })
}

enum McResult {
    Gain(McGain),
    Rate(RateEstimate),
}

impl McResult {
    fn store(self, row: &mut SweepRow) {
        match self {
            McResult::Gain(g) => row.mc_gain = Some(g),
            McResult::Rate(r) => row.mc_rate = Some(r),
        }
    }
}

fn evaluate_mc(spec: &SweepSpec, config: &SystemConfig, pts: &[f64], trials: u64, seed: u64) -> Result<Vec<McResult>> {
    match spec.target {
        SweepTarget::Gain { q_max, q_max_baseline } => {
            let grid = q_grid(q_max)?;
            let grid_base = q_grid(q_max_baseline)?;
            Ok(
                mc_gain_over_power(config, &spec.model, pts, &grid, &grid_base, trials, seed)?
                    .into_iter()
                    .map(McResult::Gain)
                    .collect(),
            )
        }
        SweepTarget::SumRate => Ok(mc_sum_rate_over_power(config, &spec.model, pts, trials, seed)?
            .into_iter()
            .map(McResult::Rate)
            .collect()),
    }
}
