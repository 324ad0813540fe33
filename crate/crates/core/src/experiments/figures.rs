//! Curve definitions for the six effective-gain figures and their CSV rows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::montecarlo::ChannelModel;
use super::sweep::{sweep, Evaluator, SweepAxis, SweepSpec, SweepTable, SweepTarget};
use crate::channel::{snr_ave_db, DynamicScenario, ShadowingParams};
use crate::error::{Error, Result};
use crate::linkphy::SystemConfig;

/// 0 to 21 dB in 3 dB steps, plus the 18.1 dB link-budget operating point.
pub const PT_GRID_DB: [f64; 9] = [0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 18.1, 21.0];

/// Transmit SNR of the link budget (EIRP 45 dBW, 600 km LEO).
pub const LINK_BUDGET_PT_DB: f64 = 18.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCurve {
    /// File stem, unique within a figure.
    pub name: String,
    pub scenario: String,
    pub spec: SweepSpec,
}

fn curve(
    name: String,
    scenario: &str,
    template: SystemConfig,
    model: ChannelModel,
    q_cap: usize,
    evaluator: Evaluator,
) -> FigureCurve {
    FigureCurve {
        name,
        scenario: scenario.to_string(),
        spec: SweepSpec {
            template,
            model,
            axis: SweepAxis::PtDb(PT_GRID_DB.to_vec()),
            target: SweepTarget::Gain {
                q_max: q_cap,
                q_max_baseline: q_cap,
            },
            evaluator,
        },
    }
}

pub fn figure_curves(id: u8, evaluator: Evaluator) -> Result<Vec<FigureCurve>> {
    let base = |p: ShadowingParams, l: usize| SystemConfig::new(p, 0.0).with_antennas(l);
    let stat = ChannelModel::Static;
    let curves = match id {
        1 => vec![curve(
            "fig1_FHS_L8".into(),
            "FHS",
            base(ShadowingParams::FHS, 8),
            stat,
            8,
            evaluator,
        )],
        2 => [
            ("FHS", ShadowingParams::FHS),
            ("AS", ShadowingParams::AS),
            ("ILS", ShadowingParams::ILS),
        ]
        .iter()
        .map(|(n, p)| curve(format!("fig2_{n}_L8"), n, base(*p, 8), stat, 8, evaluator))
        .collect(),
        3 => [8, 16]
            .iter()
            .map(|&l| {
                curve(
                    format!("fig3_AS_L{l}"),
                    "AS",
                    base(ShadowingParams::AS, l),
                    stat,
                    8,
                    evaluator,
                )
            })
            .collect(),
        4 => [0.0, 0.125, 0.25]
            .iter()
            .map(|&s| {
                curve(
                    format!("fig4_AS_L16_sigma{s}"),
                    "AS",
                    base(ShadowingParams::AS, 16).with_sigma_e2(s),
                    stat,
                    8,
                    evaluator,
                )
            })
            .collect(),
        5 => [1_000usize, 10_000]
            .iter()
            .flat_map(|&t| {
                [4usize, 8].map(|cap| {
                    curve(
                        format!("fig5_AS_L16_T{t}_Qmax{cap}"),
                        "AS",
                        base(ShadowingParams::AS, 16).with_coherence(t),
                        stat,
                        cap,
                        evaluator,
                    )
                })
            })
            .collect(),
        6 => vec![
            curve(
                "fig6_static_ILS_L16".into(),
                "ILS",
                base(ShadowingParams::ILS, 16),
                stat,
                8,
                evaluator,
            ),
            curve(
                "fig6_dynamic_L16".into(),
                "dynamic",
                base(ShadowingParams::ILS, 16),
                ChannelModel::Dynamic(DynamicScenario::urban_leo()),
                8,
                evaluator,
            ),
        ],
        other => {
            return Err(Error::param(
                "figure",
                format!("unknown figure {other}, expected 1..=6"),
            ))
        }
    };
    Ok(curves)
}

/// One CSV line of figure output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub pt_db: f64,
    pub snr_ave_db: f64,
    pub scenario: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "G")]
    pub g: usize,
    #[serde(rename = "Q_best_vcc")]
    pub q_best_vcc: Option<usize>,
    #[serde(rename = "Q_best_base")]
    pub q_best_base: Option<usize>,
    pub rate_vcc: Option<f64>,
    pub rate_base: Option<f64>,
    pub gain_analytic: Option<f64>,
    pub gain_mc: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub seed: u64,
}

/// Rows of a gain sweep. Best-Q and rate columns come from the closed form
/// when it was evaluated, otherwise from the simulation.
pub fn figure_rows(scenario: &str, table: &SweepTable) -> Vec<FigureRow> {
    table
        .rows
        .iter()
        .map(|row| {
            let cfg = &row.config;
            let power = match &table.spec.model {
                ChannelModel::Static => cfg.shadowing,
                ChannelModel::Dynamic(s) => ShadowingParams {
                    omega: s.mean_power(),
                    beta: 0.0,
                    ..s.los_params
                },
            };
            let chosen = row.analytic_gain.or(row.mc_gain.map(|m| m.gain));
            FigureRow {
                pt_db: row.value,
                snr_ave_db: snr_ave_db(cfg.p_t, &power),
                scenario: scenario.to_string(),
                l: cfg.l_antennas,
                g: cfg.g_groups,
                q_best_vcc: chosen.map(|g| g.best_q_vcc),
                q_best_base: chosen.map(|g| g.best_q_baseline),
                rate_vcc: chosen.map(|g| g.rate_vcc),
                rate_base: chosen.map(|g| g.rate_baseline),
                gain_analytic: row.analytic_gain.map(|g| g.gain),
                gain_mc: row.mc_gain.map(|g| g.gain.gain),
                mc_stderr: row.mc_gain.map(|g| g.gain_std_error),
                seed: table.seed,
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[FigureRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

/// A figure's curves with their evaluated sweeps.
pub fn run_figure(id: u8, evaluator: Evaluator, seed: u64) -> Result<Vec<(FigureCurve, SweepTable)>> {
    figure_curves(id, evaluator)?
        .into_iter()
        .map(|c| {
            let t = sweep(&c.spec, seed)?;
            Ok((c, t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_counts() {
        let counts: Vec<usize> = (1..=6)
            .map(|i| figure_curves(i, Evaluator::ClosedForm).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 3, 2, 3, 4, 2]);
        assert!(figure_curves(7, Evaluator::ClosedForm).is_err());
        assert!(figure_curves(0, Evaluator::ClosedForm).is_err());
    }

    #[test]
    fn csv_header_matches_schema() {
        let figs = run_figure(1, Evaluator::ClosedForm, 9).unwrap();
        let rows = figure_rows(&figs[0].0.scenario, &figs[0].1);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "pt_db,snr_ave_db,scenario,L,G,Q_best_vcc,Q_best_base,rate_vcc,rate_base,gain_analytic,gain_mc,mc_stderr,seed"
        );
        assert_eq!(text.lines().count(), 1 + PT_GRID_DB.len());
    }

    #[test]
    fn fhs_gain_near_three_at_fifteen_db() {
        let figs = run_figure(1, Evaluator::ClosedForm, 0).unwrap();
        let rows = figure_rows("FHS", &figs[0].1);
        let at15 = rows.iter().find(|r| r.pt_db == 15.0).unwrap();
        let g = at15.gain_analytic.unwrap();
        assert!((g - 3.0).abs() / 3.0 < 0.1, "{g}");
        assert!((at15.snr_ave_db - (15.0 - 8.965)).abs() < 1e-2);
    }
}
