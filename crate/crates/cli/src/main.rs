// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod manifest;
mod suite;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;
use vcc_core::analysis::{
    alpha2_closed_form, avg_sum_rate_closed_form, desired_signal_moment, effective_gain_closed_form,
    xi_moments_closed_form,
};
use vcc_core::caching::{build_schedule, verify_completeness, CacheLayout, Demands};
use vcc_core::experiments::figures::{figure_rows, run_figure, write_csv, FigureRow};
use vcc_core::experiments::{
    sweep, Evaluator, SweepAxis, SweepSpec, SweepTable, SweepTarget, DEFAULT_MOMENT_TRIALS, DEFAULT_RATE_TRIALS,
};

use config::{ConfigError, RawConfig, RunConfig};
use manifest::{sidecar_path, RunManifest};

#[derive(Parser)]
#[command(
    name = "vcc",
    version,
    about = "Vector coded caching link-level analysis and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form normalisation, moments, sum rate and effective gain.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Require the effective gain (needs Q ≥ 2).
        #[arg(long)]
        gain: bool,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo sum rate or effective gain, written as CSV.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Estimate the Q-optimised effective gain instead of the sum rate.
        #[arg(long)]
        gain: bool,
        /// Comma-separated transmit powers in dB; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        pt_grid: Vec<f64>,
        /// Output CSV path; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Run the oracle suite first and fail on any miss.
        #[arg(long)]
        validate: bool,
        #[arg(long, default_value_t = DEFAULT_MOMENT_TRIALS)]
        moment_trials: u64,
    },
    /// Curve data for one of the six effective-gain figures.
    Figure {
        /// Figure number, 1 to 6.
        id: u8,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RATE_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = config::DEFAULT_SEED)]
        seed: u64,
        /// Skip the simulation columns.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Delivery schedule and its completeness report as JSON.
    Schedule {
        /// Number of cache states.
        #[arg(long)]
        lambda: usize,
        /// Subfile index size.
        #[arg(long)]
        t: usize,
        /// Users per cache state.
        #[arg(long = "B")]
        b: usize,
        /// Users per group per round.
        #[arg(long = "Q")]
        q: usize,
        /// Library size; defaults to the number of users.
        #[arg(long)]
        files: Option<usize>,
        /// File of whitespace or comma separated 1-based file indices, one per user.
        #[arg(long)]
        demands: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and run the oracle suite against it.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Stop after checking the configuration.
        #[arg(long)]
        config_only: bool,
        #[arg(long, default_value_t = DEFAULT_MOMENT_TRIALS)]
        moment_trials: u64,
    },
}

/// Config file plus per-key overrides.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// FHS, AS or ILS.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long = "G")]
    g: Option<usize>,
    #[arg(long = "Q")]
    q: Option<usize>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "pt_linear")]
    pt_db: Option<f64>,
    #[arg(long)]
    pt_linear: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_e2: Option<f64>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    theta: Option<usize>,
    #[arg(long)]
    q_max: Option<usize>,
    #[arg(long)]
    q_max_base: Option<usize>,
    /// static or dynamic.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let mut set = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                raw.set(key, v);
            }
        };
        set("scenario", self.scenario.clone());
        set("L", self.l.map(|v| v.to_string()));
        set("G", self.g.map(|v| v.to_string()));
        set("Q", self.q.map(|v| v.to_string()));
        set("pt", self.pt_db.map(|v| format!("{v} dB")));
        set("pt", self.pt_linear.map(|v| format!("{v} linear")));
        set("sigma_e2", self.sigma_e2.map(|v| v.to_string()));
        set("T", self.t.map(|v| v.to_string()));
        set("theta", self.theta.map(|v| v.to_string()));
        set("q_max", self.q_max.map(|v| v.to_string()));
        set("q_max_base", self.q_max_base.map(|v| v.to_string()));
        set("model", self.model.clone());
        set("trials", self.trials.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        Ok(RunConfig::resolve(&raw)?)
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] vcc_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// A check ran and did not pass.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze { cfg, gain, json } => analyze(&cfg, gain, json),
        Command::Simulate {
            cfg,
            gain,
            pt_grid,
            out,
            validate,
            moment_trials,
        } => simulate(&cfg, gain, &pt_grid, out.as_deref(), validate, moment_trials),
        Command::Figure {
            id,
            out_dir,
            trials,
            seed,
            analytic_only,
        } => figure(id, &out_dir, trials, seed, analytic_only),
        Command::Schedule {
            lambda,
            t,
            b,
            q,
            files,
            demands,
            out,
        } => schedule(lambda, t, b, q, files, demands.as_deref(), out.as_deref()),
        Command::Validate {
            cfg,
            config_only,
            moment_trials,
        } => validate(&cfg, config_only, moment_trials),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Serialize)]
struct Analysis {
    mode: &'static str,
    alpha2: f64,
    overhead_factor: f64,
    xi1: f64,
    xi2: f64,
    desired_moment: f64,
    sum_rate: f64,
    effective_gain: Option<f64>,
    best_q_vcc: Option<usize>,
    best_q_baseline: Option<usize>,
}

fn analyze(args: &ConfigArgs, want_gain: bool, json: bool) -> Result<(), CliError> {
    let rc = args.resolve()?;
    let c = &rc.system;
    if want_gain {
        c.validate_for_gain()?;
    }
    let moments = xi_moments_closed_form(&c.shadowing, c.sigma_e2, c.l_antennas)?;
    let gain = if c.q_mux >= 2 {
        Some(effective_gain_closed_form(c, rc.q_max, rc.q_max_base)?)
    } else {
        None
    };
    let a = Analysis {
        mode: if c.is_baseline() { "cacheless" } else { "vcc" },
        alpha2: alpha2_closed_form(c)?,
        overhead_factor: c.overhead_factor(),
        xi1: moments.xi1,
        xi2: moments.xi2,
        desired_moment: desired_signal_moment(&c.shadowing, c.sigma_e2, c.l_antennas)?,
        sum_rate: avg_sum_rate_closed_form(c)?,
        effective_gain: gain.map(|g| g.gain),
        best_q_vcc: gain.map(|g| g.best_q_vcc),
        best_q_baseline: gain.map(|g| g.best_q_baseline),
    };
    let mut out = io::stdout().lock();
    if json {
        let manifest = RunManifest::new("analyze", &rc, None);
        let doc = serde_json::json!({ "manifest": manifest, "result": a });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
        return Ok(());
    }
    let label = if c.is_baseline() {
        "cacheless baseline"
    } else {
        "vector coded caching"
    };
    writeln!(
        out,
        "{} {} | L={} G={} Q={} P_t={:.2} dB σ_e²={} T={} Θ={}",
        label, rc.scenario, c.l_antennas, c.g_groups, c.q_mux, rc.pt_db, c.sigma_e2, c.t_coherence, c.theta_pilot
    )?;
    writeln!(out, "alpha2          {:.6e}", a.alpha2)?;
    writeln!(out, "xi (overhead)   {:.6}", a.overhead_factor)?;
    writeln!(out, "Xi1             {:.6e}", a.xi1)?;
    writeln!(out, "Xi2             {:.6e}", a.xi2)?;
    writeln!(out, "desired moment  {:.6e}", a.desired_moment)?;
    writeln!(out, "sum rate        {:.6} bit/s/Hz", a.sum_rate)?;
    match gain {
        Some(g) => writeln!(
            out,
            "effective gain  {:.6} (Q* = {}, baseline Q* = {})",
            g.gain, g.best_q_vcc, g.best_q_baseline
        )?,
        None => writeln!(out, "effective gain  n/a (Q = 1)")?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    pt_db: f64,
    scenario: String,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "G")]
    g: usize,
    #[serde(rename = "Q")]
    q: usize,
    rate_analytic: Option<f64>,
    rate_mc: Option<f64>,
    mc_stderr: Option<f64>,
    trials: u64,
    seed: u64,
}

fn rate_rows(scenario: &str, table: &SweepTable, trials: u64) -> Vec<RateRow> {
    table
        .rows
        .iter()
        .map(|r| RateRow {
            pt_db: r.value,
            scenario: scenario.to_string(),
            l: r.config.l_antennas,
            g: r.config.g_groups,
            q: r.config.q_mux,
            rate_analytic: r.analytic_rate,
            rate_mc: r.mc_rate.map(|e| e.mean),
            mc_stderr: r.mc_rate.map(|e| e.std_error),
            trials,
            seed: table.seed,
        })
        .collect()
}

fn report_checks(checks: &[suite::Check]) -> Result<(), CliError> {
    for c in checks {
        eprintln!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} oracle checks failed",
            checks.len()
        )));
    }
    Ok(())
}

fn simulate(
    args: &ConfigArgs,
    gain: bool,
    pt_grid: &[f64],
    out: Option<&Path>,
    validate: bool,
    moment_trials: u64,
) -> Result<(), CliError> {
    let rc = args.resolve()?;
    let model = rc.channel_model();
    if validate {
        let opts = suite::SuiteOptions {
            moment_trials,
            power_trials: rc.trials,
            seed: rc.seed,
        };
        report_checks(&suite::run(&rc.system, &model, opts))?;
    }
    if gain {
        rc.system.validate_for_gain()?;
    }
    let grid = if pt_grid.is_empty() {
        vec![rc.pt_db]
    } else {
        pt_grid.to_vec()
    };
    let spec = SweepSpec {
        template: rc.system,
        model,
        axis: SweepAxis::PtDb(grid),
        target: if gain {
            SweepTarget::Gain {
                q_max: rc.q_max,
                q_max_baseline: rc.q_max_base,
            }
        } else {
            SweepTarget::SumRate
        },
        evaluator: Evaluator::Both { trials: rc.trials },
    };
    let table = sweep(&spec, rc.seed)?;
    if let Some(e) = table.rows.iter().find_map(|r| r.error.clone()) {
        return Err(CliError::Usage(e));
    }

    let scenario = if matches!(rc.model, config::ModelKind::Dynamic) {
        "dynamic"
    } else {
        rc.scenario.as_str()
    };
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    if gain {
        write_csv(&figure_rows(scenario, &table), sink)?;
    } else {
        let mut w = csv::Writer::from_writer(sink);
        for row in rate_rows(scenario, &table, rc.trials) {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if let Some(p) = out {
        let mut manifest = RunManifest::new("simulate", &rc, Some(rc.seed));
        manifest.add_output(p);
        manifest.write(&sidecar_path(p))?;
    }
    Ok(())
}

fn figure(id: u8, out_dir: &Path, trials: u64, seed: u64, analytic_only: bool) -> Result<(), CliError> {
    let evaluator = if analytic_only {
        Evaluator::ClosedForm
    } else {
        Evaluator::Both { trials }
    };
    let figs = run_figure(id, evaluator, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::create_dir_all(out_dir)?;
    let specs: Vec<_> = figs.iter().map(|(c, _)| c).collect();
    let mut manifest = RunManifest::new(
        "figure",
        serde_json::json!({ "figure": id, "curves": specs }),
        Some(seed),
    );
    for (curve, table) in &figs {
        if let Some(e) = table.rows.iter().find_map(|r| r.error.clone()) {
            return Err(CliError::Core(vcc_core::Error::Domain(format!("{}: {e}", curve.name))));
        }
        let rows: Vec<FigureRow> = figure_rows(&curve.scenario, table);
        let path = out_dir.join(format!("{}.csv", curve.name));
        write_csv(&rows, BufWriter::new(File::create(&path)?))?;
        manifest.add_output(&path);
        println!("{}", path.display());
    }
    manifest.write(&out_dir.join(format!("fig{id}.manifest.json")))?;
    Ok(())
}

fn read_demands(path: &Path) -> Result<Demands, CliError> {
    let text = std::fs::read_to_string(path)?;
    let files = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("demands: cannot parse `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Demands(files))
}

fn schedule(
    lambda: usize,
    t: usize,
    b: usize,
    q: usize,
    files: Option<usize>,
    demands: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let layout = CacheLayout::new(lambda, t, files.unwrap_or(lambda * b), b)?;
    let demands = match demands {
        Some(p) => read_demands(p)?,
        None => Demands::identity(layout.users()),
    };
    let schedule = build_schedule(&layout, q, &demands)?;
    let report = verify_completeness(&schedule, &layout, &demands);
    let mut manifest = RunManifest::new("schedule", layout, None);
    if let Some(p) = out {
        manifest.add_output(p);
    }
    let doc = serde_json::json!({ "manifest": manifest, "schedule": schedule, "report": report });
    let text = serde_json::to_string_pretty(&doc).expect("serialisable") + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    eprintln!(
        "{} users, {} subfiles needed each, {} deliveries: {}",
        report.users_checked,
        report.needed_per_user,
        report.deliveries,
        if report.complete { "complete" } else { "INCOMPLETE" }
    );
    if !report.complete {
        return Err(CliError::Failed("schedule is incomplete".into()));
    }
    Ok(())
}

fn validate(args: &ConfigArgs, config_only: bool, moment_trials: u64) -> Result<(), CliError> {
    let rc = args.resolve()?;
    eprintln!(
        "configuration ok: {}",
        serde_json::to_string(&rc).expect("serialisable")
    );
    if config_only {
        return Ok(());
    }
    let opts = suite::SuiteOptions {
        moment_trials,
        power_trials: rc.trials,
        seed: rc.seed,
    };
    report_checks(&suite::run(&rc.system, &rc.channel_model(), opts))
}
