//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! scenario = AS        # FHS | AS | ILS, or give m/beta/omega
//! pt = 18.1 dB         # or `pt = 64.6 linear`
//! L = 8
//! G = 6
//! Q = 4
//! sigma_e2 = 0.125
//! T = 10000
//! theta = 12
//! q_max = 8
//! q_max_base = 8
//! model = static       # static | dynamic
//! trials = 100000
//! seed = 1
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;
use vcc_core::channel::{DynamicScenario, Scenario, ShadowingParams};
use vcc_core::experiments::{ChannelModel, DEFAULT_RATE_TRIALS};
use vcc_core::linkphy::{linear_to_db, SystemConfig};

pub const DEFAULT_PT_DB: f64 = 18.1;
pub const DEFAULT_Q_MAX: usize = 8;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: {message}")]
    Value { key: String, message: String },
    #[error(transparent)]
    Invalid(#[from] vcc_core::Error),
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "m",
    "beta",
    "omega",
    "pt",
    "L",
    "G",
    "Q",
    "sigma_e2",
    "T",
    "theta",
    "q_max",
    "q_max_base",
    "model",
    "trials",
    "seed",
];

/// Raw key/value pairs in file order, later entries winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(pub BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            map.insert(k.to_string(), v.to_string());
        }
        Ok(RawConfig(map))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| bad(key, format!("cannot parse `{v}`"))))
            .transpose()
    }
}

/// Transmit power with its unit, e.g. `18.1 dB`, `64.6 linear`.
pub fn parse_power_db(value: &str) -> Result<f64, ConfigError> {
    let mut parts = value.split_whitespace();
    let number = parts.next().ok_or_else(|| bad("pt", "missing value"))?;
    let unit = parts
        .next()
        .ok_or_else(|| bad("pt", "missing unit suffix (dB or linear)"))?;
    if parts.next().is_some() {
        return Err(bad("pt", format!("unexpected trailing text in `{value}`")));
    }
    let x: f64 = number
        .parse()
        .map_err(|_| bad("pt", format!("cannot parse `{number}`")))?;
    match unit.to_ascii_lowercase().as_str() {
        "db" => Ok(x),
        "linear" | "lin" => {
            if !(x > 0.0) {
                return Err(bad("pt", "linear power must be > 0"));
            }
            Ok(linear_to_db(x))
        }
        other => Err(bad("pt", format!("unknown unit `{other}`, expected dB or linear"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Static,
    Dynamic,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(ModelKind::Static),
            "dynamic" => Ok(ModelKind::Dynamic),
            _ => Err(format!("unknown model `{s}`")),
        }
    }
}

/// Fully resolved run configuration, defaults materialised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Preset name, or `custom` when the shadowing parameters were given.
    pub scenario: String,
    pub system: SystemConfig,
    pub pt_db: f64,
    pub q_max: usize,
    pub q_max_base: usize,
    pub model: ModelKind,
    pub trials: u64,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self, ConfigError> {
        let preset = match raw.0.get("scenario") {
            Some(name) => Some(Scenario::from_str(name).map_err(|e| bad("scenario", e.to_string()))?),
            None => None,
        };
        let base = preset.map(Scenario::params).unwrap_or(ShadowingParams::AS);
        let m = raw.get("m")?;
        let beta = raw.get("beta")?;
        let omega = raw.get("omega")?;
        let custom = m.is_some() || beta.is_some() || omega.is_some();
        let shadowing = ShadowingParams::new(
            m.unwrap_or(base.m),
            beta.unwrap_or(base.beta),
            omega.unwrap_or(base.omega),
        )?;
        let scenario = match (custom, preset) {
            (true, _) => "custom".to_string(),
            (false, Some(p)) => p.name().to_string(),
            (false, None) => Scenario::As.name().to_string(),
        };

        let pt_db = match raw.0.get("pt") {
            Some(v) => parse_power_db(v)?,
            None => DEFAULT_PT_DB,
        };
        let mut system = SystemConfig::new(shadowing, pt_db);
        if let Some(l) = raw.get("L")? {
            system = system.with_antennas(l);
        }
        if let Some(g) = raw.get("G")? {
            system = system.with_groups(g);
        }
        if let Some(q) = raw.get("Q")? {
            system = system.with_q(q);
        }
        if let Some(s) = raw.get("sigma_e2")? {
            system = system.with_sigma_e2(s);
        }
        if let Some(t) = raw.get("T")? {
            system = system.with_coherence(t);
        }
        if let Some(theta) = raw.get("theta")? {
            system.theta_pilot = theta;
        }
        let model = match raw.0.get("model") {
            Some(v) => v.parse().map_err(|e: String| bad("model", e))?,
            None => ModelKind::Static,
        };
        let rc = RunConfig {
            scenario,
            system,
            pt_db,
            q_max: raw.get("q_max")?.unwrap_or(DEFAULT_Q_MAX),
            q_max_base: raw.get("q_max_base")?.unwrap_or(DEFAULT_Q_MAX),
            model,
            trials: raw.get("trials")?.unwrap_or(DEFAULT_RATE_TRIALS),
            seed: raw.get("seed")?.unwrap_or(DEFAULT_SEED),
        };
        rc.system.validate()?;
        Ok(rc)
    }

    pub fn channel_model(&self) -> ChannelModel {
        match self.model {
            ModelKind::Static => ChannelModel::Static,
            ModelKind::Dynamic => ChannelModel::Dynamic(DynamicScenario::urban_leo()),
        }
    }
}
