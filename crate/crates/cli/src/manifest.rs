use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Provenance written next to every result file. Rerunning `args` with the
/// same tool version reproduces the outputs byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().collect(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            outputs: Vec::new(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            version: vcc_core::VERSION.to_string(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_keeps_directory() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/a/run.csv")),
            Path::new("/tmp/a/run.csv.manifest.json")
        );
    }

    #[test]
    fn manifest_records_version() {
        let m = RunManifest::new("analyze", serde_json::json!({"L": 8}), Some(3));
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["version"], vcc_core::VERSION);
        assert_eq!(v["config"]["L"], 8);
        assert_eq!(v["seed"], 3);
    }
}
