use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Row accounting for one stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// Rows read per input.
    pub inputs: BTreeMap<String, u64>,
    /// Rows written per output file.
    pub outputs: BTreeMap<String, u64>,
    /// Rows left out, by reason.
    pub dropped: BTreeMap<String, u64>,
    pub metrics: BTreeMap<String, f64>,
}

impl StageReport {
    pub fn input(&mut self, name: &str, n: usize) -> &mut Self {
        self.inputs.insert(name.into(), n as u64);
        self
    }

    pub fn output(&mut self, name: &str, n: usize) -> &mut Self {
        self.outputs.insert(name.into(), n as u64);
        self
    }

    pub fn drop(&mut self, reason: &str, n: usize) -> &mut Self {
        self.dropped.insert(reason.into(), n as u64);
        self
    }

    pub fn metric(&mut self, name: &str, v: f64) -> &mut Self {
        self.metrics.insert(name.into(), v);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageReport>,
}

impl Manifest {
    /// The manifest in `dir` when it was produced by the same
    /// configuration, otherwise a fresh one.
    pub fn open(dir: &Path, config_hash: &str, seed: u64) -> Self {
        std::fs::read_to_string(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<Manifest>(&t).ok())
            .filter(|m| m.config_hash == config_hash && m.seed == seed)
            .unwrap_or_else(|| Manifest { config_hash: config_hash.into(), seed, stages: BTreeMap::new() })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)
            .map_err(|e| CliError::Validation(format!("cannot write manifest in {}: {e}", dir.display())))
    }
}
