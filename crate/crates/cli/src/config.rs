use std::path::{Path, PathBuf};

use chppi_core::affinity::{NightWindow, SelfInclusion};
use chppi_core::index::SelectionParams;
use chppi_core::sei::AutoencoderConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::projection::Projection;

/// Input files, relative to the configuration file unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// GeoJSON polygons with `block_id`, `locality_id`, `province_id`, `population`.
    pub blocks: PathBuf,
    /// GeoJSON with a single polygon feature.
    pub endemic_region: PathBuf,
    /// `antenna_id,lon,lat`
    pub antennas: PathBuf,
    /// `originator,destinatary,direction,timestamp,duration,tower`
    pub calls: PathBuf,
    /// `block_id,floor,roof,ceiling,households`
    pub housing: PathBuf,
    /// `provider_id,lon,lat,label`
    pub providers: PathBuf,
    /// `node_id,lon,lat`
    pub street_nodes: PathBuf,
    /// `from,to,length_m`
    pub street_edges: PathBuf,
    /// `household_id,block_id,v1..vI`
    pub households: PathBuf,
    /// `variable,levels`
    pub sei_schema: PathBuf,
    /// Optional `pattern,category` rules replacing the built-in label map;
    /// an empty category discards matching providers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_labels: Option<PathBuf>,
}

impl Inputs {
    fn paths_mut(&mut self) -> Vec<(&'static str, &mut PathBuf)> {
        let mut v = vec![
            ("blocks", &mut self.blocks),
            ("endemic_region", &mut self.endemic_region),
            ("antennas", &mut self.antennas),
            ("calls", &mut self.calls),
            ("housing", &mut self.housing),
            ("providers", &mut self.providers),
            ("street_nodes", &mut self.street_nodes),
            ("street_edges", &mut self.street_edges),
            ("households", &mut self.households),
            ("sei_schema", &mut self.sei_schema),
        ];
        if let Some(p) = self.provider_labels.as_mut() {
            v.push(("provider_labels", p));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffinitySection {
    pub night_start_hour: u32,
    pub night_end_hour: u32,
    pub friday_morning: bool,
    pub min_edge_calls: u32,
    pub self_inclusion: String,
}

impl Default for AffinitySection {
    fn default() -> Self {
        AffinitySection {
            night_start_hour: 20,
            night_end_hour: 6,
            friday_morning: true,
            min_edge_calls: 1,
            self_inclusion: "fallback".into(),
        }
    }
}

impl AffinitySection {
    pub fn night_window(&self) -> Option<NightWindow> {
        NightWindow::with_hours(self.night_start_hour, self.night_end_hour, self.friday_morning)
    }

    pub fn policy(&self) -> std::result::Result<SelfInclusion, String> {
        self.self_inclusion.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessSection {
    pub speed_kmh: f64,
    /// Nearest providers routed per category; 0 routes to all of them.
    pub k: usize,
    pub samples: usize,
}

impl Default for AccessSection {
    fn default() -> Self {
        AccessSection { speed_kmh: 5.0, k: 10, samples: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeiSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    /// Variable whose level fixes the sign of the household score;
    /// defaults to the last schema variable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orient_by: Option<String>,
}

impl Default for SeiSection {
    fn default() -> Self {
        let d = AutoencoderConfig::default();
        SeiSection {
            hidden: d.hidden,
            dropout: d.dropout,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            lr_decay: d.lr_decay,
            orient_by: None,
        }
    }
}

impl SeiSection {
    pub fn autoencoder(&self, seed: u64) -> AutoencoderConfig {
        AutoencoderConfig {
            hidden: self.hidden,
            dropout: self.dropout,
            epochs: self.epochs,
            batch_size: self.batch_size,
            batches_per_epoch: None,
            learning_rate: self.learning_rate,
            lr_decay: self.lr_decay,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSection {
    pub alpha: f64,
    pub beta: f64,
    pub denominator_includes_endemic: bool,
}

impl Default for IndexSection {
    fn default() -> Self {
        IndexSection { alpha: 1.0, beta: 1.0, denominator_includes_endemic: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    pub min_block_pop: f64,
    /// Inhabitants per km².
    pub min_density: f64,
    pub extreme_percentile: f64,
    pub top_n: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        let d = SelectionParams::<f64>::default();
        SelectionSection {
            min_block_pop: d.min_block_pop,
            min_density: d.min_density,
            extreme_percentile: d.extreme_percentile,
            top_n: d.top_n,
        }
    }
}

impl SelectionSection {
    pub fn params(&self) -> SelectionParams<f64> {
        SelectionParams {
            min_block_pop: self.min_block_pop,
            min_density: self.min_density,
            extreme_percentile: self.extreme_percentile,
            top_n: self.top_n,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitSection {
    /// Also write per-locality layers holding the population-weighted mean
    /// of block values.
    pub locality_layers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    pub projection: Projection,
    #[serde(default)]
    pub affinity: AffinitySection,
    #[serde(default)]
    pub access: AccessSection,
    #[serde(default)]
    pub sei: SeiSection,
    #[serde(default)]
    pub index: IndexSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub emit: EmitSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// A validated configuration with paths resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    /// SHA-256 of the canonical JSON form, before path resolution.
    pub hash: String,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(a) = o.alpha {
            self.index.alpha = a;
        }
        if let Some(b) = o.beta {
            self.index.beta = b;
        }
    }

    /// Numeric ranges and enumerations, without touching the filesystem.
    pub fn check_values(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if !self.projection.is_valid() {
            return bad(format!("projection centre {:?} out of range", self.projection));
        }
        if self.affinity.night_window().is_none() {
            return bad("night window hours must be within 0..=23".into());
        }
        if let Err(e) = self.affinity.policy() {
            return bad(e);
        }
        if !(self.access.speed_kmh > 0.0 && self.access.speed_kmh.is_finite()) {
            return bad(format!("access.speed_kmh = {} must be positive", self.access.speed_kmh));
        }
        if self.access.samples == 0 {
            return bad("access.samples must be at least 1".into());
        }
        let s = &self.sei;
        if !(0.0..1.0).contains(&s.dropout) || s.epochs == 0 || s.batch_size == 0 || !(s.learning_rate > 0.0) {
            return bad("sei: need 0 <= dropout < 1, epochs >= 1, batch_size >= 1, learning_rate > 0".into());
        }
        if !(s.lr_decay > 0.0 && s.lr_decay <= 1.0) {
            return bad(format!("sei.lr_decay = {} outside (0, 1]", s.lr_decay));
        }
        for (name, v) in [("index.alpha", self.index.alpha), ("index.beta", self.index.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        let sel = &self.selection;
        if !(sel.min_block_pop >= 0.0) || !(sel.min_density >= 0.0) || !(0.0..=1.0).contains(&sel.extreme_percentile) {
            return bad("selection thresholds out of range".into());
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve(&mut self, base: &Path) {
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        for (_, p) in self.inputs.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn check_files(&mut self) -> Result<()> {
        for (name, p) in self.inputs.paths_mut() {
            if !p.is_file() {
                return Err(CliError::Validation(format!("input {name} not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

/// Reads, overrides, validates and resolves a configuration file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = PipelineConfig::from_toml(&text)?;
    config.apply(overrides);
    config.check_values()?;
    let hash = config.hash();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.resolve(&base);
    config.check_files()?;
    Ok(Loaded { config, hash })
}
