//! Pipeline configuration: one JSON document, every default explicit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ugdp_core::biasscan::{Direction, DEFAULT_Q_CAP};
use ugdp_core::models::{ForestParams, GbtParams, ModelKind, ModelParams};
use ugdp_core::synth::{SampleMode, VaeConfig};
use ugdp_core::tabular::DropMap;
use ugdp_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV path, relative to the config file's directory when not absolute.
    pub path: PathBuf,
    pub label_column: String,
    /// Label string treated as the positive outcome.
    pub positive_label: Option<String>,
    pub delimiter: char,
    /// Attributes kept, in order. All non-label columns when absent.
    pub attributes: Option<Vec<String>>,
    /// Records holding any of these values are removed.
    pub drop_values: DropMap,
    /// Remove vocabulary entries with no remaining records after filtering.
    pub prune_unused_values: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data.csv"),
            label_column: "y".into(),
            positive_label: None,
            delimiter: ',',
            attributes: None,
            drop_values: DropMap::new(),
            prune_unused_values: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub kinds: Vec<ModelKind>,
    pub random_forest_grid: Vec<ForestParams>,
    pub gbt_grid: Vec<GbtParams>,
    pub cv_folds: usize,
    /// Cross-fitted Platt scaling of the out-of-fold probabilities fed to the scan.
    pub calibrate: bool,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            kinds: vec![ModelKind::RandomForest, ModelKind::Gbt],
            random_forest_grid: vec![
                ForestParams {
                    n_trees: 100,
                    max_depth: 8,
                    ..ForestParams::default()
                },
                ForestParams {
                    n_trees: 100,
                    max_depth: 12,
                    ..ForestParams::default()
                },
            ],
            gbt_grid: vec![
                GbtParams {
                    n_rounds: 150,
                    max_depth: 3,
                    ..GbtParams::default()
                },
                GbtParams {
                    n_rounds: 150,
                    max_depth: 5,
                    ..GbtParams::default()
                },
            ],
            cv_folds: 5,
            calibrate: true,
        }
    }
}

impl ModelsConfig {
    pub fn grid(&self, kind: ModelKind) -> Vec<ModelParams> {
        match kind {
            ModelKind::RandomForest => self
                .random_forest_grid
                .iter()
                .cloned()
                .map(ModelParams::RandomForest)
                .collect(),
            ModelKind::Gbt => self.gbt_grid.iter().cloned().map(ModelParams::Gbt).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub direction: Direction,
    pub n_restarts: usize,
    pub q_cap: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Over,
            n_restarts: 10,
            q_cap: DEFAULT_Q_CAP,
        }
    }
}

/// Synthetic records always carry a synthesized label so that models can be
/// retrained on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub samples: usize,
    pub mode: SampleMode,
    pub vae: VaeConfig,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            samples: 6,
            mode: SampleMode::RetrainPerSample,
            vae: VaeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    /// Append the outcome label to record keys.
    pub include_label_in_records: bool,
    /// Per-attribute marginal total-variation level flagged in the report.
    pub marginal_tv_threshold: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            include_label_in_records: false,
            marginal_tv_threshold: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub models: ModelsConfig,
    pub scan: ScanConfig,
    pub synthesis: SynthesisConfig,
    pub overlap: OverlapConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            models: ModelsConfig::default(),
            scan: ScanConfig::default(),
            synthesis: SynthesisConfig::default(),
            overlap: OverlapConfig::default(),
            out_dir: PathBuf::from("ugdp_out"),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Parse a config file and resolve relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if cfg.data.path.is_relative() {
            cfg.data.path = base.join(&cfg.data.path);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.synthesis.samples == 0 {
            return bad("synthesis.samples must be at least 1".into());
        }
        if self.models.kinds.is_empty() {
            return bad("models.kinds must name at least one model".into());
        }
        for (i, &kind) in self.models.kinds.iter().enumerate() {
            if self.models.kinds[..i].contains(&kind) {
                return bad(format!("model {} listed twice", kind.short_name()));
            }
            if self.models.grid(kind).is_empty() {
                return bad(format!("empty hyperparameter grid for {}", kind.short_name()));
            }
        }
        if self.models.cv_folds < 2 {
            return bad("models.cv_folds must be at least 2".into());
        }
        if self.scan.n_restarts == 0 {
            return bad("scan.n_restarts must be at least 1".into());
        }
        if !(self.scan.q_cap > 1.0) {
            return bad("scan.q_cap must exceed 1".into());
        }
        if !self.data.delimiter.is_ascii() {
            return bad("data.delimiter must be a single ASCII character".into());
        }
        self.synthesis.vae.validate()
    }

    /// SHA-256 of the canonical JSON of everything that affects results.
    /// The output directory is excluded so a run can be relocated.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// The default config as pretty JSON, for the `config-schema` command.
pub fn default_config_json() -> String {
    serde_json::to_string_pretty(&PipelineConfig::default()).expect("config serializes")
}
