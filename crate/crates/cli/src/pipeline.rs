//! Stage orchestration and artifact layout.
//!
//! ```text
//! <out>/manifest.json              config hash, completed stages, timestamps
//! <out>/dataset.csv, schema.json   ingested data
//! <out>/<dataset>/<model>/         cv.json model.json probabilities.json roc.csv scan.json
//! <out>/synthetic_<i>/data.csv     plus loss.json and vae.json
//! <out>/report.json, venn.csv
//! ```
//!
//! `<dataset>` is `original` or `synthetic_<i>` (1-based); `<model>` is `rf`
//! or `xgb`. Every number in the report is read back from these files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ugdp_core::biasscan::{bias_scan, Direction, ScanParams, ScanRecord, ScanResult};
use ugdp_core::models::{
    auc, calibrate_platt, cross_validate, fit, roc_curve, CvEntry, Model, ModelKind, PlattScaler,
    Probabilities,
};
use ugdp_core::overlap::{attr_value_overlap, record_overlap};
use ugdp_core::synth::{generate_samples, marginal_tv, LossReport};
use ugdp_core::tabular::{
    filter_rows, load_csv, select_attributes, write_csv, AttributeSchema, CsvOptions, Dataset,
};
use ugdp_core::{decimal, seed, Error};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::report::{
    AucCell, AucRow, DatasetSummary, MarginalRow, OverlapCell, OverlapRow, RunReport, ScanSummary,
};

pub const STAGES: [&str; 5] = ["ingest", "train", "scan", "synthesize", "evaluate"];
const ORIGINAL: &str = "original";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub direction: Option<Direction>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(d) = self.direction {
            cfg.scan.direction = d;
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    /// Stage (or per-sample analysis) name to completion time in Unix seconds.
    completed: BTreeMap<String, u64>,
}

/// Saved output of cross-validated training for one model kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvFile {
    pub model: ModelKind,
    pub best_index: usize,
    pub entries: Vec<CvEntry>,
    #[serde(with = "ugdp_core::decimal")]
    pub best_mean_auc: f64,
    /// AUC of the pooled out-of-fold predictions of the best entry.
    #[serde(with = "ugdp_core::decimal")]
    pub oof_auc: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityFile {
    pub model: ModelKind,
    /// Out-of-fold predictions of the selected hyperparameters.
    pub raw: Probabilities,
    pub calibrated: Option<Probabilities>,
    pub platt_per_fold: Vec<PlattScaler>,
    pub calibration_fallback: bool,
}

impl ProbabilityFile {
    /// The probabilities the scan runs on.
    pub fn for_scan(&self) -> &Probabilities {
        self.calibrated.as_ref().unwrap_or(&self.raw)
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
    hash: String,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("missing artifact {}: {e}", path.display()))
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn sample_name(i: usize) -> String {
    format!("synthetic_{}", i + 1)
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> CliResult<Self> {
        cfg.validate()?;
        let out = cfg.out_dir.clone();
        let hash = cfg.hash();
        Ok(Self { cfg, out, hash })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn manifest_path(&self) -> PathBuf {
        self.out.join("manifest.json")
    }

    /// Read the manifest, refusing artifacts from a different configuration.
    fn manifest(&self) -> CliResult<Manifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Ok(Manifest {
                config_hash: self.hash.clone(),
                completed: BTreeMap::new(),
            });
        }
        let m: Manifest = read_json(&path)?;
        if m.config_hash != self.hash {
            return Err(CliError::Provenance(format!(
                "{} was written under config {}, current config is {}; use a fresh output directory",
                self.out.display(),
                m.config_hash,
                self.hash
            )));
        }
        Ok(m)
    }

    /// Record `stage` as done and forget everything downstream of it.
    fn complete(&self, stage: &str) -> CliResult<()> {
        let mut m = self.manifest()?;
        if let Some(pos) = STAGES.iter().position(|s| *s == stage) {
            for later in &STAGES[pos + 1..] {
                m.completed.remove(*later);
            }
            if pos <= 3 {
                m.completed.retain(|k, _| !k.starts_with("analyze:"));
            }
        }
        m.completed.insert(stage.to_string(), now());
        write_json(&self.manifest_path(), &m)
    }

    fn is_complete(&self, stage: &str) -> CliResult<bool> {
        Ok(self.manifest()?.completed.contains_key(stage))
    }

    fn kinds(&self) -> Vec<ModelKind> {
        self.cfg.models.kinds.clone()
    }

    fn model_dir(&self, dataset: &str, kind: ModelKind) -> PathBuf {
        self.out.join(dataset).join(kind.short_name())
    }

    fn read_schema(&self) -> CliResult<AttributeSchema> {
        read_json(&self.out.join("schema.json"))
    }

    fn read_dataset(&self, path: &Path) -> CliResult<Dataset> {
        let schema = self.read_schema()?;
        let opts = CsvOptions {
            label_column: schema.label_name.clone(),
            positive_label: Some(schema.label_values[1].clone()),
            schema: Some(schema),
            delimiter: b',',
        };
        Ok(load_csv(path, &opts)?)
    }

    pub fn original(&self) -> CliResult<Dataset> {
        self.read_dataset(&self.out.join("dataset.csv"))
    }

    pub fn synthetic(&self, i: usize) -> CliResult<Dataset> {
        self.read_dataset(&self.out.join(sample_name(i)).join("data.csv"))
    }

    /// Load, project, filter and write the canonical dataset. Returns it.
    pub fn ingest(&self) -> CliResult<Dataset> {
        self.manifest()?;
        let d = &self.cfg.data;
        let opts = CsvOptions {
            label_column: d.label_column.clone(),
            positive_label: d.positive_label.clone(),
            schema: None,
            delimiter: d.delimiter as u8,
        };
        let mut ds = load_csv(&d.path, &opts).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", d.path.display())),
            other => other,
        })?;
        if let Some(names) = &d.attributes {
            ds = select_attributes(&ds, names)?;
        }
        if !d.drop_values.is_empty() {
            ds = filter_rows(&ds, &d.drop_values)?;
        }
        if d.prune_unused_values {
            ds = ds.prune_unused_values()?;
        }
        std::fs::create_dir_all(&self.out)?;
        write_csv(&ds, self.out.join("dataset.csv"))?;
        write_json(&self.out.join("schema.json"), ds.schema())?;
        self.complete("ingest")?;
        Ok(ds)
    }

    /// Cross-validated training of every model kind on one dataset.
    fn train_dataset(&self, name: &str, index: u64, ds: &Dataset) -> CliResult<()> {
        let m = &self.cfg.models;
        for kind in self.kinds() {
            let short = kind.short_name();
            let dir = self.model_dir(name, kind);
            std::fs::create_dir_all(&dir)?;
            let cv_seed = seed::derive(self.cfg.seed, &format!("cv_{short}"), index);
            let cv = cross_validate(ds, &m.grid(kind), m.cv_folds, cv_seed)?;
            let oof_auc = auc(cv.oof.values(), ds.labels())?;
            log::info!("{name}/{short}: out-of-fold AUC {oof_auc:.4}");

            let model_seed = seed::derive(self.cfg.seed, &format!("model_{short}"), index);
            let model = fit(ds, &cv.best, model_seed)?;
            std::fs::write(dir.join("model.json"), model.to_json()?)?;

            let (calibrated, platt_per_fold, calibration_fallback) = if m.calibrate {
                let cal = calibrate_platt(&cv.oof, ds.labels(), &cv.folds)?;
                (Some(cal.probs), cal.per_fold, cal.fallback)
            } else {
                (None, Vec::new(), false)
            };

            let mut roc = String::from("threshold,fpr,tpr\n");
            for p in roc_curve(cv.oof.values(), ds.labels())? {
                let _ = writeln!(
                    roc,
                    "{},{},{}",
                    decimal::format(p.threshold),
                    decimal::format(p.fpr),
                    decimal::format(p.tpr)
                );
            }
            std::fs::write(dir.join("roc.csv"), roc)?;

            write_json(
                &dir.join("cv.json"),
                &CvFile {
                    model: kind,
                    best_index: cv.best_index,
                    entries: cv.entries,
                    best_mean_auc: cv.mean_auc,
                    oof_auc,
                    seed: cv_seed,
                },
            )?;
            write_json(
                &dir.join("probabilities.json"),
                &ProbabilityFile {
                    model: kind,
                    raw: cv.oof,
                    calibrated,
                    platt_per_fold,
                    calibration_fallback,
                },
            )?;
        }
        Ok(())
    }

    fn scan_dataset(&self, name: &str, index: u64, ds: &Dataset) -> CliResult<()> {
        for kind in self.kinds() {
            let short = kind.short_name();
            let dir = self.model_dir(name, kind);
            let probs: ProbabilityFile = read_json(&dir.join("probabilities.json"))?;
            let params = ScanParams {
                direction: self.cfg.scan.direction,
                n_restarts: self.cfg.scan.n_restarts,
                q_cap: self.cfg.scan.q_cap,
                seed: seed::derive(self.cfg.seed, &format!("scan_{short}"), index),
            };
            let result = bias_scan(ds, probs.for_scan(), &params)?;
            log::info!(
                "{name}/{short}: score {:.4}, q {:.4}, {} records",
                result.score,
                result.q,
                result.member_indices.len()
            );
            write_json(&dir.join("scan.json"), &result.to_record(ds.schema()))?;
        }
        Ok(())
    }

    pub fn train(&self) -> CliResult<()> {
        self.manifest()?;
        let ds = self.original()?;
        self.train_dataset(ORIGINAL, 0, &ds)?;
        self.complete("train")
    }

    pub fn scan(&self) -> CliResult<()> {
        self.manifest()?;
        let ds = self.original()?;
        self.scan_dataset(ORIGINAL, 0, &ds)?;
        self.complete("scan")
    }

    pub fn synthesize(&self) -> CliResult<()> {
        self.manifest()?;
        let ds = self.original()?;
        let s = &self.cfg.synthesis;
        let master = seed::derive(self.cfg.seed, "synthesis", 0);
        let runs = generate_samples(&ds, true, &s.vae, s.samples, master, s.mode)?;
        for run in runs {
            let dir = self.out.join(sample_name(run.index));
            std::fs::create_dir_all(&dir)?;
            write_csv(&run.dataset, dir.join("data.csv"))?;
            write_json(&dir.join("loss.json"), &run.loss)?;
            std::fs::write(dir.join("vae.json"), run.params.to_json()?)?;
            if let (Some(a), Some(b)) = (run.loss.first(), run.loss.last()) {
                log::info!("{}: loss {:.4} -> {:.4}", sample_name(run.index), a.total, b.total);
            }
        }
        self.complete("synthesize")
    }

    /// Train and scan one synthetic sample unless already done.
    fn analyze_sample(&self, i: usize) -> CliResult<()> {
        let key = format!("analyze:{}", sample_name(i));
        let present = self
            .kinds()
            .iter()
            .all(|&k| self.model_dir(&sample_name(i), k).join("scan.json").exists());
        if present && self.is_complete(&key)? {
            return Ok(());
        }
        let ds = self.synthetic(i)?;
        let index = i as u64 + 1;
        self.train_dataset(&sample_name(i), index, &ds)?;
        self.scan_dataset(&sample_name(i), index, &ds)?;
        let mut m = self.manifest()?;
        m.completed.insert(key, now());
        write_json(&self.manifest_path(), &m)
    }

    fn read_scan(&self, dataset: &str, kind: ModelKind, schema: &AttributeSchema) -> CliResult<ScanResult> {
        let rec: ScanRecord = read_json(&self.model_dir(dataset, kind).join("scan.json"))?;
        Ok(ScanResult::from_record(schema, &rec)?)
    }

    /// Re-scan every synthetic sample and build the report from artifacts.
    pub fn evaluate(&self) -> CliResult<RunReport> {
        self.manifest()?;
        let original = self.original()?;
        let schema = original.schema().clone();
        let samples = self.cfg.synthesis.samples;
        for i in 0..samples {
            self.analyze_sample(i)?;
        }

        let kinds = self.kinds();
        let mut datasets = vec![ORIGINAL.to_string()];
        datasets.extend((0..samples).map(sample_name));

        let mut auc_rows = Vec::new();
        let mut scans = Vec::new();
        let mut artifacts = vec!["dataset.csv".to_string(), "schema.json".to_string()];
        for name in &datasets {
            let mut cells = Vec::new();
            for &kind in &kinds {
                let rel = format!("{name}/{}", kind.short_name());
                let cv: CvFile = read_json(&self.out.join(&rel).join("cv.json"))?;
                cells.push(AucCell {
                    model: kind.short_name().into(),
                    auc: cv.oof_auc,
                    cv_mean_auc: cv.best_mean_auc,
                });
                let scan = self.read_scan(name, kind, &schema)?;
                scans.push(ScanSummary::new(name, kind, &scan, &schema));
                for f in ["cv.json", "model.json", "probabilities.json", "roc.csv", "scan.json"] {
                    artifacts.push(format!("{rel}/{f}"));
                }
            }
            if name != ORIGINAL {
                for f in ["data.csv", "loss.json", "vae.json"] {
                    artifacts.push(format!("{name}/{f}"));
                }
            }
            auc_rows.push(AucRow {
                dataset: name.clone(),
                models: cells,
            });
        }

        let include_label = self.cfg.overlap.include_label_in_records;
        let mut overlap_rows = Vec::new();
        let mut marginals = Vec::new();
        let mut venn = String::from(
            "dataset,model,original_records,synthetic_records,shared_records,record_distance,\
             original_pairs,synthetic_pairs,shared_pairs,attribute_distance\n",
        );
        for i in 0..samples {
            let name = sample_name(i);
            let synth = self.synthetic(i)?;
            let mut cells = Vec::new();
            for &kind in &kinds {
                let orig_scan = self.read_scan(ORIGINAL, kind, &schema)?;
                let synth_scan = self.read_scan(&name, kind, &schema)?;
                let records = record_overlap(&original, &orig_scan, &synth, &synth_scan, include_label)?;
                let attribute_values = attr_value_overlap(&schema, &orig_scan, &synth_scan);
                let _ = writeln!(
                    venn,
                    "{name},{},{},{},{},{},{},{},{},{}",
                    kind.short_name(),
                    records.original,
                    records.synthetic,
                    records.intersection,
                    decimal::format(records.distance),
                    attribute_values.original.len(),
                    attribute_values.synthetic.len(),
                    attribute_values.shared.len(),
                    decimal::format(attribute_values.distance)
                );
                cells.push(OverlapCell {
                    model: kind.short_name().into(),
                    records,
                    attribute_values,
                });
            }
            overlap_rows.push(OverlapRow {
                dataset: name.clone(),
                models: cells,
            });

            let tv = marginal_tv(&original, &synth)?;
            let threshold = self.cfg.overlap.marginal_tv_threshold;
            let flagged = schema
                .attributes
                .iter()
                .zip(&tv)
                .filter(|(_, &v)| v > threshold)
                .map(|(a, _)| a.name.clone())
                .collect();
            let loss: LossReport = read_json(&self.out.join(&name).join("loss.json"))?;
            marginals.push(MarginalRow {
                dataset: name,
                total_variation: tv,
                flagged,
                final_loss: loss.last().map(|e| e.total),
            });
        }
        std::fs::write(self.out.join("venn.csv"), venn)?;
        artifacts.push("venn.csv".into());

        let report = RunReport {
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            direction: self.cfg.scan.direction,
            dataset: DatasetSummary {
                records: original.n_records(),
                attributes: original.n_attributes(),
                positives: original.positives(),
                cardinalities: schema.cardinalities(),
            },
            auc: auc_rows,
            overlap: overlap_rows,
            scans,
            marginal_tv_threshold: self.cfg.overlap.marginal_tv_threshold,
            marginals,
            artifacts,
        };
        write_json(&self.out.join("report.json"), &report)?;
        self.complete("evaluate")?;
        Ok(report)
    }

    fn stage_outputs_present(&self, stage: &str) -> bool {
        let kinds = self.kinds();
        let all_models = |file: &str| {
            kinds
                .iter()
                .all(|&k| self.model_dir(ORIGINAL, k).join(file).exists())
        };
        match stage {
            "ingest" => self.out.join("dataset.csv").exists() && self.out.join("schema.json").exists(),
            "train" => all_models("probabilities.json") && all_models("cv.json"),
            "scan" => all_models("scan.json"),
            "synthesize" => (0..self.cfg.synthesis.samples)
                .all(|i| self.out.join(sample_name(i)).join("data.csv").exists()),
            "evaluate" => self.out.join("report.json").exists(),
            _ => false,
        }
    }

    /// Every stage in order, skipping those already completed under this
    /// config whose outputs are still on disk.
    pub fn run_all(&self) -> CliResult<RunReport> {
        for stage in STAGES {
            if self.is_complete(stage)? && self.stage_outputs_present(stage) {
                log::info!("{stage}: up to date");
                if stage == "evaluate" {
                    return read_json(&self.out.join("report.json"));
                }
                continue;
            }
            log::info!("{stage}: running");
            match stage {
                "ingest" => {
                    self.ingest()?;
                }
                "train" => self.train()?,
                "scan" => self.scan()?,
                "synthesize" => self.synthesize()?,
                _ => return self.evaluate(),
            }
        }
        unreachable!("evaluate is the last stage")
    }

    /// Reload a fitted model artifact.
    pub fn model(&self, dataset: &str, kind: ModelKind) -> CliResult<Model> {
        let text = std::fs::read_to_string(self.model_dir(dataset, kind).join("model.json"))?;
        Ok(Model::from_json(&text)?)
    }
}
