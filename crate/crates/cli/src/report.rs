use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use ugdp_core::biasscan::{Direction, ScanResult};
use ugdp_core::models::ModelKind;
use ugdp_core::overlap::{AttrValueOverlap, AttrValueSet, RecordOverlap};
use ugdp_core::tabular::AttributeSchema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub attributes: usize,
    pub positives: usize,
    pub cardinalities: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucCell {
    pub model: String,
    /// Pooled out-of-fold AUC of the selected hyperparameters.
    #[serde(with = "ugdp_core::decimal")]
    pub auc: f64,
    #[serde(with = "ugdp_core::decimal")]
    pub cv_mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub dataset: String,
    pub models: Vec<AucCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCell {
    pub model: String,
    pub records: RecordOverlap,
    pub attribute_values: AttrValueOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub dataset: String,
    pub models: Vec<OverlapCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub dataset: String,
    pub model: String,
    #[serde(with = "ugdp_core::decimal")]
    pub score: f64,
    #[serde(with = "ugdp_core::decimal")]
    pub q: f64,
    pub member_count: usize,
    /// Restricted `(attribute, value)` pairs of the subgroup.
    pub subgroup: Vec<(String, String)>,
}

impl ScanSummary {
    pub fn new(dataset: &str, kind: ModelKind, scan: &ScanResult, schema: &AttributeSchema) -> Self {
        Self {
            dataset: dataset.into(),
            model: kind.short_name().into(),
            score: scan.score,
            q: scan.q,
            member_count: scan.member_indices.len(),
            subgroup: AttrValueSet::from_scan(schema, scan).pairs.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub dataset: String,
    #[serde(with = "ugdp_core::decimal::vec")]
    pub total_variation: Vec<f64>,
    /// Attributes whose marginal distance exceeds the threshold.
    pub flagged: Vec<String>,
    pub final_loss: Option<f64>,
}

/// Everything the evaluation stage computes. Holds no timestamps, so equal
/// configs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub direction: Direction,
    pub dataset: DatasetSummary,
    pub auc: Vec<AucRow>,
    pub overlap: Vec<OverlapRow>,
    pub scans: Vec<ScanSummary>,
    #[serde(with = "ugdp_core::decimal")]
    pub marginal_tv_threshold: f64,
    pub marginals: Vec<MarginalRow>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    /// Plain-text AUC and distance tables.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let models: Vec<&str> = self
            .auc
            .first()
            .map(|r| r.models.iter().map(|c| c.model.as_str()).collect())
            .unwrap_or_default();
        let _ = writeln!(s, "AUC");
        let _ = write!(s, "{:<14}", "dataset");
        for m in &models {
            let _ = write!(s, "{m:>10}");
        }
        s.push('\n');
        for row in &self.auc {
            let _ = write!(s, "{:<14}", row.dataset);
            for c in &row.models {
                let _ = write!(s, "{:>10.3}", c.auc);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "\nJaccard distance (records / attribute values)");
        let _ = write!(s, "{:<14}", "dataset");
        for m in &models {
            let _ = write!(s, "{:>18}", m);
        }
        s.push('\n');
        for row in &self.overlap {
            let _ = write!(s, "{:<14}", row.dataset);
            for c in &row.models {
                let _ = write!(
                    s,
                    "{:>18}",
                    format!("{:.3} / {:.3}", c.records.distance, c.attribute_values.distance)
                );
            }
            s.push('\n');
        }
        s
    }
}
