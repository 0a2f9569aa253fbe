//! Bias scan: the axis-aligned subgroup whose outcomes diverge most from a
//! classifier's predicted probabilities under a Bernoulli likelihood ratio.

mod scan;
mod score;

use serde::{Deserialize, Serialize};

pub use scan::{
    bias_scan, brute_force_scan, optimize_mode, subgroup_members, ModeOptimum, RestartTrace,
    ScanParams, ScanResult, Subgroup, BRUTE_FORCE_LIMIT,
};
pub use score::{bias_score, expected_under_q, optimize_q, score_at_reported_q, Direction, QFit, DEFAULT_Q_CAP};

use crate::error::{Error, Result};
use crate::tabular::AttributeSchema;

/// One attribute of a serialized subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSelection {
    pub attribute: String,
    pub values: Vec<String>,
    pub unrestricted: bool,
}

/// JSON form of a [`ScanResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub direction: Direction,
    #[serde(with = "crate::decimal")]
    pub score: f64,
    #[serde(with = "crate::decimal")]
    pub q: f64,
    #[serde(with = "crate::decimal")]
    pub q_cap: f64,
    pub subgroup: Vec<ModeSelection>,
    pub member_count: usize,
    pub member_indices: Vec<usize>,
    pub restarts_used: usize,
    pub restarts: Vec<RestartTrace>,
}

impl ScanResult {
    pub fn to_record(&self, schema: &AttributeSchema) -> ScanRecord {
        let subgroup = schema
            .attributes
            .iter()
            .enumerate()
            .map(|(j, attr)| ModeSelection {
                attribute: attr.name.clone(),
                values: self
                    .subgroup
                    .values(j)
                    .iter()
                    .map(|&v| attr.values[v as usize].clone())
                    .collect(),
                unrestricted: self.subgroup.is_unrestricted(j, attr.cardinality()),
            })
            .collect();
        ScanRecord {
            direction: self.direction,
            score: self.score,
            q: self.q,
            q_cap: self.q_cap,
            subgroup,
            member_count: self.member_indices.len(),
            member_indices: self.member_indices.clone(),
            restarts_used: self.restarts_used,
            restarts: self.restarts.clone(),
        }
    }

    pub fn from_record(schema: &AttributeSchema, record: &ScanRecord) -> Result<Self> {
        if record.subgroup.len() != schema.n_attributes() {
            return Err(Error::Schema("scan record does not match the schema".into()));
        }
        let values = record
            .subgroup
            .iter()
            .zip(&schema.attributes)
            .map(|(sel, attr)| {
                if sel.attribute != attr.name {
                    return Err(Error::Schema(format!(
                        "scan record attribute `{}` where schema has `{}`",
                        sel.attribute, attr.name
                    )));
                }
                sel.values
                    .iter()
                    .map(|v| {
                        attr.value_index(v).map(|i| i as u32).ok_or_else(|| {
                            Error::Schema(format!("unknown value `{v}` for `{}`", attr.name))
                        })
                    })
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScanResult {
            subgroup: Subgroup::new(schema, values)?,
            score: record.score,
            q: record.q,
            direction: record.direction,
            member_indices: record.member_indices.clone(),
            restarts_used: record.restarts_used,
            q_cap: record.q_cap,
            restarts: record.restarts.clone(),
        })
    }
}
