//! Jaccard distances between original and synthetic anomalous subgroups, at
//! record level and at attribute-value level.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::biasscan::ScanResult;
use crate::error::{Error, Result};
use crate::tabular::{AttributeSchema, Dataset};

/// Number of shared record keys listed in a report.
pub const SAMPLE_KEYS: usize = 100;

/// `1 − |X∩Y|/|X∪Y|`, with two empty sets at distance 0.
pub fn jaccard_distance<T: Ord>(x: &BTreeSet<T>, y: &BTreeSet<T>) -> f64 {
    let inter = x.intersection(y).count();
    let union = x.len() + y.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Distinct value tuples of a set of records, keyed by value names. The
/// label's value is appended when `include_label` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordKeySet {
    pub keys: BTreeSet<Vec<String>>,
}

impl RecordKeySet {
    pub fn from_members(ds: &Dataset, members: &[usize], include_label: bool) -> Result<Self> {
        let schema = ds.schema();
        let mut keys = BTreeSet::new();
        for &i in members {
            if i >= ds.n_records() {
                return Err(Error::Argument(format!(
                    "member index {i} out of range for {} records",
                    ds.n_records()
                )));
            }
            let mut key: Vec<String> = ds.record_values(i).into_iter().map(str::to_owned).collect();
            if include_label {
                key.push(schema.label_values[ds.label(i) as usize].clone());
            }
            keys.insert(key);
        }
        Ok(Self { keys })
    }
}

/// `(attribute, value)` pairs of a subgroup's restricted modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrValueSet {
    pub pairs: BTreeSet<(String, String)>,
}

impl AttrValueSet {
    pub fn from_scan(schema: &AttributeSchema, scan: &ScanResult) -> Self {
        let mut pairs = BTreeSet::new();
        for (j, attr) in schema.attributes.iter().enumerate() {
            if scan.subgroup.is_unrestricted(j, attr.cardinality()) {
                continue;
            }
            for &v in scan.subgroup.values(j) {
                pairs.insert((attr.name.clone(), attr.values[v as usize].clone()));
            }
        }
        Self { pairs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOverlap {
    #[serde(with = "crate::decimal")]
    pub distance: f64,
    pub original: usize,
    pub synthetic: usize,
    pub intersection: usize,
    /// Both sides empty, so the distance is the 0 convention.
    pub both_empty: bool,
    pub sample_shared_keys: Vec<Vec<String>>,
}

/// Record-level distance between two scans' member sets.
pub fn record_overlap(
    original: &Dataset,
    original_scan: &ScanResult,
    synthetic: &Dataset,
    synthetic_scan: &ScanResult,
    include_label: bool,
) -> Result<RecordOverlap> {
    if original.schema() != synthetic.schema() {
        return Err(Error::Schema("original and synthetic schemas differ".into()));
    }
    let x = RecordKeySet::from_members(original, &original_scan.member_indices, include_label)?;
    let y = RecordKeySet::from_members(synthetic, &synthetic_scan.member_indices, include_label)?;
    let shared: Vec<Vec<String>> = x.keys.intersection(&y.keys).cloned().collect();
    Ok(RecordOverlap {
        distance: jaccard_distance(&x.keys, &y.keys),
        original: x.keys.len(),
        synthetic: y.keys.len(),
        intersection: shared.len(),
        both_empty: x.keys.is_empty() && y.keys.is_empty(),
        sample_shared_keys: shared.into_iter().take(SAMPLE_KEYS).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttrValueOverlap {
    #[serde(with = "crate::decimal")]
    pub distance: f64,
    pub both_empty: bool,
    pub original: Vec<(String, String)>,
    pub synthetic: Vec<(String, String)>,
    pub shared: Vec<(String, String)>,
}

/// Attribute-value distance between two scans over the same schema.
pub fn attr_value_overlap(schema: &AttributeSchema, original: &ScanResult, synthetic: &ScanResult) -> AttrValueOverlap {
    let x = AttrValueSet::from_scan(schema, original);
    let y = AttrValueSet::from_scan(schema, synthetic);
    AttrValueOverlap {
        distance: jaccard_distance(&x.pairs, &y.pairs),
        both_empty: x.pairs.is_empty() && y.pairs.is_empty(),
        shared: x.pairs.intersection(&y.pairs).cloned().collect(),
        original: x.pairs.into_iter().collect(),
        synthetic: y.pairs.into_iter().collect(),
    }
}
