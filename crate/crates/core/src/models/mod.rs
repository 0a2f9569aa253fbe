//! Binary classifiers over categorical data, their metrics and calibration.

mod calibrate;
mod cv;
mod forest;
mod gbt;
mod metrics;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_platt, Calibration, PlattScaler};
pub use cv::{cross_validate, CvEntry, CvOutcome};
pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use metrics::{auc, roc_curve, RocPoint};

use crate::error::{Error, Result};
use crate::tabular::{AttributeSchema, Dataset};

/// Lower/upper clamp distance for every reported probability.
pub const PROB_EPS: f64 = 1e-6;

/// Per-record predicted probabilities, clamped to `[ε, 1 − ε]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probabilities(#[serde(with = "crate::decimal::vec")] Vec<f64>);

impl Probabilities {
    /// Clamp raw values into `[ε, 1 − ε]`. NaN is an error.
    pub fn clamped(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|p| p.is_nan()) {
            return Err(Error::Numeric("NaN probability".into()));
        }
        Ok(Self(
            values
                .into_iter()
                .map(|p| p.clamp(PROB_EPS, 1.0 - PROB_EPS))
                .collect(),
        ))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    Gbt,
}

impl ModelKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "rf",
            ModelKind::Gbt => "xgb",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    RandomForest(ForestParams),
    Gbt(GbtParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::Gbt(_) => ModelKind::Gbt,
        }
    }

    /// (trees, depth) used to prefer the smaller of two equally good models.
    pub fn size_key(&self) -> (usize, usize) {
        match self {
            ModelParams::RandomForest(p) => (p.n_trees, p.max_depth),
            ModelParams::Gbt(p) => (p.n_rounds, p.max_depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    RandomForest(ForestModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::RandomForest(_) => ModelKind::RandomForest,
            Model::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        match self {
            Model::RandomForest(m) => &m.schema,
            Model::Gbt(m) => &m.schema,
        }
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Result<Probabilities> {
        match self {
            Model::RandomForest(m) => m.predict_proba(ds),
            Model::Gbt(m) => m.predict_proba(ds),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Train the model described by `params`.
pub fn fit(ds: &Dataset, params: &ModelParams, seed: u64) -> Result<Model> {
    Ok(match params {
        ModelParams::RandomForest(p) => Model::RandomForest(fit_random_forest(ds, p, seed)?),
        ModelParams::Gbt(p) => Model::Gbt(fit_gbt(ds, p, seed)?),
    })
}

pub(crate) fn check_trainable(ds: &Dataset) -> Result<()> {
    if ds.n_records() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 records, got {}",
            ds.n_records()
        )));
    }
    let pos = ds.positives();
    if pos == 0 || pos == ds.n_records() {
        return Err(Error::Training("labels contain a single class".into()));
    }
    Ok(())
}

pub(crate) fn check_schema(expected: &AttributeSchema, ds: &Dataset) -> Result<()> {
    if expected.attributes != ds.schema().attributes {
        return Err(Error::Schema(
            "dataset schema differs from the training schema".into(),
        ));
    }
    Ok(())
}
