use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{SplitRule, Tree, TreeBuilder};
use super::{check_schema, check_trainable, Probabilities};
use crate::error::{Error, Result};
use crate::par;
use crate::seed;
use crate::tabular::{AttributeSchema, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Attributes tried per split; `None` means ⌈√m⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_leaf: 5,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

/// Bagged Gini trees; the prediction is the mean leaf probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub schema: AttributeSchema,
    pub trees: Vec<Tree>,
}

pub fn fit_random_forest(ds: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    check_trainable(ds)?;
    if params.n_trees == 0 {
        return Err(Error::Argument("n_trees must be at least 1".into()));
    }
    let m = ds.n_attributes();
    let features = params
        .features_per_split
        .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
        .clamp(1, m.max(1));
    let n = ds.n_records();
    let targets: Vec<f64> = ds.labels().iter().map(|&y| f64::from(y)).collect();

    let trees = par::map_indices(params.n_trees, |t| {
        let mut rng = seed::substream(seed, "forest_tree", t as u64);
        let mut w = vec![0.0; n];
        if params.bootstrap {
            for _ in 0..n {
                w[rng.gen_range(0..n)] += 1.0;
            }
        } else {
            w.fill(1.0);
        }
        let g: Vec<f64> = targets.iter().zip(&w).map(|(y, w)| y * w).collect();
        let indices: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
        TreeBuilder {
            ds,
            g: &g,
            h: &w,
            w: &w,
            rule: SplitRule::Gini,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf.max(1) as f64,
            features_per_split: Some(features),
        }
        .build(indices, &mut rng)
    });

    Ok(ForestModel {
        params: params.clone(),
        seed,
        schema: ds.schema().clone(),
        trees,
    })
}

impl ForestModel {
    /// Unclamped mean of per-tree leaf probabilities for one record.
    pub fn mean_leaf_probability(&self, row: &[u32]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Result<Probabilities> {
        check_schema(&self.schema, ds)?;
        let raw = (0..ds.n_records())
            .map(|i| self.mean_leaf_probability(ds.row(i)))
            .collect();
        Probabilities::clamped(raw)
    }
}
