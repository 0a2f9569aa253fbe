use serde::{Deserialize, Serialize};

use super::tree::{SplitRule, Tree, TreeBuilder};
use super::{check_schema, check_trainable, logit, sigmoid, Probabilities};
use crate::error::{Error, Result};
use crate::seed;
use crate::tabular::{AttributeSchema, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// L2 penalty on leaf values; 0 disables it.
    pub lambda: f64,
    /// Attributes tried per split; `None` uses all of them.
    pub features_per_split: Option<usize>,
    /// Initial log-odds. `None` starts from the training prior.
    pub base_score: Option<f64>,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_leaf: 5,
            lambda: 0.0,
            features_per_split: None,
            base_score: None,
        }
    }
}

/// Stage-wise logistic boosting. Trees hold learning-rate-scaled log-odds
/// contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    pub seed: u64,
    pub schema: AttributeSchema,
    #[serde(with = "crate::decimal")]
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean logistic loss on the training set before round 1 and after each round.
    #[serde(with = "crate::decimal::vec")]
    pub train_loss: Vec<f64>,
}

fn log_loss(labels: &[u8], scores: &[f64]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(scores)
        .map(|(&y, &f)| {
            // log(1 + e^f) − y·f, computed stably
            let softplus = if f > 0.0 {
                f + (-f).exp().ln_1p()
            } else {
                f.exp().ln_1p()
            };
            softplus - f64::from(y) * f
        })
        .sum();
    total / labels.len() as f64
}

pub fn fit_gbt(ds: &Dataset, params: &GbtParams, seed: u64) -> Result<GbtModel> {
    check_trainable(ds)?;
    if params.n_rounds == 0 {
        return Err(Error::Argument("n_rounds must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::Argument("learning_rate must be positive".into()));
    }
    let n = ds.n_records();
    let labels = ds.labels();
    let prior = ds.positives() as f64 / n as f64;
    let base_score = params.base_score.unwrap_or_else(|| logit(prior));
    let mut scores = vec![base_score; n];
    let mut train_loss = vec![log_loss(labels, &scores)];
    let ones = vec![1.0; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut rng = seed::substream(seed, "gbt", 0);
    let mut trees = Vec::with_capacity(params.n_rounds);

    for round in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            g[i] = f64::from(labels[i]) - p;
            h[i] = p * (1.0 - p);
        }
        let mut tree = TreeBuilder {
            ds,
            g: &g,
            h: &h,
            w: &ones,
            rule: SplitRule::Newton {
                lambda: params.lambda,
            },
            max_depth: params.max_depth,
            min_leaf: params.min_leaf.max(1) as f64,
            features_per_split: params.features_per_split,
        }
        .build((0..n).collect(), &mut rng);
        tree.scale_leaves(params.learning_rate);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += tree.predict_row(ds.row(i));
        }
        let loss = log_loss(labels, &scores);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite training loss at round {round}")));
        }
        train_loss.push(loss);
        trees.push(tree);
    }

    Ok(GbtModel {
        params: params.clone(),
        seed,
        schema: ds.schema().clone(),
        base_score,
        trees,
        train_loss,
    })
}

impl GbtModel {
    pub fn raw_score(&self, row: &[u32]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Result<Probabilities> {
        check_schema(&self.schema, ds)?;
        let raw = (0..ds.n_records())
            .map(|i| sigmoid(self.raw_score(ds.row(i))))
            .collect();
        Probabilities::clamped(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Attribute;

    fn fixture() -> Dataset {
        let schema = AttributeSchema::new(
            vec![Attribute::new("a", &["0", "1", "2"])],
            "y",
            ["0".into(), "1".into()],
        )
        .unwrap();
        let rows = (0..30).map(|i| vec![(i % 3) as u32]).collect();
        let labels = (0..30).map(|i| u8::from(i % 3 == 0 || i % 5 == 0)).collect();
        Dataset::new(schema, rows, labels).unwrap()
    }

    #[test]
    fn empty_model_predicts_one_half() {
        let ds = fixture();
        let model = GbtModel {
            params: GbtParams::default(),
            seed: 0,
            schema: ds.schema().clone(),
            base_score: 0.0,
            trees: vec![],
            train_loss: vec![],
        };
        let p = model.predict_proba(&ds).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn depth_zero_round_is_one_newton_step() {
        let ds = fixture();
        let n = ds.n_records() as f64;
        let ybar = ds.positives() as f64 / n;
        let params = GbtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            max_depth: 0,
            base_score: Some(0.0),
            ..GbtParams::default()
        };
        let model = fit_gbt(&ds, &params, 0).unwrap();
        // at p = 1/2: step = Σ(y − 1/2) / Σ(1/4) = 4(ȳ − 1/2)
        let expected = 1.0 / (1.0 + (-4.0 * (ybar - 0.5)).exp());
        for p in model.predict_proba(&ds).unwrap().values() {
            assert!((p - expected).abs() < 1e-12);
        }

        // starting from the prior the Newton step is zero
        let prior = fit_gbt(
            &ds,
            &GbtParams {
                base_score: None,
                ..params
            },
            0,
        )
        .unwrap();
        for p in prior.predict_proba(&ds).unwrap().values() {
            assert!((p - ybar).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let ds = fixture();
        let zero = GbtParams {
            n_rounds: 0,
            ..GbtParams::default()
        };
        assert!(fit_gbt(&ds, &zero, 0).is_err());
        let lr = GbtParams {
            learning_rate: 0.0,
            ..GbtParams::default()
        };
        assert!(fit_gbt(&ds, &lr, 0).is_err());
    }
}
