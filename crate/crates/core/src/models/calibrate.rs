use serde::{Deserialize, Serialize};

use super::{logit, sigmoid, Probabilities};
use crate::error::{Error, Result};
use crate::tabular::Fold;

/// `p ↦ σ(a·logit(p) + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaler {
    #[serde(with = "crate::decimal")]
    pub a: f64,
    #[serde(with = "crate::decimal")]
    pub b: f64,
}

impl PlattScaler {
    pub const IDENTITY: PlattScaler = PlattScaler { a: 1.0, b: 0.0 };

    /// Maximum-likelihood fit of the two sigmoid parameters by damped Newton.
    pub fn fit(probs: &[f64], labels: &[u8]) -> Result<PlattScaler> {
        if probs.len() != labels.len() {
            return Err(Error::Argument("probabilities and labels differ in length".into()));
        }
        let pos = labels.iter().filter(|&&y| y == 1).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::Undefined("calibration needs both classes".into()));
        }
        let xs: Vec<f64> = probs.iter().map(|&p| logit(p)).collect();
        let loss = |a: f64, b: f64| -> f64 {
            xs.iter()
                .zip(labels)
                .map(|(&x, &y)| {
                    let z = a * x + b;
                    let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                    sp - f64::from(y) * z
                })
                .sum()
        };

        let (mut a, mut b) = (1.0, 0.0);
        let mut current = loss(a, b);
        for _ in 0..100 {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&x, &y) in xs.iter().zip(labels) {
                let p = sigmoid(a * x + b);
                let r = p - f64::from(y);
                let w = p * (1.0 - p);
                ga += r * x;
                gb += r;
                haa += w * x * x;
                hab += w * x;
                hbb += w;
            }
            let ridge = 1e-10 * (1.0 + haa + hbb);
            haa += ridge;
            hbb += ridge;
            let det = haa * hbb - hab * hab;
            if det <= 0.0 || !det.is_finite() {
                break;
            }
            let da = (hbb * ga - hab * gb) / det;
            let db = (haa * gb - hab * ga) / det;
            let mut step = 1.0;
            let mut improved = false;
            while step > 1e-8 {
                let (na, nb) = (a - step * da, b - step * db);
                let l = loss(na, nb);
                if l <= current {
                    a = na;
                    b = nb;
                    improved = current - l > 1e-14 * current.abs().max(1.0);
                    current = l;
                    break;
                }
                step /= 2.0;
            }
            if !improved || (da.abs() + db.abs()) * step < 1e-12 {
                break;
            }
        }
        Ok(PlattScaler { a, b })
    }

    pub fn apply(&self, p: f64) -> f64 {
        sigmoid(self.a * logit(p) + self.b)
    }

    pub fn transform(&self, probs: &Probabilities) -> Result<Probabilities> {
        Probabilities::clamped(probs.values().iter().map(|&p| self.apply(p)).collect())
    }
}

/// Cross-fitted calibration result.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub probs: Probabilities,
    pub per_fold: Vec<PlattScaler>,
    /// Set when some fold's training part had a single class and kept the
    /// identity map.
    pub fallback: bool,
}

/// For each fold, fit Platt scaling on the other folds' predictions and apply
/// it to the fold's own records.
pub fn calibrate_platt(raw: &Probabilities, labels: &[u8], folds: &[Fold]) -> Result<Calibration> {
    if raw.len() != labels.len() {
        return Err(Error::Argument("probabilities and labels differ in length".into()));
    }
    let mut out = raw.values().to_vec();
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut fallback = false;
    for fold in folds {
        let p: Vec<f64> = fold.train.iter().map(|&i| raw.values()[i]).collect();
        let y: Vec<u8> = fold.train.iter().map(|&i| labels[i]).collect();
        let scaler = match PlattScaler::fit(&p, &y) {
            Ok(s) => s,
            Err(Error::Undefined(_)) => {
                log::warn!("single-class calibration fold; using identity");
                fallback = true;
                PlattScaler::IDENTITY
            }
            Err(e) => return Err(e),
        };
        for &i in &fold.validation {
            out[i] = scaler.apply(raw.values()[i]);
        }
        per_fold.push(scaler);
    }
    Ok(Calibration {
        probs: Probabilities::clamped(out)?,
        per_fold,
        fallback,
    })
}
