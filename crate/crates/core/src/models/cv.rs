use serde::{Deserialize, Serialize};

use super::{auc, fit, ModelParams, Probabilities};
use crate::error::{Error, Result};
use crate::par;
use crate::seed;
use crate::tabular::{k_fold_indices, Dataset, Fold};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub params: ModelParams,
    #[serde(with = "crate::decimal::vec")]
    pub fold_auc: Vec<f64>,
    #[serde(with = "crate::decimal")]
    pub mean_auc: f64,
}

/// Grid-search result. `oof` holds the best entry's out-of-fold predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: ModelParams,
    pub best_index: usize,
    pub mean_auc: f64,
    pub entries: Vec<CvEntry>,
    pub folds: Vec<Fold>,
    pub oof: Probabilities,
}

/// Exhaustive grid search maximizing mean out-of-fold AUC. Equal means go to
/// the smaller model (fewer trees, then shallower), then to the earlier entry.
pub fn cross_validate(ds: &Dataset, grid: &[ModelParams], k: usize, seed: u64) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::Argument("empty hyperparameter grid".into()));
    }
    let folds = k_fold_indices(ds.n_records(), k, seed::derive(seed, "cv_folds", 0))?;
    let jobs = grid.len() * k;
    let results: Vec<Result<(f64, Vec<f64>)>> = par::map_indices(jobs, |job| {
        let (entry, f) = (job / k, job % k);
        let fold = &folds[f];
        let train = ds.subset(&fold.train);
        let valid = ds.subset(&fold.validation);
        let model = fit(&train, &grid[entry], seed::derive(seed, "cv_model", f as u64))
            .map_err(|e| Error::Training(format!("grid entry {entry}, fold {f}: {e}")))?;
        let p = model.predict_proba(&valid)?.into_inner();
        let a = auc(&p, valid.labels())
            .map_err(|e| Error::Training(format!("grid entry {entry}, fold {f}: {e}")))?;
        Ok((a, p))
    });

    let mut entries = Vec::with_capacity(grid.len());
    let mut oof_by_entry = Vec::with_capacity(grid.len());
    let mut results = results.into_iter();
    for params in grid {
        let mut fold_auc = Vec::with_capacity(k);
        let mut oof = vec![0.0; ds.n_records()];
        for fold in &folds {
            let (a, p) = results.next().expect("one result per job")?;
            fold_auc.push(a);
            for (&i, v) in fold.validation.iter().zip(p) {
                oof[i] = v;
            }
        }
        let mean_auc = fold_auc.iter().sum::<f64>() / k as f64;
        entries.push(CvEntry {
            params: params.clone(),
            fold_auc,
            mean_auc,
        });
        oof_by_entry.push(oof);
    }

    let mut best_index = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        let b = &entries[best_index];
        let better = e.mean_auc > b.mean_auc
            || (e.mean_auc == b.mean_auc && e.params.size_key() < b.params.size_key());
        if better {
            best_index = i;
        }
    }
    let oof = Probabilities::clamped(oof_by_entry.swap_remove(best_index))?;
    Ok(CvOutcome {
        best: entries[best_index].params.clone(),
        best_index,
        mean_auc: entries[best_index].mean_auc,
        entries,
        folds,
        oof,
    })
}
