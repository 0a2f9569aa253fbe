//! Synthetic records from a categorical VAE trained on one-hot data.

mod adam;
mod vae;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, adam_update, AdamState};
pub use vae::{decode_probabilities, gumbel_softmax, init_params, vae_loss, Dense, LossOutput, VaeParams};

use crate::error::{Error, Result};
use crate::tabular::{one_hot, Dataset};
use crate::{par, seed};

/// Exponential temperature decay, floored at `min_temperature`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anneal {
    pub min_temperature: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeConfig {
    /// Number of categorical latent variables.
    pub latent_vars: usize,
    /// Categories per latent variable.
    pub latent_categories: usize,
    pub hidden_sizes: Vec<usize>,
    pub temperature: f64,
    pub anneal: Option<Anneal>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            latent_vars: 20,
            latent_categories: 10,
            hidden_sizes: vec![128],
            temperature: 0.5,
            anneal: None,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 50,
            batch_size: 256,
            seed: 0,
        }
    }
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.latent_vars == 0 {
            return bad("latent_vars must be positive");
        }
        if self.latent_categories < 2 {
            return bad("latent_categories must be at least 2");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if let Some(a) = self.anneal {
            if !(a.min_temperature > 0.0) || !(a.rate >= 0.0) {
                return bad("anneal needs a positive floor and a non-negative rate");
            }
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }

    /// Temperature used during epoch `epoch` (0-based).
    pub fn temperature_at(&self, epoch: usize) -> f64 {
        match self.anneal {
            None => self.temperature,
            Some(a) => (self.temperature * (-a.rate * epoch as f64).exp()).max(a.min_temperature),
        }
    }
}

/// Record-weighted mean losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    #[serde(with = "crate::decimal")]
    pub temperature: f64,
    #[serde(with = "crate::decimal")]
    pub recon: f64,
    #[serde(with = "crate::decimal")]
    pub kl: f64,
    #[serde(with = "crate::decimal")]
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epochs: Vec<EpochLoss>,
}

impl LossReport {
    pub fn first(&self) -> Option<&EpochLoss> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }
}

/// Train on the one-hot encoding of `ds` (with the label block if requested).
pub fn train_vae(ds: &Dataset, include_label: bool, config: &VaeConfig) -> Result<(VaeParams, LossReport)> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    let x = one_hot(ds, include_label).data;
    let mut params = init_params(ds.schema().block_sizes(include_label), config)?;
    let mut state = AdamState::new(&params);
    let mut shuffle_rng = seed::substream(config.seed, "vae_shuffle", 0);
    let mut noise_rng = seed::substream(config.seed, "vae_noise", 0);
    let latent = params.latent_width();
    let n = ds.n_records();
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = LossReport::default();

    for epoch in 0..config.epochs {
        let tau = config.temperature_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let (mut recon, mut kl) = (0.0, 0.0);
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = x.select(Axis(0), chunk);
            let u = Array2::from_shape_simple_fn((chunk.len(), latent), || {
                noise_rng.sample::<f64, _>(rand::distributions::Open01)
            });
            let out = vae_loss(&params, batch.view(), tau, u.view())
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {bi}: {e}")))?;
            adam_step(&mut params, &out.grads, &mut state, config)?;
            if !params.is_finite() {
                return Err(Error::Numeric(format!(
                    "epoch {epoch}, batch {bi}: parameters became non-finite"
                )));
            }
            let w = chunk.len() as f64;
            recon += out.recon * w;
            kl += out.kl * w;
        }
        let (recon, kl) = (recon / n as f64, kl / n as f64);
        log::debug!("vae epoch {epoch}: recon {recon:.4} kl {kl:.4}");
        report.epochs.push(EpochLoss {
            epoch,
            temperature: tau,
            recon,
            kl,
            total: recon + kl,
        });
    }
    Ok((params, report))
}

/// Draw `n` records: uniform one-hot latent codes, decoded, then one category
/// sampled per block. Without a label block the labels are all 0.
pub fn sample_synthetic(
    params: &VaeParams,
    template: &Dataset,
    include_label: bool,
    n: usize,
    sample_seed: u64,
) -> Result<Dataset> {
    let schema = template.schema();
    if params.blocks != schema.block_sizes(include_label) {
        return Err(Error::Schema("model blocks do not match the dataset schema".into()));
    }
    let mut rng = seed::rng(sample_seed);
    let m = schema.n_attributes();
    let mut codes = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    const CHUNK: usize = 1024;
    let mut done = 0;
    while done < n {
        let size = CHUNK.min(n - done);
        let latent: Vec<Vec<usize>> = (0..size)
            .map(|_| {
                (0..params.latent_vars)
                    .map(|_| rng.gen_range(0..params.latent_categories))
                    .collect()
            })
            .collect();
        let probs = decode_probabilities(params, &latent);
        for row in probs.rows() {
            let mut off = 0;
            for (b, &size) in params.blocks.iter().enumerate() {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = size - 1;
                for k in 0..size {
                    acc += row[off + k];
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                if b < m {
                    codes.push(pick as u32);
                } else {
                    labels.push(pick as u8);
                }
                off += size;
            }
            if !include_label {
                labels.push(0);
            }
        }
        done += size;
    }
    Dataset::from_codes(schema.clone(), codes, labels)
}

/// How synthetic datasets relate to trained models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// A fresh model per synthetic dataset.
    #[default]
    RetrainPerSample,
    /// One model, many draws.
    TrainOnce,
}

/// One synthetic dataset and the loss history of the model that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub index: usize,
    pub train_seed: u64,
    pub sample_seed: u64,
    pub dataset: Dataset,
    pub params: VaeParams,
    pub loss: LossReport,
}

/// Training and sampling seeds of run `i` under `master`.
pub fn run_seeds(master: u64, i: usize, mode: SampleMode) -> (u64, u64) {
    let train_index = match mode {
        SampleMode::RetrainPerSample => i as u64,
        SampleMode::TrainOnce => 0,
    };
    (
        seed::derive(master, "vae_train", train_index),
        seed::derive(master, "vae_sample", i as u64),
    )
}

/// `count` synthetic datasets the size of `ds`. Runs are independent and
/// execute in parallel; `config.seed` is replaced by the derived seeds.
pub fn generate_samples(
    ds: &Dataset,
    include_label: bool,
    config: &VaeConfig,
    count: usize,
    master_seed: u64,
    mode: SampleMode,
) -> Result<Vec<SyntheticRun>> {
    if count == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    config.validate()?;
    let train = |i: usize| -> Result<(VaeParams, LossReport)> {
        let (train_seed, _) = run_seeds(master_seed, i, mode);
        let cfg = VaeConfig {
            seed: train_seed,
            ..config.clone()
        };
        train_vae(ds, include_label, &cfg).map_err(|e| tag(i, e))
    };
    let sample = |i: usize, params: VaeParams, loss: LossReport| -> Result<SyntheticRun> {
        let (train_seed, sample_seed) = run_seeds(master_seed, i, mode);
        let dataset = sample_synthetic(&params, ds, include_label, ds.n_records(), sample_seed)
            .map_err(|e| tag(i, e))?;
        Ok(SyntheticRun {
            index: i,
            train_seed,
            sample_seed,
            dataset,
            params,
            loss,
        })
    };
    match mode {
        SampleMode::RetrainPerSample => par::map_indices(count, |i| {
            let (params, loss) = train(i)?;
            sample(i, params, loss)
        })
        .into_iter()
        .collect(),
        SampleMode::TrainOnce => {
            let (params, loss) = train(0)?;
            par::map_indices(count, |i| sample(i, params.clone(), loss.clone()))
                .into_iter()
                .collect()
        }
    }
}

fn tag(i: usize, e: Error) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("synthetic sample {i}: {m}")),
        Error::Training(m) => Error::Training(format!("synthetic sample {i}: {m}")),
        other => other,
    }
}

/// Total-variation distance between per-attribute marginals of two datasets
/// with the same schema.
pub fn marginal_tv(a: &Dataset, b: &Dataset) -> Result<Vec<f64>> {
    if a.schema() != b.schema() {
        return Err(Error::Schema("marginals need identical schemas".into()));
    }
    let freq = |ds: &Dataset, j: usize, k: usize| -> Vec<f64> {
        let mut c = vec![0.0; k];
        for i in 0..ds.n_records() {
            c[ds.value(i, j) as usize] += 1.0;
        }
        let n = ds.n_records().max(1) as f64;
        c.iter().map(|v| v / n).collect()
    };
    Ok(a.schema()
        .cardinalities()
        .into_iter()
        .enumerate()
        .map(|(j, k)| {
            let (fa, fb) = (freq(a, j, k), freq(b, j, k));
            0.5 * fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).sum::<f64>()
        })
        .collect())
}
