//! Categorical VAE: MLP encoder to `N×K` latent logits, Gumbel-softmax
//! relaxation, MLP decoder to blockwise softmax over one-hot attributes.
//!
//! Hidden layers use ReLU. Loss per batch is the mean over records of
//! blockwise cross-entropy plus the KL divergence of each latent's posterior
//! from the uniform categorical prior, `Σₖ q log q + log K`.

use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::VaeConfig;
use crate::error::{Error, Result};
use crate::seed;

/// Affine layer `x ↦ x·W + b` with `W` stored input-major (`in × out`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        Self {
            w: Array2::from_shape_fn((inputs, outputs), |_| dist.sample(rng)),
            b: Array1::zeros(outputs),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.w.dim()
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// Encoder and decoder weights plus the latent layout and output blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    pub latent_vars: usize,
    pub latent_categories: usize,
    /// Cardinalities of the decoder's softmax blocks, in column order.
    pub blocks: Vec<usize>,
}

impl VaeParams {
    pub fn input_width(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn latent_width(&self) -> usize {
        self.latent_vars * self.latent_categories
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoder.iter().chain(&self.decoder)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    /// Flat views of every tensor, weights then bias per layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| {
                [
                    l.w.as_slice().expect("standard layout"),
                    l.b.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| {
                [
                    l.w.as_slice_mut().expect("standard layout"),
                    l.b.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn zeros_like(&self) -> Self {
        let z = |ls: &[Dense]| -> Vec<Dense> {
            ls.iter().map(|l| Dense::zeros(l.w.nrows(), l.w.ncols())).collect()
        };
        Self {
            encoder: z(&self.encoder),
            decoder: z(&self.decoder),
            latent_vars: self.latent_vars,
            latent_categories: self.latent_categories,
            blocks: self.blocks.clone(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.encoder.len() == other.encoder.len()
            && self.decoder.len() == other.decoder.len()
            && self
                .layers()
                .zip(other.layers())
                .all(|(a, b)| a.shape() == b.shape())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn n_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Glorot-uniform weights and zero biases for the given output blocks.
pub fn init_params(blocks: Vec<usize>, config: &VaeConfig) -> Result<VaeParams> {
    config.validate()?;
    let d: usize = blocks.iter().sum();
    if d == 0 || blocks.contains(&0) {
        return Err(Error::Config("input width must be positive".into()));
    }
    let latent = config.latent_vars * config.latent_categories;
    let mut rng = seed::substream(config.seed, "vae_init", 0);

    let mut widths = vec![d];
    widths.extend(&config.hidden_sizes);
    widths.push(latent);
    let encoder = widths
        .windows(2)
        .map(|w| Dense::glorot(w[0], w[1], &mut rng))
        .collect();

    let mut widths = vec![latent];
    widths.extend(config.hidden_sizes.iter().rev());
    widths.push(d);
    let decoder = widths
        .windows(2)
        .map(|w| Dense::glorot(w[0], w[1], &mut rng))
        .collect();

    Ok(VaeParams {
        encoder,
        decoder,
        latent_vars: config.latent_vars,
        latent_categories: config.latent_categories,
        blocks,
    })
}

/// Softmax over consecutive column blocks of each row, in place.
fn block_softmax_inplace(x: &mut Array2<f64>, blocks: &[usize]) {
    for mut row in x.rows_mut() {
        let mut off = 0;
        for &size in blocks {
            softmax_inplace(row.slice_mut(s![off..off + size]));
            off += size;
        }
    }
}

fn softmax_inplace(mut v: ArrayViewMut1<f64>) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.mapv_inplace(|x| (x - max).exp());
    let sum = v.sum();
    v.mapv_inplace(|x| x / sum);
}

/// Log-softmax over column blocks.
fn block_log_softmax(x: &Array2<f64>, blocks: &[usize]) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let mut off = 0;
        for &size in blocks {
            let mut seg = row.slice_mut(s![off..off + size]);
            let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + seg.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            seg.mapv_inplace(|v| v - lse);
            off += size;
        }
    }
    out
}

/// Standard Gumbel noise from uniforms in (0, 1).
fn gumbel(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// Relaxed one-hot sample: rowwise `softmax((logits + g)/τ)` with
/// `g = −log(−log u)` from the supplied uniforms. Rows have `K` columns.
pub fn gumbel_softmax(logits: ArrayView2<f64>, temperature: f64, uniforms: ArrayView2<f64>) -> Result<Array2<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Argument("temperature must be positive".into()));
    }
    if logits.dim() != uniforms.dim() {
        return Err(Error::Argument("logits and noise differ in shape".into()));
    }
    let mut y = Array2::from_shape_fn(logits.dim(), |(i, j)| {
        (logits[[i, j]] + gumbel(uniforms[[i, j]])) / temperature
    });
    for row in y.rows_mut() {
        softmax_inplace(row);
    }
    Ok(y)
}

/// Loss terms and parameter gradients for one batch.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    pub grads: VaeParams,
}

struct MlpTrace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

/// ReLU between layers, identity after the last.
fn mlp_forward(layers: &[Dense], x: Array2<f64>) -> (Array2<f64>, MlpTrace) {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut h = x;
    for (l, layer) in layers.iter().enumerate() {
        let a = layer.forward(&h);
        inputs.push(h);
        h = if l + 1 < layers.len() {
            a.mapv(|v| v.max(0.0))
        } else {
            a.clone()
        };
        pre.push(a);
    }
    (h, MlpTrace { inputs, pre })
}

/// Backpropagate `d_out` (gradient w.r.t. the last pre-activation) and return
/// the gradient w.r.t. the MLP input.
fn mlp_backward(layers: &[Dense], trace: &MlpTrace, d_out: Array2<f64>, grads: &mut [Dense]) -> Array2<f64> {
    let mut d = d_out;
    for l in (0..layers.len()).rev() {
        grads[l].w = trace.inputs[l].t().dot(&d);
        grads[l].b = d.sum_axis(Axis(0));
        let mut dh = d.dot(&layers[l].w.t());
        if l > 0 {
            dh.zip_mut_with(&trace.pre[l - 1], |g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        d = dh;
    }
    d
}

/// Forward and backward pass over one batch of one-hot rows.
///
/// `uniforms` supplies the Gumbel noise, one row per record and `N·K` columns.
pub fn vae_loss(params: &VaeParams, batch: ArrayView2<f64>, temperature: f64, uniforms: ArrayView2<f64>) -> Result<LossOutput> {
    let b = batch.nrows();
    if b == 0 {
        return Err(Error::Argument("empty batch".into()));
    }
    if batch.ncols() != params.input_width() {
        return Err(Error::Argument(format!(
            "batch width {} does not match model width {}",
            batch.ncols(),
            params.input_width()
        )));
    }
    let (n_lat, k_lat) = (params.latent_vars, params.latent_categories);
    if uniforms.dim() != (b, n_lat * k_lat) {
        return Err(Error::Argument("noise shape does not match batch × latent width".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::Argument("temperature must be positive".into()));
    }
    let bf = b as f64;
    let latent_blocks = vec![k_lat; n_lat];

    let (logits, enc_trace) = mlp_forward(&params.encoder, batch.to_owned());
    let log_q = block_log_softmax(&logits, &latent_blocks);
    let q = log_q.mapv(f64::exp);

    let mut z = Array2::from_shape_fn(logits.dim(), |(i, j)| {
        (logits[[i, j]] + gumbel(uniforms[[i, j]])) / temperature
    });
    block_softmax_inplace(&mut z, &latent_blocks);

    let (out, dec_trace) = mlp_forward(&params.decoder, z.clone());
    let log_p = block_log_softmax(&out, &params.blocks);

    let recon = -(&log_p * &batch).sum() / bf;
    let kl = ((&q * &log_q).sum() + bf * n_lat as f64 * (k_lat as f64).ln()) / bf;
    let total = recon + kl;
    if !total.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss (recon {recon}, kl {kl})")));
    }

    let mut grads = params.zeros_like();

    // decoder: d(recon)/d(out) = (softmax − target)/B per block
    let d_out = (log_p.mapv(f64::exp) - batch) / bf;
    let dz = mlp_backward(&params.decoder, &dec_trace, d_out, &mut grads.decoder);

    // through the relaxed sample: dy = z ⊙ (dz − Σ z·dz) / τ, per latent block
    let mut d_logits = Array2::<f64>::zeros(logits.dim());
    for i in 0..b {
        for n in 0..n_lat {
            let cols = n * k_lat..(n + 1) * k_lat;
            let zs = z.slice(s![i, cols.clone()]);
            let dzs = dz.slice(s![i, cols.clone()]);
            let inner: f64 = zs.iter().zip(dzs.iter()).map(|(a, b)| a * b).sum();
            let qs = q.slice(s![i, cols.clone()]);
            let lqs = log_q.slice(s![i, cols.clone()]);
            let entropy_term: f64 = qs.iter().zip(lqs.iter()).map(|(a, b)| a * b).sum();
            for (c, col) in cols.enumerate() {
                let from_sample = zs[c] * (dzs[c] - inner) / temperature;
                let from_kl = qs[c] * (lqs[c] - entropy_term) / bf;
                d_logits[[i, col]] = from_sample + from_kl;
            }
        }
    }
    mlp_backward(&params.encoder, &enc_trace, d_logits, &mut grads.encoder);

    Ok(LossOutput {
        total,
        recon,
        kl,
        grads,
    })
}

/// Decoder probabilities for exact one-hot latent codes, one row per record.
pub fn decode_probabilities(params: &VaeParams, latent_codes: &[Vec<usize>]) -> Array2<f64> {
    let (n_lat, k_lat) = (params.latent_vars, params.latent_categories);
    let mut z = Array2::<f64>::zeros((latent_codes.len(), n_lat * k_lat));
    for (i, codes) in latent_codes.iter().enumerate() {
        for (n, &k) in codes.iter().enumerate() {
            z[[i, n * k_lat + k]] = 1.0;
        }
    }
    let (mut out, _) = mlp_forward(&params.decoder, z);
    block_softmax_inplace(&mut out, &params.blocks);
    out
}

#[derive(Serialize, Deserialize)]
struct DenseRecord {
    rows: usize,
    cols: usize,
    #[serde(with = "crate::decimal::vec")]
    weights: Vec<f64>,
    #[serde(with = "crate::decimal::vec")]
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VaeRecord {
    latent_vars: usize,
    latent_categories: usize,
    blocks: Vec<usize>,
    encoder: Vec<DenseRecord>,
    decoder: Vec<DenseRecord>,
}

impl VaeParams {
    pub fn to_json(&self) -> Result<String> {
        let rec = |ls: &[Dense]| -> Vec<DenseRecord> {
            ls.iter()
                .map(|l| DenseRecord {
                    rows: l.w.nrows(),
                    cols: l.w.ncols(),
                    weights: l.w.iter().copied().collect(),
                    bias: l.b.to_vec(),
                })
                .collect()
        };
        Ok(serde_json::to_string(&VaeRecord {
            latent_vars: self.latent_vars,
            latent_categories: self.latent_categories,
            blocks: self.blocks.clone(),
            encoder: rec(&self.encoder),
            decoder: rec(&self.decoder),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: VaeRecord = serde_json::from_str(text)?;
        let layers = |rs: Vec<DenseRecord>| -> Result<Vec<Dense>> {
            rs.into_iter()
                .map(|d| {
                    if d.bias.len() != d.cols {
                        return Err(Error::Schema("bias length does not match layer width".into()));
                    }
                    let w = Array2::from_shape_vec((d.rows, d.cols), d.weights)
                        .map_err(|e| Error::Schema(format!("bad weight shape: {e}")))?;
                    Ok(Dense {
                        w,
                        b: Array1::from(d.bias),
                    })
                })
                .collect()
        };
        Ok(Self {
            encoder: layers(r.encoder)?,
            decoder: layers(r.decoder)?,
            latent_vars: r.latent_vars,
            latent_categories: r.latent_categories,
            blocks: r.blocks,
        })
    }
}
