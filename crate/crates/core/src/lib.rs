//! Subgroup-preserving tabular synthesis.
//!
//! The crate is organised around the stages of an anonymization audit:
//!
//! - [`tabular`]: categorical datasets, CSV ingestion, one-hot encoding, folds.
//! - [`models`]: random forest and gradient-boosted trees, AUC, Platt scaling.
//! - [`biasscan`]: the Bernoulli bias scan over axis-aligned subgroups.
//! - [`synth`]: a categorical (Gumbel-softmax) VAE trained with Adam.
//! - [`overlap`]: Jaccard distances between original and synthetic subgroups.
//!
//! With the default `parallel` feature, independent work (trees, restarts,
//! grid entries, synthetic runs) is spread over rayon's pool. Every result is
//! a pure function of its inputs and seeds, so turning the feature off changes
//! timing only.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biasscan;
pub mod decimal;
pub mod error;
pub mod models;
pub mod overlap;
pub mod par;
pub mod seed;
pub mod synth;
pub mod tabular;

pub use error::{Error, Result};
