//! Results must not depend on the number of worker threads.
#![cfg(feature = "parallel")]

mod common;

use rand::Rng;
use ugdp_core::biasscan::{bias_scan, ScanParams};
use ugdp_core::models::{cross_validate, ForestParams, GbtParams, ModelParams, Probabilities};
use ugdp_core::seed;
use ugdp_core::synth::{generate_samples, SampleMode, VaeConfig};

fn on_one_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(f)
}

fn on_four_threads<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn scan_is_thread_count_invariant() {
    let ds = common::dataset(&[4, 3, 5], 2000, 1, |c| 0.2 + 0.1 * f64::from(c));
    let mut rng = seed::rng(2);
    let probs = Probabilities::clamped((0..2000).map(|_| rng.gen_range(0.1..0.5)).collect()).unwrap();
    let params = ScanParams {
        n_restarts: 6,
        ..ScanParams::default()
    };
    let a = on_one_thread(|| bias_scan(&ds, &probs, &params).unwrap());
    let b = on_four_threads(|| bias_scan(&ds, &probs, &params).unwrap());
    assert_eq!(a.subgroup, b.subgroup);
    assert_eq!(a.score.to_bits(), b.score.to_bits());
    assert_eq!(a.restarts, b.restarts);
}

#[test]
fn cross_validation_is_thread_count_invariant() {
    let ds = common::dataset(&[4, 3, 2], 600, 3, |c| 0.1 + 0.2 * f64::from(c));
    let grid = [
        ModelParams::RandomForest(ForestParams {
            n_trees: 10,
            max_depth: 3,
            ..ForestParams::default()
        }),
        ModelParams::Gbt(GbtParams {
            n_rounds: 10,
            max_depth: 2,
            ..GbtParams::default()
        }),
    ];
    let a = on_one_thread(|| cross_validate(&ds, &grid, 3, 4).unwrap());
    let b = on_four_threads(|| cross_validate(&ds, &grid, 3, 4).unwrap());
    assert_eq!(a, b);
}

#[test]
fn synthesis_is_thread_count_invariant() {
    let ds = common::dataset(&[3, 4], 150, 5, |c| 0.3 + 0.1 * f64::from(c));
    let cfg = VaeConfig {
        latent_vars: 3,
        latent_categories: 4,
        hidden_sizes: vec![8],
        epochs: 3,
        batch_size: 32,
        ..VaeConfig::default()
    };
    let a = on_one_thread(|| generate_samples(&ds, true, &cfg, 3, 6, SampleMode::RetrainPerSample).unwrap());
    let b = on_four_threads(|| generate_samples(&ds, true, &cfg, 3, 6, SampleMode::RetrainPerSample).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.dataset, y.dataset);
        assert_eq!(x.params, y.params);
    }
}
