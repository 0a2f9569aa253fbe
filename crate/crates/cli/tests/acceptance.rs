//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL|NOT RUN`
//! line; run with `--nocapture` to see them.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ugdp_cli::{Pipeline, PipelineConfig};
use ugdp_core::biasscan::{
    bias_scan, brute_force_scan, expected_under_q, optimize_mode, optimize_q, Direction, ScanParams,
    Subgroup, DEFAULT_Q_CAP,
};
use ugdp_core::models::{auc, Probabilities};
use ugdp_core::overlap::jaccard_distance;
use ugdp_core::synth::{adam_update, init_params, train_vae, vae_loss, VaeConfig, VaeParams};
use ugdp_core::tabular::{one_hot, Attribute, AttributeSchema, Dataset};

fn report(n: u32, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {status} ({detail})");
    assert!(pass, "criterion {n} failed: {detail}");
}

fn schema(cards: &[usize]) -> AttributeSchema {
    let attrs = cards
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let names: Vec<String> = (0..k).map(|v| format!("v{v}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Attribute::new(format!("a{j}"), &refs)
        })
        .collect();
    AttributeSchema::new(attrs, "y", ["0".into(), "1".into()]).unwrap()
}

/// Random codes, random predictions, labels at a random base rate.
fn instance(rng: &mut ChaCha8Rng, cards: &[usize], n: usize) -> (Dataset, Probabilities) {
    let rate: f64 = rng.gen_range(0.1..0.9);
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect())
        .collect();
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(rate))).collect();
    let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.999)).collect();
    (
        Dataset::new(schema(cards), rows, labels).unwrap(),
        Probabilities::clamped(probs).unwrap(),
    )
}

#[test]
fn criterion_1_ltss_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut matched = 0;
    let trials = 200;
    for _ in 0..trials {
        let k = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=500);
        let direction = if rng.gen_bool(0.5) { Direction::Over } else { Direction::Under };
        let (ds, probs) = instance(&mut rng, &[k], n);
        let full = Subgroup::full(ds.schema());
        let fast = optimize_mode(&ds, &probs, &full, 0, direction, DEFAULT_Q_CAP).unwrap();

        let mut best: f64 = 0.0;
        for mask in 1u32..(1 << k) {
            let members: Vec<usize> = (0..n).filter(|&i| mask >> ds.value(i, 0) & 1 == 1).collect();
            let y: Vec<u8> = members.iter().map(|&i| ds.label(i)).collect();
            let p: Vec<f64> = members.iter().map(|&i| probs.values()[i]).collect();
            best = best.max(optimize_q(&y, &p, direction, DEFAULT_Q_CAP).unwrap().score);
        }
        if (fast.score - best).abs() <= 1e-9 * best.abs().max(1.0) {
            matched += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        matched == trials && secs < 10.0,
        format!("{matched}/{trials} exact, {secs:.2} s"),
    );
}

#[test]
fn criterion_2_global_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let trials = 100;
    let mut matched = 0;
    for t in 0..trials {
        let m = rng.gen_range(1..=3);
        let cards: Vec<usize> = (0..m).map(|_| rng.gen_range(2..=3)).collect();
        let n = rng.gen_range(20..=200);
        let (ds, probs) = instance(&mut rng, &cards, n);
        let params = ScanParams {
            n_restarts: 20,
            seed: t,
            ..ScanParams::default()
        };
        let scan = bias_scan(&ds, &probs, &params).unwrap();
        let brute = brute_force_scan(&ds, &probs, params.direction, params.q_cap).unwrap();
        if (scan.score - brute.score).abs() <= 1e-9 * brute.score.abs().max(1.0) {
            matched += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        matched >= 95 && secs < 60.0,
        format!("{matched}/{trials} match brute force, {secs:.2} s"),
    );
}

#[test]
fn criterion_3_q_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut interior = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..300);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
        let y: Vec<u8> = p.iter().map(|&pi| u8::from(rng.gen::<f64>() < (pi * 1.8).min(0.99))).collect();
        let y_sum = y.iter().map(|&v| f64::from(v)).sum::<f64>();
        let fit = optimize_q(&y, &p, Direction::Over, DEFAULT_Q_CAP).unwrap();
        if fit.q > 1.0 && fit.q < DEFAULT_Q_CAP {
            interior += 1;
            let gap = (expected_under_q(&p, fit.q) - y_sum).abs() / n as f64;
            worst = worst.max(gap);
        }
    }
    let p = [0.2, 0.7, 0.4];
    let none = optimize_q(&[0, 0, 0], &p, Direction::Over, DEFAULT_Q_CAP).unwrap();
    let all = optimize_q(&[1, 1, 1], &p, Direction::Over, DEFAULT_Q_CAP).unwrap();
    let limit = -p.iter().map(|v: &f64| v.ln()).sum::<f64>();
    let boundary_ok = none.score == 0.0 && (all.score - limit).abs() < 1e-12;
    report(
        3,
        worst < 1e-8 && interior > 50 && boundary_ok,
        format!("{interior} interior fits, worst gap/|S| {worst:.2e}, boundary cases {boundary_ok}"),
    );
}

fn max_gradient_error(params: &VaeParams, batch: &Array2<f64>, noise: &Array2<f64>) -> f64 {
    let tau = 0.5;
    let analytic = vae_loss(params, batch.view(), tau, noise.view()).unwrap().grads;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (t, g) in analytic.tensors().iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= h;
            let fp = vae_loss(&plus, batch.view(), tau, noise.view()).unwrap().total;
            let fm = vae_loss(&minus, batch.view(), tau, noise.view()).unwrap().total;
            let numeric = (fp - fm) / (2.0 * h);
            worst = worst.max((numeric - g[i]).abs() / (numeric.abs() + g[i].abs()).max(1e-6));
        }
    }
    worst
}

#[test]
fn criterion_4_vae_gradients_and_adam() {
    let cfg = VaeConfig {
        latent_vars: 2,
        latent_categories: 3,
        hidden_sizes: vec![5],
        seed: 4,
        ..VaeConfig::default()
    };
    let blocks = vec![3, 2, 2];
    let params = init_params(blocks.clone(), &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut batch = Array2::zeros((4, 7));
    for i in 0..4 {
        let mut off = 0;
        for &k in &blocks {
            batch[[i, off + rng.gen_range(0..k)]] = 1.0;
            off += k;
        }
    }
    let noise = Array2::from_shape_simple_fn((4, 6), || rng.gen_range(0.01..0.99));
    let err = max_gradient_error(&params, &batch, &noise);

    let mut theta = [0.0];
    let (mut m, mut v) = ([0.0], [0.0]);
    adam_update(&mut theta, &[1.0], &mut m, &mut v, 1, 1e-3, 0.9, 0.999, 1e-8);
    let adam_gap = (theta[0] + 0.000999999990).abs();
    report(
        4,
        err < 1e-4 && adam_gap < 1e-12,
        format!("max relative gradient error {err:.2e}, Adam step {:.12}", theta[0]),
    );
}

fn fixture_200() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cards = [4, 3, 2, 5];
    let rows: Vec<Vec<u32>> = (0..200)
        .map(|_| {
            let a = rng.gen_range(0..4u32);
            let b = if rng.gen_bool(0.8) { a % 3 } else { rng.gen_range(0..3) };
            vec![a, b, rng.gen_range(0..2), rng.gen_range(0..5)]
        })
        .collect();
    let labels = rows.iter().map(|r| u8::from(r[0] == 1 || rng.gen_bool(0.2))).collect();
    Dataset::new(schema(&cards), rows, labels).unwrap()
}

#[test]
fn criterion_5_loss_sanity() {
    let cfg = VaeConfig {
        latent_vars: 5,
        latent_categories: 5,
        hidden_sizes: vec![32],
        learning_rate: 1e-2,
        epochs: 40,
        batch_size: 32,
        seed: 5,
        ..VaeConfig::default()
    };
    let (_, losses) = train_vae(&fixture_200(), true, &cfg).unwrap();
    let e = &losses.epochs;
    let first = e[..5].iter().map(|x| x.total).sum::<f64>() / 5.0;
    let last = e[e.len() - 5..].iter().map(|x| x.total).sum::<f64>() / 5.0;
    let min_kl = e.iter().map(|x| x.kl).fold(f64::INFINITY, f64::min);
    report(
        5,
        last < first && min_kl >= -1e-12,
        format!("first-5 mean {first:.4}, last-5 mean {last:.4}, min KL {min_kl:.2e}"),
    );
}

const BANK_ENV: &str = "UGDP_BANK_CSV";

/// Full Bank pipeline with the shipped config, reading the CSV from `$UGDP_BANK_CSV`.
fn bank_report() -> Option<ugdp_cli::RunReport> {
    let csv = std::env::var(BANK_ENV).ok()?;
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bank.json");
    let mut cfg = PipelineConfig::load(std::path::Path::new(config)).unwrap();
    cfg.data.path = csv.into();
    cfg.out_dir = tempfile::tempdir().unwrap().keep();
    Some(Pipeline::new(cfg).unwrap().run_all().unwrap())
}

#[test]
fn criteria_6_7_data_availability() {
    if std::env::var(BANK_ENV).is_err() {
        for n in [6, 7] {
            println!("criterion {n}: NOT RUN (set {BANK_ENV} to bank-additional-full.csv and run with --ignored)");
        }
    }
}

#[test]
#[ignore = "needs the Bank Marketing CSV in UGDP_BANK_CSV; takes minutes"]
fn criteria_6_7_bank_reproduction() {
    let start = Instant::now();
    let r = bank_report().expect("UGDP_BANK_CSV is not set");
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let original = &r.auc[0];
    let aucs: Vec<f64> = original.models.iter().map(|c| c.auc).collect();
    report(
        6,
        aucs.iter().all(|&a| a >= 0.80) && minutes < 30.0,
        format!("original AUC {aucs:?}, {} records, {minutes:.1} min", r.dataset.records),
    );
    let cells: Vec<_> = r.overlap.iter().flat_map(|row| row.models.iter()).collect();
    let records_ok = cells.iter().all(|c| c.records.distance >= 0.90);
    let in_band = cells
        .iter()
        .filter(|c| (0.30..=0.75).contains(&c.attribute_values.distance))
        .count();
    report(
        7,
        records_ok && in_band >= 10 && cells.len() == 12,
        format!("record distances all >= 0.90: {records_ok}, attribute distances in band: {in_band}/{}", cells.len()),
    );
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::setup(dir.path(), 800, 2, 3);
    let cfg = cfg.to_str().unwrap();
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = common::ugdp(&["run-all", "--config", cfg, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    report(
        8,
        reports[0] == reports[1],
        format!("two run-all reports of {} bytes compared", reports[0].len()),
    );
}

#[test]
fn criterion_9_unit_examples() {
    let auc_case = auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap() == 0.75;
    let set = |s: &[&str]| s.iter().map(|v| v.to_string()).collect::<BTreeSet<_>>();
    let j1 = jaccard_distance(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])) == 0.5;
    let j2 = jaccard_distance(&set(&["1", "2", "3", "4", "5"]), &set(&["1", "2", "6", "7", "8"])) == 0.75;
    let j3 = jaccard_distance(
        &set(&["job=student", "month=may"]),
        &set(&["month=may", "loan=no"]),
    ) == 1.0 - 1.0 / 3.0;
    let ds = fixture_200();
    let enc = one_hot(&ds, true);
    let back = enc.decode(ds.schema()).unwrap();
    let round_trip = (0..ds.n_records()).all(|i| back.row(i) == ds.row(i)) && back.labels() == ds.labels();
    report(
        9,
        auc_case && j1 && j2 && j3 && round_trip,
        format!("AUC 0.75 {auc_case}, Jaccard 0.5 {j1}, 0.75 {j2}, 2/3 {j3}, one-hot {round_trip}"),
    );
}
