//! Bias-scan checks against independent oracles: a golden-section q search and
//! exhaustive subset enumeration.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugdp_core::biasscan::{
    bias_scan, bias_score, brute_force_scan, expected_under_q, optimize_mode, optimize_q,
    subgroup_members, Direction, ScanParams, Subgroup, DEFAULT_Q_CAP,
};
use ugdp_core::models::Probabilities;
use ugdp_core::tabular::{Attribute, AttributeSchema, Dataset};

fn schema(cards: &[usize]) -> AttributeSchema {
    let attrs = cards
        .iter()
        .enumerate()
        .map(|(j, &k)| Attribute {
            name: format!("a{j}"),
            values: (0..k).map(|v| format!("v{v}")).collect(),
        })
        .collect();
    AttributeSchema::new(attrs, "y", ["0".into(), "1".into()]).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, cards: &[usize], n: usize) -> (Dataset, Probabilities) {
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect())
        .collect();
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
    let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.999)).collect();
    (
        Dataset::new(schema(cards), rows, labels).unwrap(),
        Probabilities::clamped(probs).unwrap(),
    )
}

/// Oracle score of one subset: golden-section search over log q on the
/// direction's interval, plus the analytic one-class limits.
fn oracle_subset_score(y: &[u8], p: &[f64], direction: Direction) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if direction == Direction::Over && pos == y.len() {
        return -p.iter().map(|v| v.ln()).sum::<f64>();
    }
    if direction == Direction::Under && pos == 0 {
        return -p.iter().map(|v| (1.0 - v).ln()).sum::<f64>();
    }
    let f = |t: f64| bias_score(y, p, t.exp()).unwrap();
    let cap = DEFAULT_Q_CAP.ln();
    let (mut a, mut b) = match direction {
        Direction::Over => (0.0, cap),
        Direction::Under => (-cap, 0.0),
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).max(0.0)
}

fn restricted(ds: &Dataset, current: &Subgroup, mode: usize, values: &[u32]) -> Vec<usize> {
    (0..ds.n_records())
        .filter(|&i| {
            (0..ds.n_attributes()).all(|j| {
                let v = ds.value(i, j);
                if j == mode {
                    values.contains(&v)
                } else {
                    current.contains(j, v)
                }
            })
        })
        .collect()
}

fn oracle_mode_best(
    ds: &Dataset,
    probs: &Probabilities,
    current: &Subgroup,
    mode: usize,
    direction: Direction,
) -> f64 {
    let k = ds.schema().cardinalities()[mode];
    let mut best = 0.0f64;
    for mask in 1u32..(1 << k) {
        let values: Vec<u32> = (0..k as u32).filter(|v| mask >> v & 1 == 1).collect();
        let idx = restricted(ds, current, mode, &values);
        let y: Vec<u8> = idx.iter().map(|&i| ds.label(i)).collect();
        let p: Vec<f64> = idx.iter().map(|&i| probs.values()[i]).collect();
        best = best.max(oracle_subset_score(&y, &p, direction));
    }
    best
}

#[test]
fn mode_optimum_matches_exhaustive_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..60 {
        let k = rng.gen_range(2..=6);
        let n = rng.gen_range(1..=150);
        let (ds, probs) = random_instance(&mut rng, &[k, 2], n);
        let current = Subgroup::new(ds.schema(), vec![(0..k as u32).collect(), vec![0]]).unwrap();
        for direction in [Direction::Over, Direction::Under] {
            let got = optimize_mode(&ds, &probs, &current, 0, direction, DEFAULT_Q_CAP).unwrap();
            let want = oracle_mode_best(&ds, &probs, &current, 0, direction);
            assert!(
                (got.score - want).abs() < 1e-9,
                "trial {trial} {direction}: prefix {} vs exhaustive {}",
                got.score,
                want
            );
        }
    }
}

#[test]
fn q_examples_confirmed_by_grid() {
    let y = [1, 1, 0];
    let p = [0.5, 0.5, 0.5];
    let fit = optimize_q(&y, &p, Direction::Over, DEFAULT_Q_CAP).unwrap();
    let grid_best = (0..=400_000)
        .map(|i| 1.0 + i as f64 * 1e-5)
        .map(|q| bias_score(&y, &p, q).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((fit.score - grid_best).abs() < 1e-9);

    // y = 1, p̂ = 1/2: the grid approaches log 2 from below
    let far = bias_score(&[1], &[0.5], 1e9).unwrap();
    let fit = optimize_q(&[1], &[0.5], Direction::Over, DEFAULT_Q_CAP).unwrap();
    assert!(far < fit.score && fit.score - far < 1e-8);
}

#[test]
fn planted_subgroup_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut p = Vec::new();
    for _ in 0..1800 {
        let a = rng.gen_range(0..3u32);
        let b = rng.gen_range(0..3u32);
        let (yp, pred) = if a == 0 && b == 1 { (0.9, 0.3) } else { (0.3, 0.3) };
        rows.push(vec![a, b]);
        labels.push(u8::from(rng.gen_bool(yp)));
        p.push(pred);
    }
    let ds = Dataset::new(schema(&[3, 3]), rows, labels).unwrap();
    let probs = Probabilities::clamped(p).unwrap();
    let params = ScanParams {
        n_restarts: 10,
        seed: 3,
        ..ScanParams::default()
    };
    let scan = bias_scan(&ds, &probs, &params).unwrap();
    assert_eq!(scan.subgroup.values(0), &[0]);
    assert_eq!(scan.subgroup.values(1), &[1]);

    let brute = brute_force_scan(&ds, &probs, Direction::Over, DEFAULT_Q_CAP).unwrap();
    assert_eq!(brute.subgroup, scan.subgroup);
    assert!((brute.score - scan.score).abs() < 1e-9);
    assert!((scan.rescore(&ds, &probs) - scan.score).abs() < 1e-9);
    assert_eq!(scan.member_indices, subgroup_members(&ds, &scan.subgroup));
}

#[test]
fn null_cells_score_zero_under_brute_force() {
    // p̂ equals each full cell's empirical rate
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cards = [2, 3];
    let rows: Vec<Vec<u32>> = (0..240)
        .map(|i| vec![(i % 2) as u32, ((i / 2) % 3) as u32])
        .collect();
    let labels: Vec<u8> = (0..240).map(|_| u8::from(rng.gen_bool(0.4))).collect();
    let mut rate = [[0.0f64; 3]; 2];
    let mut count = [[0.0f64; 3]; 2];
    for (r, &y) in rows.iter().zip(&labels) {
        rate[r[0] as usize][r[1] as usize] += f64::from(y);
        count[r[0] as usize][r[1] as usize] += 1.0;
    }
    let p: Vec<f64> = rows
        .iter()
        .map(|r| rate[r[0] as usize][r[1] as usize] / count[r[0] as usize][r[1] as usize])
        .collect();
    let ds = Dataset::new(schema(&cards), rows, labels).unwrap();
    let probs = Probabilities::clamped(p).unwrap();
    let brute = brute_force_scan(&ds, &probs, Direction::Over, DEFAULT_Q_CAP).unwrap();
    assert!(brute.score.abs() < 1e-9, "{}", brute.score);
}

#[test]
fn permutation_null_bounds_the_no_signal_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cards = [4, 3, 3];
    let n = 1000;
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect())
        .collect();
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let labels: Vec<u8> = p.iter().map(|&q| u8::from(rng.gen_bool(q))).collect();
    let probs = Probabilities::clamped(p).unwrap();
    let params = ScanParams {
        n_restarts: 5,
        seed: 1,
        ..ScanParams::default()
    };
    let observed = bias_scan(&Dataset::new(schema(&cards), rows.clone(), labels.clone()).unwrap(), &probs, &params)
        .unwrap()
        .score;

    // permuting labels together with their probabilities keeps the null true
    let mut null_scores = Vec::new();
    for r in 0..100 {
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(1000 + r));
        let y: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        let pp = Probabilities::clamped(perm.iter().map(|&i| probs.values()[i]).collect()).unwrap();
        let ds = Dataset::new(schema(&cards), rows.clone(), y).unwrap();
        null_scores.push(bias_scan(&ds, &pp, &params).unwrap().score);
    }
    null_scores.sort_by(f64::total_cmp);
    let p95 = null_scores[94];
    assert!(observed <= p95, "observed {observed} above null 95th percentile {p95}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn score_vanishes_at_q_one(ys in prop::collection::vec(0u8..2, 0..30), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = ys.iter().map(|_| rng.gen_range(0.01..0.99)).collect();
        prop_assert_eq!(bias_score(&ys, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_changes_sign_at_most_once(ys in prop::collection::vec(0u8..2, 1..30), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = ys.iter().map(|_| rng.gen_range(0.01..0.99)).collect();
        let y_sum = ys.iter().filter(|&&v| v == 1).count() as f64;
        let mut changes = 0;
        let mut prev: Option<bool> = None;
        for i in -400..=400 {
            let q = (i as f64 * 0.025).exp();
            let d = y_sum / q - p.iter().map(|&v| v / (1.0 - v + q * v)).sum::<f64>();
            if d == 0.0 { continue; }
            let s = d > 0.0;
            if prev.is_some_and(|ps| ps != s) { changes += 1; }
            prev = Some(s);
        }
        prop_assert!(changes <= 1);
    }

    #[test]
    fn interior_optimum_is_stationary(ys in prop::collection::vec(0u8..2, 2..40), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = ys.iter().map(|_| rng.gen_range(0.01..0.99)).collect();
        for direction in [Direction::Over, Direction::Under] {
            let fit = optimize_q(&ys, &p, direction, DEFAULT_Q_CAP).unwrap();
            let interior = fit.q > 1.0 / DEFAULT_Q_CAP && fit.q < DEFAULT_Q_CAP && fit.q != 1.0;
            if interior {
                let y_sum = ys.iter().filter(|&&v| v == 1).count() as f64;
                let gap = (expected_under_q(&p, fit.q) - y_sum).abs();
                prop_assert!(gap < 1e-8 * ys.len() as f64, "gap {}", gap);
            }
        }
    }
}
