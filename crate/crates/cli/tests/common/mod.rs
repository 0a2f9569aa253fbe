#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bank-shaped CSV (`;`-separated, label `y`) with a planted high-rate cell
/// and an `unknown` loan value for the drop map to remove.
pub fn write_fixture_csv(path: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = ["admin", "student", "retired", "technician"];
    let marital = ["single", "married", "divorced"];
    let loan = ["no", "yes", "unknown"];
    let month = ["may", "jun", "jul", "aug"];
    let mut text = String::from("job;marital;loan;month;y\n");
    for _ in 0..n {
        let j = jobs[rng.gen_range(0..jobs.len())];
        let m = marital[rng.gen_range(0..marital.len())];
        let l = loan[rng.gen_range(0..loan.len())];
        let mo = month[rng.gen_range(0..month.len())];
        let mut p = 0.1 + if j == "student" { 0.4 } else { 0.0 } + if mo == "may" { 0.2 } else { 0.0 };
        if j == "retired" && m == "single" {
            p = 0.9;
        }
        let y = if rng.gen::<f64>() < p { "yes" } else { "no" };
        text.push_str(&format!("{j};{m};{l};{mo};{y}\n"));
    }
    std::fs::write(path, text).unwrap();
}

/// Small, fast config over the fixture in `dir`.
pub fn fast_config(dir: &Path, samples: usize, epochs: usize) -> serde_json::Value {
    serde_json::json!({
        "data": {
            "path": dir.join("data.csv"),
            "delimiter": ";",
            "label_column": "y",
            "positive_label": "yes",
            "drop_values": {"loan": ["unknown"]}
        },
        "models": {
            "random_forest_grid": [{"n_trees": 15, "max_depth": 4}],
            "gbt_grid": [{"n_rounds": 20, "max_depth": 3}, {"n_rounds": 20, "max_depth": 2}],
            "cv_folds": 3
        },
        "scan": {"n_restarts": 4},
        "synthesis": {
            "samples": samples,
            "vae": {"epochs": epochs, "hidden_sizes": [24], "latent_vars": 4, "latent_categories": 5, "batch_size": 64}
        },
        "out_dir": dir.join("out"),
        "seed": 11
    })
}

pub fn setup(dir: &Path, records: usize, samples: usize, epochs: usize) -> PathBuf {
    write_fixture_csv(&dir.join("data.csv"), records, 5);
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, serde_json::to_string_pretty(&fast_config(dir, samples, epochs)).unwrap()).unwrap();
    cfg
}

pub fn ugdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ugdp"))
        .args(args)
        .output()
        .expect("binary runs")
}
