#![allow(dead_code)]

use rand::Rng;
use ugdp_core::seed;
use ugdp_core::tabular::{Attribute, AttributeSchema, Dataset};

pub fn schema(cards: &[usize]) -> AttributeSchema {
    let attrs = cards
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let names: Vec<String> = (0..k).map(|v| format!("v{v}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Attribute::new(format!("a{j}"), &refs)
        })
        .collect();
    AttributeSchema::new(attrs, "label", ["neg".into(), "pos".into()]).unwrap()
}

/// Uniform codes; the label depends on attribute 0 through `rate(code)`.
pub fn dataset(cards: &[usize], n: usize, s: u64, rate: impl Fn(u32) -> f64) -> Dataset {
    let mut rng = seed::rng(s);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<u32> = cards.iter().map(|&k| rng.gen_range(0..k as u32)).collect();
        labels.push(u8::from(rng.gen::<f64>() < rate(row[0])));
        rows.push(row);
    }
    Dataset::new(schema(cards), rows, labels).unwrap()
}
