//! Categorical tabular data: schema, ingestion, projection, filtering,
//! one-hot encoding and cross-validation folds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// One categorical attribute and its ordered vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Ordered attributes plus the binary label column.
///
/// `label_values[0]` is the string mapped to outcome 0, `label_values[1]` the
/// string mapped to outcome 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
    pub label_name: String,
    pub label_values: [String; 2],
}

impl AttributeSchema {
    /// Build and validate a schema.
    pub fn new(
        attributes: Vec<Attribute>,
        label_name: impl Into<String>,
        label_values: [String; 2],
    ) -> Result<Self> {
        let schema = Self {
            attributes,
            label_name: label_name.into(),
            label_values,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Check uniqueness of names and values and the cardinality floor of 2.
    pub fn validate(&self) -> Result<()> {
        self.validate_names()?;
        for attr in &self.attributes {
            if attr.cardinality() < 2 {
                return Err(Error::Schema(format!(
                    "attribute `{}` has cardinality {} (need at least 2)",
                    attr.name,
                    attr.cardinality()
                )));
            }
        }
        Ok(())
    }

    fn validate_names(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for attr in &self.attributes {
            if attr.name == self.label_name {
                return Err(Error::Schema(format!(
                    "attribute `{}` collides with the label column",
                    attr.name
                )));
            }
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            let mut seen = BTreeSet::new();
            for v in &attr.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate value `{v}` in attribute `{}`",
                        attr.name
                    )));
                }
            }
        }
        if self.label_values[0] == self.label_values[1] {
            return Err(Error::Schema("label values must be distinct".into()));
        }
        Ok(())
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.attributes.iter().map(Attribute::cardinality).collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    fn require_attribute(&self, name: &str) -> Result<usize> {
        self.attribute_index(name)
            .ok_or_else(|| Error::Schema(format!("unknown attribute `{name}`")))
    }

    /// Width of the one-hot encoding, optionally with the label block.
    pub fn one_hot_width(&self, include_label: bool) -> usize {
        self.cardinalities().iter().sum::<usize>() + if include_label { 2 } else { 0 }
    }

    /// Cardinalities of the one-hot blocks, optionally with the label block.
    pub fn block_sizes(&self, include_label: bool) -> Vec<usize> {
        let mut sizes = self.cardinalities();
        if include_label {
            sizes.push(2);
        }
        sizes
    }
}

/// Records of category indices with one binary outcome each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: AttributeSchema,
    codes: Vec<u32>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Build from per-record rows.
    pub fn new(schema: AttributeSchema, rows: Vec<Vec<u32>>, labels: Vec<u8>) -> Result<Self> {
        let m = schema.n_attributes();
        let mut codes = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Schema(format!(
                    "row {i} has {} cells, schema has {m} attributes",
                    row.len()
                )));
            }
            codes.extend_from_slice(row);
        }
        Self::from_codes(schema, codes, labels)
    }

    /// Build from a row-major code buffer.
    pub fn from_codes(schema: AttributeSchema, codes: Vec<u32>, labels: Vec<u8>) -> Result<Self> {
        let m = schema.n_attributes();
        if codes.len() != labels.len() * m {
            return Err(Error::Schema(format!(
                "{} codes do not fill {} records of {m} attributes",
                codes.len(),
                labels.len()
            )));
        }
        let cards = schema.cardinalities();
        for (idx, &c) in codes.iter().enumerate() {
            let j = idx % m.max(1);
            if c as usize >= cards[j] {
                return Err(Error::Schema(format!(
                    "record {} attribute `{}`: index {c} out of range (cardinality {})",
                    idx / m,
                    schema.attributes[j].name,
                    cards[j]
                )));
            }
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Label(format!("label {bad} is not binary")));
        }
        Ok(Self {
            schema,
            codes,
            labels,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn n_records(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.n_attributes()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let m = self.n_attributes();
        &self.codes[i * m..(i + 1) * m]
    }

    #[inline]
    pub fn value(&self, record: usize, attribute: usize) -> u32 {
        self.codes[record * self.n_attributes() + attribute]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut codes = Vec::with_capacity(indices.len() * self.n_attributes());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            codes.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            schema: self.schema.clone(),
            codes,
            labels,
        }
    }

    /// Value names of record `i`.
    pub fn record_values(&self, i: usize) -> Vec<&str> {
        self.row(i)
            .iter()
            .zip(&self.schema.attributes)
            .map(|(&c, a)| a.values[c as usize].as_str())
            .collect()
    }

    /// Drop vocabulary entries that no record uses, remapping codes.
    pub fn prune_unused_values(&self) -> Result<Dataset> {
        let m = self.n_attributes();
        let mut used: Vec<Vec<bool>> = self
            .schema
            .attributes
            .iter()
            .map(|a| vec![false; a.cardinality()])
            .collect();
        for i in 0..self.n_records() {
            for (j, &c) in self.row(i).iter().enumerate() {
                used[j][c as usize] = true;
            }
        }
        let mut remap: Vec<Vec<u32>> = Vec::with_capacity(m);
        let mut attributes = Vec::with_capacity(m);
        for (attr, used) in self.schema.attributes.iter().zip(&used) {
            let mut map = vec![u32::MAX; attr.cardinality()];
            let mut values = Vec::new();
            for (v, name) in attr.values.iter().enumerate() {
                if used[v] {
                    map[v] = values.len() as u32;
                    values.push(name.clone());
                }
            }
            remap.push(map);
            attributes.push(Attribute {
                name: attr.name.clone(),
                values,
            });
        }
        let schema = AttributeSchema::new(
            attributes,
            self.schema.label_name.clone(),
            self.schema.label_values.clone(),
        )?;
        let codes = self
            .codes
            .iter()
            .enumerate()
            .map(|(idx, &c)| remap[idx % m][c as usize])
            .collect();
        Dataset::from_codes(schema, codes, self.labels.clone())
    }
}

/// How to read a CSV file into a [`Dataset`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Label string mapped to 1. When absent the lexicographically larger of
    /// the two observed label strings is positive.
    pub positive_label: Option<String>,
    /// Declared vocabularies; inferred in first-appearance order when absent.
    pub schema: Option<AttributeSchema>,
    pub delimiter: u8,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            positive_label: None,
            schema: None,
            delimiter: b',',
        }
    }
}

/// Read a headed CSV file with a binary label column.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, opts)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_col = header
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| Error::Schema(format!("missing label column `{}`", opts.label_column)))?;

    match &opts.schema {
        Some(schema) => read_declared(rdr, &header, label_col, schema),
        None => read_inferred(rdr, &header, label_col, opts),
    }
}

fn read_declared<R: std::io::Read>(
    mut rdr: csv::Reader<R>,
    header: &[String],
    label_col: usize,
    schema: &AttributeSchema,
) -> Result<Dataset> {
    schema.validate()?;
    let cols: Vec<usize> = schema
        .attributes
        .iter()
        .map(|a| {
            header
                .iter()
                .position(|h| *h == a.name)
                .ok_or_else(|| Error::Schema(format!("missing column `{}`", a.name)))
        })
        .collect::<Result<_>>()?;
    let lookups: Vec<HashMap<&str, u32>> = schema
        .attributes
        .iter()
        .map(|a| {
            a.values
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_str(), i as u32))
                .collect()
        })
        .collect();

    let mut codes = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, &col) in cols.iter().enumerate() {
            let raw = record.get(col).unwrap_or("");
            let code = lookups[j].get(raw).ok_or_else(|| Error::Value {
                row: row + 1,
                column: schema.attributes[j].name.clone(),
                value: raw.to_string(),
            })?;
            codes.push(*code);
        }
        let raw = record.get(label_col).unwrap_or("");
        let y = schema
            .label_values
            .iter()
            .position(|v| v == raw)
            .ok_or_else(|| {
                Error::Label(format!(
                    "row {}: label `{raw}` is neither `{}` nor `{}`",
                    row + 1,
                    schema.label_values[0],
                    schema.label_values[1]
                ))
            })?;
        labels.push(y as u8);
    }
    Dataset::from_codes(schema.clone(), codes, labels)
}

fn read_inferred<R: std::io::Read>(
    mut rdr: csv::Reader<R>,
    header: &[String],
    label_col: usize,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let attr_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_col).collect();
    let mut vocab: Vec<Vec<String>> = vec![Vec::new(); attr_cols.len()];
    let mut index: Vec<HashMap<String, u32>> = vec![HashMap::new(); attr_cols.len()];
    let mut codes = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut label_vocab: Vec<String> = Vec::new();

    for record in rdr.records() {
        let record = record?;
        for (j, &col) in attr_cols.iter().enumerate() {
            let raw = record.get(col).unwrap_or("");
            let code = match index[j].get(raw) {
                Some(&c) => c,
                None => {
                    let c = vocab[j].len() as u32;
                    vocab[j].push(raw.to_string());
                    index[j].insert(raw.to_string(), c);
                    c
                }
            };
            codes.push(code);
        }
        let raw = record.get(label_col).unwrap_or("").to_string();
        if !label_vocab.contains(&raw) {
            label_vocab.push(raw.clone());
            if label_vocab.len() > 2 {
                return Err(Error::Label(format!(
                    "label column `{}` has more than two values: {:?}",
                    opts.label_column, label_vocab
                )));
            }
        }
        raw_labels.push(raw);
    }

    let label_values = infer_label_values(&label_vocab, opts)?;
    let labels = raw_labels
        .iter()
        .map(|v| u8::from(*v == label_values[1]))
        .collect();
    let attributes = attr_cols
        .iter()
        .zip(vocab)
        .map(|(&c, values)| Attribute {
            name: header[c].clone(),
            values,
        })
        .collect();
    let schema = AttributeSchema {
        attributes,
        label_name: opts.label_column.clone(),
        label_values,
    };
    if raw_labels.is_empty() {
        schema.validate_names()?;
    } else {
        schema.validate()?;
    }
    Dataset::from_codes(schema, codes, labels)
}

fn infer_label_values(observed: &[String], opts: &CsvOptions) -> Result<[String; 2]> {
    match (observed.len(), &opts.positive_label) {
        (2, Some(pos)) => {
            let neg = observed
                .iter()
                .find(|v| *v != pos)
                .ok_or_else(|| Error::Label(format!("positive label `{pos}` not observed")))?;
            if !observed.contains(pos) {
                return Err(Error::Label(format!("positive label `{pos}` not observed")));
            }
            Ok([neg.clone(), pos.clone()])
        }
        (2, None) => {
            let mut v = observed.to_vec();
            v.sort();
            Ok([v[0].clone(), v[1].clone()])
        }
        (0, Some(pos)) => Ok([format!("not_{pos}"), pos.clone()]),
        (0, None) => Ok(["0".into(), "1".into()]),
        _ => Err(Error::Label(format!(
            "label column `{}` must contain exactly two distinct values, found {:?}",
            opts.label_column, observed
        ))),
    }
}

/// Write the dataset as CSV in schema column order, label last.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv_to(ds, file)
}

pub fn write_csv_to<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = ds.schema();
    let mut header: Vec<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    header.push(&schema.label_name);
    w.write_record(&header)?;
    for i in 0..ds.n_records() {
        let mut rec = ds.record_values(i);
        rec.push(&schema.label_values[ds.label(i) as usize]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Project onto the named attributes, in the given order.
pub fn select_attributes(ds: &Dataset, names: &[impl AsRef<str>]) -> Result<Dataset> {
    let schema = ds.schema();
    let cols: Vec<usize> = names
        .iter()
        .map(|n| schema.require_attribute(n.as_ref()))
        .collect::<Result<_>>()?;
    let attributes = cols.iter().map(|&c| schema.attributes[c].clone()).collect();
    let new_schema = AttributeSchema {
        attributes,
        label_name: schema.label_name.clone(),
        label_values: schema.label_values.clone(),
    };
    new_schema.validate_names()?;
    let mut codes = Vec::with_capacity(ds.n_records() * cols.len());
    for i in 0..ds.n_records() {
        let row = ds.row(i);
        codes.extend(cols.iter().map(|&c| row[c]));
    }
    Ok(Dataset {
        schema: new_schema,
        codes,
        labels: ds.labels.clone(),
    })
}

/// Attribute name to the set of value names whose records are dropped.
pub type DropMap = BTreeMap<String, BTreeSet<String>>;

/// Remove every record holding a dropped value. Row order is preserved.
pub fn filter_rows(ds: &Dataset, drop_values: &DropMap) -> Result<Dataset> {
    let schema = ds.schema();
    let mut dropped: Vec<(usize, Vec<bool>)> = Vec::new();
    for (name, values) in drop_values {
        let j = schema.require_attribute(name)?;
        let attr = &schema.attributes[j];
        let mut mask = vec![false; attr.cardinality()];
        for v in values {
            let idx = attr.value_index(v).ok_or_else(|| {
                Error::Schema(format!("attribute `{name}` has no value `{v}`"))
            })?;
            mask[idx] = true;
        }
        dropped.push((j, mask));
    }
    let keep: Vec<usize> = (0..ds.n_records())
        .filter(|&i| {
            dropped
                .iter()
                .all(|(j, mask)| !mask[ds.value(i, *j) as usize])
        })
        .collect();
    Ok(ds.subset(&keep))
}

/// Dense one-hot encoding with per-block column offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotMatrix {
    pub data: Array2<f64>,
    pub offsets: Vec<usize>,
    pub block_sizes: Vec<usize>,
    pub include_label: bool,
}

impl OneHotMatrix {
    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    /// Argmax per block back to category codes (and labels when encoded).
    pub fn decode(&self, schema: &AttributeSchema) -> Result<Dataset> {
        let m = schema.n_attributes();
        let n = self.data.nrows();
        let mut codes = Vec::with_capacity(n * m);
        let mut labels = Vec::with_capacity(n);
        for row in self.data.rows() {
            for (b, (&off, &size)) in self.offsets.iter().zip(&self.block_sizes).enumerate() {
                let block = row.slice(ndarray::s![off..off + size]);
                let mut best = 0;
                for k in 1..size {
                    if block[k] > block[best] {
                        best = k;
                    }
                }
                if b < m {
                    codes.push(best as u32);
                } else {
                    labels.push(best as u8);
                }
            }
            if !self.include_label {
                labels.push(0);
            }
        }
        Dataset::from_codes(schema.clone(), codes, labels)
    }
}

/// Encode every attribute as a one-hot block, optionally appending the label.
pub fn one_hot(ds: &Dataset, include_label: bool) -> OneHotMatrix {
    let block_sizes = ds.schema().block_sizes(include_label);
    let mut offsets = Vec::with_capacity(block_sizes.len());
    let mut acc = 0;
    for &s in &block_sizes {
        offsets.push(acc);
        acc += s;
    }
    let m = ds.n_attributes();
    let mut data = Array2::<f64>::zeros((ds.n_records(), acc));
    for i in 0..ds.n_records() {
        for j in 0..m {
            data[[i, offsets[j] + ds.value(i, j) as usize]] = 1.0;
        }
        if include_label {
            data[[i, offsets[m] + ds.label(i) as usize]] = 1.0;
        }
    }
    OneHotMatrix {
        data,
        offsets,
        block_sizes,
        include_label,
    }
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffled k-fold split of `0..n`. The first `n mod k` folds hold one extra
/// record. Indices inside each fold are sorted.
pub fn k_fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > n {
        return Err(Error::Argument(format!(
            "k must lie in [2, {n}] for {n} records, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut validation = order[start..start + size].to_vec();
        validation.sort_unstable();
        let mut in_fold = vec![false; n];
        for &i in &validation {
            in_fold[i] = true;
        }
        let train = (0..n).filter(|&i| !in_fold[i]).collect();
        folds.push(Fold { train, validation });
        start += size;
    }
    Ok(folds)
}

/// [`k_fold_indices`] over the records of `ds`.
pub fn k_fold_split(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    k_fold_indices(ds.n_records(), k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_2_3() -> AttributeSchema {
        AttributeSchema::new(
            vec![Attribute::new("a", &["x", "y"]), Attribute::new("b", &["p", "q", "r"])],
            "y",
            ["no".into(), "yes".into()],
        )
        .unwrap()
    }

    #[test]
    fn one_hot_rows_match_definition() {
        let ds = Dataset::new(schema_2_3(), vec![vec![0, 2]], vec![1]).unwrap();
        let plain = one_hot(&ds, false);
        assert_eq!(plain.data.row(0).to_vec(), vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        let labelled = one_hot(&ds, true);
        assert_eq!(
            labelled.data.row(0).to_vec(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0]
        );
        assert_eq!(labelled.offsets, vec![0, 2, 5]);
    }

    #[test]
    fn inferred_csv_three_rows() {
        let text = "a,b,y\nx,p,no\ny,q,yes\nx,r,no\n";
        let ds = read_csv(text.as_bytes(), &CsvOptions::new("y")).unwrap();
        assert_eq!(ds.n_records(), 3);
        assert_eq!(ds.schema().cardinalities(), vec![2, 3]);
        assert_eq!(one_hot(&ds, false).width(), 5);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn empty_csv_gives_empty_dataset() {
        let ds = read_csv("a,b,y\n".as_bytes(), &CsvOptions::new("y")).unwrap();
        assert_eq!(ds.n_records(), 0);
        assert_eq!(ds.n_attributes(), 2);
    }

    #[test]
    fn csv_errors() {
        let missing = read_csv("a,b\nx,p\n".as_bytes(), &CsvOptions::new("y"));
        assert!(matches!(missing, Err(Error::Schema(_))));

        let three = read_csv("a,y\nx,0\nx,1\nx,2\n".as_bytes(), &CsvOptions::new("y"));
        assert!(matches!(three, Err(Error::Label(_))));

        let mut opts = CsvOptions::new("y");
        opts.schema = Some(schema_2_3());
        let bad = read_csv("a,b,y\nx,p,no\nx,s,yes\n".as_bytes(), &opts);
        match bad {
            Err(Error::Value { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "b", "s"));
            }
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn positive_label_mapping() {
        let mut opts = CsvOptions::new("y");
        opts.positive_label = Some("a".into());
        let ds = read_csv("f,y\nu,a\nv,b\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.schema().label_values, ["b".to_string(), "a".to_string()]);
    }

    #[test]
    fn select_and_filter() {
        let schema = AttributeSchema::new(
            vec![
                Attribute::new("a", &["0", "1"]),
                Attribute::new("b", &["0", "1", "2"]),
                Attribute::new("c", &["u", "v"]),
            ],
            "y",
            ["0".into(), "1".into()],
        )
        .unwrap();
        let rows = vec![
            vec![0, 0, 0],
            vec![1, 1, 1],
            vec![0, 2, 0],
            vec![1, 0, 1],
            vec![0, 1, 0],
        ];
        let ds = Dataset::new(schema, rows, vec![0, 1, 0, 1, 1]).unwrap();
        let one = select_attributes(&ds, &["b"]).unwrap();
        assert_eq!((one.n_records(), one.n_attributes()), (5, 1));
        assert_eq!(one.value(2, 0), 2);
        assert_eq!(select_attributes(&ds, &["a", "b", "c"]).unwrap(), ds);
        assert!(matches!(select_attributes(&ds, &["zz"]), Err(Error::Schema(_))));

        let four = ds.subset(&[0, 1, 2, 3]);
        let mut drop = DropMap::new();
        drop.entry("b".into()).or_default().insert("2".into());
        assert_eq!(filter_rows(&four, &drop).unwrap().n_records(), 3);
        assert_eq!(filter_rows(&ds, &DropMap::new()).unwrap(), ds);
    }

    #[test]
    fn prune_drops_unused_values() {
        let schema = schema_2_3();
        let ds = Dataset::new(schema, vec![vec![0, 0], vec![1, 2]], vec![0, 1]).unwrap();
        let pruned = ds.prune_unused_values().unwrap();
        assert_eq!(pruned.schema().cardinalities(), vec![2, 2]);
        assert_eq!(pruned.record_values(1), vec!["y", "r"]);
    }

    #[test]
    fn folds_balanced_and_deterministic() {
        let folds = k_fold_indices(10, 5, 3).unwrap();
        assert!(folds.iter().all(|f| f.validation.len() == 2));
        assert_eq!(folds, k_fold_indices(10, 5, 3).unwrap());

        let sizes: Vec<usize> = k_fold_indices(7, 3, 1)
            .unwrap()
            .iter()
            .map(|f| f.validation.len())
            .collect();
        assert_eq!(sizes, vec![3, 2, 2]);
        assert!(k_fold_indices(5, 1, 0).is_err());
        assert!(k_fold_indices(5, 6, 0).is_err());
    }
}
