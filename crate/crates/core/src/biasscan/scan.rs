//! Subgroup search: exact per-mode optimization, multi-restart coordinate
//! ascent, and an exhaustive oracle for small instances.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::score::{fit_q, Direction, QFit, DEFAULT_Q_CAP};
use crate::error::{Error, Result};
use crate::models::Probabilities;
use crate::par;
use crate::seed;
use crate::tabular::{AttributeSchema, Dataset};

/// An axis-aligned subgroup: for each attribute, the sorted value indices it
/// admits. A record belongs iff every one of its values is admitted.
///
/// Ordering is lexicographic over the per-attribute index lists and is used
/// only to break exact score ties.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subgroup {
    values: Vec<Vec<u32>>,
}

impl Subgroup {
    /// Every value of every attribute.
    pub fn full(schema: &AttributeSchema) -> Self {
        Self {
            values: schema
                .cardinalities()
                .into_iter()
                .map(|k| (0..k as u32).collect())
                .collect(),
        }
    }

    /// Validate and normalize (sort, dedup) the per-attribute value lists.
    pub fn new(schema: &AttributeSchema, mut values: Vec<Vec<u32>>) -> Result<Self> {
        if values.len() != schema.n_attributes() {
            return Err(Error::Schema(format!(
                "subgroup has {} modes, schema has {}",
                values.len(),
                schema.n_attributes()
            )));
        }
        for (j, (vals, k)) in values.iter_mut().zip(schema.cardinalities()).enumerate() {
            vals.sort_unstable();
            vals.dedup();
            if vals.is_empty() {
                return Err(Error::Schema(format!(
                    "subgroup selects no value of `{}`",
                    schema.attributes[j].name
                )));
            }
            if vals.iter().any(|&v| v as usize >= k) {
                return Err(Error::Schema(format!(
                    "subgroup value out of range for `{}`",
                    schema.attributes[j].name
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, mode: usize) -> &[u32] {
        &self.values[mode]
    }

    pub fn contains(&self, mode: usize, value: u32) -> bool {
        self.values[mode].binary_search(&value).is_ok()
    }

    /// True when every value of the mode is selected.
    pub fn is_unrestricted(&self, mode: usize, cardinality: usize) -> bool {
        self.values[mode].len() == cardinality
    }

    fn masks(&self, cards: &[usize]) -> Vec<Vec<bool>> {
        self.values
            .iter()
            .zip(cards)
            .map(|(vals, &k)| {
                let mut m = vec![false; k];
                for &v in vals {
                    m[v as usize] = true;
                }
                m
            })
            .collect()
    }

    fn set_mode(&mut self, mode: usize, values: Vec<u32>) {
        self.values[mode] = values;
    }
}

/// Indices of records admitted by `subgroup`, ascending.
pub fn subgroup_members(ds: &Dataset, subgroup: &Subgroup) -> Vec<usize> {
    let masks = subgroup.masks(&ds.schema().cardinalities());
    (0..ds.n_records())
        .filter(|&i| {
            ds.row(i)
                .iter()
                .zip(&masks)
                .all(|(&v, m)| m[v as usize])
        })
        .collect()
}

/// Per-restart bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    #[serde(with = "crate::decimal")]
    pub initial_score: f64,
    #[serde(with = "crate::decimal")]
    pub final_score: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub subgroup: Subgroup,
    pub score: f64,
    pub q: f64,
    pub direction: Direction,
    pub member_indices: Vec<usize>,
    pub restarts_used: usize,
    pub q_cap: f64,
    pub restarts: Vec<RestartTrace>,
}

/// Best value subset for one mode with the other modes held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOptimum {
    pub values: Vec<u32>,
    pub q: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub direction: Direction,
    pub n_restarts: usize,
    pub q_cap: f64,
    pub seed: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            direction: Direction::Over,
            n_restarts: 10,
            q_cap: DEFAULT_Q_CAP,
            seed: 0,
        }
    }
}

fn check_inputs(ds: &Dataset, probs: &Probabilities, q_cap: f64) -> Result<()> {
    if probs.len() != ds.n_records() {
        return Err(Error::Argument(format!(
            "{} probabilities for {} records",
            probs.len(),
            ds.n_records()
        )));
    }
    if !(q_cap > 1.0) {
        return Err(Error::Argument(format!("q_cap must exceed 1, got {q_cap}")));
    }
    Ok(())
}

/// Records grouped by their value of one mode.
struct Cell {
    value: u32,
    positives: f64,
    probs: Vec<f64>,
}

/// Edge of the log-q interval on which the cell's own score contribution
/// `c(t) = Y·t − Σ log(1 − p̂ + eᵗ·p̂)` is positive, as a magnitude.
///
/// `c` is concave in `t` with `c(0) = 0`, so the set of cells contributing
/// positively at a fixed `q` is every cell whose edge lies beyond `|log q|`.
/// Those sets are nested, hence the optimal subset for any `q` is a prefix of
/// the cells sorted by this key.
fn cell_priority(cell: &Cell, direction: Direction) -> f64 {
    if cell.probs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let n = cell.probs.len() as f64;
    let p_sum: f64 = cell.probs.iter().sum();
    let y = cell.positives;
    let sign = match direction {
        Direction::Over => {
            if y <= p_sum {
                return 0.0;
            }
            if y >= n {
                return f64::INFINITY;
            }
            1.0
        }
        Direction::Under => {
            if y >= p_sum {
                return 0.0;
            }
            if y <= 0.0 {
                return f64::INFINITY;
            }
            -1.0
        }
    };
    let contribution = |mag: f64| -> f64 {
        let t = sign * mag;
        let em1 = t.exp_m1();
        y * t - cell.probs.iter().map(|&p| (p * em1).ln_1p()).sum::<f64>()
    };
    let mut hi = 1.0;
    while contribution(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if contribution(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact maximizer over all nonempty value subsets of `mode`, with the records
/// restricted to `current` on every other mode.
///
/// Cells are ordered by [`cell_priority`] and only the `k` prefix subsets are
/// scored, each with its own optimal `q`. When no prefix scores above zero the
/// full value set is returned with `q = 1`.
pub fn optimize_mode(
    ds: &Dataset,
    probs: &Probabilities,
    current: &Subgroup,
    mode: usize,
    direction: Direction,
    q_cap: f64,
) -> Result<ModeOptimum> {
    check_inputs(ds, probs, q_cap)?;
    if mode >= ds.n_attributes() || current.n_modes() != ds.n_attributes() {
        return Err(Error::Schema(format!("mode {mode} out of range")));
    }
    Ok(optimize_mode_unchecked(ds, probs.values(), current, mode, direction, q_cap))
}

fn optimize_mode_unchecked(
    ds: &Dataset,
    probs: &[f64],
    current: &Subgroup,
    mode: usize,
    direction: Direction,
    q_cap: f64,
) -> ModeOptimum {
    let cards = ds.schema().cardinalities();
    let k = cards[mode];
    let masks = current.masks(&cards);
    let mut cells: Vec<Cell> = (0..k as u32)
        .map(|value| Cell {
            value,
            positives: 0.0,
            probs: Vec::new(),
        })
        .collect();
    for (i, &p) in probs.iter().enumerate() {
        let row = ds.row(i);
        let admitted = row
            .iter()
            .enumerate()
            .all(|(j, &v)| j == mode || masks[j][v as usize]);
        if admitted {
            let cell = &mut cells[row[mode] as usize];
            cell.positives += f64::from(ds.label(i));
            cell.probs.push(p);
        }
    }

    let mut keyed: Vec<(f64, Cell)> = cells
        .into_iter()
        .map(|c| (cell_priority(&c, direction), c))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.value.cmp(&b.1.value)));

    let mut best: Option<(usize, QFit)> = None;
    let mut pooled: Vec<f64> = Vec::new();
    let mut y_sum = 0.0;
    for (j, (_, cell)) in keyed.iter().enumerate() {
        pooled.extend_from_slice(&cell.probs);
        y_sum += cell.positives;
        let fit = fit_q(y_sum, &pooled, direction, q_cap);
        if best.is_none_or(|(_, b)| fit.score > b.score) {
            best = Some((j, fit));
        }
    }

    match best {
        Some((j, fit)) if fit.score > 0.0 => {
            let mut values: Vec<u32> = keyed[..=j].iter().map(|(_, c)| c.value).collect();
            values.sort_unstable();
            ModeOptimum {
                values,
                q: fit.q,
                score: fit.score,
            }
        }
        _ => ModeOptimum {
            values: (0..k as u32).collect(),
            q: 1.0,
            score: 0.0,
        },
    }
}

fn evaluate(ds: &Dataset, probs: &[f64], subgroup: &Subgroup, direction: Direction, q_cap: f64) -> QFit {
    let members = subgroup_members(ds, subgroup);
    let y_sum: f64 = members.iter().map(|&i| f64::from(ds.label(i))).sum();
    let p: Vec<f64> = members.iter().map(|&i| probs[i]).collect();
    fit_q(y_sum, &p, direction, q_cap)
}

fn random_subgroup<R: Rng>(cards: &[usize], rng: &mut R) -> Subgroup {
    let values = cards
        .iter()
        .map(|&k| loop {
            let pick: Vec<u32> = (0..k as u32).filter(|_| rng.gen_bool(0.5)).collect();
            if !pick.is_empty() {
                break pick;
            }
        })
        .collect();
    Subgroup { values }
}

struct RestartOutcome {
    subgroup: Subgroup,
    fit: QFit,
    trace: RestartTrace,
}

const MAX_SWEEPS: usize = 10_000;

fn run_restart(ds: &Dataset, probs: &[f64], params: &ScanParams, restart: usize) -> RestartOutcome {
    let mut rng = seed::substream(params.seed, "scan_restart", restart as u64);
    let cards = ds.schema().cardinalities();
    let mut subgroup = random_subgroup(&cards, &mut rng);
    let mut fit = evaluate(ds, probs, &subgroup, params.direction, params.q_cap);
    let initial_score = fit.score;
    let mut modes: Vec<usize> = (0..cards.len()).collect();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        modes.shuffle(&mut rng);
        let mut improved = false;
        for &mode in &modes {
            let opt = optimize_mode_unchecked(ds, probs, &subgroup, mode, params.direction, params.q_cap);
            let margin = 1e-12 * fit.score.abs().max(1.0);
            if opt.score > fit.score + margin {
                subgroup.set_mode(mode, opt.values);
                fit = QFit {
                    q: opt.q,
                    score: opt.score,
                };
                improved = true;
            }
        }
        if !improved || sweeps >= MAX_SWEEPS {
            break;
        }
    }
    RestartOutcome {
        subgroup,
        fit,
        trace: RestartTrace {
            initial_score,
            final_score: fit.score,
            sweeps,
        },
    }
}

/// Multi-restart coordinate ascent over modes. Restarts run in parallel with
/// seed-derived substreams; the earliest restart wins exact ties.
pub fn bias_scan(ds: &Dataset, probs: &Probabilities, params: &ScanParams) -> Result<ScanResult> {
    check_inputs(ds, probs, params.q_cap)?;
    if params.n_restarts == 0 {
        return Err(Error::Argument("n_restarts must be at least 1".into()));
    }
    if ds.n_attributes() == 0 {
        return Err(Error::Schema("cannot scan a dataset without attributes".into()));
    }
    let p = probs.values();
    let outcomes = par::map_indices(params.n_restarts, |r| run_restart(ds, p, params, r));

    let mut best = 0;
    for (r, o) in outcomes.iter().enumerate().skip(1) {
        if o.fit.score > outcomes[best].fit.score {
            best = r;
        }
    }
    let traces = outcomes.iter().map(|o| o.trace.clone()).collect();
    let winner = &outcomes[best];
    // Rescore on the final membership so score and q match member_indices exactly.
    let fit = evaluate(ds, p, &winner.subgroup, params.direction, params.q_cap);
    Ok(ScanResult {
        member_indices: subgroup_members(ds, &winner.subgroup),
        subgroup: winner.subgroup.clone(),
        score: fit.score,
        q: fit.q,
        direction: params.direction,
        restarts_used: params.n_restarts,
        q_cap: params.q_cap,
        restarts: traces,
    })
}

/// Upper bound on the number of subgroups [`brute_force_scan`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Exhaustive maximization over every axis-aligned subgroup. Exact ties go to
/// the lexicographically smallest subgroup.
pub fn brute_force_scan(
    ds: &Dataset,
    probs: &Probabilities,
    direction: Direction,
    q_cap: f64,
) -> Result<ScanResult> {
    check_inputs(ds, probs, q_cap)?;
    let cards = ds.schema().cardinalities();
    let count: f64 = cards.iter().map(|&k| 2f64.powi(k as i32) - 1.0).product();
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "{count} subgroups exceed the brute-force limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    if cards.is_empty() {
        return Err(Error::Schema("cannot scan a dataset without attributes".into()));
    }

    // Pool records per full cell (one value per attribute).
    let n_cells: usize = cards.iter().product();
    let mut cell_probs: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    let mut cell_pos = vec![0.0; n_cells];
    let cell_of = |row: &[u32]| row.iter().zip(&cards).fold(0, |acc, (&v, &k)| acc * k + v as usize);
    for i in 0..ds.n_records() {
        let c = cell_of(ds.row(i));
        cell_probs[c].push(probs.values()[i]);
        cell_pos[c] += f64::from(ds.label(i));
    }

    let per_mode: Vec<Vec<Vec<u32>>> = cards.iter().map(|&k| nonempty_subsets(k)).collect();
    let mut cursor = vec![0usize; cards.len()];
    let mut best: Option<(Subgroup, QFit)> = None;
    let mut evaluated = 0usize;
    loop {
        let values: Vec<Vec<u32>> = cursor
            .iter()
            .zip(&per_mode)
            .map(|(&c, subsets)| subsets[c].clone())
            .collect();
        let subgroup = Subgroup { values };
        let masks = subgroup.masks(&cards);
        let mut pooled = Vec::new();
        let mut y_sum = 0.0;
        for c in 0..n_cells {
            let mut rem = c;
            let mut admitted = true;
            for j in (0..cards.len()).rev() {
                let v = rem % cards[j];
                rem /= cards[j];
                if !masks[j][v] {
                    admitted = false;
                    break;
                }
            }
            if admitted {
                pooled.extend_from_slice(&cell_probs[c]);
                y_sum += cell_pos[c];
            }
        }
        let fit = fit_q(y_sum, &pooled, direction, q_cap);
        evaluated += 1;
        let replace = match &best {
            None => true,
            Some((sg, b)) => match fit.score.total_cmp(&b.score) {
                Ordering::Greater => true,
                Ordering::Equal => subgroup < *sg,
                Ordering::Less => false,
            },
        };
        if replace {
            best = Some((subgroup, fit));
        }

        // odometer over per-mode subset lists
        let mut j = cursor.len();
        loop {
            if j == 0 {
                let (subgroup, fit) = best.expect("at least one subgroup");
                log::debug!("brute force evaluated {evaluated} subgroups");
                return Ok(ScanResult {
                    member_indices: subgroup_members(ds, &subgroup),
                    subgroup,
                    score: fit.score,
                    q: fit.q,
                    direction,
                    restarts_used: 0,
                    q_cap,
                    restarts: Vec::new(),
                });
            }
            j -= 1;
            cursor[j] += 1;
            if cursor[j] < per_mode[j].len() {
                break;
            }
            cursor[j] = 0;
        }
    }
}

/// All nonempty subsets of `0..k` as sorted lists.
fn nonempty_subsets(k: usize) -> Vec<Vec<u32>> {
    (1u64..(1u64 << k))
        .map(|mask| (0..k as u32).filter(|&v| mask >> v & 1 == 1).collect())
        .collect()
}

impl ScanResult {
    /// Score recomputed from `member_indices` at the reported `q`.
    pub fn rescore(&self, ds: &Dataset, probs: &Probabilities) -> f64 {
        let y_sum: f64 = self.member_indices.iter().map(|&i| f64::from(ds.label(i))).sum();
        let p: Vec<f64> = self.member_indices.iter().map(|&i| probs.values()[i]).collect();
        super::score::score_at_reported_q(y_sum, &p, self.q, self.q_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Attribute;

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

    #[test]
    fn members_follow_masks() {
        let ds = Dataset::new(
            schema(&[2, 3]),
            vec![vec![0, 0], vec![0, 1], vec![1, 2], vec![1, 0]],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let full = Subgroup::full(ds.schema());
        assert_eq!(subgroup_members(&ds, &full), vec![0, 1, 2, 3]);
        let sg = Subgroup::new(ds.schema(), vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(subgroup_members(&ds, &sg), vec![0, 1, 3]);
        let narrow = Subgroup::new(ds.schema(), vec![vec![1], vec![0]]).unwrap();
        assert_eq!(subgroup_members(&ds, &narrow), vec![3]);
        assert!(Subgroup::new(ds.schema(), vec![vec![], vec![0]]).is_err());
        assert!(Subgroup::new(ds.schema(), vec![vec![2], vec![0]]).is_err());
    }

    #[test]
    fn single_hot_value_is_selected() {
        // value 2 of the mode: all positives at p̂ = 0.1; others match predictions
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut p = Vec::new();
        for i in 0..20 {
            let v = (i % 4) as u32;
            rows.push(vec![v]);
            if v == 2 {
                labels.push(1);
                p.push(0.1);
            } else {
                labels.push(u8::from(i % 8 < 4));
                p.push(0.5);
            }
        }
        let ds = Dataset::new(schema(&[4]), rows, labels).unwrap();
        let probs = Probabilities::clamped(p).unwrap();
        let full = Subgroup::full(ds.schema());
        let opt = optimize_mode(&ds, &probs, &full, 0, Direction::Over, DEFAULT_Q_CAP).unwrap();
        assert_eq!(opt.values, vec![2]);
    }

    #[test]
    fn calibrated_cells_return_full_set() {
        let rows: Vec<Vec<u32>> = (0..12).map(|i| vec![(i % 3) as u32]).collect();
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i < 6)).collect();
        // each value has 2 positives out of 4 at p̂ = 0.5
        let ds = Dataset::new(schema(&[3]), rows, labels).unwrap();
        let probs = Probabilities::clamped(vec![0.5; 12]).unwrap();
        let opt = optimize_mode(&ds, &probs, &Subgroup::full(ds.schema()), 0, Direction::Over, DEFAULT_Q_CAP)
            .unwrap();
        assert_eq!(opt, ModeOptimum { values: vec![0, 1, 2], q: 1.0, score: 0.0 });
    }

    #[test]
    fn brute_force_enumeration_size() {
        assert_eq!(nonempty_subsets(2).len(), 3);
        assert_eq!(nonempty_subsets(3).len(), 7);
        let ds = Dataset::new(schema(&[21]), vec![vec![0], vec![1]], vec![0, 1]).unwrap();
        let probs = Probabilities::clamped(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            brute_force_scan(&ds, &probs, Direction::Over, DEFAULT_Q_CAP),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn rejects_bad_scan_arguments() {
        let ds = Dataset::new(schema(&[2]), vec![vec![0], vec![1]], vec![0, 1]).unwrap();
        let probs = Probabilities::clamped(vec![0.5, 0.5]).unwrap();
        let zero = ScanParams {
            n_restarts: 0,
            ..ScanParams::default()
        };
        assert!(bias_scan(&ds, &probs, &zero).is_err());
        let short = Probabilities::clamped(vec![0.5]).unwrap();
        assert!(bias_scan(&ds, &short, &ScanParams::default()).is_err());
    }
}
