//! Decision trees over categorical attributes.
//!
//! A split sends a record left when its value for the split attribute is in
//! the split's value subset. Subsets are grown greedily: values present at the
//! node are sorted by their target ratio and only the prefix partitions of
//! that order are scored, which is exact for binary Gini and for the
//! second-order (gradient/hessian) gain.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tabular::Dataset;

/// Arena node. Children are indices into [`Tree::nodes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        attribute: usize,
        /// Sorted value indices routed to `left`.
        left_values: Vec<u32>,
        left: usize,
        right: usize,
    },
    Leaf {
        #[serde(with = "crate::decimal")]
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn predict_row(&self, row: &[u32]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    attribute,
                    left_values,
                    left,
                    right,
                } => {
                    idx = if left_values.binary_search(&row[*attribute]).is_ok() {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value } => Some(*value),
            TreeNode::Split { .. } => None,
        })
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let TreeNode::Leaf { value } = node {
                *value *= factor;
            }
        }
    }
}

/// Sufficient statistics of a node.
///
/// Gini: `g = Σ w·y`, `h = Σ w`. Newton: `g = Σ (y − p)`, `h = Σ p(1 − p)`.
/// `count` is the weight used by the minimum-leaf rule.
#[derive(Debug, Clone, Copy, Default)]
struct Stat {
    count: f64,
    g: f64,
    h: f64,
}

impl Stat {
    fn add(&mut self, other: &Stat) {
        self.count += other.count;
        self.g += other.g;
        self.h += other.h;
    }

    fn minus(&self, other: &Stat) -> Stat {
        Stat {
            count: self.count - other.count,
            g: self.g - other.g,
            h: self.h - other.h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SplitRule {
    Gini,
    Newton { lambda: f64 },
}

impl SplitRule {
    /// Higher is better; split gain is `score(l) + score(r) − score(parent)`.
    fn score(self, s: &Stat) -> f64 {
        match self {
            SplitRule::Gini => {
                if s.h <= 0.0 {
                    0.0
                } else {
                    -2.0 * s.g * (s.h - s.g) / s.h
                }
            }
            SplitRule::Newton { lambda } => {
                let den = s.h + lambda;
                if den <= f64::MIN_POSITIVE {
                    0.0
                } else {
                    s.g * s.g / den
                }
            }
        }
    }

    fn ratio(self, s: &Stat) -> f64 {
        let den = match self {
            SplitRule::Gini => s.h,
            SplitRule::Newton { lambda } => s.h + lambda,
        };
        if den <= f64::MIN_POSITIVE {
            0.0
        } else {
            s.g / den
        }
    }

    fn leaf_value(self, s: &Stat) -> f64 {
        self.ratio(s)
    }
}

pub(crate) struct TreeBuilder<'a> {
    pub ds: &'a Dataset,
    pub g: &'a [f64],
    pub h: &'a [f64],
    pub w: &'a [f64],
    pub rule: SplitRule,
    pub max_depth: usize,
    pub min_leaf: f64,
    /// Attributes sampled per node; `None` considers all of them.
    pub features_per_split: Option<usize>,
}

struct Candidate {
    gain: f64,
    attribute: usize,
    left_values: Vec<u32>,
}

impl TreeBuilder<'_> {
    fn record_stat(&self, i: usize) -> Stat {
        Stat {
            count: self.w[i],
            g: self.g[i],
            h: self.h[i],
        }
    }

    pub fn build<R: Rng>(&self, indices: Vec<usize>, rng: &mut R) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        self.grow(&mut tree, indices, 0, rng);
        tree
    }

    fn grow<R: Rng>(&self, tree: &mut Tree, indices: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let mut total = Stat::default();
        for &i in &indices {
            total.add(&self.record_stat(i));
        }
        let slot = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf {
            value: self.rule.leaf_value(&total),
        });
        if depth >= self.max_depth || total.count < 2.0 * self.min_leaf {
            return slot;
        }
        let Some(best) = self.best_split(&indices, &total, rng) else {
            return slot;
        };

        let m = best.attribute;
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| best.left_values.binary_search(&self.ds.value(i, m)).is_ok());
        let left = self.grow(tree, left_idx, depth + 1, rng);
        let right = self.grow(tree, right_idx, depth + 1, rng);
        tree.nodes[slot] = TreeNode::Split {
            attribute: m,
            left_values: best.left_values,
            left,
            right,
        };
        slot
    }

    fn best_split<R: Rng>(&self, indices: &[usize], total: &Stat, rng: &mut R) -> Option<Candidate> {
        let n_attr = self.ds.n_attributes();
        let attributes: Vec<usize> = match self.features_per_split {
            Some(f) if f < n_attr => {
                let mut a = sample(rng, n_attr, f.max(1)).into_vec();
                a.sort_unstable();
                a
            }
            _ => (0..n_attr).collect(),
        };
        let cards = self.ds.schema().cardinalities();
        let parent = self.rule.score(total);
        let mut best: Option<Candidate> = None;

        for &a in &attributes {
            let mut per_value = vec![Stat::default(); cards[a]];
            for &i in indices {
                per_value[self.ds.value(i, a) as usize].add(&self.record_stat(i));
            }
            let mut present: Vec<usize> = (0..cards[a]).filter(|&v| per_value[v].count > 0.0).collect();
            if present.len() < 2 {
                continue;
            }
            present.sort_by(|&x, &y| {
                self.rule
                    .ratio(&per_value[x])
                    .total_cmp(&self.rule.ratio(&per_value[y]))
                    .then(x.cmp(&y))
            });
            let mut left = Stat::default();
            for cut in 1..present.len() {
                left.add(&per_value[present[cut - 1]]);
                let right = total.minus(&left);
                if left.count < self.min_leaf || right.count < self.min_leaf {
                    continue;
                }
                let gain = self.rule.score(&left) + self.rule.score(&right) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut left_values: Vec<u32> = present[..cut].iter().map(|&v| v as u32).collect();
                    left_values.sort_unstable();
                    best = Some(Candidate {
                        gain,
                        attribute: a,
                        left_values,
                    });
                }
            }
        }
        best
    }
}
