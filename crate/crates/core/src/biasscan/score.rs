//! The Bernoulli bias score and its maximization over the odds multiplier.
//!
//! For a subset `S` with outcomes `y` and predictions `p̂`,
//!
//! ```text
//! F(S, q) = log(q)·Σ yᵢ − Σ log(1 − p̂ᵢ + q·p̂ᵢ)
//! ```
//!
//! is the log-likelihood ratio of "odds multiplied by `q`" against "odds as
//! predicted". In `t = log q` it is concave with `F(S, 0) = 0`, and its
//! stationarity condition `Σ q·p̂ᵢ/(1 − p̂ᵢ + q·p̂ᵢ) = Σ yᵢ` has a strictly
//! increasing left side, so the maximizer is a single root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the predictions the scan looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Outcomes more frequent than predicted (`q ≥ 1`).
    #[default]
    Over,
    /// Outcomes less frequent than predicted (`q ≤ 1`).
    Under,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "over" => Ok(Direction::Over),
            "under" => Ok(Direction::Under),
            other => Err(Error::Argument(format!("direction must be over|under, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Over => "over",
            Direction::Under => "under",
        })
    }
}

pub const DEFAULT_Q_CAP: f64 = 1e6;

/// `F(S, q)` for the given outcomes and predictions. Empty input scores 0.
pub fn bias_score(labels: &[u8], probs: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Argument(format!("q must be positive and finite, got {q}")));
    }
    if labels.len() != probs.len() {
        return Err(Error::Argument("labels and probabilities differ in length".into()));
    }
    let y_sum = labels.iter().filter(|&&y| y == 1).count() as f64;
    Ok(score_at(y_sum, probs, q))
}

/// `F(S, q)` from the positive count and the predictions.
pub(crate) fn score_at(y_sum: f64, probs: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return 0.0;
    }
    let penalty: f64 = probs.iter().map(|&p| (p * (q - 1.0)).ln_1p()).sum();
    q.ln() * y_sum - penalty
}

/// Left side of the stationarity condition, `Σ q·p̂/(1 − p̂ + q·p̂)`.
pub fn expected_under_q(probs: &[f64], q: f64) -> f64 {
    probs.iter().map(|&p| q * p / (1.0 - p + q * p)).sum()
}

/// Maximizer over `q` and the attained score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFit {
    pub q: f64,
    pub score: f64,
}

impl QFit {
    const NULL: QFit = QFit { q: 1.0, score: 0.0 };
}

/// Maximize `F(S, q)` over `[1, q_cap]` (over) or `[1/q_cap, 1]` (under).
///
/// An all-positive subset scanned over (or all-negative scanned under) has its
/// supremum at the boundary; the limiting score `−Σ log p̂` (resp.
/// `−Σ log(1 − p̂)`) is reported with `q` at the bound.
pub fn optimize_q(labels: &[u8], probs: &[f64], direction: Direction, q_cap: f64) -> Result<QFit> {
    if labels.len() != probs.len() {
        return Err(Error::Argument("labels and probabilities differ in length".into()));
    }
    if !(q_cap > 1.0) {
        return Err(Error::Argument(format!("q_cap must exceed 1, got {q_cap}")));
    }
    let y_sum = labels.iter().filter(|&&y| y == 1).count() as f64;
    Ok(fit_q(y_sum, probs, direction, q_cap))
}

pub(crate) fn fit_q(y_sum: f64, probs: &[f64], direction: Direction, q_cap: f64) -> QFit {
    let n = probs.len() as f64;
    if probs.is_empty() {
        return QFit::NULL;
    }
    let p_sum: f64 = probs.iter().sum();
    match direction {
        Direction::Over => {
            if y_sum <= p_sum {
                return QFit::NULL;
            }
            if y_sum >= n {
                let score = -probs.iter().map(|p| p.ln()).sum::<f64>();
                return QFit { q: q_cap, score };
            }
        }
        Direction::Under => {
            if y_sum >= p_sum {
                return QFit::NULL;
            }
            if y_sum <= 0.0 {
                let score = -probs.iter().map(|p| (-p).ln_1p()).sum::<f64>();
                return QFit {
                    q: 1.0 / q_cap,
                    score,
                };
            }
        }
    }
    let log_cap = q_cap.ln();
    let (lo, hi) = match direction {
        Direction::Over => (0.0, log_cap),
        Direction::Under => (-log_cap, 0.0),
    };
    let t = solve_stationary(y_sum, probs, lo, hi);
    let q = t.exp();
    QFit {
        q,
        score: score_at(y_sum, probs, q),
    }
}

/// Root in `t = log q` of `Σ q·p̂/(1 − p̂ + q·p̂) − y_sum` on `[lo, hi]`,
/// clamped to the interval when the root lies outside it. Safeguarded Newton:
/// every step keeps a sign-changing bracket and falls back to bisection.
fn solve_stationary(y_sum: f64, probs: &[f64], lo: f64, hi: f64) -> f64 {
    let h = |t: f64| -> (f64, f64) {
        let q = t.exp();
        let mut val = -y_sum;
        let mut deriv = 0.0;
        for &p in probs {
            let den = 1.0 - p + q * p;
            let r = q * p / den;
            val += r;
            deriv += r * (1.0 - p) / den;
        }
        (val, deriv)
    };
    let (mut a, mut b) = (lo, hi);
    if h(a).0 >= 0.0 {
        return a;
    }
    if h(b).0 <= 0.0 {
        return b;
    }
    let mut t = 0.5 * (a + b);
    let tol = 1e-10 * y_sum.max(1.0) * 1e-3;
    for _ in 0..200 {
        let (val, deriv) = h(t);
        if val.abs() <= tol {
            break;
        }
        if val > 0.0 {
            b = t;
        } else {
            a = t;
        }
        let newton = t - val / deriv;
        t = if deriv > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a <= 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    t
}

/// Score of a subset at a reported `q`, using the limiting value when `q` sits
/// on the cap of a one-class subset (see [`optimize_q`]).
pub fn score_at_reported_q(y_sum: f64, probs: &[f64], q: f64, q_cap: f64) -> f64 {
    let n = probs.len() as f64;
    if probs.is_empty() {
        0.0
    } else if q >= q_cap && y_sum >= n {
        -probs.iter().map(|p| p.ln()).sum::<f64>()
    } else if q <= 1.0 / q_cap && y_sum <= 0.0 {
        -probs.iter().map(|p| (-p).ln_1p()).sum::<f64>()
    } else {
        score_at(y_sum, probs, q)
    }
}
