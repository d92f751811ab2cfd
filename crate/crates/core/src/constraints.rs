//! Indicator constraint families over bins.
//!
//! For every bin `(r, b)` there are four constraints indexed by
//! `xi in {-2, -1, +1, +2}`; each is a function of the played bin
//! `(r', b')` and the outcome `v` that vanishes off its own bin:
//!
//! ```text
//! h_{r,b,+2} = I[(r',b') = (r,b)] (I[v > b + 2r] - (1/2 - gamma/4r))
//! h_{r,b,-2} = I[(r',b') = (r,b)] (I[v < b - 2r] - (1/2 - gamma/4r))
//! h_{r,b,+1} = I[(r',b') = (r,b)] ((1/2 - gamma/2r) - I[v >= b])
//! h_{r,b,-1} = I[(r',b') = (r,b)] ((1/2 - gamma/2r) - I[v <= b])
//! ```
//!
//! A mixed constraint stores the four weights per bin so evaluating it at
//! `(r', b', v)` touches only that bin's entries. The outcome dependence is
//! piecewise constant with thresholds `b - 2r`, `b`, `b + 2r`, so a finite
//! probe set (thresholds plus midpoints) represents every outcome the LP
//! has to guard against.

use crate::binning::BinSystem;
use crate::error::{Error, Result};

/// Which of the four constraint families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Xi {
    MinusTwo,
    MinusOne,
    PlusOne,
    PlusTwo,
}

impl Xi {
    pub const ALL: [Xi; 4] = [Xi::MinusTwo, Xi::MinusOne, Xi::PlusOne, Xi::PlusTwo];

    pub fn index(self) -> usize {
        match self {
            Xi::MinusTwo => 0,
            Xi::MinusOne => 1,
            Xi::PlusOne => 2,
            Xi::PlusTwo => 3,
        }
    }

    pub fn from_index(i: usize) -> Xi {
        Xi::ALL[i]
    }
}

/// Identifies one constraint: a flat bin index into the system's theta
/// list plus the family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintId {
    pub theta: usize,
    pub xi: Xi,
}

impl ConstraintId {
    /// Flat index in `[0, 4 |Theta|)`; the expert algorithm runs over this
    /// range.
    pub fn flat(self) -> usize {
        self.theta * 4 + self.xi.index()
    }

    pub fn from_flat(flat: usize) -> ConstraintId {
        ConstraintId { theta: flat / 4, xi: Xi::from_index(flat % 4) }
    }
}

/// Total number of constraints for a bin system.
pub fn constraint_count(sys: &BinSystem) -> usize {
    4 * sys.theta_len()
}

/// The value of `h_{id}(theta_prime, v)`.
pub fn h_eval(sys: &BinSystem, id: ConstraintId, theta_prime: usize, v: f64) -> f64 {
    if id.theta != theta_prime {
        return 0.0;
    }
    let pair = sys.theta()[id.theta];
    h_own(id.xi, pair.r, pair.b, sys.gamma(), v)
}

/// The nonzero part of a constraint, evaluated at its own bin.
pub fn h_own(xi: Xi, r: f64, b: f64, gamma: f64, v: f64) -> f64 {
    match xi {
        Xi::PlusTwo => ind(v > b + 2.0 * r) - (0.5 - gamma / (4.0 * r)),
        Xi::MinusTwo => ind(v < b - 2.0 * r) - (0.5 - gamma / (4.0 * r)),
        Xi::PlusOne => (0.5 - gamma / (2.0 * r)) - ind(v >= b),
        Xi::MinusOne => (0.5 - gamma / (2.0 * r)) - ind(v <= b),
    }
}

fn ind(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// A convex combination of constraints, grouped by bin.
#[derive(Debug, Clone)]
pub struct MixedConstraint {
    /// Per flat theta index: weights for `[-2, -1, +1, +2]` in `Xi` order.
    weights: Vec<[f64; 4]>,
}

impl MixedConstraint {
    /// Groups a weight vector indexed by [`ConstraintId::flat`]. Weights
    /// must be nonnegative and sum to one within `1e-9`.
    pub fn mix(sys: &BinSystem, weights: &[f64]) -> Result<Self> {
        if weights.len() != constraint_count(sys) {
            return Err(Error::domain(format!(
                "expected {} constraint weights, got {}",
                constraint_count(sys),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::domain(format!("negative constraint weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("constraint weights sum to {total}")));
        }
        let grouped = weights
            .chunks_exact(4)
            .map(|c| [c[0], c[1], c[2], c[3]])
            .collect();
        Ok(MixedConstraint { weights: grouped })
    }

    /// Evaluates the mixture at `(theta_prime, v)`.
    pub fn eval(&self, sys: &BinSystem, theta_prime: usize, v: f64) -> f64 {
        let pair = sys.theta()[theta_prime];
        let w = &self.weights[theta_prime];
        let mut acc = 0.0;
        for xi in Xi::ALL {
            let wx = w[xi.index()];
            if wx != 0.0 {
                acc += wx * h_own(xi, pair.r, pair.b, sys.gamma(), v);
            }
        }
        acc
    }

    pub fn bin_weights(&self, theta: usize) -> [f64; 4] {
        self.weights[theta]
    }
}

/// The finite outcome probe set `V`: 0, 1, every clamped threshold
/// `b - 2r`, `b`, `b + 2r`, and the midpoints of consecutive distinct
/// thresholds. Every piece of every `h` is represented by some element.
pub fn breakpoints(sys: &BinSystem) -> Vec<f64> {
    let mut thresholds = vec![0.0, 1.0];
    for pair in sys.theta() {
        thresholds.push((pair.b - 2.0 * pair.r).clamp(0.0, 1.0));
        thresholds.push(pair.b);
        thresholds.push((pair.b + 2.0 * pair.r).clamp(0.0, 1.0));
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut out = Vec::with_capacity(2 * thresholds.len());
    for (i, &t) in thresholds.iter().enumerate() {
        out.push(t);
        if i + 1 < thresholds.len() {
            let mid = 0.5 * (t + thresholds[i + 1]);
            // Thresholds one ulp apart have no float strictly between them.
            if mid > t && mid < thresholds[i + 1] {
                out.push(mid);
            }
        }
    }
    out
}
