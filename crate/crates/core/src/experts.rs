//! Expert algorithm over constraint ids with a second-moment regret
//! guarantee.
//!
//! Each constraint is paired with every learning rate in a geometric grid
//! `eta_j = 2^-j / 32`, `j = 0..ceil(log2 T)`, giving one sub-expert per
//! pair. A round multiplies sub-expert `(i, j)` by
//! `exp(-eta_j (c_i + eta_j c_i^2) - eta_j lambda)` where `c_i` is the
//! negated reward and `lambda` is the unique normalizer making the weights
//! sum to one; `sum_k w_k exp(-eta_k lambda)` is strictly decreasing in
//! `lambda`, so a fixed-count bisection finds it deterministically. The
//! marginal over constraints is what callers consume, and its regret to any
//! fixed id scales with that id's squared-reward sum rather than the
//! horizon.

use crate::error::{Error, Result};

const RATE_CAP: f64 = 1.0 / 32.0;

#[derive(Debug, Clone)]
pub struct ExpertState {
    n_constraints: usize,
    rates: Vec<f64>,
    /// Sub-expert weights, laid out constraint-major: `w[i * rates + j]`.
    weights: Vec<f64>,
    round: u64,
}

impl ExpertState {
    /// Fresh state for `n_constraints` experts and a known horizon.
    ///
    /// The prior puts mass proportional to `eta_j^2` on rate `j` and is
    /// uniform across constraints.
    pub fn init(n_constraints: usize, horizon: u64) -> Result<Self> {
        if n_constraints == 0 {
            return Err(Error::domain("need at least one constraint"));
        }
        if horizon < 2 {
            return Err(Error::domain("horizon must be at least 2"));
        }
        let levels = log2_ceil(horizon) + 1;
        let rates: Vec<f64> = (0..levels).map(|j| RATE_CAP / (1u64 << j) as f64).collect();
        Ok(Self::with_rates(n_constraints, rates))
    }

    /// State with an explicit rate grid. Exposed for tests and diagnostics;
    /// [`ExpertState::init`] is the production entry point.
    pub fn with_rates(n_constraints: usize, rates: Vec<f64>) -> Self {
        assert!(!rates.is_empty() && rates.iter().all(|&e| e > 0.0 && e <= RATE_CAP));
        let z: f64 = rates.iter().map(|e| e * e).sum();
        let mut weights = Vec::with_capacity(n_constraints * rates.len());
        for _ in 0..n_constraints {
            for &e in &rates {
                weights.push(e * e / (z * n_constraints as f64));
            }
        }
        ExpertState { n_constraints, rates, weights, round: 0 }
    }

    pub fn n_constraints(&self) -> usize {
        self.n_constraints
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Marginal weights over constraint ids; a probability simplex.
    pub fn weights(&self) -> Vec<f64> {
        let k = self.rates.len();
        (0..self.n_constraints)
            .map(|i| self.weights[i * k..(i + 1) * k].iter().sum())
            .collect()
    }

    /// Feeds one round of rewards (one per constraint, each in `[-1, 1]`).
    pub fn update(&mut self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.n_constraints {
            return Err(Error::domain(format!(
                "expected {} rewards, got {}",
                self.n_constraints,
                rewards.len()
            )));
        }
        if let Some(u) = rewards.iter().find(|u| u.abs() > 1.0 + 1e-9) {
            return Err(Error::domain(format!("reward {u} outside [-1, 1]")));
        }
        if rewards.iter().all(|&u| u == 0.0) {
            // lambda = 0 solves normalization and every multiplier is 1.
            self.round += 1;
            return Ok(());
        }
        let k = self.rates.len();
        // Corrected losses per sub-expert: c + eta c^2 with c = -u.
        let mut corrected = vec![0.0; self.n_constraints * k];
        for i in 0..self.n_constraints {
            let c = -rewards[i].clamp(-1.0, 1.0);
            for (j, &eta) in self.rates.iter().enumerate() {
                corrected[i * k + j] = c + eta * c * c;
            }
        }
        let mass = |lambda: f64, weights: &[f64]| -> f64 {
            let mut total = 0.0;
            for i in 0..self.n_constraints {
                for (j, &eta) in self.rates.iter().enumerate() {
                    let idx = i * k + j;
                    total += weights[idx] * (-eta * (corrected[idx] + lambda)).exp();
                }
            }
            total
        };
        let lambda = if (mass(0.0, &self.weights) - 1.0).abs() <= 1e-15 {
            0.0
        } else {
            let mut lo = -1.2;
            let mut hi = 1.2;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if mass(mid, &self.weights) >= 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for i in 0..self.n_constraints {
            for (j, &eta) in self.rates.iter().enumerate() {
                let idx = i * k + j;
                self.weights[idx] *= (-eta * (corrected[idx] + lambda)).exp();
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        self.round += 1;
        Ok(())
    }
}

fn log2_ceil(x: u64) -> usize {
    (64 - (x - 1).leading_zeros()) as usize
}
