//! Feasible prediction distributions via a small dense LP.
//!
//! Given a mixed constraint `hbar`, we need `kappa` on the bins with
//! `E_{theta~kappa} hbar(theta, v) <= 0` for every outcome `v`; such a
//! `kappa` always exists because the truthful bin certifies one for every
//! outcome distribution. Restricting `v` to the finite probe set makes
//! this a matrix game `min_kappa max_v kappa' G` with entries in
//! `[-1, 1]`. We shift the matrix by +2 to make the game value positive
//! and solve the classic normalized form
//!
//! ```text
//! maximize sum(y)  subject to  (G + 2)' y <= 1,  y >= 0,
//! ```
//!
//! whose optimum `y*` gives `kappa = y*/sum(y*)` and game value
//! `1/sum(y*)`. The all-slack basis is feasible, so a single-phase primal
//! simplex with Bland's rule suffices and is deterministic.

use rand::Rng;

use crate::binning::BinSystem;
use crate::constraints::MixedConstraint;
use crate::error::{Error, Result};

/// Feasibility slack allowed on the post-check; far above f64 rounding at
/// this problem size, far below the smallest constraint constant.
pub const FEASIBILITY_TOL: f64 = 1e-7;

const PIVOT_CAP: usize = 100_000;
const SHIFT: f64 = 2.0;

/// A probability distribution over the bins of a [`BinSystem`], dense in
/// flat theta order.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaDist {
    probs: Vec<f64>,
}

impl KappaDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty distribution"));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("negative probability"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(KappaDist { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF sample of a flat theta index.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if x < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Solves for `kappa` with `max_v E_{theta~kappa}[hbar(theta, v)]` at most
/// [`FEASIBILITY_TOL`] over the probe set.
pub fn solve_kappa(hbar: &MixedConstraint, sys: &BinSystem, v_set: &[f64]) -> Result<KappaDist> {
    let n = sys.theta_len();
    if v_set.is_empty() {
        return Err(Error::domain("empty outcome probe set"));
    }
    // Rows are outcomes, columns are bins; entries shifted into [1, 3].
    let rows: Vec<Vec<f64>> = v_set
        .iter()
        .map(|&v| (0..n).map(|theta| hbar.eval(sys, theta, v) + SHIFT).collect())
        .collect();
    let y = simplex_max_unit(&rows, n)?;
    let total: f64 = y.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Solver(format!("degenerate normalization {total}")));
    }
    let mut probs: Vec<f64> = y.iter().map(|&yi| (yi / total).max(0.0)).collect();
    let mass: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= mass;
    }
    let kappa = KappaDist::new(probs)?;
    // Solver-independent feasibility check by direct summation.
    let worst = v_set
        .iter()
        .map(|&v| {
            kappa
                .probs
                .iter()
                .enumerate()
                .map(|(theta, &p)| p * hbar.eval(sys, theta, v))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > FEASIBILITY_TOL {
        return Err(Error::Solver(format!(
            "kappa violates a constraint by {worst}; the feasibility LP should have optimum <= 0"
        )));
    }
    Ok(kappa)
}

/// Primal simplex for `max sum(y) s.t. A y <= 1, y >= 0` with `A > 0`.
/// Bland's rule throughout, so no cycling and a deterministic pivot path.
fn simplex_max_unit(a: &[Vec<f64>], n_vars: usize) -> Result<Vec<f64>> {
    const ENTER_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-11;
    let m = a.len();
    let cols = n_vars + m;
    let mut tab: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = vec![0.0; cols + 1];
            r[..n_vars].copy_from_slice(row);
            r[n_vars + i] = 1.0;
            r[cols] = 1.0;
            r
        })
        .collect();
    let mut obj = vec![0.0; cols + 1];
    for cell in obj.iter_mut().take(n_vars) {
        *cell = 1.0;
    }
    let mut basis: Vec<usize> = (n_vars..cols).collect();

    for _ in 0..PIVOT_CAP {
        let Some(enter) = (0..cols).find(|&j| obj[j] > ENTER_TOL) else {
            let mut y = vec![0.0; n_vars];
            for (i, &b) in basis.iter().enumerate() {
                if b < n_vars {
                    y[b] = tab[i][cols];
                }
            }
            return Ok(y);
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let coef = tab[i][enter];
            if coef > PIVOT_TOL {
                let ratio = tab[i][cols] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - 1e-12
                            || ((ratio - best).abs() <= 1e-12 && basis[i] < basis[l])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::Solver(
                "unbounded direction in a bounded game LP".into(),
            ));
        };
        let pivot = tab[leave][enter];
        for x in &mut tab[leave] {
            *x /= pivot;
        }
        let pivot_row = tab[leave].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != leave && row[enter] != 0.0 {
                let f = row[enter];
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        if obj[enter] != 0.0 {
            let f = obj[enter];
            for (x, &p) in obj.iter_mut().zip(&pivot_row) {
                *x -= f * p;
            }
        }
        basis[leave] = enter;
    }
    Err(Error::Solver(format!("pivot cap {PIVOT_CAP} exceeded")))
}

/// The value `max_v E_{theta~kappa}[hbar(theta, v)]` over a probe set;
/// exposed so harness verification can re-check transcripts.
pub fn feasibility_gap(
    kappa: &KappaDist,
    hbar: &MixedConstraint,
    sys: &BinSystem,
    v_set: &[f64],
) -> f64 {
    v_set
        .iter()
        .map(|&v| {
            kappa
                .probs()
                .iter()
                .enumerate()
                .map(|(theta, &p)| p * hbar.eval(sys, theta, v))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{breakpoints, constraint_count, ConstraintId, Xi};
    use rand::SeedableRng;

    #[test]
    fn single_constraint_weight_is_satisfiable() {
        let sys = BinSystem::build(0.1).unwrap();
        let v_set = breakpoints(&sys);
        let mut w = vec![0.0; constraint_count(&sys)];
        w[ConstraintId { theta: 7, xi: Xi::PlusTwo }.flat()] = 1.0;
        let hbar = MixedConstraint::mix(&sys, &w).unwrap();
        let kappa = solve_kappa(&hbar, &sys, &v_set).unwrap();
        assert!(feasibility_gap(&kappa, &hbar, &sys, &v_set) <= FEASIBILITY_TOL);
    }

    #[test]
    fn degenerate_system_hand_solution() {
        // gamma = 1: theta = {(1,0), (1,1)}. All weight on ((1,0),+1)
        // makes hbar((1,0), v) = -1 for every v, so kappa = delta_{(1,0)}
        // attains objective -1.
        let sys = BinSystem::build(1.0).unwrap();
        let v_set = breakpoints(&sys);
        let mut w = vec![0.0; constraint_count(&sys)];
        w[ConstraintId { theta: 0, xi: Xi::PlusOne }.flat()] = 1.0;
        let hbar = MixedConstraint::mix(&sys, &w).unwrap();
        for &v in &v_set {
            assert!((hbar.eval(&sys, 0, v) + 1.0).abs() <= 1e-12);
        }
        let kappa = solve_kappa(&hbar, &sys, &v_set).unwrap();
        let gap = feasibility_gap(&kappa, &hbar, &sys, &v_set);
        assert!(gap <= 0.0, "gap {gap}");
    }

    #[test]
    fn random_mixtures_feasible() {
        let sys = BinSystem::build(0.1).unwrap();
        let v_set = breakpoints(&sys);
        let n = constraint_count(&sys);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let hbar = MixedConstraint::mix(&sys, &w).unwrap();
            let kappa = solve_kappa(&hbar, &sys, &v_set).unwrap();
            assert!(feasibility_gap(&kappa, &hbar, &sys, &v_set) <= FEASIBILITY_TOL);
        }
    }

    #[test]
    fn deterministic_solution() {
        let sys = BinSystem::build(0.2).unwrap();
        let v_set = breakpoints(&sys);
        let n = constraint_count(&sys);
        let w: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.into_iter().map(|x| x / total).collect();
        let hbar = MixedConstraint::mix(&sys, &w).unwrap();
        let a = solve_kappa(&hbar, &sys, &v_set).unwrap();
        let b = solve_kappa(&hbar, &sys, &v_set).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_in_range_and_seeded() {
        let kappa = KappaDist::new(vec![0.25, 0.25, 0.5]).unwrap();
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = kappa.sample(&mut r1);
            assert_eq!(a, kappa.sample(&mut r2));
            assert!(a < 3);
        }
    }

    #[test]
    fn rejects_bad_kappa() {
        assert!(KappaDist::new(vec![]).is_err());
        assert!(KappaDist::new(vec![0.5, 0.6]).is_err());
        assert!(KappaDist::new(vec![-0.1, 1.1]).is_err());
    }
}
