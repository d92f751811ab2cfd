//! The three prediction strategies.
//!
//! [`EfficientPredictor`] plays the original protocol: commit to a
//! distribution over bins, then see the loss. Each round it mixes the
//! constraint families with expert weights, solves the feasibility LP for
//! `kappa_t`, samples a bin, and after observing the loss feeds every
//! constraint its expected value under `(kappa_t, phi_t)` as a reward.
//!
//! [`truthful_predict`] plays the order-reversed protocol where the
//! adversary reveals a loss distribution first: it takes the width of the
//! mean outcome distribution and plays a bin inside the witness interval.
//!
//! [`FixedGridPredictor`] is the classical baseline: one multiplicative
//! weights instance per grid point, combined through the stationary
//! distribution of the row-weight matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::{BinPair, BinSystem};
use crate::constraints::{self, ConstraintId, MixedConstraint, Xi};
use crate::dist::{self, Dist01};
use crate::error::{Error, Result};
use crate::experts::ExpertState;
use crate::feasibility::{solve_kappa, KappaDist};
use crate::losses::{PLConvexLoss, VMixture};

/// One played round. For bin-based predictors `p` equals the bin value;
/// the baseline leaves the scale and bin unset. Rewards are derived data
/// and are not serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub p: f64,
    pub phi_support: Vec<f64>,
    pub phi_mass: Vec<f64>,
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
    #[serde(skip)]
    pub rewards: Vec<f64>,
}

impl RoundRecord {
    pub fn loss(&self) -> Result<VMixture> {
        Ok(VMixture::new(
            Dist01::new(self.phi_support.clone(), self.phi_mass.clone())?,
            self.offset,
        ))
    }

    pub fn realized_loss_at_p(&self) -> Result<f64> {
        Ok(self.loss()?.eval(self.p))
    }
}

/// A full run: config echo plus the ordered round records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub algorithm: String,
    pub horizon: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub rounds: Vec<RoundRecord>,
}

/// What `predict` commits to before the adversary reveals anything.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub kappa: KappaDist,
    pub scale: f64,
    pub bin: f64,
    pub p: f64,
}

#[derive(Debug)]
struct PendingRound {
    kappa: KappaDist,
    theta: usize,
}

/// The efficient randomized predictor for the commit-first protocol.
#[derive(Debug)]
pub struct EfficientPredictor {
    horizon: u64,
    delta: f64,
    gamma: f64,
    seed: u64,
    sys: BinSystem,
    v_set: Vec<f64>,
    experts: ExpertState,
    rng: ChaCha8Rng,
    round: u64,
    pending: Option<PendingRound>,
    records: Vec<RoundRecord>,
}

impl EfficientPredictor {
    /// `min(1, sqrt(ln(T) ln(1/delta) / T))`.
    pub fn gamma_for(horizon: u64, delta: f64) -> f64 {
        let t = horizon as f64;
        ((t.ln() * (1.0 / delta).ln()) / t).sqrt().min(1.0)
    }

    pub fn new(horizon: u64, delta: f64, seed: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::domain("horizon must be at least 2"));
        }
        if !(delta > 0.0 && delta <= 1.0 / horizon as f64) {
            return Err(Error::domain(format!(
                "delta {delta} outside (0, 1/{horizon}]"
            )));
        }
        let gamma = Self::gamma_for(horizon, delta);
        let sys = BinSystem::build(gamma)?;
        let v_set = constraints::breakpoints(&sys);
        let experts = ExpertState::init(constraints::constraint_count(&sys), horizon)?;
        Ok(EfficientPredictor {
            horizon,
            delta,
            gamma,
            seed,
            sys,
            v_set,
            experts,
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
            pending: None,
            records: Vec::new(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bin_system(&self) -> &BinSystem {
        &self.sys
    }

    pub fn outcome_probes(&self) -> &[f64] {
        &self.v_set
    }

    pub fn rounds_played(&self) -> u64 {
        self.round
    }

    /// Commits to this round's `kappa_t` and samples the prediction.
    /// Must alternate with [`EfficientPredictor::observe`].
    pub fn predict(&mut self) -> Result<Prediction> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "predict called twice without observing a loss".into(),
            ));
        }
        if self.round >= self.horizon {
            return Err(Error::Protocol("horizon exhausted".into()));
        }
        let weights = self.experts.weights();
        let hbar = MixedConstraint::mix(&self.sys, &weights)?;
        let kappa = solve_kappa(&hbar, &self.sys, &self.v_set)?;
        let theta = kappa.sample(&mut self.rng);
        let pair = self.sys.theta()[theta];
        self.pending = Some(PendingRound { kappa: kappa.clone(), theta });
        Ok(Prediction { kappa, scale: pair.r, bin: pair.b, p: pair.b })
    }

    /// Consumes the revealed loss: computes constraint rewards under the
    /// committed `kappa_t` (not the sampled bin), updates the experts, and
    /// appends the round record.
    pub fn observe(&mut self, loss: &PLConvexLoss) -> Result<&RoundRecord> {
        let Some(pending) = self.pending.take() else {
            return Err(Error::Protocol("observe called before predict".into()));
        };
        let vm = loss.decompose();
        let rewards = constraint_rewards(&self.sys, &pending.kappa, &vm.phi);
        self.experts.update(&rewards)?;
        self.round += 1;
        let pair = self.sys.theta()[pending.theta];
        self.records.push(RoundRecord {
            t: self.round,
            r: Some(pair.r),
            b: Some(pair.b),
            p: pair.b,
            phi_support: vm.phi.support().to_vec(),
            phi_mass: vm.phi.mass().to_vec(),
            offset: vm.offset,
            kappa: Some(pending.kappa.probs().to_vec()),
            rewards,
        });
        Ok(self.records.last().unwrap())
    }

    pub fn into_transcript(self) -> Transcript {
        Transcript {
            algorithm: "efficient".into(),
            horizon: self.horizon,
            seed: self.seed,
            delta: Some(self.delta),
            gamma: Some(self.gamma),
            rounds: self.records,
        }
    }
}

/// Expected constraint values under `(kappa, phi)`: the reward for id
/// `(r, b, xi)` is `kappa(r,b) * E_{v~phi} h_{r,b,xi}((r,b), v)`.
pub fn constraint_rewards(sys: &BinSystem, kappa: &KappaDist, phi: &Dist01) -> Vec<f64> {
    let gamma = sys.gamma();
    let mut rewards = vec![0.0; constraints::constraint_count(sys)];
    for (theta, pair) in sys.theta().iter().enumerate() {
        let k = kappa.probs()[theta];
        if k == 0.0 {
            continue;
        }
        let c2 = 0.5 - gamma / (4.0 * pair.r);
        let c1 = 0.5 - gamma / (2.0 * pair.r);
        let flat = |xi: Xi| ConstraintId { theta, xi }.flat();
        rewards[flat(Xi::PlusTwo)] = k * (phi.pr_gt(pair.b + 2.0 * pair.r) - c2);
        rewards[flat(Xi::MinusTwo)] = k * (phi.pr_lt(pair.b - 2.0 * pair.r) - c2);
        rewards[flat(Xi::PlusOne)] = k * (c1 - phi.pr_ge(pair.b));
        rewards[flat(Xi::MinusOne)] = k * (c1 - phi.pr_le(pair.b));
    }
    rewards
}

/// The truthful bin for a revealed loss distribution: mix the component
/// outcome distributions (offsets shift losses by constants and are
/// ignored), take the width of the mixture, and locate its bin.
pub fn truthful_predict(sys: &BinSystem, pi: &[(VMixture, f64)]) -> Result<BinPair> {
    if pi.is_empty() {
        return Err(Error::domain("empty loss distribution"));
    }
    let dists: Vec<Dist01> = pi.iter().map(|(vm, _)| vm.phi.clone()).collect();
    let weights: Vec<f64> = pi.iter().map(|(_, w)| *w).collect();
    let phibar = dist::mixture(&dists, &weights)?;
    let wr = phibar.gamma_width(sys.gamma())?;
    sys.locate(&wr)
}

/// Classical per-bin swap-regret reduction over a fixed uniform grid:
/// one multiplicative-weights instance per grid point, combined through
/// the stationary distribution of the row-weight matrix.
#[derive(Debug)]
pub struct FixedGridPredictor {
    grid: Vec<f64>,
    instances: Vec<Vec<f64>>,
    eta: f64,
    seed: u64,
    horizon: u64,
    round: u64,
    rng: ChaCha8Rng,
    pending: Option<(Vec<f64>, usize)>,
    records: Vec<RoundRecord>,
}

const STATIONARY_TOL: f64 = 1e-10;

impl FixedGridPredictor {
    pub fn new(m: usize, horizon: u64, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain("grid needs at least two points"));
        }
        if horizon < 1 {
            return Err(Error::domain("horizon must be positive"));
        }
        let grid = (0..m).map(|j| j as f64 / (m - 1) as f64).collect();
        let eta = (8.0 * (m as f64).ln() / horizon as f64).sqrt().min(0.5);
        Ok(FixedGridPredictor {
            grid,
            instances: vec![vec![1.0 / m as f64; m]; m],
            eta,
            seed,
            horizon,
            round: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
            records: Vec::new(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Fixed point of the row-weight matrix by power iteration.
    pub fn stationary(&self) -> Vec<f64> {
        let m = self.grid.len();
        let mut rho = vec![1.0 / m as f64; m];
        let mut next = vec![0.0; m];
        for _ in 0..100_000 {
            for x in next.iter_mut() {
                *x = 0.0;
            }
            for (i, row) in self.instances.iter().enumerate() {
                for (j, &q) in row.iter().enumerate() {
                    next[j] += rho[i] * q;
                }
            }
            let diff: f64 = rho.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut rho, &mut next);
            if diff <= STATIONARY_TOL {
                break;
            }
        }
        rho
    }

    pub fn predict(&mut self) -> Result<f64> {
        if self.pending.is_some() {
            return Err(Error::Protocol(
                "predict called twice without observing a loss".into(),
            ));
        }
        if self.round >= self.horizon {
            return Err(Error::Protocol("horizon exhausted".into()));
        }
        let rho = self.stationary();
        let x: f64 = rand::Rng::random(&mut self.rng);
        let mut arm = rho.len() - 1;
        let mut acc = 0.0;
        for (i, &p) in rho.iter().enumerate() {
            acc += p;
            if x < acc {
                arm = i;
                break;
            }
        }
        let p = self.grid[arm];
        self.pending = Some((rho, arm));
        Ok(p)
    }

    pub fn observe(&mut self, loss: &PLConvexLoss) -> Result<&RoundRecord> {
        let Some((rho, arm)) = self.pending.take() else {
            return Err(Error::Protocol("observe called before predict".into()));
        };
        let values: Result<Vec<f64>> = self.grid.iter().map(|&g| loss.eval(g)).collect();
        let values = values?;
        let base = values.iter().cloned().fold(f64::INFINITY, f64::min);
        for (i, row) in self.instances.iter_mut().enumerate() {
            let scale = self.eta * rho[i];
            for (w, &v) in row.iter_mut().zip(&values) {
                *w *= (-scale * (v - base)).exp();
            }
            let total: f64 = row.iter().sum();
            for w in row.iter_mut() {
                *w /= total;
            }
        }
        let vm = loss.decompose();
        self.round += 1;
        self.records.push(RoundRecord {
            t: self.round,
            r: None,
            b: None,
            p: self.grid[arm],
            phi_support: vm.phi.support().to_vec(),
            phi_mass: vm.phi.mass().to_vec(),
            offset: vm.offset,
            kappa: None,
            rewards: Vec::new(),
        });
        Ok(self.records.last().unwrap())
    }

    pub fn into_transcript(self) -> Transcript {
        Transcript {
            algorithm: format!("fixed_grid_{}", self.grid.len()),
            horizon: self.horizon,
            seed: self.seed,
            delta: None,
            gamma: None,
            rounds: self.records,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{feasibility_gap, FEASIBILITY_TOL};

    #[test]
    fn gamma_formula() {
        let g = EfficientPredictor::gamma_for(2, 0.5);
        assert!((g - (2.0f64.ln() * 2.0f64.ln() / 2.0).sqrt()).abs() <= 1e-15);
        // Clamped to 1 when the formula exceeds it.
        assert_eq!(EfficientPredictor::gamma_for(2, 1e-9), 1.0);
    }

    #[test]
    fn first_kappa_is_feasible() {
        let mut pred = EfficientPredictor::new(64, 1.0 / 64.0, 1).unwrap();
        let p = pred.predict().unwrap();
        let weights = pred.experts.weights();
        let hbar = MixedConstraint::mix(&pred.sys, &weights).unwrap();
        let gap = feasibility_gap(&p.kappa, &hbar, &pred.sys, &pred.v_set);
        assert!(gap <= FEASIBILITY_TOL);
        assert_eq!(p.p, p.bin);
    }

    #[test]
    fn protocol_order_is_enforced() {
        let mut pred = EfficientPredictor::new(8, 1.0 / 8.0, 0).unwrap();
        let loss = PLConvexLoss::v_shaped(0.3).unwrap();
        assert!(pred.observe(&loss).is_err());
        pred.predict().unwrap();
        assert!(pred.predict().is_err());
        pred.observe(&loss).unwrap();
        pred.predict().unwrap();
    }

    #[test]
    fn rewards_are_bounded_and_sparse() {
        let mut pred = EfficientPredictor::new(16, 1.0 / 16.0, 3).unwrap();
        let p = pred.predict().unwrap();
        let loss = PLConvexLoss::v_shaped(0.9).unwrap();
        let rec = pred.observe(&loss).unwrap();
        for (flat, &u) in rec.rewards.iter().enumerate() {
            assert!(u.abs() <= 1.0);
            let id = ConstraintId::from_flat(flat);
            if p.kappa.probs()[id.theta] == 0.0 {
                assert_eq!(u, 0.0);
            }
        }
    }

    #[test]
    fn seeded_runs_replay() {
        let run = || {
            let mut pred = EfficientPredictor::new(16, 1.0 / 16.0, 42).unwrap();
            let mut trace = Vec::new();
            for i in 0..16u64 {
                let p = pred.predict().unwrap();
                trace.push((p.scale, p.bin));
                let v = (i % 10) as f64 / 10.0;
                pred.observe(&PLConvexLoss::v_shaped(v).unwrap()).unwrap();
            }
            (trace, pred.into_transcript())
        };
        let (t1, tr1) = run();
        let (t2, tr2) = run();
        assert_eq!(t1, t2);
        assert_eq!(
            serde_json::to_string(&tr1).unwrap(),
            serde_json::to_string(&tr2).unwrap()
        );
    }

    #[test]
    fn single_point_reward_example() {
        // kappa = delta_theta and phi = delta_v with v > b + 2r gives the
        // +2 family reward 1 - (1/2 - gamma/4r).
        let sys = BinSystem::build(0.1).unwrap();
        let theta = sys
            .theta()
            .iter()
            .position(|p| p.r == 0.1 && p.b == 0.0)
            .unwrap();
        let mut probs = vec![0.0; sys.theta_len()];
        probs[theta] = 1.0;
        let kappa = KappaDist::new(probs).unwrap();
        let phi = Dist01::point(0.9).unwrap();
        let rewards = constraint_rewards(&sys, &kappa, &phi);
        let u = rewards[ConstraintId { theta, xi: Xi::PlusTwo }.flat()];
        assert!((u - (1.0 - (0.5 - 0.1 / 0.4))).abs() <= 1e-12);
    }

    #[test]
    fn truthful_examples() {
        let sys = BinSystem::build(0.1).unwrap();
        let v = |x: f64| PLConvexLoss::v_shaped(x).unwrap().decompose();
        let pair = truthful_predict(&sys, &[(v(0.4), 1.0)]).unwrap();
        assert_eq!((pair.r, pair.b), (0.1, 0.4));
        let pair = truthful_predict(&sys, &[(v(0.0), 0.5), (v(1.0), 0.5)]).unwrap();
        assert_eq!((pair.r, pair.b), (0.8, 0.0));
        // Dyadic instance so the width lands exactly on the coarser scale:
        // the mixture on {0.375, 0.5, 0.625} has width 0.25 = 2 gamma.
        let sys = BinSystem::build(0.125).unwrap();
        let pair = truthful_predict(
            &sys,
            &[(v(0.375), 0.25), (v(0.5), 0.5), (v(0.625), 0.25)],
        )
        .unwrap();
        assert_eq!((pair.r, pair.b), (0.25, 0.5));
    }

    #[test]
    fn fixed_grid_concentrates_on_stationary_loss() {
        let mut pred = FixedGridPredictor::new(11, 2000, 5).unwrap();
        let loss = PLConvexLoss::v_shaped(0.31).unwrap();
        for _ in 0..2000 {
            pred.predict().unwrap();
            pred.observe(&loss).unwrap();
        }
        let tail: Vec<f64> = pred.records[1500..].iter().map(|r| r.p).collect();
        let near = tail.iter().filter(|&&p| (p - 0.3).abs() < 1e-9).count();
        assert!(near as f64 >= 0.9 * tail.len() as f64);
    }

    #[test]
    fn fixed_grid_two_points() {
        let mut pred = FixedGridPredictor::new(2, 200, 9).unwrap();
        let loss = PLConvexLoss::v_shaped(1.0).unwrap();
        for _ in 0..200 {
            let p = pred.predict().unwrap();
            assert!(p == 0.0 || p == 1.0);
            pred.observe(&loss).unwrap();
        }
        let ones = pred.records[100..].iter().filter(|r| r.p == 1.0).count();
        assert!(ones >= 90);
    }

    #[test]
    fn stationary_is_a_fixed_point() {
        let mut pred = FixedGridPredictor::new(5, 50, 2).unwrap();
        for i in 0..10u64 {
            pred.predict().unwrap();
            pred.observe(&PLConvexLoss::v_shaped((i % 5) as f64 / 5.0).unwrap())
                .unwrap();
        }
        let rho = pred.stationary();
        let m = rho.len();
        for j in 0..m {
            let image: f64 = (0..m).map(|i| rho[i] * pred.instances[i][j]).sum();
            assert!((image - rho[j]).abs() <= 1e-8);
        }
    }
}
