//! Loss-generating strategies for the simulation harness.
//!
//! Each strategy serves both protocols: `next_loss` emits a realized loss
//! for the commit-first game (it may read the committed `kappa_t` and the
//! history, never the current round's sampled prediction), and
//! `reveal_mixture` emits the full loss distribution for the
//! order-reversed game, from which the harness samples after the
//! predictor commits. Adversary randomness is a separate seeded stream
//! from predictor randomness so either side replays in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::BinSystem;
use crate::error::{Error, Result};
use crate::feasibility::KappaDist;
use crate::losses::{PLConvexLoss, VMixture};
use crate::predictors::RoundRecord;

fn default_grid_points() -> usize {
    101
}

/// Configuration of a loss-generating strategy. Fields map one-to-one to
/// JSON config keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    /// The same V-shaped loss `|p - v|` every round.
    FixedV { v: f64 },
    /// `v_t = b` with probability `1/2 + epsilon`, else `b + 1/2`.
    TwoPoint { b: f64, epsilon: f64 },
    /// Median scoring loss of a Bernoulli outcome.
    BernoulliMedian { bias: f64 },
    /// Median scoring loss of an outcome uniform on a fine grid strictly
    /// inside `(lo, hi)`.
    UniformGap {
        lo: f64,
        hi: f64,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
    },
    /// History- and kappa-dependent V-losses.
    Adaptive { rule: AdaptiveRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveRule {
    /// Vertex at the previous round's sampled prediction.
    FollowLast,
    /// Vertex maximizing the predictor's expected loss under the
    /// committed `kappa_t` (legal: the current sample is still unknown).
    MaxExpectedLoss,
}

impl AdversarySpec {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64, name: &str| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} {x} outside [0,1]")))
            }
        };
        match self {
            AdversarySpec::FixedV { v } => unit(*v, "v"),
            AdversarySpec::TwoPoint { b, epsilon } => {
                unit(*b, "b")?;
                if *b > 0.5 {
                    return Err(Error::domain(format!("two-point base {b} exceeds 1/2")));
                }
                if !(0.0..0.5).contains(epsilon) {
                    return Err(Error::domain(format!("epsilon {epsilon} outside [0, 1/2)")));
                }
                Ok(())
            }
            AdversarySpec::BernoulliMedian { bias } => unit(*bias, "bias"),
            AdversarySpec::UniformGap { lo, hi, grid_points } => {
                unit(*lo, "lo")?;
                unit(*hi, "hi")?;
                if lo >= hi {
                    return Err(Error::domain(format!("gap [{lo}, {hi}] is empty")));
                }
                if *grid_points == 0 {
                    return Err(Error::domain("grid_points must be positive"));
                }
                Ok(())
            }
            AdversarySpec::Adaptive { .. } => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AdversarySpec::FixedV { .. } => "fixed_v".into(),
            AdversarySpec::TwoPoint { .. } => "two_point".into(),
            AdversarySpec::BernoulliMedian { .. } => "bernoulli_median".into(),
            AdversarySpec::UniformGap { .. } => "uniform_gap".into(),
            AdversarySpec::Adaptive { .. } => "adaptive".into(),
        }
    }
}

/// A distribution over losses, as revealed in the order-reversed game.
#[derive(Debug, Clone)]
pub struct LossMixture {
    pub components: Vec<PLConvexLoss>,
    pub weights: Vec<f64>,
}

impl LossMixture {
    pub fn singleton(loss: PLConvexLoss) -> Self {
        LossMixture { components: vec![loss], weights: vec![1.0] }
    }

    pub fn sample_index(&self, rng: &mut impl Rng) -> usize {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if x < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    pub fn to_vmixtures(&self) -> Vec<(VMixture, f64)> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(l, &w)| (l.decompose(), w))
            .collect()
    }
}

/// A seeded instance of an adversary strategy.
#[derive(Debug)]
pub struct Adversary {
    spec: AdversarySpec,
    rng: ChaCha8Rng,
}

impl Adversary {
    pub fn new(spec: AdversarySpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Adversary { spec, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn spec(&self) -> &AdversarySpec {
        &self.spec
    }

    /// Next loss for the commit-first protocol.
    pub fn next_loss(
        &mut self,
        history: &[RoundRecord],
        kappa: Option<(&BinSystem, &KappaDist)>,
    ) -> PLConvexLoss {
        let v = match &self.spec {
            AdversarySpec::FixedV { v } => *v,
            AdversarySpec::TwoPoint { b, epsilon } => {
                if self.rng.random::<f64>() < 0.5 + epsilon {
                    *b
                } else {
                    b + 0.5
                }
            }
            AdversarySpec::BernoulliMedian { bias } => {
                if self.rng.random::<f64>() < *bias {
                    1.0
                } else {
                    0.0
                }
            }
            AdversarySpec::UniformGap { lo, hi, grid_points } => {
                let k = self.rng.random_range(1..=*grid_points);
                lo + k as f64 * (hi - lo) / (*grid_points as f64 + 1.0)
            }
            AdversarySpec::Adaptive { rule } => adaptive_vertex(*rule, history, kappa),
        };
        PLConvexLoss::v_shaped(v).expect("vertices are always in [0,1]")
    }

    /// The loss distribution revealed first in the order-reversed
    /// protocol.
    pub fn reveal_mixture(&mut self, history: &[RoundRecord]) -> LossMixture {
        let v = |x: f64| PLConvexLoss::v_shaped(x).expect("vertex in [0,1]");
        match &self.spec {
            AdversarySpec::FixedV { v: x } => LossMixture::singleton(v(*x)),
            AdversarySpec::TwoPoint { b, epsilon } => LossMixture {
                components: vec![v(*b), v(b + 0.5)],
                weights: vec![0.5 + epsilon, 0.5 - epsilon],
            },
            AdversarySpec::BernoulliMedian { bias } => LossMixture {
                components: vec![v(0.0), v(1.0)],
                weights: vec![1.0 - bias, *bias],
            },
            AdversarySpec::UniformGap { lo, hi, grid_points } => {
                let n = *grid_points;
                let w = 1.0 / n as f64;
                LossMixture {
                    components: (1..=n)
                        .map(|k| v(lo + k as f64 * (hi - lo) / (n as f64 + 1.0)))
                        .collect(),
                    weights: vec![w; n],
                }
            }
            AdversarySpec::Adaptive { rule } => {
                LossMixture::singleton(v(adaptive_vertex(*rule, history, None)))
            }
        }
    }

    /// Samples a realized loss from a revealed mixture using the
    /// adversary's stream.
    pub fn sample_from(&mut self, mixture: &LossMixture) -> usize {
        mixture.sample_index(&mut self.rng)
    }
}

fn adaptive_vertex(
    rule: AdaptiveRule,
    history: &[RoundRecord],
    kappa: Option<(&BinSystem, &KappaDist)>,
) -> f64 {
    let last = history.last().map(|rec| rec.p).unwrap_or(0.5);
    match rule {
        AdaptiveRule::FollowLast => last,
        AdaptiveRule::MaxExpectedLoss => {
            let Some((sys, kappa)) = kappa else {
                return last;
            };
            let mut best = (0.0, f64::NEG_INFINITY);
            for i in 0..=100 {
                let g = i as f64 / 100.0;
                let value: f64 = sys
                    .theta()
                    .iter()
                    .zip(kappa.probs())
                    .map(|(pair, &k)| k * (pair.b - g).abs())
                    .sum();
                if value > best.1 {
                    best = (g, value);
                }
            }
            best.0
        }
    }
}
