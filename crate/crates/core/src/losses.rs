//! Convex Lipschitz losses on `[0, 1]` and their V-shaped decomposition.
//!
//! Only piecewise-linear convex losses are first class. Any such loss with
//! slopes in `[-1, 1]` equals `E_{v~phi} |p - v| + C` for a discrete
//! distribution `phi` and constant `C = (l(0) + l(1) - 1)/2`; the CDF of
//! `phi` is `(dl(p) + 1)/2` with a right-continuous subgradient and
//! `dl(1) = 1`, so `phi` places an atom of half the slope jump at every
//! interior breakpoint and boundary atoms `(s_first + 1)/2` and
//! `(1 - s_last)/2`.

use serde::{Deserialize, Serialize};

use crate::dist::Dist01;
use crate::error::{Error, Result};

const SLOPE_TOL: f64 = 1e-12;

/// A convex, 1-Lipschitz, piecewise-linear loss on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PLConvexLoss {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    value_at_zero: f64,
}

impl PLConvexLoss {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, value_at_zero: f64) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid("need at least two breakpoints"));
        }
        if slopes.len() + 1 != breakpoints.len() {
            return Err(Error::invalid("need one slope per segment"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::invalid("breakpoints must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if slopes.windows(2).any(|w| w[1] < w[0] - SLOPE_TOL) {
            return Err(Error::invalid("slopes must be non-decreasing (convexity)"));
        }
        if slopes.iter().any(|s| s.abs() > 1.0 + SLOPE_TOL) {
            return Err(Error::invalid("slopes must lie in [-1, 1] (1-Lipschitz)"));
        }
        if !value_at_zero.is_finite() {
            return Err(Error::invalid("value at zero must be finite"));
        }
        Ok(PLConvexLoss { breakpoints, slopes, value_at_zero })
    }

    /// The V-shaped loss `p -> |p - v|`.
    pub fn v_shaped(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("vertex {v} outside [0,1]")));
        }
        if v == 0.0 {
            PLConvexLoss::new(vec![0.0, 1.0], vec![1.0], 0.0)
        } else if v == 1.0 {
            PLConvexLoss::new(vec![0.0, 1.0], vec![-1.0], 1.0)
        } else {
            PLConvexLoss::new(vec![0.0, v, 1.0], vec![-1.0, 1.0], v)
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// Evaluates the loss by segment lookup and linear interpolation.
    pub fn eval(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("evaluation point {p} outside [0,1]")));
        }
        let mut value = self.value_at_zero;
        for (i, &s) in self.slopes.iter().enumerate() {
            let left = self.breakpoints[i];
            let right = self.breakpoints[i + 1];
            if p <= right {
                return Ok(value + s * (p - left));
            }
            value += s * (right - left);
        }
        Ok(value)
    }

    /// Decomposes the loss into a V-shaped mixture `(phi, C)`.
    pub fn decompose(&self) -> VMixture {
        let mut pairs = Vec::with_capacity(self.breakpoints.len());
        let first = self.slopes[0];
        let last = *self.slopes.last().unwrap();
        pairs.push((0.0, (first + 1.0) / 2.0));
        for i in 1..self.slopes.len() {
            pairs.push((self.breakpoints[i], (self.slopes[i] - self.slopes[i - 1]) / 2.0));
        }
        pairs.push((1.0, (1.0 - last) / 2.0));
        pairs.retain(|&(_, m)| m > 0.0);
        let phi = Dist01::from_weighted_points(pairs)
            .expect("a validated convex loss always yields a distribution");
        let l1 = self.eval(1.0).expect("1 is in domain");
        let offset = (self.value_at_zero + l1 - 1.0) / 2.0;
        VMixture { phi, offset }
    }
}

/// A loss in mixture form: `l(p) = E_{v~phi} |p - v| + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct VMixture {
    pub phi: Dist01,
    pub offset: f64,
}

impl VMixture {
    pub fn new(phi: Dist01, offset: f64) -> Self {
        VMixture { phi, offset }
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.phi.expected_abs(p) + self.offset
    }
}

/// Scoring rules for elicitable properties of outcomes in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum ScoringRule {
    Median,
    Mean,
    Quantile { q: f64 },
}

impl ScoringRule {
    pub fn validate(&self) -> Result<()> {
        if let ScoringRule::Quantile { q } = self {
            if !(*q > 0.0 && *q < 1.0) {
                return Err(Error::domain(format!("quantile level {q} outside (0,1)")));
            }
        }
        Ok(())
    }

    /// The exact score `S(p, y)`. The mean rule reports the unscaled
    /// squared error `(p - y)^2`; the factor 1/2 applied by
    /// [`scoring_loss`] exists only to keep the predictor-facing loss
    /// 1-Lipschitz.
    pub fn score(&self, p: f64, y: f64) -> f64 {
        match *self {
            ScoringRule::Median => (p - y).abs(),
            ScoringRule::Mean => (p - y) * (p - y),
            ScoringRule::Quantile { q } => {
                if p <= y {
                    q * (y - p)
                } else {
                    (1.0 - q) * (p - y)
                }
            }
        }
    }
}

/// Number of grid cells in the chordal linearization of the mean score.
const MEAN_GRID: usize = 64;

/// Realizes a scoring rule at outcome `y` as a piecewise-linear convex loss.
///
/// The median gives `|p - y|`; the quantile rule gives the pinball loss
/// with slope `-q` left of `y` and `1 - q` right of it; the mean score is
/// halved and chordally linearized on a grid of step 1/64.
pub fn scoring_loss(rule: &ScoringRule, y: f64) -> Result<PLConvexLoss> {
    rule.validate()?;
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("outcome {y} outside [0,1]")));
    }
    match *rule {
        ScoringRule::Median => PLConvexLoss::v_shaped(y),
        ScoringRule::Quantile { q } => {
            if y == 0.0 {
                PLConvexLoss::new(vec![0.0, 1.0], vec![1.0 - q], 0.0)
            } else if y == 1.0 {
                PLConvexLoss::new(vec![0.0, 1.0], vec![-q], q)
            } else {
                PLConvexLoss::new(vec![0.0, y, 1.0], vec![-q, 1.0 - q], q * y)
            }
        }
        ScoringRule::Mean => {
            let f = |p: f64| 0.5 * (p - y) * (p - y);
            let step = 1.0 / MEAN_GRID as f64;
            let breakpoints: Vec<f64> = (0..=MEAN_GRID).map(|j| j as f64 * step).collect();
            let slopes: Vec<f64> = (0..MEAN_GRID)
                .map(|j| {
                    let a = breakpoints[j];
                    let b = breakpoints[j + 1];
                    ((f(b) - f(a)) / step).clamp(-1.0, 1.0)
                })
                .collect();
            PLConvexLoss::new(breakpoints, slopes, f(0.0))
        }
    }
}

/// Loss literal as it appears in JSON experiment configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LossSpec {
    Pl {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        at_zero: f64,
    },
    Score {
        #[serde(flatten)]
        rule: ScoringRule,
        y: f64,
    },
}

impl LossSpec {
    pub fn build(&self) -> Result<PLConvexLoss> {
        match self {
            LossSpec::Pl { breakpoints, slopes, at_zero } => {
                PLConvexLoss::new(breakpoints.clone(), slopes.clone(), *at_zero)
            }
            LossSpec::Score { rule, y } => scoring_loss(rule, *y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_v_loss() {
        let l = PLConvexLoss::v_shaped(0.5).unwrap();
        assert_eq!(l.eval(0.0).unwrap(), 0.5);
        assert_eq!(l.eval(0.5).unwrap(), 0.0);
        assert_eq!(l.eval(1.0).unwrap(), 0.5);
        assert!(l.eval(-0.1).is_err());
        assert!(l.eval(1.1).is_err());
    }

    #[test]
    fn eval_trapezoid() {
        let l = PLConvexLoss::new(vec![0.0, 0.25, 0.75, 1.0], vec![-1.0, 0.0, 1.0], 0.25).unwrap();
        assert_eq!(l.eval(0.5).unwrap(), 0.0);
        assert_eq!(l.eval(0.25).unwrap(), 0.0);
        assert_eq!(l.eval(1.0).unwrap(), 0.25);
    }

    #[test]
    fn decompose_v_loss() {
        let vm = PLConvexLoss::v_shaped(0.5).unwrap().decompose();
        assert_eq!(vm.phi.support(), &[0.5]);
        assert_eq!(vm.offset, 0.0);
    }

    #[test]
    fn decompose_linear_loss() {
        let l = PLConvexLoss::new(vec![0.0, 1.0], vec![1.0], 0.0).unwrap();
        let vm = l.decompose();
        assert_eq!(vm.phi.support(), &[0.0]);
        assert_eq!(vm.offset, 0.0);
        for p in [0.0, 0.3, 1.0] {
            assert!((vm.eval(p) - p).abs() <= 1e-15);
        }
    }

    #[test]
    fn decompose_trapezoid() {
        let l = PLConvexLoss::new(vec![0.0, 0.25, 0.75, 1.0], vec![-1.0, 0.0, 1.0], 0.25).unwrap();
        let vm = l.decompose();
        assert_eq!(vm.phi.support(), &[0.25, 0.75]);
        assert_eq!(vm.phi.mass(), &[0.5, 0.5]);
        assert_eq!(vm.offset, -0.25);
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            assert!((vm.eval(p) - l.eval(p).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn scoring_median() {
        let l = scoring_loss(&ScoringRule::Median, 0.3).unwrap();
        assert!((l.eval(0.0).unwrap() - 0.3).abs() <= 1e-15);
        assert_eq!(l.eval(0.3).unwrap(), 0.0);
        // Degenerate V at the endpoint decomposes to a point mass at 0.
        let l = scoring_loss(&ScoringRule::Median, 0.0).unwrap();
        let vm = l.decompose();
        assert_eq!(vm.phi.support(), &[0.0]);
    }

    #[test]
    fn scoring_quantile_pinball() {
        let l = scoring_loss(&ScoringRule::Quantile { q: 0.9 }, 0.5).unwrap();
        assert!((l.eval(0.0).unwrap() - 0.45).abs() <= 1e-15);
        assert_eq!(l.eval(0.5).unwrap(), 0.0);
        assert!((l.eval(1.0).unwrap() - 0.05).abs() <= 1e-15);
        assert!(scoring_loss(&ScoringRule::Quantile { q: 1.2 }, 0.5).is_err());
    }

    #[test]
    fn scoring_mean_linearization() {
        let l = scoring_loss(&ScoringRule::Mean, 0.5).unwrap();
        // Chordal approximation agrees with p^2/2 - related values at grid
        // points and stays within one cell's sag elsewhere.
        assert_eq!(l.eval(0.5).unwrap(), 0.0);
        let exact = 0.5 * (0.25f64 - 0.5) * (0.25 - 0.5);
        assert!((l.eval(0.25).unwrap() - exact).abs() <= 1e-12);
        assert!((l.eval(0.3).unwrap() - 0.5 * 0.04).abs() <= 1e-4);
    }

    #[test]
    fn rejects_invalid_losses() {
        assert!(PLConvexLoss::new(vec![0.0, 1.0], vec![-1.0, 1.0], 0.0).is_err());
        assert!(PLConvexLoss::new(vec![0.0, 0.5, 1.0], vec![1.0, -1.0], 0.0).is_err());
        assert!(PLConvexLoss::new(vec![0.0, 0.5, 1.0], vec![-2.0, 1.0], 0.0).is_err());
        assert!(PLConvexLoss::new(vec![0.1, 1.0], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn loss_spec_json_round_trip() {
        let spec: LossSpec = serde_json::from_str(
            r#"{"type":"pl","breakpoints":[0.0,0.5,1.0],"slopes":[-1.0,1.0],"at_zero":0.5}"#,
        )
        .unwrap();
        let l = spec.build().unwrap();
        assert_eq!(l.eval(0.5).unwrap(), 0.0);
        let spec: LossSpec =
            serde_json::from_str(r#"{"type":"score","rule":"quantile","q":0.9,"y":0.5}"#).unwrap();
        let l = spec.build().unwrap();
        assert!((l.eval(0.0).unwrap() - 0.45).abs() <= 1e-15);
        let spec: LossSpec =
            serde_json::from_str(r#"{"type":"score","rule":"median","y":0.25}"#).unwrap();
        assert!(spec.build().is_ok());
    }
}
