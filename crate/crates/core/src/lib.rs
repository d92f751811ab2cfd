//! Online swap regret minimization for adaptive convex Lipschitz losses on
//! the unit interval, plus calibration metrics for elicitable properties.
//!
//! The library is organized around a small set of exact primitives:
//!
//! - [`losses`]: piecewise-linear convex losses, scoring rules, and the
//!   decomposition of any such loss into a mixture of V-shaped losses
//!   `E_v |p - v| + C`.
//! - [`dist`]: finitely supported distributions on `[0,1]`, quantile sets,
//!   and the width fixed point that drives bin-scale selection.
//! - [`binning`]: the multi-scale bin system and truthful bin location.
//! - [`constraints`]: the four indicator constraint families over bins and
//!   their convex mixtures.
//! - [`experts`]: a second-moment expert algorithm over constraint ids.
//! - [`feasibility`]: a small dense LP solver producing a prediction
//!   distribution that drives every mixed constraint nonpositive.
//! - [`predictors`]: the efficient randomized predictor, the truthful
//!   predictor for the order-reversed protocol, and a fixed-grid baseline.
//! - [`metrics`]: exact swap regret, calibration error, and identification
//!   calibration.
//! - [`adversaries`]: loss-generating strategies used by the simulation
//!   harness.
//!
//! All core values are immutable after construction and safe to share
//! between threads; predictors are single-writer state machines.

pub mod adversaries;
pub mod binning;
pub mod constraints;
pub mod dist;
pub mod error;
pub mod experts;
pub mod feasibility;
pub mod losses;
pub mod metrics;
pub mod predictors;

pub use binning::{BinPair, BinSystem};
pub use constraints::{ConstraintId, MixedConstraint, Xi};
pub use dist::{Dist01, WidthResult};
pub use error::{Error, Result};
pub use experts::ExpertState;
pub use feasibility::KappaDist;
pub use losses::{LossSpec, PLConvexLoss, ScoringRule, VMixture};
pub use metrics::RegretReport;
pub use predictors::{EfficientPredictor, RoundRecord, Transcript};
