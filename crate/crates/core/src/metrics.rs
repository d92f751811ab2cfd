//! Exact regret and calibration metrics.
//!
//! Swap regret groups rounds by distinct prediction (bit-level equality:
//! predictions come from shared bin grids, so no epsilon merging is
//! applied; user-supplied transcripts with near-equal floats form separate
//! bins). Each group's optimal relabeling is found exactly: the summed
//! loss is piecewise-linear convex, so its minimizer is a median of the
//! group's outcome mixture.

use serde::Serialize;

use crate::dist::{uniform_mixture, Dist01};
use crate::error::{Error, Result};
use crate::losses::ScoringRule;
use crate::predictors::Transcript;

/// Per-bin slice of the swap regret decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct BinContribution {
    /// The prediction value defining the bin.
    pub b: f64,
    /// Rounds spent in the bin.
    pub n: u64,
    /// The bin's optimal relabeling target.
    pub s: f64,
    /// Regret the bin contributes.
    pub contribution: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegretReport {
    pub total: f64,
    /// Regret against the single best action across all rounds.
    pub external: f64,
    pub per_bin: Vec<BinContribution>,
}

impl RegretReport {
    pub fn zero() -> Self {
        RegretReport { total: 0.0, external: 0.0, per_bin: Vec::new() }
    }
}

fn group_by_prediction(preds: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].total_cmp(&preds[b]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some((p, members)) if p.to_bits() == preds[idx].to_bits() => members.push(idx),
            _ => groups.push((preds[idx], vec![idx])),
        }
    }
    groups
}

/// Exact swap regret of a transcript, with its per-bin decomposition and
/// the external regret of the same run.
pub fn swap_regret(transcript: &Transcript) -> Result<RegretReport> {
    if transcript.rounds.is_empty() {
        return Ok(RegretReport::zero());
    }
    let phis: Vec<Dist01> = transcript
        .rounds
        .iter()
        .map(|rec| Dist01::new(rec.phi_support.clone(), rec.phi_mass.clone()))
        .collect::<Result<_>>()?;
    let preds: Vec<f64> = transcript.rounds.iter().map(|rec| rec.p).collect();

    let mut per_bin = Vec::new();
    let mut total = 0.0;
    for (b, members) in group_by_prediction(&preds) {
        let group: Vec<Dist01> = members.iter().map(|&i| phis[i].clone()).collect();
        let mix = uniform_mixture(&group)?;
        let (s, _) = mix.best_response();
        let played: f64 = members.iter().map(|&i| phis[i].expected_abs(b)).sum();
        let best: f64 = members.iter().map(|&i| phis[i].expected_abs(s)).sum();
        let contribution = (played - best).max(0.0);
        total += contribution;
        per_bin.push(BinContribution { b, n: members.len() as u64, s, contribution });
    }

    let all_mix = uniform_mixture(&phis)?;
    let (s_ext, _) = all_mix.best_response();
    let played: f64 = phis
        .iter()
        .zip(&preds)
        .map(|(phi, &p)| phi.expected_abs(p))
        .sum();
    let best: f64 = phis.iter().map(|phi| phi.expected_abs(s_ext)).sum();
    let external = (played - best).max(0.0);

    Ok(RegretReport { total, external, per_bin })
}

/// Calibration error of a prediction/outcome sequence under a scoring
/// rule: for each distinct prediction, the gap between its average score
/// and the best constant report for that group, summed with multiplicity.
///
/// Group optima are closed forms: weighted median, group q-quantile, or
/// group mean. The mean rule scores with the unscaled squared error.
pub fn cal_error(rule: &ScoringRule, preds: &[f64], outcomes: &[f64]) -> Result<f64> {
    rule.validate()?;
    if preds.len() != outcomes.len() {
        return Err(Error::domain("prediction/outcome lengths differ"));
    }
    if let Some(y) = outcomes.iter().find(|y| !(0.0..=1.0).contains(*y)) {
        return Err(Error::domain(format!("outcome {y} outside [0,1]")));
    }
    if let Some(p) = preds.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("prediction {p} outside [0,1]")));
    }
    let mut cal = 0.0;
    for (p, members) in group_by_prediction(preds) {
        let ys: Vec<f64> = members.iter().map(|&i| outcomes[i]).collect();
        let played: f64 = ys.iter().map(|&y| rule.score(p, y)).sum();
        let best: f64 = match rule {
            ScoringRule::Median => {
                let tau = empirical(&ys)?;
                let (s, _) = tau.best_response();
                ys.iter().map(|&y| rule.score(s, y)).sum()
            }
            ScoringRule::Quantile { q } => {
                let tau = empirical(&ys)?;
                let (s, _) = tau.quantile_set(*q);
                ys.iter().map(|&y| rule.score(s, y)).sum()
            }
            ScoringRule::Mean => {
                let mean = ys.iter().sum::<f64>() / ys.len() as f64;
                ys.iter().map(|&y| rule.score(mean, y)).sum()
            }
        };
        cal += (played - best).max(0.0);
    }
    Ok(cal)
}

/// Identification calibration error for the median:
/// `2 sum_p n_p |Pr_hat[y <= p] - 1/2|`, computed as the integer sum
/// `sum_p |2 k_p - n_p|` so deterministic-indicator instances are exact.
pub fn mcal1_median(preds: &[f64], outcomes: &[f64]) -> Result<f64> {
    if preds.len() != outcomes.len() {
        return Err(Error::domain("prediction/outcome lengths differ"));
    }
    let mut total: i64 = 0;
    for (p, members) in group_by_prediction(preds) {
        let n = members.len() as i64;
        let k = members.iter().filter(|&&i| outcomes[i] <= p).count() as i64;
        total += (2 * k - n).abs();
    }
    Ok(total as f64)
}

/// Outcomes of a transcript whose losses are all V-shaped (single-atom
/// decompositions); `None` if any round's loss is wider.
pub fn v_outcomes(transcript: &Transcript) -> Option<Vec<f64>> {
    transcript
        .rounds
        .iter()
        .map(|rec| {
            if rec.phi_support.len() == 1 {
                Some(rec.phi_support[0])
            } else {
                None
            }
        })
        .collect()
}

fn empirical(ys: &[f64]) -> Result<Dist01> {
    Dist01::from_weighted_points(ys.iter().map(|&y| (y, 1.0)).collect())
}
