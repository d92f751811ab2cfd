//! Multi-scale bin system.
//!
//! Scales are the dyadic multiples of `gamma` that fit in the unit
//! interval; each scale `r` carries the grid of multiples of `r`. A width
//! result is mapped to the unique scale with `w in [r, 2r)` and the
//! smallest grid point inside the witness interval `[alpha, beta]`.

use crate::dist::WidthResult;
use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-12;

/// One bin: scale value `r`, bin value `b`, plus the indices that identify
/// it inside the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinPair {
    pub scale_idx: usize,
    pub bin_idx: usize,
    pub r: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct BinSystem {
    gamma: f64,
    scales: Vec<f64>,
    bins: Vec<Vec<f64>>,
    theta: Vec<BinPair>,
    /// `theta_start[k]` is the flat index of the first bin at scale `k`.
    theta_start: Vec<usize>,
}

impl BinSystem {
    pub fn build(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::domain(format!("gamma {gamma} outside (0,1]")));
        }
        let mut scales = Vec::new();
        let mut r = gamma;
        while r <= 1.0 {
            scales.push(r);
            r *= 2.0;
        }
        let mut bins = Vec::with_capacity(scales.len());
        let mut theta = Vec::new();
        let mut theta_start = Vec::with_capacity(scales.len());
        for (scale_idx, &r) in scales.iter().enumerate() {
            theta_start.push(theta.len());
            let mut grid = Vec::new();
            let mut j = 0u32;
            loop {
                // Multiples are generated from the integer index each time
                // so the grid never drifts.
                let b = j as f64 * r;
                if b > 1.0 + GRID_TOL {
                    break;
                }
                grid.push(b.min(1.0));
                j += 1;
            }
            for (bin_idx, &b) in grid.iter().enumerate() {
                theta.push(BinPair { scale_idx, bin_idx, r, b });
            }
            bins.push(grid);
        }
        Ok(BinSystem { gamma, scales, bins, theta, theta_start })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn bins(&self, scale_idx: usize) -> &[f64] {
        &self.bins[scale_idx]
    }

    /// All `(r, b)` pairs in flat order: by scale, then by bin.
    pub fn theta(&self) -> &[BinPair] {
        &self.theta
    }

    pub fn theta_len(&self) -> usize {
        self.theta.len()
    }

    pub fn flat_index(&self, scale_idx: usize, bin_idx: usize) -> usize {
        self.theta_start[scale_idx] + bin_idx
    }

    /// Maps a width result to its bin: the unique scale with
    /// `w in [r, 2r)` and the smallest bin inside `[alpha, beta]`.
    pub fn locate(&self, wr: &WidthResult) -> Result<BinPair> {
        let w = wr.w.clamp(self.gamma, 1.0);
        let mut scale_idx = 0;
        for (k, &r) in self.scales.iter().enumerate() {
            if r <= w {
                scale_idx = k;
            } else {
                break;
            }
        }
        let grid = &self.bins[scale_idx];
        let pick = grid
            .iter()
            .position(|&b| b >= wr.alpha && b <= wr.beta)
            .or_else(|| {
                // Witness interval shrunk below the scale by rounding; admit
                // a vanishing tolerance before declaring the system broken.
                grid.iter()
                    .position(|&b| b >= wr.alpha - 1e-9 && b <= wr.beta + 1e-9)
            });
        match pick {
            Some(bin_idx) => Ok(BinPair {
                scale_idx,
                bin_idx,
                r: self.scales[scale_idx],
                b: grid[bin_idx],
            }),
            None => Err(Error::Invalid(format!(
                "no bin at scale {} inside [{}, {}]; width computation is broken",
                self.scales[scale_idx], wr.alpha, wr.beta
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_tenth() {
        let sys = BinSystem::build(0.1).unwrap();
        assert_eq!(sys.scales(), &[0.1, 0.2, 0.4, 0.8]);
        assert_eq!(sys.bins(0).len(), 11);
        assert_eq!(sys.bins(1).len(), 6);
        assert_eq!(sys.bins(2).len(), 3);
        assert_eq!(sys.bins(3).len(), 2);
        assert_eq!(sys.theta_len(), 22);
    }

    #[test]
    fn build_degenerate() {
        let sys = BinSystem::build(1.0).unwrap();
        assert_eq!(sys.scales(), &[1.0]);
        assert_eq!(sys.bins(0), &[0.0, 1.0]);
        assert_eq!(sys.theta_len(), 2);

        let sys = BinSystem::build(0.6).unwrap();
        assert_eq!(sys.scales(), &[0.6]);
        assert_eq!(sys.bins(0), &[0.0, 0.6]);
        assert_eq!(sys.theta_len(), 2);

        assert!(BinSystem::build(0.0).is_err());
        assert!(BinSystem::build(1.5).is_err());
    }

    #[test]
    fn locate_examples() {
        let sys = BinSystem::build(0.1).unwrap();
        let p = sys
            .locate(&WidthResult { w: 0.1, alpha: 0.4, beta: 0.5 })
            .unwrap();
        assert_eq!((p.r, p.b), (0.1, 0.4));
        let p = sys
            .locate(&WidthResult { w: 1.0, alpha: 0.0, beta: 1.0 })
            .unwrap();
        assert_eq!((p.r, p.b), (0.8, 0.0));
        let p = sys
            .locate(&WidthResult { w: 0.2, alpha: 0.4, beta: 0.6 })
            .unwrap();
        assert_eq!((p.r, p.b), (0.2, 0.4));
    }

    #[test]
    fn every_width_has_unique_scale() {
        let sys = BinSystem::build(0.1).unwrap();
        for i in 0..=10_000 {
            let w = 0.1 + 0.9 * i as f64 / 10_000.0;
            let hits = sys
                .scales()
                .iter()
                .filter(|&&r| r <= w && w < 2.0 * r)
                .count();
            assert_eq!(hits, 1, "w = {w}");
        }
    }

    #[test]
    fn theta_is_small() {
        for gamma in [0.05, 0.1, 0.2, 0.37, 0.9] {
            let sys = BinSystem::build(gamma).unwrap();
            assert!((sys.theta_len() as f64) <= 4.0 / gamma);
        }
    }
}
