//! Proportion estimates and the parallel trial runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::NoTrials);
        }
        if successes > trials {
            return Err(Error::Contract("more successes than trials"));
        }
        let n = trials as f64;
        let point = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let centre = (point + z2 / (2.0 * n)) / denom;
        let half = Z_95 * (point * (1.0 - point) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        // Rounding can push the bounds a hair past the point at 0 and 1.
        let low = (centre - half).clamp(0.0, point);
        let high = (centre + half).clamp(point, 1.0);
        Ok(Estimate {
            successes,
            trials,
            point,
            low,
            high,
        })
    }

    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    /// Whether the two 95% intervals intersect.
    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.low <= other.high && other.low <= self.high
    }
}

/// Outcome of an upward search for the smallest parameter meeting a target.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    /// Smallest qualifying value, or `None` if nothing up to `cap` qualified.
    pub found: Option<u32>,
    pub cap: u32,
    /// Every value probed, in order, with its estimate.
    pub probes: Vec<(u32, Estimate)>,
}

/// Counts how many of the trials `0..trials` succeed. The count does not
/// depend on how rayon schedules the work.
pub fn count_successes<F>(trials: u64, trial: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    (0..trials).into_par_iter().filter(|&i| trial(i)).count() as u64
}

/// Like [`count_successes`] with a per-worker scratch value.
pub fn count_successes_with<S, I, F>(trials: u64, init: I, trial: F) -> u64
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> bool + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map_init(&init, |scratch, i| trial(scratch, i) as u64)
        .sum()
}

/// Runs `trials` trials and wraps the success count in an [`Estimate`].
pub fn estimate_with<S, I, F>(trials: u64, init: I, trial: F) -> Result<Estimate>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> bool + Sync + Send,
{
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    Estimate::from_counts(count_successes_with(trials, init, trial), trials)
}
