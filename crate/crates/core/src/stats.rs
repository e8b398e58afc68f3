//! Binomial confidence intervals.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const DEFAULT_Z: f64 = 1.96;

/// Wilson score interval for `hits` successes in `trials` Bernoulli trials.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p_hat = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    // The interval always contains p_hat; clamp away rounding noise.
    (
        (centre - half).clamp(0.0, 1.0).min(p_hat),
        (centre + half).clamp(0.0, 1.0).max(p_hat),
    )
}

/// 2x2 contingency counts for two events observed on the same trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedCounts {
    pub both: u64,
    pub first_only: u64,
    pub second_only: u64,
    pub neither: u64,
}

impl PairedCounts {
    pub fn record(&mut self, first: bool, second: bool) {
        match (first, second) {
            (true, true) => self.both += 1,
            (true, false) => self.first_only += 1,
            (false, true) => self.second_only += 1,
            (false, false) => self.neither += 1,
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.both += other.both;
        self.first_only += other.first_only;
        self.second_only += other.second_only;
        self.neither += other.neither;
        self
    }

    pub fn trials(&self) -> u64 {
        self.both + self.first_only + self.second_only + self.neither
    }

    /// Estimated `P(first) - P(second)`.
    pub fn difference(&self) -> f64 {
        let n = self.trials();
        if n == 0 {
            return 0.0;
        }
        (self.first_only as f64 - self.second_only as f64) / n as f64
    }

    /// Normal interval for the paired difference, with the variance of the
    /// per-trial difference estimated from the discordant counts.
    pub fn difference_interval(&self, z: f64) -> (f64, f64) {
        let n = self.trials() as f64;
        if n == 0.0 {
            return (-1.0, 1.0);
        }
        let d = self.difference();
        let discordant = (self.first_only + self.second_only) as f64 / n;
        let var = ((discordant - d * d).max(0.0)) / n;
        let half = z * var.sqrt();
        ((d - half).max(-1.0), (d + half).min(1.0))
    }
}
