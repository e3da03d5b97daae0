//! Integer-exact accumulation of Monte-Carlo samples.
//!
//! Samples are nonnegative integers (scores, slot counts), so sums are kept
//! exactly and merging is associative and commutative. Parallel reductions
//! therefore give the same estimate regardless of how work was split.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Moments {
    pub count: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl Moments {
    pub fn push(&mut self, x: u64) {
        self.count += 1;
        self.sum += u128::from(x);
        self.sum_sq += u128::from(x) * u128::from(x);
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn estimate(&self) -> Estimate {
        if self.count == 0 {
            return Estimate {
                mean: 0.0,
                stderr: 0.0,
                samples: 0,
            };
        }
        let n = self.count as f64;
        let mean = self.sum as f64 / n;
        let stderr = if self.count > 1 {
            // n * sum_sq - sum^2 is exact in integers
            let num = u128::from(self.count) * self.sum_sq - self.sum * self.sum;
            let var = num as f64 / (n * (n - 1.0));
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            samples: self.count,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// `|mean - target| <= k * stderr`, with a floor for zero-variance samples.
    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12
    }
}
