//! Summary statistics for Monte-Carlo estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided standard-normal critical value for a confidence level in (0, 1).
pub fn z_for_level(level: f64) -> f64 {
    let unit = Normal::new(0.0, 1.0).expect("standard normal");
    unit.inverse_cdf(0.5 + level / 2.0)
}

/// A point estimate with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `successes` out of `trials` at the given level.
pub fn wilson(successes: u64, trials: u64, level: f64) -> Estimate {
    if trials == 0 {
        return Estimate {
            mean: 0.0,
            lo: 0.0,
            hi: 1.0,
        };
    }
    let z = z_for_level(level);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Estimate {
        mean: p,
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// Mean with an empirical percentile interval (e.g. 5th..95th for `level = 0.9`).
pub fn percentile_interval(values: &[f64], level: f64) -> Estimate {
    if values.is_empty() {
        return Estimate {
            mean: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let tail = (1.0 - level) / 2.0;
    Estimate {
        mean,
        lo: percentile(&sorted, tail),
        hi: percentile(&sorted, 1.0 - tail),
    }
}

/// Linear-interpolated percentile of already sorted data, `u` in [0, 1].
pub fn percentile(sorted: &[f64], u: f64) -> f64 {
    let pos = u.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
