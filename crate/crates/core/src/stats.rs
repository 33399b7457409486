//! Small statistical helpers shared by the experiment harnesses.

use serde::{Deserialize, Serialize};

/// z-score of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Empirical Bernoulli rate with its trial count and Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub interval95: Interval,
}

impl RateEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "rate estimate needs at least one trial");
        assert!(successes <= trials);
        RateEstimate {
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            interval95: wilson_interval(successes, trials, Z95),
        }
    }

    /// Standard error of the mean, `sqrt(p(1-p)/n)`.
    pub fn sigma(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }

    /// Binomial standard error evaluated at a reference probability instead of
    /// the observed rate. Useful when the observed rate sits at 0 or 1.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// `P[X >= k]` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binomial_upper_tail(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let mut ln_choose = ln_binomial(n, k);
    let mut total = 0.0;
    for j in k..=n {
        total += (ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q).exp();
        // C(n, j+1) = C(n, j) * (n - j) / (j + 1)
        if j < n {
            ln_choose += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        }
    }
    total.min(1.0)
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_rate() {
        let iv = wilson_interval(75, 100, Z95);
        assert!(iv.lo < 0.75 && 0.75 < iv.hi);
        let zero = wilson_interval(0, 50, Z95);
        assert!(zero.lo < 1e-12);
        assert!(zero.hi > 0.0 && zero.hi < 0.1);
    }

    #[test]
    fn binomial_tail_small_cases() {
        // P[X >= 1] for Bin(2, 1/2) = 3/4
        assert!((binomial_upper_tail(2, 1, 0.5) - 0.75).abs() < 1e-12);
        assert!((binomial_upper_tail(3, 3, 0.5) - 0.125).abs() < 1e-12);
        assert_eq!(binomial_upper_tail(5, 0, 0.3), 1.0);
        assert_eq!(binomial_upper_tail(5, 6, 0.3), 0.0);
    }

    #[test]
    fn binomial_tail_matches_direct_sum() {
        let (n, p) = (20u64, 0.37f64);
        for k in 0..=n {
            let direct: f64 = (k..=n)
                .map(|j| {
                    let c: f64 = (0..j).map(|i| (n - i) as f64 / (i + 1) as f64).product();
                    c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
                })
                .sum();
            assert!((binomial_upper_tail(n, k, p) - direct).abs() < 1e-10, "k={k}");
        }
    }
}
