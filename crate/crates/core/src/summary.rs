//! Empirical summaries of Monte-Carlo samples.

use serde::Serialize;

/// Probabilities reported for every predictive distribution.
pub const REPORTED_PROBS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// Quantile of ascending-sorted data with linear interpolation between order
/// statistics (`h = (n-1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Five-number predictive summary plus the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
    pub mean: f64,
}

impl Quantiles {
    pub fn of_counts(samples: &[u64]) -> Self {
        let mut xs: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
        Self::of(&mut xs)
    }

    pub fn of(xs: &mut [f64]) -> Self {
        xs.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(xs, p);
        Self {
            q025: q(REPORTED_PROBS[0]),
            q25: q(REPORTED_PROBS[1]),
            median: q(REPORTED_PROBS[2]),
            q75: q(REPORTED_PROBS[3]),
            q975: q(REPORTED_PROBS[4]),
            mean: mean(xs),
        }
    }

    /// Whether `value` lies in the central 95% interval.
    pub fn covers95(&self, value: f64) -> bool {
        value >= self.q025 && value <= self.q975
    }
}
