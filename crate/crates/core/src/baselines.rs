//! Log-linear extrapolation baseline: `ln(S_t + 1) = β0 + β1 t + ε_t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::WEEK_DAYS;
use crate::model::DailyCounts;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLinearFit<F> {
    pub intercept: F,
    pub slope: F,
}

/// Ordinary least squares of `ln(S_t + 1)` on `t = 1..=d`.
pub fn fit_log_linear<F: Real>(data: &DailyCounts) -> Result<LogLinearFit<F>> {
    let values: Vec<F> = data.counts().iter().map(|&c| F::count(c)).collect();
    fit_log_linear_values(&values)
}

/// As [`fit_log_linear`], for real-valued daily responses.
pub fn fit_log_linear_values<F: Real>(daily: &[F]) -> Result<LogLinearFit<F>> {
    if daily.len() < 2 {
        return Err(Error::Data("log-linear fit needs at least two days".into()));
    }
    if daily.iter().any(|&v| !(v.is_finite() && v > -F::one())) {
        return Err(Error::Data("daily values must be finite and > -1".into()));
    }
    let n = F::count(daily.len() as u64);
    let t_mean = (n + F::one()) / F::lit(2.0);
    let y: Vec<F> = daily.iter().map(|&v| v.ln_1p()).collect();
    let y_mean = y.iter().fold(F::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx) = (F::zero(), F::zero());
    for (k, &yk) in y.iter().enumerate() {
        let dt = F::count(k as u64 + 1) - t_mean;
        sxy = sxy + dt * (yk - y_mean);
        sxx = sxx + dt * dt;
    }
    let slope = sxy / sxx;
    let fit = LogLinearFit { intercept: y_mean - slope * t_mean, slope };
    if !(fit.intercept.is_finite() && fit.slope.is_finite()) {
        return Err(Error::Numerical("log-linear coefficients are not finite".into()));
    }
    Ok(fit)
}

/// Predicted new participants in week `k >= 2`: the day-level predictions
/// `max(0, exp(β0 + β1 t) - 1)` summed over `t = 7(k-1)+1 ..= 7k`.
pub fn predict_log_linear<F: Real>(fit: &LogLinearFit<F>, week: u64) -> Result<F> {
    if week < 2 {
        return Err(Error::domain("week", format!("must be >= 2, got {week}")));
    }
    let first = WEEK_DAYS * (week - 1) + 1;
    Ok((first..first + WEEK_DAYS).fold(F::zero(), |acc, t| {
        let day = (fit.intercept + fit.slope * F::count(t)).exp() - F::one();
        acc + day.max(F::zero())
    }))
}
