//! Forecast accuracy: RMSE and MAPE over `(predicted, actual)` pairs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// `sqrt(mean((predicted - actual)^2))`.
pub fn rmse<F: Real>(pairs: &[(F, F)]) -> Result<F> {
    if pairs.is_empty() {
        return Err(Error::Data("rmse of an empty set of pairs".into()));
    }
    let sum = pairs.iter().fold(F::zero(), |acc, &(p, a)| acc + (p - a) * (p - a));
    Ok((sum / F::count(pairs.len() as u64)).sqrt())
}

/// Mean absolute percentage error with the count of pairs it skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mape<F> {
    pub percent: F,
    pub included: usize,
    /// Pairs with `actual = 0`, for which the percentage error is undefined.
    pub excluded: usize,
}

pub fn mape_detailed<F: Real>(pairs: &[(F, F)]) -> Result<Mape<F>> {
    let (sum, included) = pairs
        .iter()
        .filter(|&&(_, a)| a != F::zero())
        .fold((F::zero(), 0_usize), |(s, n), &(p, a)| (s + ((p - a) / a).abs(), n + 1));
    if included == 0 {
        return Err(Error::Data("mape needs at least one pair with a non-zero actual".into()));
    }
    Ok(Mape {
        percent: F::lit(100.0) * sum / F::count(included as u64),
        included,
        excluded: pairs.len() - included,
    })
}

/// `100 * mean(|predicted - actual| / |actual|)`, skipping zero actuals.
pub fn mape<F: Real>(pairs: &[(F, F)]) -> Result<F> {
    mape_detailed(pairs).map(|m| m.percent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport<F> {
    pub rmse: F,
    /// Percent.
    pub mape: F,
    pub n: usize,
    pub mape_excluded: usize,
}

impl<F: Real> MetricReport<F> {
    pub fn from_pairs(pairs: &[(F, F)]) -> Result<Self> {
        let m = mape_detailed(pairs)?;
        Ok(Self { rmse: rmse(pairs)?, mape: m.percent, n: pairs.len(), mape_excluded: m.excluded })
    }
}
