//! Posterior-predictive forecasts of new participants.
//!
//! For each hyper-posterior draw, the number of first-period non-participants
//! who stay inactive through `d*` further days is `Binomial(n0, q0(d*))`. Paths
//! across horizons are coupled by sequential thinning: survivors at `h1` are
//! thinned to `h2 > h1` with probability `q0(h2) / q0(h1)`. Each horizon keeps
//! its exact Binomial marginal while paths stay monotone, so weekly increments
//! are never negative.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ln_survival_between, q0, DailyCounts, HyperParams, PopulationSpec};
use crate::real::Real;
use crate::rng::{self, Domain};
use crate::sampler::{sample_hyper_posterior, PosteriorDraws, SamplerConfig};
use crate::summary::Quantiles;

/// Length of the accrual-curve buckets, in days.
pub const WEEK_DAYS: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRequest<F> {
    pub data: DailyCounts,
    pub population: PopulationSpec<F>,
    /// Days beyond the first period, strictly increasing, each >= 1.
    pub horizons: Vec<u64>,
    pub sampler: SamplerConfig,
}

impl<F: Real> ForecastRequest<F> {
    pub fn validate(&self) -> Result<()> {
        validate_horizons(&self.horizons)?;
        self.sampler.validate()
    }
}

pub(crate) fn validate_horizons(horizons: &[u64]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::Request("horizon list is empty".into()));
    }
    if horizons[0] == 0 {
        return Err(Error::Request("horizons must be >= 1".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Request(format!("horizons must be strictly increasing, got {horizons:?}")));
    }
    Ok(())
}

/// Predictive distribution of new participants at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonForecast {
    pub horizon: u64,
    /// `n0 - n00(horizon)`, one per posterior draw.
    pub samples: Vec<u64>,
    pub quantiles: Quantiles,
    /// Across-draw median.
    pub point_estimate: f64,
}

/// One accrual-curve bucket: days `start_day ..= end_day` after the first period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeekBucket {
    /// Week number counting the first period as week 1.
    pub week: u64,
    pub start_day: u64,
    pub end_day: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekForecast {
    pub bucket: WeekBucket,
    pub quantiles: Quantiles,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastDistribution<F> {
    pub resolved_n0: u64,
    pub horizons: Vec<HorizonForecast>,
    pub weeks: Vec<WeekForecast>,
    /// Per draw, new participants in each bucket of `weeks`.
    pub weekly_curve_samples: Vec<Vec<u64>>,
    pub posterior: PosteriorDraws<F>,
}

impl<F> ForecastDistribution<F> {
    pub fn horizon(&self, horizon: u64) -> Option<&HorizonForecast> {
        self.horizons.iter().find(|h| h.horizon == horizon)
    }
}

/// `n0` given directly, or `round(λ Σ S_t)` with ties away from zero.
pub fn resolve_n0<F: Real>(population: &PopulationSpec<F>, data: &DailyCounts) -> Result<u64> {
    match *population {
        PopulationSpec::KnownN0(n0) => Ok(n0),
        PopulationSpec::Lambda(lambda) => {
            if !(lambda.is_finite() && lambda > F::zero()) {
                return Err(Error::domain("lambda", format!("must be finite and > 0, got {lambda}")));
            }
            let total = data.total_participants();
            if total == 0 {
                return Err(Error::Data("no participants in the first period; nothing to scale".into()));
            }
            let scaled = (lambda.as_f64() * total as f64).round();
            if scaled >= u64::MAX as f64 {
                return Err(Error::Numerical(format!("lambda * participants = {scaled} overflows")));
            }
            Ok(scaled as u64)
        }
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    // p is in (0, 1) here, which Binomial::new accepts
    Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// One draw of `n00 ~ Binomial(n0, q0(hp, d, d*))`.
pub fn simulate_n00<F: Real, R: Rng + ?Sized>(
    hp: HyperParams<F>,
    n0: u64,
    d: u32,
    d_star: u64,
    rng: &mut R,
) -> Result<u64> {
    let p = q0(hp, d, d_star)?.as_f64();
    Ok(binomial(n0, p, rng))
}

/// Coupled `n00` at ascending `checkpoints` for one hyper-parameter draw.
pub fn survival_path<F: Real, R: Rng + ?Sized>(
    hp: HyperParams<F>,
    n0: u64,
    d: u32,
    checkpoints: &[u64],
    rng: &mut R,
) -> Vec<u64> {
    let mut path = Vec::with_capacity(checkpoints.len());
    let (mut survivors, mut at) = (n0, 0_u64);
    for &next in checkpoints {
        debug_assert!(next >= at);
        let p = ln_survival_between(hp, d, at, next).exp().as_f64();
        survivors = binomial(survivors, p, rng);
        path.push(survivors);
        at = next;
    }
    path
}

/// Week buckets covering days `1..=max_horizon` after the first period; the
/// last bucket is partial when `max_horizon` is not a multiple of a week.
pub fn week_buckets(max_horizon: u64) -> Vec<WeekBucket> {
    let mut buckets = Vec::new();
    let mut start = 1;
    let mut week = 2;
    while start <= max_horizon {
        let end = (start + WEEK_DAYS - 1).min(max_horizon);
        buckets.push(WeekBucket { week, start_day: start, end_day: end });
        start = end + 1;
        week += 1;
    }
    buckets
}

/// New participants per bucket from `n00` at the bucket end days:
/// `n00(prev end) - n00(end)`, with `n00(0) = n0`.
pub fn weekly_counts(n0: u64, n00_at_bucket_ends: &[u64]) -> Vec<u64> {
    let mut prev = n0;
    n00_at_bucket_ends
        .iter()
        .map(|&n| {
            let new = prev.saturating_sub(n);
            prev = n;
            new
        })
        .collect()
}

/// Predictive samples from given hyper-parameter draws. Draw `i` uses forecast
/// stream `i` under `seed`.
pub fn forecast_from_draws<F: Real>(
    draws: &[HyperParams<F>],
    n0: u64,
    d: u32,
    horizons: &[u64],
    seed: u64,
) -> Result<(Vec<HorizonForecast>, Vec<WeekForecast>, Vec<Vec<u64>>)> {
    validate_horizons(horizons)?;
    if draws.is_empty() {
        return Err(Error::Request("no posterior draws".into()));
    }
    let max_h = *horizons.last().expect("validated non-empty");
    let buckets = week_buckets(max_h);
    let mut checkpoints: Vec<u64> = horizons.iter().copied().chain(buckets.iter().map(|b| b.end_day)).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let index_of = |day: u64| checkpoints.binary_search(&day).expect("checkpoint present");
    let horizon_idx: Vec<usize> = horizons.iter().map(|&h| index_of(h)).collect();
    let bucket_idx: Vec<usize> = buckets.iter().map(|b| index_of(b.end_day)).collect();

    let paths: Vec<Vec<u64>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, hp)| {
            let mut rng = rng::stream(seed, Domain::Forecast, i as u64);
            survival_path(*hp, n0, d, &checkpoints, &mut rng)
        })
        .collect();

    let horizon_forecasts = horizons
        .iter()
        .zip(&horizon_idx)
        .map(|(&h, &k)| {
            let samples: Vec<u64> = paths.iter().map(|p| n0 - p[k]).collect();
            let quantiles = Quantiles::of_counts(&samples);
            HorizonForecast { horizon: h, point_estimate: quantiles.median, quantiles, samples }
        })
        .collect();

    let weekly: Vec<Vec<u64>> = paths
        .iter()
        .map(|p| {
            let ends: Vec<u64> = bucket_idx.iter().map(|&k| p[k]).collect();
            weekly_counts(n0, &ends)
        })
        .collect();
    let weeks = buckets
        .iter()
        .enumerate()
        .map(|(w, &bucket)| {
            let column: Vec<u64> = weekly.iter().map(|c| c[w]).collect();
            WeekForecast { bucket, quantiles: Quantiles::of_counts(&column) }
        })
        .collect();
    Ok((horizon_forecasts, weeks, weekly))
}

/// Sample the hyper-posterior and simulate new participants at every horizon.
pub fn forecast<F: Real>(req: &ForecastRequest<F>) -> Result<ForecastDistribution<F>> {
    req.validate()?;
    let n0 = resolve_n0(&req.population, &req.data)?;
    let posterior = sample_hyper_posterior(&req.data, n0, &req.sampler)?;
    let (horizons, weeks, weekly_curve_samples) =
        forecast_from_draws(&posterior.draws, n0, req.data.d(), &req.horizons, req.sampler.seed)?;
    Ok(ForecastDistribution { resolved_n0: n0, horizons, weeks, weekly_curve_samples, posterior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn hp(a: f64, b: f64) -> HyperParams<f64> {
        HyperParams::new(a, b).unwrap()
    }

    fn data() -> DailyCounts {
        DailyCounts::new(vec![40, 25, 18, 12, 10, 8, 6]).unwrap()
    }

    #[test]
    fn resolve_examples() {
        let d123 = DailyCounts::new(vec![100, 20, 3]).unwrap();
        assert_eq!(resolve_n0(&PopulationSpec::lambda(10.0).unwrap(), &d123).unwrap(), 1230);
        assert_eq!(resolve_n0(&PopulationSpec::<f64>::known(5000), &d123).unwrap(), 5000);
        let d10 = DailyCounts::new(vec![6, 4]).unwrap();
        assert_eq!(resolve_n0(&PopulationSpec::lambda(2.5).unwrap(), &d10).unwrap(), 25);
        // 0.25 * 10 = 2.5 rounds away from zero
        assert_eq!(resolve_n0(&PopulationSpec::lambda(0.25).unwrap(), &d10).unwrap(), 3);
        let empty = DailyCounts::new(vec![0, 0]).unwrap();
        assert!(matches!(
            resolve_n0(&PopulationSpec::lambda(10.0).unwrap(), &empty),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn n00_edge_cases() {
        let mut rng = stream(1, Domain::Forecast, 0);
        assert_eq!(simulate_n00(hp(2.0, 3.0), 100, 7, 0, &mut rng).unwrap(), 100);
        assert_eq!(simulate_n00(hp(2.0, 3.0), 0, 7, 14, &mut rng).unwrap(), 0);
        for _ in 0..100 {
            assert!(simulate_n00(hp(0.5, 0.5), 37, 7, 7, &mut rng).unwrap() <= 37);
        }
    }

    #[test]
    fn n00_mean_matches_q0() {
        let mut rng = stream(2024, Domain::Forecast, 0);
        let reps = 100_000;
        let n0 = 1000;
        let total: u64 = (0..reps).map(|_| simulate_n00(hp(1.0, 1.0), n0, 7, 7, &mut rng).unwrap()).sum();
        let mean = total as f64 / reps as f64;
        let p = 8.0 / 15.0;
        let se = (n0 as f64 * p * (1.0 - p) / reps as f64).sqrt();
        assert!((mean - n0 as f64 * p).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn stubbed_weekly_difference() {
        assert_eq!(weekly_counts(1000, &[800, 700]), vec![200, 100]);
    }

    #[test]
    fn buckets() {
        let b = week_buckets(28);
        assert_eq!(b.len(), 4);
        assert_eq!((b[0].week, b[0].start_day, b[0].end_day), (2, 1, 7));
        assert_eq!((b[3].week, b[3].start_day, b[3].end_day), (5, 22, 28));
        let b = week_buckets(10);
        assert_eq!(b.len(), 2);
        assert_eq!((b[1].start_day, b[1].end_day), (8, 10));
    }

    #[test]
    fn horizon_validation() {
        assert!(validate_horizons(&[]).is_err());
        assert!(validate_horizons(&[0, 7]).is_err());
        assert!(validate_horizons(&[14, 7]).is_err());
        assert!(validate_horizons(&[7, 7]).is_err());
        assert!(validate_horizons(&[7, 14, 21, 28]).is_ok());
    }

    #[test]
    fn paths_are_monotone_and_curves_add_up() {
        let draws = vec![hp(0.3, 20.0), hp(2.0, 50.0), hp(1.0, 1.0)];
        let (hz, weeks, weekly) = forecast_from_draws(&draws, 5000, 7, &[3, 7, 10, 28], 11).unwrap();
        assert_eq!(weeks.len(), 4);
        for (i, curve) in weekly.iter().enumerate() {
            let last = hz.last().unwrap().samples[i];
            assert_eq!(curve.iter().sum::<u64>(), last);
            for w in hz.windows(2) {
                assert!(w[0].samples[i] <= w[1].samples[i]);
            }
        }
    }

    #[test]
    fn zero_population_forecasts_zero() {
        let req = ForecastRequest {
            data: data(),
            population: PopulationSpec::<f64>::known(0),
            horizons: vec![7, 14],
            sampler: SamplerConfig::new(200, 3).unwrap(),
        };
        let out = forecast(&req).unwrap();
        assert_eq!(out.resolved_n0, 0);
        assert!(out.horizons.iter().all(|h| h.samples.iter().all(|&s| s == 0)));
        assert!(out.weekly_curve_samples.iter().flatten().all(|&s| s == 0));
    }

    #[test]
    fn forecast_is_deterministic() {
        let req = ForecastRequest {
            data: data(),
            population: PopulationSpec::lambda(10.0).unwrap(),
            horizons: vec![7, 14, 21, 28],
            sampler: SamplerConfig::new(300, 17).unwrap(),
        };
        let a = forecast(&req).unwrap();
        let b = forecast(&req).unwrap();
        assert_eq!(a.horizons, b.horizons);
        assert_eq!(a.weekly_curve_samples, b.weekly_curve_samples);
        assert_eq!(a.resolved_n0, 1190);
    }

    #[test]
    fn doubling_n0_doubles_mean_survivors() {
        let h = hp(1.5, 20.0);
        let reps = 40_000_u64;
        let mean_for = |n0: u64, seed: u64| {
            let mut rng = stream(seed, Domain::Forecast, 0);
            (0..reps).map(|_| simulate_n00(h, n0, 7, 14, &mut rng).unwrap()).sum::<u64>() as f64 / reps as f64
        };
        let p = q0(h, 7, 14).unwrap();
        let (m1, m2) = (mean_for(500, 1), mean_for(1000, 2));
        let se1 = (500.0 * p * (1.0 - p) / reps as f64).sqrt();
        let se2 = (1000.0 * p * (1.0 - p) / reps as f64).sqrt();
        let se = (4.0 * se1 * se1 + se2 * se2).sqrt();
        assert!((m2 - 2.0 * m1).abs() < 3.0 * se, "m1 {m1} m2 {m2}");
    }
}
