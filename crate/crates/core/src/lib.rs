//! Forecasting how many additional unique individuals will first participate
//! in an activity, given per-day first-participation counts over an initial
//! period.
//!
//! Each individual's daily participation probability is drawn from a Beta
//! population distribution whose parameters get a default improper prior.
//! The hyper-posterior is sampled exactly by ratio-of-uniforms, and every
//! draw is pushed through a Binomial model for the individuals who remain
//! non-participants.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, with `*32` variants for `f32`.

pub mod baselines;
pub mod error;
pub mod forecast;
pub mod io;
pub mod metrics;
pub mod model;
pub mod optimize;
pub mod real;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod summary;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    beta_summary, censored_geometric_pmf, conditional_posterior_pi, log_hyper_posterior,
    predictive_pmf_second_period, q0, DailyCounts,
};
pub use real::Real;
pub use sampler::{find_posterior_mode, grid_posterior, sample_hyper_posterior, GridAxes, SamplerConfig};

pub type HyperParams = model::HyperParams<f64>;
pub type PopulationSpec = model::PopulationSpec<f64>;
pub type BetaSummary = model::BetaSummary<f64>;
pub type PosteriorDraws = sampler::PosteriorDraws<f64>;
pub type GridSpec = sampler::GridSpec<f64>;
pub type GridPosterior = sampler::GridPosterior<f64>;
pub type ForecastRequest = forecast::ForecastRequest<f64>;
pub type ForecastDistribution = forecast::ForecastDistribution<f64>;
pub type LogLinearFit = baselines::LogLinearFit<f64>;
pub type MetricReport = metrics::MetricReport<f64>;
pub type DiscretePopulation = synthetic::DiscretePopulation<f64>;

pub type HyperParams32 = model::HyperParams<f32>;
pub type PopulationSpec32 = model::PopulationSpec<f32>;
pub type BetaSummary32 = model::BetaSummary<f32>;
pub type PosteriorDraws32 = sampler::PosteriorDraws<f32>;
pub type ForecastRequest32 = forecast::ForecastRequest<f32>;
pub type ForecastDistribution32 = forecast::ForecastDistribution<f32>;
pub type LogLinearFit32 = baselines::LogLinearFit<f32>;
pub type MetricReport32 = metrics::MetricReport<f32>;
