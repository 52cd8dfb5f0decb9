//! File formats and the command drivers behind the CLI.
//!
//! Daily-count files are CSV with header `day,count` and one row per day
//! `1..=d`. Truth files are CSV with header `experiment_id,week,actual_new`.
//! Reports are JSON with a `schema_version` field; a flat CSV rendering is
//! available for each.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{fit_log_linear, predict_log_linear};
use crate::error::{Error, Result};
use crate::forecast::{forecast, ForecastDistribution, ForecastRequest, WEEK_DAYS};
use crate::metrics::MetricReport;
use crate::model::{beta_summary, BetaSummary, DailyCounts, HyperParams, PopulationSpec};
use crate::rng::{derive_seed, Domain};
use crate::sampler::SamplerConfig;
use crate::summary::{self, Quantiles};
use crate::synthetic::{simulate_beta_geometric, SimulatedExperiment};

pub const SCHEMA_VERSION: u32 = 1;

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(line, format!("malformed row: {e}"))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err)?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(parse_err(1, format!("expected header `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

/// Parse a `day,count` CSV into validated daily counts.
pub fn parse_daily_counts(text: &str) -> Result<DailyCounts> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["day", "count"])?;
    let mut by_day: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_line = 1;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        last_line = line;
        let day: u64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("day `{}` is not a positive integer", &record[0])))?;
        if day == 0 {
            return Err(parse_err(line, "days are numbered from 1"));
        }
        let count: i128 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("count `{}` is not an integer", &record[1])))?;
        if count < 0 {
            return Err(parse_err(line, format!("negative count {count} on day {day}")));
        }
        let count = u64::try_from(count).map_err(|_| parse_err(line, "count does not fit in u64"))?;
        if by_day.insert(day, count).is_some() {
            return Err(parse_err(line, format!("duplicate day {day}")));
        }
    }
    if by_day.is_empty() {
        return Err(parse_err(last_line, "no data rows"));
    }
    let d = *by_day.keys().next_back().expect("non-empty");
    if let Some(missing) = (1..=d).find(|t| !by_day.contains_key(t)) {
        return Err(parse_err(last_line, format!("missing day {missing}")));
    }
    DailyCounts::new(by_day.into_values().collect()).map_err(|e| parse_err(last_line, e.to_string()))
}

pub fn read_daily_counts(path: &Path) -> Result<DailyCounts> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(&path.display().to_string()))?;
    parse_daily_counts(&text).map_err(|e| e.context(&path.display().to_string()))
}

/// `day,count` CSV for the given daily series.
pub fn write_daily_counts(daily: &[u64]) -> String {
    let mut out = String::from("day,count\n");
    for (k, c) in daily.iter().enumerate() {
        let _ = writeln!(out, "{},{}", k + 1, c);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub experiment_id: String,
    pub week: u64,
    pub actual_new: f64,
}

pub fn parse_truth(text: &str) -> Result<Vec<TruthRow>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &["experiment_id", "week", "actual_new"])?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty experiment_id"));
        }
        let week: u64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("week `{}` is not an integer", &record[1])))?;
        if week < 2 {
            return Err(parse_err(line, format!("week must be >= 2, got {week}")));
        }
        let actual_new: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("actual_new `{}` is not a number", &record[2])))?;
        if !(actual_new.is_finite() && actual_new >= 0.0) {
            return Err(parse_err(line, "actual_new must be finite and >= 0"));
        }
        if !seen.insert((id.clone(), week)) {
            return Err(parse_err(line, format!("duplicate row for {id} week {week}")));
        }
        rows.push(TruthRow { experiment_id: id, week, actual_new });
    }
    Ok(rows)
}

pub fn write_truth(rows: &[TruthRow]) -> String {
    let mut out = String::from("experiment_id,week,actual_new\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.experiment_id, r.week, r.actual_new);
    }
    out
}

/// Every `*.csv` in `dir`, keyed by file stem, in name order.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, DailyCounts)>> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(e).context(&dir.display().to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    entries
        .iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((id, read_daily_counts(p)?))
        })
        .collect()
}

/// `"1..30"` (inclusive integer steps) or a comma-separated list.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let grid: Vec<f64> = if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| Error::Request(format!("bad lambda range `{spec}`")))?;
        let hi: u64 = hi.trim().parse().map_err(|_| Error::Request(format!("bad lambda range `{spec}`")))?;
        (lo..=hi).map(|v| v as f64).collect()
    } else if spec.is_empty() {
        Vec::new()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Request(format!("bad lambda `{s}`"))))
            .collect::<Result<_>>()?
    };
    validate_lambda_grid(&grid)?;
    Ok(grid)
}

fn validate_lambda_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Request("lambda grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::Request(format!("lambda values must be > 0, got {bad}")));
    }
    Ok(())
}

pub fn parse_horizons(spec: &str) -> Result<Vec<u64>> {
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| Error::Request(format!("bad horizon `{s}`"))))
        .collect()
}

/// Settings shared by the forecasting commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastOptions {
    pub d: u32,
    pub horizons: Vec<u64>,
    pub population: PopulationSpec<f64>,
    pub draws: usize,
    pub seed: u64,
    pub emit_draws: bool,
}

impl Default for ForecastOptions {
    fn default() -> Self {
        Self {
            d: 7,
            horizons: vec![7, 14, 21, 28],
            population: PopulationSpec::Lambda(10.0),
            draws: 1000,
            seed: 0,
            emit_draws: false,
        }
    }
}

/// First `d` days of `data`; longer inputs are truncated.
pub fn first_period(data: &DailyCounts, d: u32) -> Result<DailyCounts> {
    if data.d() < d {
        return Err(Error::Request(format!("input covers {} days but the first period is {d} days", data.d())));
    }
    if data.d() > d {
        log::info!("using the first {d} of {} input days", data.d());
    }
    data.truncated(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub acceptance_rate: f64,
    pub mode: HyperParams<f64>,
    pub alpha: MeanSd,
    pub beta: MeanSd,
    /// Mean and sd of the population Beta at the posterior-mean `(α, β)`.
    pub population_at_posterior_mean: BetaSummary<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonRow {
    pub horizon_days: u64,
    pub point_estimate: f64,
    pub quantiles: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekRow {
    pub week: u64,
    pub start_day: u64,
    pub end_day: u64,
    pub quantiles: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawRow {
    pub alpha: f64,
    pub beta: f64,
    pub weekly_new: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub d: u32,
    pub seed: u64,
    pub population: PopulationSpec<f64>,
    pub observed_participants: u64,
    pub resolved_n0: u64,
    pub posterior: PosteriorSummary,
    pub horizons: Vec<HorizonRow>,
    pub weeks: Vec<WeekRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<Vec<DrawRow>>,
}

fn mean_sd(xs: &[f64]) -> MeanSd {
    MeanSd { mean: summary::mean(xs), sd: summary::sd(xs) }
}

fn summarize_posterior(dist: &ForecastDistribution<f64>) -> Result<PosteriorSummary> {
    let alphas: Vec<f64> = dist.posterior.draws.iter().map(|h| h.alpha()).collect();
    let betas: Vec<f64> = dist.posterior.draws.iter().map(|h| h.beta()).collect();
    let (alpha, beta) = (mean_sd(&alphas), mean_sd(&betas));
    Ok(PosteriorSummary {
        draws: alphas.len(),
        acceptance_rate: dist.posterior.acceptance_rate,
        mode: dist.posterior.mode,
        alpha,
        beta,
        population_at_posterior_mean: beta_summary(HyperParams::new(alpha.mean, beta.mean)?),
    })
}

fn forecast_distribution(data: &DailyCounts, opts: &ForecastOptions) -> Result<ForecastDistribution<f64>> {
    let req = ForecastRequest {
        data: first_period(data, opts.d)?,
        population: opts.population,
        horizons: opts.horizons.clone(),
        sampler: SamplerConfig::new(opts.draws, opts.seed)?,
    };
    forecast(&req)
}

/// Forecast new participants at each horizon and week.
pub fn run_forecast(data: &DailyCounts, opts: &ForecastOptions) -> Result<ForecastReport> {
    let dist = forecast_distribution(data, opts)?;
    let draws = opts.emit_draws.then(|| {
        dist.posterior
            .draws
            .iter()
            .zip(&dist.weekly_curve_samples)
            .map(|(hp, weekly)| DrawRow { alpha: hp.alpha(), beta: hp.beta(), weekly_new: weekly.clone() })
            .collect()
    });
    Ok(ForecastReport {
        schema_version: SCHEMA_VERSION,
        command: "forecast",
        d: opts.d,
        seed: opts.seed,
        population: opts.population,
        observed_participants: data.truncated(opts.d)?.total_participants(),
        resolved_n0: dist.resolved_n0,
        posterior: summarize_posterior(&dist)?,
        horizons: dist
            .horizons
            .iter()
            .map(|h| HorizonRow { horizon_days: h.horizon, point_estimate: h.point_estimate, quantiles: h.quantiles })
            .collect(),
        weeks: dist
            .weeks
            .iter()
            .map(|w| WeekRow {
                week: w.bucket.week,
                start_day: w.bucket.start_day,
                end_day: w.bucket.end_day,
                quantiles: w.quantiles,
            })
            .collect(),
        draws,
    })
}

/// Boxplot-ready summary of a predictive sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub max: f64,
    pub quantiles: Quantiles,
}

impl BoxStats {
    fn of(samples: &[u64]) -> Self {
        Self {
            min: samples.iter().copied().min().unwrap_or(0) as f64,
            max: samples.iter().copied().max().unwrap_or(0) as f64,
            quantiles: Quantiles::of_counts(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepHorizon {
    pub horizon_days: u64,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub resolved_n0: u64,
    pub horizons: Vec<SweepHorizon>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub horizon_days: u64,
    /// The λ values in the upper half of the sorted grid.
    pub lambdas: Vec<f64>,
    /// `(max - min) / min` of the medians over `lambdas`; `None` when the
    /// smallest median is zero and the largest is not.
    pub max_relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub d: u32,
    pub seed: u64,
    pub draws: usize,
    pub entries: Vec<SweepEntry>,
    pub plateau: Vec<Plateau>,
}

impl SweepReport {
    /// `(max - min) / min` of the medians at `horizon` over λ in `[lo, hi]`.
    pub fn median_spread(&self, horizon: u64, lo: f64, hi: f64) -> Option<f64> {
        let medians: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.lambda >= lo && e.lambda <= hi)
            .filter_map(|e| e.horizons.iter().find(|h| h.horizon_days == horizon))
            .map(|h| h.stats.quantiles.median)
            .collect();
        relative_spread(&medians)
    }
}

fn relative_spread(values: &[f64]) -> Option<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        None
    } else if max == 0.0 {
        Some(0.0)
    } else if min <= 0.0 {
        None
    } else {
        Some((max - min) / min)
    }
}

/// Forecast under each λ of the grid, all with the same seed.
pub fn run_lambda_sweep(data: &DailyCounts, opts: &ForecastOptions, grid: &[f64]) -> Result<SweepReport> {
    validate_lambda_grid(grid)?;
    let entries = grid
        .iter()
        .map(|&lambda| {
            let o = ForecastOptions { population: PopulationSpec::lambda(lambda)?, ..opts.clone() };
            let dist = forecast_distribution(data, &o).map_err(|e| e.context(&format!("lambda {lambda}")))?;
            Ok(SweepEntry {
                lambda,
                resolved_n0: dist.resolved_n0,
                horizons: dist
                    .horizons
                    .iter()
                    .map(|h| SweepHorizon { horizon_days: h.horizon, stats: BoxStats::of(&h.samples) })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let upper: Vec<f64> = sorted[sorted.len() / 2..].to_vec();
    let plateau = opts
        .horizons
        .iter()
        .map(|&h| {
            let medians: Vec<f64> = entries
                .iter()
                .filter(|e| upper.contains(&e.lambda))
                .filter_map(|e| e.horizons.iter().find(|x| x.horizon_days == h))
                .map(|x| x.stats.quantiles.median)
                .collect();
            Plateau { horizon_days: h, lambdas: upper.clone(), max_relative_change: relative_spread(&medians) }
        })
        .collect();
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep-lambda",
        d: opts.d,
        seed: opts.seed,
        draws: opts.draws,
        entries,
        plateau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: &'static str,
    pub week: u64,
    pub metrics: MetricReport<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub experiment_id: String,
    pub week: u64,
    pub actual_new: f64,
    pub bayes_median: f64,
    pub log_linear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub d: u32,
    pub seed: u64,
    pub draws: usize,
    pub population: PopulationSpec<f64>,
    pub experiments: usize,
    pub scores: Vec<MethodScore>,
    pub predictions: Vec<PredictionRow>,
}

impl BatchReport {
    pub fn score(&self, method: &str, week: u64) -> Option<&MetricReport<f64>> {
        self.scores.iter().find(|s| s.method == method && s.week == week).map(|s| &s.metrics)
    }
}

pub const METHOD_BAYES: &str = "bayes_median";
pub const METHOD_LOG_LINEAR: &str = "log_linear";

/// Score the Bayesian median and the log-linear baseline against realized
/// weekly counts.
pub fn run_batch_eval(
    corpus: &[(String, DailyCounts)],
    truth: &[TruthRow],
    opts: &ForecastOptions,
) -> Result<BatchReport> {
    if corpus.is_empty() {
        return Err(Error::Data("corpus is empty".into()));
    }
    if truth.is_empty() {
        return Err(Error::Data("truth file has no rows".into()));
    }
    let corpus_ids: BTreeSet<&str> = corpus.iter().map(|(id, _)| id.as_str()).collect();
    if corpus_ids.len() != corpus.len() {
        return Err(Error::Data("duplicate experiment ids in corpus".into()));
    }
    let truth_ids: BTreeSet<&str> = truth.iter().map(|r| r.experiment_id.as_str()).collect();
    let no_truth: Vec<&str> = corpus_ids.difference(&truth_ids).copied().collect();
    let no_data: Vec<&str> = truth_ids.difference(&corpus_ids).copied().collect();
    if !no_truth.is_empty() || !no_data.is_empty() {
        return Err(Error::Data(format!(
            "corpus and truth disagree; missing from truth: {no_truth:?}; missing from corpus: {no_data:?}"
        )));
    }
    let weeks: BTreeSet<u64> = truth.iter().map(|r| r.week).collect();
    let max_week = *weeks.iter().next_back().expect("non-empty truth");
    let horizons: Vec<u64> = (1..max_week).map(|k| k * WEEK_DAYS).collect();

    let per_experiment: Vec<(String, BTreeMap<u64, (f64, f64)>)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, (id, data))| {
            let o = ForecastOptions {
                horizons: horizons.clone(),
                seed: derive_seed(opts.seed, Domain::Batch, i as u64),
                ..opts.clone()
            };
            let dist = forecast_distribution(data, &o).map_err(|e| e.context(&format!("experiment {id}")))?;
            let fit = fit_log_linear::<f64>(&first_period(data, opts.d)?)
                .map_err(|e| e.context(&format!("experiment {id}")))?;
            let mut by_week = BTreeMap::new();
            for w in &dist.weeks {
                by_week.insert(w.bucket.week, (w.quantiles.median, predict_log_linear(&fit, w.bucket.week)?));
            }
            Ok((id.clone(), by_week))
        })
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<&str, &BTreeMap<u64, (f64, f64)>> =
        per_experiment.iter().map(|(id, m)| (id.as_str(), m)).collect();

    let mut predictions: Vec<PredictionRow> = truth
        .iter()
        .map(|r| {
            let (bayes, loglin) = lookup[r.experiment_id.as_str()][&r.week];
            PredictionRow {
                experiment_id: r.experiment_id.clone(),
                week: r.week,
                actual_new: r.actual_new,
                bayes_median: bayes,
                log_linear: loglin,
            }
        })
        .collect();
    predictions.sort_by(|a, b| a.experiment_id.cmp(&b.experiment_id).then(a.week.cmp(&b.week)));

    let mut scores = Vec::new();
    for &week in &weeks {
        let rows: Vec<&PredictionRow> = predictions.iter().filter(|p| p.week == week).collect();
        for method in [METHOD_BAYES, METHOD_LOG_LINEAR] {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .map(|p| (if method == METHOD_BAYES { p.bayes_median } else { p.log_linear }, p.actual_new))
                .collect();
            let metrics = MetricReport::from_pairs(&pairs).map_err(|e| e.context(&format!("week {week}")))?;
            scores.push(MethodScore { method, week, metrics });
        }
    }
    Ok(BatchReport {
        schema_version: SCHEMA_VERSION,
        command: "batch-eval",
        d: opts.d,
        seed: opts.seed,
        draws: opts.draws,
        population: opts.population,
        experiments: corpus.len(),
        scores,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub n: u64,
    pub hyper_params: HyperParams<f64>,
    pub d: u32,
    pub total_days: u64,
    #[serde(flatten)]
    pub experiment: SimulatedExperiment,
}

pub fn run_simulate(n: u64, hp: HyperParams<f64>, d: u32, total_days: u64, seed: u64) -> Result<SimulateReport> {
    Ok(SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        n,
        hyper_params: hp,
        d,
        total_days,
        experiment: simulate_beta_geometric(n, hp, d, total_days, seed)?,
    })
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn quantile_cells(q: &Quantiles) -> String {
    format!("{},{},{},{},{},{}", q.q025, q.q25, q.median, q.q75, q.q975, q.mean)
}

pub fn forecast_csv(r: &ForecastReport) -> String {
    let mut out = String::from("kind,index,start_day,end_day,q025,q25,median,q75,q975,mean\n");
    for h in &r.horizons {
        let _ = writeln!(out, "horizon,{},1,{},{}", h.horizon_days, h.horizon_days, quantile_cells(&h.quantiles));
    }
    for w in &r.weeks {
        let _ = writeln!(out, "week,{},{},{},{}", w.week, w.start_day, w.end_day, quantile_cells(&w.quantiles));
    }
    out
}

pub fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from("lambda,resolved_n0,horizon_days,min,q025,q25,median,q75,q975,mean,max\n");
    for e in &r.entries {
        for h in &e.horizons {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.lambda,
                e.resolved_n0,
                h.horizon_days,
                h.stats.min,
                quantile_cells(&h.stats.quantiles),
                h.stats.max
            );
        }
    }
    out
}

pub fn batch_csv(r: &BatchReport) -> String {
    let mut out = String::from("method,week,rmse,mape,n,mape_excluded\n");
    for s in &r.scores {
        let m = &s.metrics;
        let _ = writeln!(out, "{},{},{},{},{},{}", s.method, s.week, m.rmse, m.mape, m.n, m.mape_excluded);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_daily_counts() {
        let d = parse_daily_counts("day,count\n1,10\n2,5\n3,2").unwrap();
        assert_eq!(d.counts(), &[10, 5, 2]);
        let crlf = parse_daily_counts("day,count\r\n2,5\r\n1,10\r\n").unwrap();
        assert_eq!(crlf.counts(), &[10, 5]);
    }

    #[test]
    fn rejects_bad_daily_counts() {
        let cases = [
            ("day,count\n1,10\n1,5", 3, "duplicate day 1"),
            ("day,count\n1,-3", 2, "negative count"),
            ("day,count\n1,10\n3,5", 3, "missing day 2"),
            ("day,count\n1,abc", 2, "not an integer"),
            ("day,count\n0,4", 2, "numbered from 1"),
            ("days,count\n1,4", 1, "expected header"),
            ("day,count\n", 1, "no data rows"),
            ("day,count\n1,2,3", 2, "malformed"),
        ];
        for (text, want_line, fragment) in cases {
            match parse_daily_counts(text) {
                Err(Error::Parse { line, message }) => {
                    assert_eq!(line, want_line, "{text:?}: {message}");
                    assert!(message.contains(fragment), "{text:?}: {message}");
                }
                other => panic!("{text:?}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn daily_csv_round_trip() {
        let counts = vec![4, 0, 9, 1];
        assert_eq!(parse_daily_counts(&write_daily_counts(&counts)).unwrap().counts(), &counts[..]);
    }

    #[test]
    fn truth_parsing() {
        let rows = parse_truth("experiment_id,week,actual_new\na,2,10\nb,4,3.5\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].actual_new, 3.5);
        assert!(parse_truth("experiment_id,week,actual_new\na,1,10\n").is_err());
        assert!(parse_truth("experiment_id,week,actual_new\na,2,10\na,2,11\n").is_err());
        assert!(parse_truth("id,week,actual\na,2,10\n").is_err());
        assert_eq!(parse_truth(&write_truth(&rows)).unwrap(), rows);
    }

    #[test]
    fn lambda_grids() {
        assert_eq!(parse_lambda_grid("1..3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_lambda_grid("2.5, 10").unwrap(), vec![2.5, 10.0]);
        assert!(matches!(parse_lambda_grid(""), Err(Error::Request(_))));
        assert!(matches!(parse_lambda_grid("0,1"), Err(Error::Request(_))));
        assert!(matches!(parse_lambda_grid("5..1"), Err(Error::Request(_))));
        assert_eq!(parse_horizons("7, 14").unwrap(), vec![7, 14]);
        assert!(parse_horizons("7,x").is_err());
    }

    #[test]
    fn spread() {
        assert_eq!(relative_spread(&[10.0, 11.0, 12.0]), Some(0.2));
        assert_eq!(relative_spread(&[0.0, 0.0]), Some(0.0));
        assert_eq!(relative_spread(&[0.0, 1.0]), None);
        assert_eq!(relative_spread(&[]), None);
    }

    #[test]
    fn first_period_truncates() {
        let data = DailyCounts::new(vec![5, 4, 3, 2]).unwrap();
        assert_eq!(first_period(&data, 2).unwrap().counts(), &[5, 4]);
        assert!(matches!(first_period(&data, 7), Err(Error::Request(_))));
    }

    #[test]
    fn batch_rejects_mismatched_ids() {
        let corpus = vec![("a".to_string(), DailyCounts::new(vec![5, 4, 3, 2, 2, 1, 1]).unwrap())];
        let truth = vec![TruthRow { experiment_id: "b".into(), week: 2, actual_new: 3.0 }];
        match run_batch_eval(&corpus, &truth, &ForecastOptions::default()) {
            Err(Error::Data(m)) => assert!(m.contains("\"a\"") && m.contains("\"b\"")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(run_batch_eval(&[], &truth, &ForecastOptions::default()), Err(Error::Data(_))));
    }
}
