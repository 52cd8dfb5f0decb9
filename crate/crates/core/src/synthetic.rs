//! Forward simulators used as ground truth: populations with a discrete set of
//! participation probabilities, and Beta-distributed probabilities.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DailyCounts, HyperParams};
use crate::real::Real;
use crate::rng::{self, Domain};

/// Groups of identical individuals: `(π, N_π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePopulation<F> {
    groups: Vec<(F, u64)>,
}

impl<F: Real> DiscretePopulation<F> {
    pub fn new(groups: Vec<(F, u64)>) -> Result<Self> {
        for (k, &(pi, _)) in groups.iter().enumerate() {
            if !(pi > F::zero() && pi <= F::one()) {
                return Err(Error::domain("pi", format!("must be in (0, 1], got {pi}")));
            }
            if groups[..k].iter().any(|&(other, _)| other == pi) {
                return Err(Error::domain("pi", format!("duplicate group probability {pi}")));
            }
        }
        Ok(Self { groups })
    }

    /// One group for each of `π = 0.01, 0.02, ..., 1.00`, sized by `size(π)`.
    pub fn hundredths(size: impl Fn(F) -> u64) -> Self {
        let groups = (1..=100_u64)
            .map(|k| {
                let pi = F::count(k) / F::lit(100.0);
                (pi, size(pi))
            })
            .collect();
        Self { groups }
    }

    pub fn groups(&self) -> &[(F, u64)] {
        &self.groups
    }

    pub fn size(&self) -> u64 {
        self.groups.iter().map(|g| g.1).sum()
    }
}

/// Expected number of a group of `n` individuals with probability `pi` who
/// first participate on day `k`: `(1-π)^(k-1) π n`.
pub fn expected_first_participation<F: Real>(pi: F, n: u64, k: u64) -> Result<F> {
    if !(pi > F::zero() && pi <= F::one()) {
        return Err(Error::domain("pi", format!("must be in (0, 1], got {pi}")));
    }
    if k == 0 {
        return Err(Error::domain("k", "days are 1-indexed"));
    }
    let miss = F::one() - pi;
    Ok(miss.powf(F::count(k - 1)) * pi * F::count(n))
}

/// First participation day of one individual; `u64::MAX` for never.
pub fn geometric_first_day<R: Rng + ?Sized>(pi: f64, rng: &mut R) -> u64 {
    if pi >= 1.0 {
        return 1;
    }
    let log_miss = (-pi).ln_1p();
    if !(pi > 0.0) || log_miss == 0.0 {
        return u64::MAX;
    }
    // U in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let day = (u.ln() / log_miss).ceil();
    if day >= u64::MAX as f64 || day.is_nan() {
        u64::MAX
    } else {
        (day as u64).max(1)
    }
}

/// Per-day counts of first participations over `total_days` days.
pub fn simulate_discrete<F: Real>(pop: &DiscretePopulation<F>, total_days: u64, seed: u64) -> Result<Vec<u64>> {
    if total_days == 0 {
        return Err(Error::domain("total_days", "must be >= 1"));
    }
    let len = usize::try_from(total_days).map_err(|_| Error::domain("total_days", "too large"))?;
    let mut counts = vec![0_u64; len];
    let mut rng = rng::stream(seed, Domain::Simulation, 0);
    for &(pi, n) in &pop.groups {
        let pi = pi.as_f64();
        for _ in 0..n {
            let day = geometric_first_day(pi, &mut rng);
            if day <= total_days {
                counts[(day - 1) as usize] += 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedExperiment {
    pub first_period: DailyCounts,
    /// Individuals who did not participate in the first period.
    pub n0_true: u64,
    /// New participants on each day after the first period.
    pub future_daily: Vec<u64>,
    pub seed: u64,
}

impl SimulatedExperiment {
    /// Realized new participants over days `start..=end` after the first period.
    pub fn realized_between(&self, start: u64, end: u64) -> u64 {
        let lo = start.max(1) as usize - 1;
        let hi = (end as usize).min(self.future_daily.len());
        if lo >= hi {
            return 0;
        }
        self.future_daily[lo..hi].iter().sum()
    }

    /// Realized new participants in week `k >= 2`, the first period being week 1.
    pub fn realized_week(&self, k: u64) -> u64 {
        let start = (k - 1) * 7 - 6;
        self.realized_between(start.max(1), (k - 1) * 7)
    }

    /// All simulated days, first period followed by the future.
    pub fn all_days(&self) -> Vec<u64> {
        self.first_period.counts().iter().chain(&self.future_daily).copied().collect()
    }
}

/// Simulate `n` individuals with `π_i ~ Beta(α, β)` and geometric first days,
/// observed for `total_days` days of which the first `first_period_d` form the
/// first period.
pub fn simulate_beta_geometric<F: Real>(
    n: u64,
    hp: HyperParams<F>,
    first_period_d: u32,
    total_days: u64,
    seed: u64,
) -> Result<SimulatedExperiment> {
    if n == 0 {
        return Err(Error::domain("n", "must be >= 1"));
    }
    if first_period_d == 0 {
        return Err(Error::domain("first_period_d", "must be >= 1"));
    }
    if total_days < u64::from(first_period_d) {
        return Err(Error::domain("total_days", "must be >= first_period_d"));
    }
    let len = usize::try_from(total_days).map_err(|_| Error::domain("total_days", "too large"))?;
    let beta = Beta::new(hp.alpha().as_f64(), hp.beta().as_f64())
        .map_err(|e| Error::domain("hp", e.to_string()))?;
    let mut rng = rng::stream(seed, Domain::Simulation, 1);
    let mut daily = vec![0_u64; len];
    for _ in 0..n {
        let pi: f64 = beta.sample(&mut rng);
        let day = geometric_first_day(pi, &mut rng);
        if day <= total_days {
            daily[(day - 1) as usize] += 1;
        }
    }
    let d = first_period_d as usize;
    let first_period = DailyCounts::new(daily[..d].to_vec())?;
    let n0_true = n - first_period.total_participants();
    Ok(SimulatedExperiment { first_period, n0_true, future_daily: daily[d..].to_vec(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_counts() {
        assert_eq!(expected_first_participation(1.0_f64, 10, 2).unwrap(), 0.0);
        assert_eq!(expected_first_participation(1.0_f64, 10, 1).unwrap(), 10.0);
        assert!((expected_first_participation(0.5_f64, 8, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!(expected_first_participation(0.0_f64, 8, 3).is_err());
        assert!(expected_first_participation(0.5_f64, 8, 0).is_err());
    }

    #[test]
    fn population_validation() {
        assert!(DiscretePopulation::new(vec![(0.2_f64, 5), (0.2, 3)]).is_err());
        assert!(DiscretePopulation::new(vec![(0.0_f64, 5)]).is_err());
        assert!(DiscretePopulation::new(vec![(1.2_f64, 5)]).is_err());
        let grid = DiscretePopulation::<f64>::hundredths(|_| 3);
        assert_eq!(grid.groups().len(), 100);
        assert_eq!(grid.size(), 300);
        assert!((grid.groups()[0].0 - 0.01).abs() < 1e-15 && grid.groups()[99].0 == 1.0);
    }

    #[test]
    fn certain_participation_is_day_one() {
        let pop = DiscretePopulation::new(vec![(1.0_f64, 5)]).unwrap();
        assert_eq!(simulate_discrete(&pop, 3, 0).unwrap(), vec![5, 0, 0]);
    }

    #[test]
    fn empty_population() {
        let pop = DiscretePopulation::<f64>::new(vec![]).unwrap();
        assert_eq!(simulate_discrete(&pop, 4, 9).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn discrete_means_match_expectation() {
        let pop = DiscretePopulation::new(vec![(0.3_f64, 100)]).unwrap();
        let reps = 10_000_u64;
        let mut sums = [0_u64; 5];
        for r in 0..reps {
            for (s, c) in sums.iter_mut().zip(simulate_discrete(&pop, 5, r).unwrap()) {
                *s += c;
            }
        }
        for (k, &s) in sums.iter().enumerate() {
            let p = 0.7_f64.powi(k as i32) * 0.3;
            let expected = expected_first_participation(0.3_f64, 100, k as u64 + 1).unwrap();
            let se = (100.0 * p * (1.0 - p) / reps as f64).sqrt();
            assert!((s as f64 / reps as f64 - expected).abs() < 3.0 * se, "day {}", k + 1);
        }
    }

    #[test]
    fn conservation_and_shape() {
        let hp = HyperParams::new(2.0_f64, 50.0).unwrap();
        let sim = simulate_beta_geometric(10_000, hp, 7, 35, 4).unwrap();
        assert_eq!(sim.first_period.total_participants() + sim.n0_true, 10_000);
        assert_eq!(sim.future_daily.len(), 28);
        assert!(sim.future_daily.iter().sum::<u64>() <= sim.n0_true);
        assert_eq!(sim.realized_week(2), sim.future_daily[..7].iter().sum::<u64>());
        assert_eq!(sim.all_days().len(), 35);
        let same = simulate_beta_geometric(10_000, hp, 7, 35, 4).unwrap();
        assert_eq!(sim, same);
        let flat = simulate_beta_geometric(100, hp, 7, 7, 4).unwrap();
        assert!(flat.future_daily.is_empty());
    }

    #[test]
    fn near_certain_participation() {
        let hp = HyperParams::new(1e6_f64, 1.0).unwrap();
        let sim = simulate_beta_geometric(100, hp, 7, 7, 8).unwrap();
        assert!(sim.first_period.counts()[0] >= 99);
    }

    #[test]
    fn uniform_prior_censoring() {
        let hp = HyperParams::new(1.0_f64, 1.0).unwrap();
        let n = 100_000;
        let sim = simulate_beta_geometric(n, hp, 7, 7, 21).unwrap();
        let p = 1.0 / 8.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((sim.n0_true as f64 - 12_500.0).abs() < 3.0 * sd, "n0 {}", sim.n0_true);
    }

    #[test]
    fn invalid_arguments() {
        let hp = HyperParams::new(1.0_f64, 1.0).unwrap();
        assert!(simulate_beta_geometric(10, hp, 7, 6, 0).is_err());
        assert!(simulate_beta_geometric(0, hp, 7, 7, 0).is_err());
        assert!(simulate_beta_geometric(10, hp, 0, 7, 0).is_err());
    }
}
