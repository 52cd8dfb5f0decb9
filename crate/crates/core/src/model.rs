//! Densities and probabilities of the censored Beta-Geometric model.
//!
//! Each individual first participates on a geometric day with a personal
//! daily probability `π`, drawn from `Beta(α, β)`; first-period outcomes past
//! day `d` are censored and recorded as `0`. The hyper-parameters carry the
//! improper prior `p(α, β) ∝ (α + β)^(-5/2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{ln_gamma, ln_rising};

/// Per-day counts of first-time participants over the first period.
///
/// `counts()[t - 1]` is the number of individuals whose first participation
/// falls on day `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DailyCounts {
    counts: Vec<u64>,
}

impl DailyCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::domain("counts", "must cover at least one day"));
        }
        if u32::try_from(counts.len()).is_err() {
            return Err(Error::domain("counts", "too many days"));
        }
        counts
            .iter()
            .try_fold(0_u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::domain("counts", "total participants overflows u64"))?;
        Ok(Self { counts })
    }

    /// Length of the first period in days.
    pub fn d(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `S_t` for a 1-indexed day.
    pub fn on_day(&self, t: u32) -> Option<u64> {
        self.counts.get((t as usize).checked_sub(1)?).copied()
    }

    pub fn total_participants(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The first `d` days.
    pub fn truncated(&self, d: u32) -> Result<Self> {
        if d == 0 || d > self.d() {
            return Err(Error::Request(format!(
                "first period of {d} days requested but data covers {} days",
                self.d()
            )));
        }
        Self::new(self.counts[..d as usize].to_vec())
    }

    /// Whether the improper hyperprior yields a proper hyper-posterior.
    ///
    /// Day-1 participants and censored individuals keep a likelihood that stays
    /// bounded away from zero as `α + β → 0`, where the prior diverges; only a
    /// first participation on some day `t ≥ 2` makes the likelihood vanish there.
    pub fn has_proper_posterior(&self) -> bool {
        self.counts.iter().skip(1).any(|&c| c > 0)
    }

    pub fn check_propriety(&self) -> Result<()> {
        if self.has_proper_posterior() {
            Ok(())
        } else {
            Err(Error::Model(
                "posterior may be improper: no individual first participated on day 2 or later"
                    .into(),
            ))
        }
    }
}

/// Parameters `(α, β)` of the Beta population distribution of `π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperParams<F> {
    alpha: F,
    beta: F,
}

impl<F: Real> HyperParams<F> {
    pub fn new(alpha: F, beta: F) -> Result<Self> {
        if !(alpha.is_finite() && alpha > F::zero()) {
            return Err(Error::domain("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > F::zero()) {
            return Err(Error::domain("beta", format!("must be finite and > 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> F {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> F {
        self.beta
    }

    /// `α + β`.
    #[inline]
    pub fn concentration(&self) -> F {
        self.alpha + self.beta
    }

    /// `α / (α + β)`.
    #[inline]
    pub fn mean(&self) -> F {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Either a known number of first-period non-participants, or a multiplier
/// applied to the observed participant total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationSpec<F> {
    KnownN0(u64),
    Lambda(F),
}

impl<F: Real> PopulationSpec<F> {
    pub fn known(n0: u64) -> Self {
        PopulationSpec::KnownN0(n0)
    }

    pub fn lambda(lambda: F) -> Result<Self> {
        if !(lambda.is_finite() && lambda > F::zero()) {
            return Err(Error::domain("lambda", format!("must be finite and > 0, got {lambda}")));
        }
        Ok(PopulationSpec::Lambda(lambda))
    }
}

/// Mean and standard deviation of `Beta(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSummary<F> {
    pub mean: F,
    pub sd: F,
}

/// `P(X = x | π)` for the geometric first-participation day censored at `d`.
pub fn censored_geometric_pmf<F: Real>(x: u32, pi: F, d: u32) -> Result<F> {
    if d == 0 || d > i32::MAX as u32 {
        return Err(Error::domain("d", format!("must be in 1..=i32::MAX, got {d}")));
    }
    if x > d {
        return Err(Error::domain("x", format!("must be in 0..={d}, got {x}")));
    }
    if !(pi > F::zero() && pi <= F::one()) {
        return Err(Error::domain("pi", format!("must be in (0, 1], got {pi}")));
    }
    let miss = F::one() - pi;
    Ok(if x == 0 { miss.powi(d as i32) } else { miss.powi(x as i32 - 1) * pi })
}

/// Beta parameters of `π_i` given `(α, β)` and the individual's outcome `x`.
pub fn conditional_posterior_pi<F: Real>(hp: HyperParams<F>, x: u32, d: u32) -> Result<HyperParams<F>> {
    if d == 0 {
        return Err(Error::domain("d", "must be >= 1"));
    }
    if x > d {
        return Err(Error::domain("x", format!("must be in 0..={d}, got {x}")));
    }
    if x == 0 {
        HyperParams::new(hp.alpha, hp.beta + F::count(d.into()))
    } else {
        HyperParams::new(hp.alpha + F::one(), hp.beta + F::count((x - 1).into()))
    }
}

/// First-period data reduced to the coefficients of the log hyper-posterior.
///
/// With `m = Σ S_t`, `b_j = n0 + Σ_{t ≥ j+2} S_t` and `e_j = n0 + Σ_{t ≥ j+1} S_t`
/// the unnormalized log density is
///
/// ```text
/// -5/2 ln(α+β) + m ln α + Σ_{j<d} [ b_j ln(β+j) - e_j ln(α+β+j) ]
/// ```
///
/// which is the log-gamma form with every `Γ(x+k)/Γ(x)` ratio expanded into
/// its `k` factors.
#[derive(Debug, Clone)]
pub struct HyperPosterior<F> {
    participants: F,
    beta_weights: Vec<F>,
    scale_weights: Vec<F>,
}

impl<F: Real> HyperPosterior<F> {
    pub fn new(data: &DailyCounts, n0: u64) -> Self {
        let d = data.counts.len();
        let mut beta_weights = vec![F::zero(); d];
        let mut scale_weights = vec![F::zero(); d];
        // running tail sum Σ_{t ≥ j+1} S_t, j counted from the back
        let mut tail: u64 = 0;
        for j in (0..d).rev() {
            // j+2 > d contributes nothing beyond n0
            beta_weights[j] = F::count(n0 + tail);
            tail += data.counts[j];
            scale_weights[j] = F::count(n0 + tail);
        }
        Self {
            participants: F::count(data.total_participants()),
            beta_weights,
            scale_weights,
        }
    }

    /// Unnormalized log density; `-inf` outside `α, β > 0` and NaN-free.
    pub fn log_density(&self, alpha: F, beta: F) -> F {
        if !(alpha > F::zero() && beta > F::zero()) || !alpha.is_finite() || !beta.is_finite() {
            return F::neg_infinity();
        }
        let scale = alpha + beta;
        let mut acc = F::lit(-2.5) * scale.ln();
        if self.participants > F::zero() {
            acc = acc + self.participants * alpha.ln();
        }
        let mut offset = F::zero();
        for (&bw, &sw) in self.beta_weights.iter().zip(&self.scale_weights) {
            if bw > F::zero() {
                acc = acc + bw * (beta + offset).ln();
            }
            if sw > F::zero() {
                acc = acc - sw * (scale + offset).ln();
            }
            offset = offset + F::one();
        }
        if acc.is_nan() {
            F::neg_infinity()
        } else {
            acc
        }
    }
}

/// Unnormalized log density of `(α, β)` given the first-period data and `n0`
/// censored individuals.
pub fn log_hyper_posterior<F: Real>(hp: HyperParams<F>, data: &DailyCounts, n0: u64) -> Result<F> {
    let value = HyperPosterior::new(data, n0).log_density(hp.alpha, hp.beta);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!(
            "log hyper-posterior is not finite at alpha={}, beta={}",
            hp.alpha, hp.beta
        )))
    }
}

/// `ln q0` between two horizons: log of the probability that a first-period
/// non-participant who has survived `from` days of the second period also
/// survives to `to`.
pub(crate) fn ln_survival_between<F: Real>(hp: HyperParams<F>, d: u32, from: u64, to: u64) -> F {
    debug_assert!(from <= to);
    let steps = to - from;
    if steps == 0 {
        return F::zero();
    }
    let base = hp.concentration() + F::count(u64::from(d) + from);
    if steps <= 512 {
        // Π (β+d+j)/(α+β+d+j) = Π (1 - α/(α+β+d+j))
        let mut acc = F::zero();
        let mut denom = base;
        for _ in 0..steps {
            acc = acc + (-hp.alpha / denom).ln_1p();
            denom = denom + F::one();
        }
        acc
    } else {
        let beta_base = hp.beta + F::count(u64::from(d) + from);
        ln_rising(beta_base, steps) - ln_rising(base, steps)
    }
}

/// Probability that a first-period non-participant also fails to participate
/// during the next `d_star` days, given `(α, β)`.
pub fn q0<F: Real>(hp: HyperParams<F>, d: u32, d_star: u64) -> Result<F> {
    if d == 0 {
        return Err(Error::domain("d", "must be >= 1"));
    }
    Ok(ln_survival_between(hp, d, 0, d_star).exp())
}

/// Predictive probability of the second-period first-participation day `x_star`
/// (`0` meaning no participation within `d_star` days) for a first-period
/// non-participant.
pub fn predictive_pmf_second_period<F: Real>(
    hp: HyperParams<F>,
    x_star: u64,
    d: u32,
    d_star: u64,
) -> Result<F> {
    if x_star > d_star {
        return Err(Error::domain("x_star", format!("must be in 0..={d_star}, got {x_star}")));
    }
    if x_star == 0 {
        return q0(hp, d, d_star);
    }
    // survive x*-1 days, then participate with conditional probability α/(α+β+d+x*-1)
    let survive = q0(hp, d, x_star - 1)?;
    let denom = hp.concentration() + F::count(u64::from(d) + x_star - 1);
    Ok(survive * hp.alpha / denom)
}

pub fn beta_summary<F: Real>(hp: HyperParams<F>) -> BetaSummary<F> {
    let mean = hp.mean();
    let var = mean * (F::one() - mean) / (hp.concentration() + F::one());
    BetaSummary { mean, sd: var.sqrt() }
}

/// Log of the per-individual marginal likelihood factor for outcome `x`,
/// written directly with log-gamma terms. Used to cross-check the grouped form.
#[doc(hidden)]
pub fn ln_individual_factor<F: Real>(hp: HyperParams<F>, x: u32, d: u32) -> F {
    let (a, b) = (hp.alpha, hp.beta);
    let post = match conditional_posterior_pi(hp, x, d) {
        Ok(p) => p,
        Err(_) => return F::nan(),
    };
    ln_gamma(post.alpha) + ln_gamma(post.beta) - ln_gamma(post.alpha + post.beta) + ln_gamma(a + b)
        - ln_gamma(a)
        - ln_gamma(b)
}
