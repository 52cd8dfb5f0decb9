//! Exact draws of `(α, β)` from the hyper-posterior by ratio-of-uniforms.
//!
//! Sampling happens in the working coordinates `θ = (ln(α/β), ln(α+β))`,
//! i.e. logit of the Beta mean and log concentration, where the target is
//! unconstrained with exponentially decaying tails. The target is relocated to
//! its mode and whitened by the Cholesky factor of the inverse negative Hessian,
//! `θ = mode + L z`, and the generalized ratio-of-uniforms region with power
//! `r = 1/2`,
//!
//! ```text
//! A = { (u0, u) : 0 < u0 <= f(z)^(1/2), z = u / sqrt(u0) }
//! ```
//!
//! is enclosed in a box whose faces come from numerically maximizing
//! `f^(1/2)` and `± z_i f^(1/4)`, then inflated by 5%. Proposals are uniform in
//! the box, so accepted points are independent exact draws.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DailyCounts, HyperParams, HyperPosterior};
use crate::optimize::NelderMead;
use crate::real::Real;
use crate::rng::{self, Domain};

/// Draws per independent random stream; fixed so results do not depend on
/// the number of worker threads.
const BLOCK_DRAWS: usize = 256;
const ENVELOPE_INFLATION: f64 = 1.05;
const SANITY_GRID_HALF_WIDTH: f64 = 3.0;
const SANITY_GRID_POINTS: usize = 21;
const MAX_MODE_RESTARTS: usize = 8;
/// `ln(α+β)` outside this band means the optimizer ran off to a boundary.
const LOG_SCALE_BAND: (f64, f64) = (-25.0, 40.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub n_draws: usize,
    pub seed: u64,
    pub max_rejections_per_draw: u64,
    pub mode_tolerance: f64,
}

impl SamplerConfig {
    pub fn new(n_draws: usize, seed: u64) -> Result<Self> {
        let cfg = Self { n_draws, seed, max_rejections_per_draw: 10_000, mode_tolerance: 1e-8 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::domain("n_draws", "must be >= 1"));
        }
        if self.max_rejections_per_draw == 0 {
            return Err(Error::domain("max_rejections_per_draw", "must be >= 1"));
        }
        if !(self.mode_tolerance.is_finite() && self.mode_tolerance > 0.0) {
            return Err(Error::domain("mode_tolerance", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Bounding box of the ratio-of-uniforms region in whitened coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    /// Upper bound of `u0`.
    pub u0_max: f64,
    pub u_min: [f64; 2],
    pub u_max: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorDraws<F> {
    pub draws: Vec<HyperParams<F>>,
    /// Accepted / proposed over the whole run.
    pub acceptance_rate: f64,
    /// Mode of the sampling density in working coordinates, mapped to `(α, β)`.
    pub mode: HyperParams<F>,
    pub seed: u64,
    pub envelope: Envelope,
}

#[inline]
fn softplus<F: Real>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

/// `(ln α, ln β)` for working coordinates `(ln(α/β), ln(α+β))`.
#[inline]
pub(crate) fn working_to_log_natural<F: Real>(theta: &[F; 2]) -> (F, F) {
    (theta[1] - softplus(-theta[0]), theta[1] - softplus(theta[0]))
}

pub(crate) fn working_to_natural<F: Real>(theta: &[F; 2]) -> (F, F) {
    let (la, lb) = working_to_log_natural(theta);
    (la.exp(), lb.exp())
}

pub(crate) fn natural_to_working<F: Real>(alpha: F, beta: F) -> [F; 2] {
    [alpha.ln() - beta.ln(), (alpha + beta).ln()]
}

/// Log hyper-posterior density with respect to the working coordinates
/// (includes the Jacobian `αβ`).
fn working_log_density<F: Real>(post: &HyperPosterior<F>, theta: &[F; 2]) -> F {
    let (la, lb) = working_to_log_natural(theta);
    let (alpha, beta) = (la.exp(), lb.exp());
    let v = post.log_density(alpha, beta);
    if v == F::neg_infinity() {
        v
    } else {
        v + la + lb
    }
}

/// Starting point for mode searches: the Beta mean equals the day-1
/// participation probability, and the concentration is picked by a 1-D scan.
fn initial_guess<F: Real>(data: &DailyCounts, n0: u64, objective: &impl Fn(&[F; 2]) -> F) -> [F; 2] {
    let n = (n0 + data.total_participants()).max(1) as f64;
    let day1 = data.counts()[0] as f64;
    let raw_mean = if day1 > 0.0 {
        day1 / n
    } else {
        data.total_participants() as f64 / (n * f64::from(data.d()))
    };
    let mean = raw_mean.clamp(1e-6, 1.0 - 1e-6);
    let logit = F::lit((mean / (1.0 - mean)).ln());
    let mut best = [logit, F::zero()];
    let mut best_val = objective(&best);
    let mut ls = -4.0;
    while ls <= 16.0 {
        let cand = [logit, F::lit(ls)];
        let v = objective(&cand);
        if v > best_val {
            best = cand;
            best_val = v;
        }
        ls += 0.25;
    }
    best
}

/// Maximize `objective` in working coordinates, restarting from any point of a
/// 21x21 grid (±3 units) around the candidate that beats it.
fn maximize_working<F: Real>(
    objective: impl Fn(&[F; 2]) -> F,
    start: [F; 2],
    tolerance: F,
) -> Result<[F; 2]> {
    let nm = NelderMead { initial_step: F::lit(0.5), tolerance, max_iterations: 20_000 };
    let polish = NelderMead { initial_step: F::lit(0.05), ..nm };
    let neg = |x: &[F; 2]| -objective(x);
    let mut point = start;
    for _ in 0..=MAX_MODE_RESTARTS {
        let coarse = nm.minimize(neg, point)?;
        let fine = polish.minimize(neg, coarse.point)?;
        point = fine.point;
        if !(point[1].as_f64() > LOG_SCALE_BAND.0 && point[1].as_f64() < LOG_SCALE_BAND.1) {
            return Err(Error::Numerical(format!(
                "posterior mode search left the interior (ln(alpha+beta) = {}); \
                 the density may be unbounded toward alpha+beta -> 0",
                point[1]
            )));
        }
        let best = objective(&point);
        let slack = F::lit(1e-9) * (F::one() + best.abs());
        let step = F::lit(2.0 * SANITY_GRID_HALF_WIDTH / (SANITY_GRID_POINTS - 1) as f64);
        let half = (SANITY_GRID_POINTS / 2) as i64;
        let mut better: Option<([F; 2], F)> = None;
        for i in -half..=half {
            for j in -half..=half {
                let cand = [
                    point[0] + step * F::lit(i as f64),
                    point[1] + step * F::lit(j as f64),
                ];
                let v = objective(&cand);
                if v > best + slack && better.is_none_or(|(_, bv)| v > bv) {
                    better = Some((cand, v));
                }
            }
        }
        match better {
            None => return Ok(point),
            Some((cand, _)) => {
                log::debug!("mode sanity grid found a better point, restarting");
                point = cand;
            }
        }
    }
    Err(Error::Numerical("posterior mode search did not settle".into()))
}

/// Mode of `log_hyper_posterior` over `(α, β)`, searched in
/// `(ln(α/β), ln(α+β))` without a Jacobian.
pub fn find_posterior_mode<F: Real>(data: &DailyCounts, n0: u64) -> Result<HyperParams<F>> {
    find_posterior_mode_with_tolerance(data, n0, F::lit(1e-8))
}

pub fn find_posterior_mode_with_tolerance<F: Real>(
    data: &DailyCounts,
    n0: u64,
    tolerance: F,
) -> Result<HyperParams<F>> {
    data.check_propriety()?;
    let post = HyperPosterior::new(data, n0);
    let objective = |theta: &[F; 2]| {
        let (a, b) = working_to_natural(theta);
        post.log_density(a, b)
    };
    let start = initial_guess(data, n0, &objective);
    let mode = maximize_working(objective, start, tolerance)?;
    let (a, b) = working_to_natural(&mode);
    HyperParams::new(a, b)
}

/// Relocated and whitened log target `ln f(mode + L z) - ln f(mode)`.
struct WhitenedTarget<'a, F> {
    post: &'a HyperPosterior<F>,
    mode: [F; 2],
    chol: [[F; 2]; 2],
    log_at_mode: F,
}

impl<F: Real> WhitenedTarget<'_, F> {
    fn theta(&self, z: &[F; 2]) -> [F; 2] {
        [
            self.mode[0] + self.chol[0][0] * z[0],
            self.mode[1] + self.chol[1][0] * z[0] + self.chol[1][1] * z[1],
        ]
    }

    fn log_f(&self, z: &[F; 2]) -> F {
        working_log_density(self.post, &self.theta(z)) - self.log_at_mode
    }
}

/// Lower Cholesky factor of the inverse negative Hessian at `mode`.
fn whitening<F: Real>(f: impl Fn(&[F; 2]) -> F, mode: &[F; 2]) -> [[F; 2]; 2] {
    let f0 = f(mode);
    let hessian = |h: [F; 2]| {
        let at = |di: F, dj: F| f(&[mode[0] + di, mode[1] + dj]);
        let two = F::lit(2.0);
        let h00 = (at(h[0], F::zero()) - two * f0 + at(-h[0], F::zero())) / (h[0] * h[0]);
        let h11 = (at(F::zero(), h[1]) - two * f0 + at(F::zero(), -h[1])) / (h[1] * h[1]);
        let h01 = (at(h[0], h[1]) - at(h[0], -h[1]) - at(-h[0], h[1]) + at(-h[0], -h[1]))
            / (F::lit(4.0) * h[0] * h[1]);
        [[-h00, -h01], [-h01, -h11]]
    };
    let mut step = [F::lit(1e-3); 2];
    let mut neg_h = hessian(step);
    // re-difference at roughly a tenth of a posterior standard deviation
    for k in 0..2 {
        if neg_h[k][k] > F::zero() && neg_h[k][k].is_finite() {
            step[k] = (F::lit(0.1) / neg_h[k][k].sqrt()).min(F::lit(0.5));
        }
    }
    neg_h = hessian(step);
    let det = neg_h[0][0] * neg_h[1][1] - neg_h[0][1] * neg_h[1][0];
    let usable = neg_h[0][0] > F::zero() && det > F::zero() && det.is_finite();
    if !usable {
        log::debug!("negative Hessian at the mode is not positive definite; using axis scaling");
        let scale = |v: F| if v > F::zero() && v.is_finite() { F::one() / v.sqrt() } else { F::one() };
        return [[scale(neg_h[0][0]), F::zero()], [F::zero(), scale(neg_h[1][1])]];
    }
    let cov = [
        [neg_h[1][1] / det, -neg_h[0][1] / det],
        [-neg_h[1][0] / det, neg_h[0][0] / det],
    ];
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).max(F::zero()).sqrt();
    [[l00, F::zero()], [l10, l11]]
}

fn envelope<F: Real>(target: &WhitenedTarget<'_, F>) -> Result<Envelope> {
    let nm = NelderMead { initial_step: F::lit(0.5), tolerance: F::lit(1e-9), max_iterations: 20_000 };
    let top = nm.minimize(|z: &[F; 2]| -F::lit(0.5) * target.log_f(z), [F::zero(); 2])?;
    let ln_u0_max = (-top.value).max(F::zero());

    let mut u_min = [0.0; 2];
    let mut u_max = [0.0; 2];
    for axis in 0..2 {
        for sign in [1.0_f64, -1.0] {
            let s = F::lit(sign);
            let objective = |z: &[F; 2]| {
                let along = s * z[axis];
                if along <= F::zero() {
                    F::infinity()
                } else {
                    -(along.ln() + F::lit(0.25) * target.log_f(z))
                }
            };
            let mut best = F::infinity();
            for start in [1.0, 2.0, 4.0] {
                let mut z0 = [F::zero(); 2];
                z0[axis] = F::lit(sign * start);
                if let Ok(m) = nm.minimize(objective, z0) {
                    best = best.min(m.value);
                }
            }
            if !best.is_finite() {
                return Err(Error::Numerical(format!(
                    "could not bound the ratio-of-uniforms region along axis {axis}"
                )));
            }
            let bound = (-best).exp().as_f64() * ENVELOPE_INFLATION;
            if sign > 0.0 {
                u_max[axis] = bound;
            } else {
                u_min[axis] = -bound;
            }
        }
    }
    let env = Envelope {
        u0_max: ln_u0_max.exp().as_f64().max(1.0) * ENVELOPE_INFLATION,
        u_min,
        u_max,
    };
    if !(env.u0_max.is_finite() && env.u_min.iter().chain(&env.u_max).all(|v| v.is_finite())) {
        return Err(Error::Numerical(format!("non-finite ratio-of-uniforms box {env:?}")));
    }
    Ok(env)
}

struct BlockOutcome<F> {
    draws: Vec<HyperParams<F>>,
    proposals: u64,
}

fn sample_block<F: Real>(
    target: &WhitenedTarget<'_, F>,
    env: &Envelope,
    count: usize,
    seed: u64,
    block: u64,
    max_rejections: u64,
) -> Result<BlockOutcome<F>> {
    let mut rng = rng::stream(seed, Domain::Sampler, block);
    let ln_u0_max = env.u0_max.ln();
    let mut draws = Vec::with_capacity(count);
    let mut proposals = 0_u64;
    while draws.len() < count {
        let mut rejections = 0_u64;
        loop {
            proposals += 1;
            // u0 in (0, u0_max]
            let u0 = env.u0_max * (1.0 - rng.random::<f64>());
            let u = [
                env.u_min[0] + (env.u_max[0] - env.u_min[0]) * rng.random::<f64>(),
                env.u_min[1] + (env.u_max[1] - env.u_min[1]) * rng.random::<f64>(),
            ];
            let root = u0.sqrt();
            let z = [F::lit(u[0] / root), F::lit(u[1] / root)];
            let log_f = target.log_f(&z).as_f64();
            if log_f > f64::NEG_INFINITY {
                let violated = 0.5 * log_f > ln_u0_max
                    || (0..2).any(|k| {
                        let edge = z[k].as_f64() * (0.25 * log_f).exp();
                        edge > env.u_max[k] || edge < env.u_min[k]
                    });
                if violated {
                    return Err(Error::Numerical(format!(
                        "ratio-of-uniforms envelope violated at z = ({}, {}), ln f = {log_f}; box {env:?}",
                        z[0], z[1]
                    )));
                }
                if u0.ln() <= 0.5 * log_f {
                    let (a, b) = working_to_natural(&target.theta(&z));
                    if let Ok(hp) = HyperParams::new(a, b) {
                        draws.push(hp);
                        break;
                    }
                }
            }
            rejections += 1;
            if rejections > max_rejections {
                let rate = draws.len() as f64 / proposals as f64;
                return Err(Error::Numerical(format!(
                    "rejection budget of {max_rejections} exhausted; acceptance rate {rate:.4}, box {env:?}"
                )));
            }
        }
    }
    Ok(BlockOutcome { draws, proposals })
}

/// `cfg.n_draws` independent draws of `(α, β)` from the hyper-posterior.
pub fn sample_hyper_posterior<F: Real>(
    data: &DailyCounts,
    n0: u64,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws<F>> {
    cfg.validate()?;
    data.check_propriety()?;
    let post = HyperPosterior::new(data, n0);
    let objective = |theta: &[F; 2]| working_log_density(&post, theta);
    let start = initial_guess(data, n0, &objective);
    let mode = maximize_working(objective, start, F::lit(cfg.mode_tolerance))?;
    let chol = whitening(objective, &mode);
    let target = WhitenedTarget { post: &post, mode, chol, log_at_mode: objective(&mode) };
    let env = envelope(&target)?;
    log::debug!("ratio-of-uniforms mode {:?}, box {env:?}", mode);

    let blocks = cfg.n_draws.div_ceil(BLOCK_DRAWS);
    let outcomes: Vec<Result<BlockOutcome<F>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK_DRAWS.min(cfg.n_draws - b * BLOCK_DRAWS);
            sample_block(&target, &env, count, cfg.seed, b as u64, cfg.max_rejections_per_draw)
        })
        .collect();

    let mut draws = Vec::with_capacity(cfg.n_draws);
    let mut proposals = 0_u64;
    for outcome in outcomes {
        let outcome = outcome?;
        proposals += outcome.proposals;
        draws.extend(outcome.draws);
    }
    let (ma, mb) = working_to_natural(&mode);
    Ok(PosteriorDraws {
        acceptance_rate: draws.len() as f64 / proposals as f64,
        draws,
        mode: HyperParams::new(ma, mb)?,
        seed: cfg.seed,
        envelope: env,
    })
}

/// Coordinates of a quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridAxes {
    /// `x = α`, `y = β`.
    AlphaBeta,
    /// `x = ln(α/β)`, `y = ln(α+β)`; cell masses include the Jacobian.
    LogitMeanLogScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<F> {
    pub axes: GridAxes,
    pub x_range: (F, F),
    pub y_range: (F, F),
    pub nx: usize,
    pub ny: usize,
}

/// Normalized cell masses of the hyper-posterior over a rectangular grid,
/// evaluated at cell centers. `mass[i * ny + j]` is cell `(i, j)`.
#[derive(Debug, Clone)]
pub struct GridPosterior<F> {
    pub spec: GridSpec<F>,
    pub mass: Vec<F>,
}

impl<F: Real> GridSpec<F> {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::domain("grid_spec", "resolution must be >= 2 per axis"));
        }
        for (name, (lo, hi)) in [("x_range", self.x_range), ("y_range", self.y_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain("grid_spec", format!("{name} must be finite with lo < hi")));
            }
            if self.axes == GridAxes::AlphaBeta && lo <= F::zero() {
                return Err(Error::domain("grid_spec", format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn x_width(&self) -> F {
        (self.x_range.1 - self.x_range.0) / F::count(self.nx as u64)
    }

    pub fn y_width(&self) -> F {
        (self.y_range.1 - self.y_range.0) / F::count(self.ny as u64)
    }

    pub fn x_center(&self, i: usize) -> F {
        self.x_range.0 + self.x_width() * (F::count(i as u64) + F::lit(0.5))
    }

    pub fn y_center(&self, j: usize) -> F {
        self.y_range.0 + self.y_width() * (F::count(j as u64) + F::lit(0.5))
    }

    /// Grid coordinates of `(α, β)`.
    pub fn coordinates(&self, hp: &HyperParams<F>) -> (F, F) {
        match self.axes {
            GridAxes::AlphaBeta => (hp.alpha(), hp.beta()),
            GridAxes::LogitMeanLogScale => {
                let w = natural_to_working(hp.alpha(), hp.beta());
                (w[0], w[1])
            }
        }
    }

    /// The cell containing `(α, β)`, if inside the grid.
    pub fn cell_of(&self, hp: &HyperParams<F>) -> Option<(usize, usize)> {
        let (x, y) = self.coordinates(hp);
        let fx = ((x - self.x_range.0) / self.x_width()).floor();
        let fy = ((y - self.y_range.0) / self.y_width()).floor();
        if fx < F::zero() || fy < F::zero() {
            return None;
        }
        let (i, j) = (fx.to_usize()?, fy.to_usize()?);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// `(α, β)` at the center of cell `(i, j)`.
    pub fn natural_center(&self, i: usize, j: usize) -> (F, F) {
        let (x, y) = (self.x_center(i), self.y_center(j));
        match self.axes {
            GridAxes::AlphaBeta => (x, y),
            GridAxes::LogitMeanLogScale => working_to_natural(&[x, y]),
        }
    }
}

impl<F: Real> GridPosterior<F> {
    pub fn at(&self, i: usize, j: usize) -> F {
        self.mass[i * self.spec.ny + j]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .mass
            .iter()
            .enumerate()
            .fold(0, |best, (k, &m)| if m > self.mass[best] { k } else { best });
        (k / self.spec.ny, k % self.spec.ny)
    }
}

/// Hyper-posterior on a grid, normalized to unit total mass.
pub fn grid_posterior<F: Real>(data: &DailyCounts, n0: u64, spec: &GridSpec<F>) -> Result<GridPosterior<F>> {
    spec.validate()?;
    let post = HyperPosterior::new(data, n0);
    let mut log_mass = Vec::with_capacity(spec.nx * spec.ny);
    for i in 0..spec.nx {
        for j in 0..spec.ny {
            let v = match spec.axes {
                GridAxes::AlphaBeta => post.log_density(spec.x_center(i), spec.y_center(j)),
                GridAxes::LogitMeanLogScale => {
                    working_log_density(&post, &[spec.x_center(i), spec.y_center(j)])
                }
            };
            log_mass.push(v);
        }
    }
    let peak = log_mass.iter().copied().fold(F::neg_infinity(), F::max);
    if !peak.is_finite() {
        return Err(Error::Numerical(
            "hyper-posterior is zero on every grid cell; adjust the grid bounds".into(),
        ));
    }
    let mut mass: Vec<F> = log_mass.iter().map(|&v| (v - peak).exp()).collect();
    let total = mass.iter().fold(F::zero(), |acc, &m| acc + m);
    if !(total > F::zero() && total.is_finite()) {
        return Err(Error::Numerical(
            "grid masses underflow to zero; adjust the grid bounds".into(),
        ));
    }
    for m in &mut mass {
        *m = *m / total;
    }
    Ok(GridPosterior { spec: *spec, mass })
}
