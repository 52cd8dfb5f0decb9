//! Derivative-free minimization (Nelder–Mead) over small fixed dimensions.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct NelderMead<F> {
    /// Edge length of the axis-aligned starting simplex.
    pub initial_step: F,
    /// Converged once every vertex is within this distance (max-norm) of the best.
    pub tolerance: F,
    pub max_iterations: usize,
}

impl<F: Real> Default for NelderMead<F> {
    fn default() -> Self {
        Self { initial_step: F::lit(0.5), tolerance: F::lit(1e-8), max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minimum<F, const N: usize> {
    pub point: [F; N],
    pub value: F,
    pub iterations: usize,
}

impl<F: Real> NelderMead<F> {
    /// Minimize `f` starting from `start`. Non-finite objective values are
    /// treated as `+inf`, so infeasible regions can be encoded that way.
    pub fn minimize<const N: usize>(
        &self,
        mut f: impl FnMut(&[F; N]) -> F,
        start: [F; N],
    ) -> Result<Minimum<F, N>> {
        let mut eval = |x: &[F; N]| {
            let v = f(x);
            if v.is_nan() {
                F::infinity()
            } else {
                v
            }
        };

        let mut simplex: Vec<([F; N], F)> = Vec::with_capacity(N + 1);
        let v0 = eval(&start);
        if !v0.is_finite() {
            return Err(Error::Numerical("objective is not finite at the starting point".into()));
        }
        simplex.push((start, v0));
        for i in 0..N {
            let mut p = start;
            p[i] = p[i] + self.initial_step;
            let v = eval(&p);
            simplex.push((p, v));
        }

        let (alpha, gamma, rho, sigma) = (F::one(), F::lit(2.0), F::lit(0.5), F::lit(0.5));
        let n_inv = F::one() / F::count(N as u64);

        for iteration in 0..self.max_iterations {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

            let best = simplex[0].0;
            let size = simplex[1..].iter().fold(F::zero(), |acc, (p, _)| {
                p.iter().zip(&best).fold(acc, |m, (a, b)| m.max((*a - *b).abs()))
            });
            // the requested tolerance may be finer than F can resolve at `best`
            let scale = best.iter().fold(F::one(), |m, x| m.max(x.abs()));
            let tolerance = self.tolerance.max(F::lit(64.0) * F::epsilon() * scale);
            if size < tolerance && simplex[N].1.is_finite() {
                return Ok(Minimum { point: best, value: simplex[0].1, iterations: iteration });
            }

            let mut centroid = [F::zero(); N];
            for (p, _) in &simplex[..N] {
                for k in 0..N {
                    centroid[k] = centroid[k] + p[k] * n_inv;
                }
            }
            let worst = simplex[N];
            let along = |t: F| {
                let mut q = [F::zero(); N];
                for k in 0..N {
                    q[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
                }
                q
            };

            let reflected = along(-alpha);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(-gamma);
                let fe = eval(&expanded);
                simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[N - 1].1 {
                simplex[N] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < worst.1 {
                let c = along(-rho);
                let v = eval(&c);
                (c, v)
            } else {
                let c = along(rho);
                let v = eval(&c);
                (c, v)
            };
            if fc < worst.1.min(fr) {
                simplex[N] = (contracted, fc);
                continue;
            }
            // shrink toward the best vertex
            for vertex in simplex.iter_mut().skip(1) {
                for k in 0..N {
                    vertex.0[k] = best[k] + sigma * (vertex.0[k] - best[k]);
                }
                vertex.1 = eval(&vertex.0);
            }
        }
        Err(Error::Numerical(format!(
            "Nelder-Mead did not converge within {} iterations",
            self.max_iterations
        )))
    }
}
