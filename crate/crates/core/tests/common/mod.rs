#![allow(dead_code)]

use std::f64::consts::PI;

use accrual::model::{DailyCounts, HyperParams};
use accrual::sampler::{grid_posterior, GridAxes, GridPosterior, GridSpec};

/// Tanh-sinh quadrature of `f` over (0, 1). `f` receives `(x, 1 - x)`, both
/// computed without cancellation so endpoint singularities are harmless.
pub fn tanh_sinh(f: impl Fn(f64, f64) -> f64, h: f64) -> f64 {
    let t_max = 4.0;
    let n = (t_max / h).ceil() as i64;
    let mut acc = 0.0;
    for k in -n..=n {
        let t = k as f64 * h;
        let s = PI * t.sinh();
        let x = 1.0 / (1.0 + (-s).exp());
        let y = 1.0 / (1.0 + s.exp());
        if x == 0.0 || y == 0.0 {
            continue;
        }
        let w = PI * t.cosh() * x * y;
        acc += f(x, y) * w;
    }
    acc * h
}

/// Integral with step halving until two levels agree to `rel`.
pub fn integrate(f: impl Fn(f64, f64) -> f64, rel: f64) -> f64 {
    let mut h = 0.25;
    let mut prev = tanh_sinh(&f, h);
    loop {
        h /= 2.0;
        let next = tanh_sinh(&f, h);
        if (next - prev).abs() <= rel * next.abs() || h < 1e-4 {
            return next;
        }
        prev = next;
    }
}

/// `E[(1-π)^k]` under `Beta(a, b)` as a ratio of two quadratures.
pub fn beta_moment_of_miss(a: f64, b: f64, k: f64) -> f64 {
    let kernel = |e: f64| move |x: f64, y: f64| ((a - 1.0) * x.ln() + (b + e - 1.0) * y.ln()).exp();
    integrate(kernel(k), 1e-14) / integrate(kernel(0.0), 1e-14)
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Grid masses and draw frequencies aggregated into `bx × by` blocks. Draws
/// outside the grid go to a final overflow bin with zero reference mass.
pub fn binned(grid: &GridPosterior<f64>, draws: &[HyperParams<f64>], bx: usize, by: usize) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (grid.spec.nx, grid.spec.ny);
    let (fx, fy) = (nx / bx, ny / by);
    let mut reference = vec![0.0; bx * by + 1];
    for i in 0..nx {
        for j in 0..ny {
            reference[(i / fx) * by + j / fy] += grid.at(i, j);
        }
    }
    let mut empirical = vec![0.0; bx * by + 1];
    let unit = 1.0 / draws.len() as f64;
    for hp in draws {
        match grid.spec.cell_of(hp) {
            Some((i, j)) => empirical[(i / fx) * by + j / fy] += unit,
            None => empirical[bx * by] += unit,
        }
    }
    (reference, empirical)
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    cov / var
}

/// Kolmogorov-Smirnov distance between a sample and a discrete reference
/// given as sorted `(value, mass)` atoms.
pub fn ks_against_atoms(sample: &mut [f64], atoms: &mut [(f64, f64)]) -> f64 {
    sample.sort_by(f64::total_cmp);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sample.len() as f64;
    let (mut i, mut cdf_ref, mut worst) = (0, 0.0, 0.0_f64);
    for &(v, m) in atoms.iter() {
        while i < sample.len() && sample[i] < v {
            i += 1;
        }
        worst = worst.max((i as f64 / n - cdf_ref).abs());
        cdf_ref += m;
        while i < sample.len() && sample[i] <= v {
            i += 1;
        }
        worst = worst.max((i as f64 / n - cdf_ref).abs());
    }
    worst
}

/// Smallest box holding every cell of a coarse wide grid whose mass exceeds
/// `1e-14` of the total, padded by one coarse cell.
pub fn support_box(data: &DailyCounts, n0: u64) -> ((f64, f64), (f64, f64)) {
    let coarse = GridSpec { axes: GridAxes::LogitMeanLogScale, x_range: (-12.0, 6.0), y_range: (-6.0, 16.0), nx: 180, ny: 220 };
    let g = grid_posterior(data, n0, &coarse).unwrap();
    let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
    for i in 0..coarse.nx {
        for j in 0..coarse.ny {
            if g.at(i, j) > 1e-14 {
                i0 = i0.min(i);
                i1 = i1.max(i);
                j0 = j0.min(j);
                j1 = j1.max(j);
            }
        }
    }
    let (wx, wy) = (coarse.x_width(), coarse.y_width());
    (
        (coarse.x_range.0 + wx * (i0 as f64 - 1.0), coarse.x_range.0 + wx * (i1 as f64 + 2.0)),
        (coarse.y_range.0 + wy * (j0 as f64 - 1.0), coarse.y_range.0 + wy * (j1 as f64 + 2.0)),
    )
}
