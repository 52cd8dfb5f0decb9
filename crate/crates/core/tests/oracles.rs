mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use accrual::model::{
    censored_geometric_pmf, ln_individual_factor, log_hyper_posterior, predictive_pmf_second_period, q0,
    DailyCounts, HyperParams,
};
use accrual::synthetic::simulate_beta_geometric;

fn hp(a: f64, b: f64) -> HyperParams<f64> {
    HyperParams::new(a, b).unwrap()
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact q0 for integer `α, β`: `Π_{j<d*} (β+d+j) / (α+β+d+j)`.
fn exact_q0(a: u64, b: u64, d: u64, d_star: u64) -> BigRational {
    (0..d_star).fold(int(1), |acc, j| acc * int(b + d + j) / int(a + b + d + j))
}

fn to_f64(r: &BigRational) -> f64 {
    // numerator and denominator stay far below 2^1000 here
    let n: f64 = r.numer().to_string().parse().unwrap();
    let d: f64 = r.denom().to_string().parse().unwrap();
    n / d
}

#[test]
fn q0_matches_exact_rationals() {
    for a in 1..=6 {
        for b in 1..=6 {
            for d in [1, 7, 14] {
                for d_star in [0, 1, 7, 28, 60] {
                    let exact = to_f64(&exact_q0(a, b, d, d_star));
                    let got = q0(hp(a as f64, b as f64), d as u32, d_star).unwrap();
                    assert!(((got - exact) / exact).abs() < 1e-13, "a={a} b={b} d={d} d*={d_star}");
                }
            }
        }
    }
}

#[test]
fn predictive_pmf_matches_exact_rationals() {
    let (a, b, d, d_star) = (2_u64, 3_u64, 7_u64, 10_u64);
    let mut total = BigRational::from_integer(BigInt::from(0));
    for x in 0..=d_star {
        let exact = if x == 0 {
            exact_q0(a, b, d, d_star)
        } else {
            exact_q0(a, b, d, x - 1) * int(a) / int(a + b + d + x - 1)
        };
        total += exact.clone();
        let got = predictive_pmf_second_period(hp(a as f64, b as f64), x, d as u32, d_star).unwrap();
        assert!((got - to_f64(&exact)).abs() < 1e-15, "x*={x}");
    }
    assert_eq!(total, int(1));
}

#[test]
fn predictive_pmf_matches_quadrature() {
    let d = 7.0;
    for &(a, b) in &[(0.4, 2.0), (1.0, 1.0), (3.5, 40.0)] {
        for x in 1..=10_u64 {
            // E[(1-π)^(x-1) π] under Beta(a, b+d)
            let kernel = |e: f64, extra: f64| {
                move |p: f64, q: f64| ((a + extra - 1.0) * p.ln() + (b + d + e - 1.0) * q.ln()).exp()
            };
            let quad = common::integrate(kernel(x as f64 - 1.0, 1.0), 1e-14) / common::integrate(kernel(0.0, 0.0), 1e-14);
            let got = predictive_pmf_second_period(hp(a, b), x, 7, 10).unwrap();
            assert!((got - quad).abs() < 1e-10, "a={a} b={b} x*={x}: {got} vs {quad}");
        }
    }
}

#[test]
fn long_horizon_q0_switches_route_smoothly() {
    // 512 steps is the largest explicit product; compare across the switch
    let p = hp(0.7, 3.0);
    let below = q0(p, 7, 512).unwrap();
    let above = q0(p, 7, 513).unwrap();
    let step = (3.0 + 7.0 + 512.0) / (3.7 + 7.0 + 512.0);
    assert!(((above / below) - step).abs() < 1e-12);
    let quad = common::beta_moment_of_miss(0.7, 10.0, 2000.0);
    assert!(((q0(p, 7, 2000).unwrap() - quad) / quad).abs() < 1e-9);
}

#[test]
fn realized_survival_converges_to_q0() {
    let p = hp(2.0, 50.0);
    let (d, d_star) = (7_u32, 21_u64);
    let sim = simulate_beta_geometric(1_000_000, p, d, u64::from(d) + d_star, 99).unwrap();
    let survivors = sim.n0_true - sim.realized_between(1, d_star);
    let q_hat = survivors as f64 / sim.n0_true as f64;
    let q = q0(p, d, d_star).unwrap();
    let se = (q * (1.0 - q) / sim.n0_true as f64).sqrt();
    assert!((q_hat - q).abs() < 3.0 * se, "q̂0={q_hat} q0={q} se={se}");
}

fn ungrouped(p: HyperParams<f64>, outcomes: &[u32], d: u32) -> f64 {
    -2.5 * (p.alpha() + p.beta()).ln() + outcomes.iter().map(|&x| ln_individual_factor(p, x, d)).sum::<f64>()
}

fn grouped(p: HyperParams<f64>, outcomes: &[u32], d: u32) -> f64 {
    let mut counts = vec![0; d as usize];
    let mut n0 = 0;
    for &x in outcomes {
        if x == 0 {
            n0 += 1;
        } else {
            counts[x as usize - 1] += 1;
        }
    }
    log_hyper_posterior(p, &DailyCounts::new(counts).unwrap(), n0).unwrap()
}

proptest! {
    #[test]
    fn grouped_matches_ungrouped(
        d in 1_u32..20,
        raw in prop::collection::vec(0_u32..1000, 0..60),
        la in -2.0_f64..3.0,
        lb in -2.0_f64..3.0,
    ) {
        let outcomes: Vec<u32> = raw.iter().map(|r| r % (d + 1)).collect();
        let p = hp(10f64.powf(la), 10f64.powf(lb));
        let (g, u) = (grouped(p, &outcomes, d), ungrouped(p, &outcomes, d));
        prop_assert!((g - u).abs() <= 1e-9 * (1.0 + u.abs()), "{} vs {}", g, u);
    }

    #[test]
    fn censored_pmf_sums_to_one(pi in 1e-9_f64..=1.0, d in 1_u32..400) {
        let total: f64 = (0..=d).map(|x| censored_geometric_pmf(x, pi, d).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predictive_pmf_sums_to_one(la in -2.0_f64..3.0, lb in -2.0_f64..3.0, d in 1_u32..30, d_star in 0_u64..200) {
        let p = hp(10f64.powf(la), 10f64.powf(lb));
        let total: f64 = (0..=d_star).map(|x| predictive_pmf_second_period(p, x, d, d_star).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn q0_decreases_with_horizon(la in -2.0_f64..3.0, lb in -2.0_f64..3.0, d in 1_u32..30, d_star in 0_u64..300) {
        let p = hp(10f64.powf(la), 10f64.powf(lb));
        let (a, b) = (q0(p, d, d_star).unwrap(), q0(p, d, d_star + 1).unwrap());
        prop_assert!(b <= a && b > 0.0);
    }
}
