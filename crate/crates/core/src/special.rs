//! Log-gamma and related log-space helpers.

use crate::real::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Above this many factors `ln_rising` switches from an explicit sum to a
/// log-gamma difference.
const RISING_SUM_LIMIT: u64 = 512;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
///
/// Returns NaN for `x <= 0` or NaN input and `+inf` for `x = +inf`.
pub fn ln_gamma<F: Real>(x: F) -> F {
    if x.is_nan() || x <= F::zero() {
        return F::nan();
    }
    if x.is_infinite() {
        return x;
    }
    let half = F::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = F::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(F::one() - x);
    }
    let z = x - F::one();
    let mut sum = F::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum = sum + F::lit(c) / (z + F::count(i as u64));
    }
    let t = z + F::lit(LANCZOS_G) + half;
    let ln_sqrt_2pi = F::lit(0.918_938_533_204_672_8);
    ln_sqrt_2pi + (z + half) * t.ln() - t + sum.ln()
}

/// `ln B(a, b)`.
pub fn ln_beta<F: Real>(a: F, b: F) -> F {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log of the rising factorial `x (x+1) ... (x+k-1) = Γ(x+k) / Γ(x)`.
///
/// Summed term by term for moderate `k`, which avoids the cancellation a
/// difference of two large log-gammas suffers when `x` is large.
pub fn ln_rising<F: Real>(x: F, k: u64) -> F {
    if k == 0 {
        return F::zero();
    }
    if k <= RISING_SUM_LIMIT {
        let mut acc = F::zero();
        let mut term = x;
        for _ in 0..k {
            acc = acc + term.ln();
            term = term + F::one();
        }
        acc
    } else {
        ln_gamma(x + F::count(k)) - ln_gamma(x)
    }
}
