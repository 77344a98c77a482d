//! Real special functions and small combinatorial tables.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::Rational;

/// `Gamma(x)`.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `log |Gamma(x)|`.
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// `1 / Gamma(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// `Gamma(a) / Gamma(b)` through log-gamma, with `1/Gamma(pole) = 0`.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if b <= 0.0 && b == b.floor() {
        return 0.0;
    }
    if a <= 0.0 && a == a.floor() {
        return f64::INFINITY;
    }
    let sign = libm::lgamma_r(a).1 * libm::lgamma_r(b).1;
    sign as f64 * (lgamma(a) - lgamma(b)).exp()
}

/// Digamma `psi(x)`: shift the argument above 10, then the asymptotic series.
pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.0 {
        // Reflection: psi(1 - x) - psi(x) = pi cot(pi x).
        let pi = std::f64::consts::PI;
        return digamma(1.0 - x) - pi / (pi * x).tan();
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + y.ln() - 0.5 * inv - series
}

/// Stirling numbers of the second kind `S(m, j)` for `m, j <= max`.
pub fn stirling2_table(max: usize) -> Vec<Vec<BigInt>> {
    let mut t = vec![vec![BigInt::zero(); max + 1]; max + 1];
    t[0][0] = BigInt::one();
    for m in 1..=max {
        for j in 1..=m {
            t[m][j] = &t[m - 1][j - 1] + BigInt::from(j) * &t[m - 1][j];
        }
    }
    t
}

/// Binomial coefficients `C(m, j)` for `m <= max`.
pub fn binomial_table(max: usize) -> Vec<Vec<BigInt>> {
    let mut t = vec![vec![BigInt::zero(); max + 1]; max + 1];
    for m in 0..=max {
        t[m][0] = BigInt::one();
        for j in 1..=m {
            t[m][j] = &t[m - 1][j - 1] + &t[m - 1][j];
        }
    }
    t
}

/// Raw moments from factorial moments: `E X^m = sum_j S(m, j) Q_j`.
pub fn raw_from_factorial_f64(q: &[f64]) -> Vec<f64> {
    let s = stirling2_table(q.len().saturating_sub(1));
    (0..q.len())
        .map(|m| (0..=m).map(|j| crate::rational::to_f64(&Rational::from_integer(s[m][j].clone())) * q[j]).sum())
        .collect()
}
