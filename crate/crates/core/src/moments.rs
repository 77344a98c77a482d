//! Exact moments of the coefficient distribution: by direct summation over
//! rows and by the moment recurrences.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::expr::BiPoly;
use crate::poly::Poly;
use crate::rational::{fmt_rational, ri, to_f64, Rational};
use crate::recurrence::{CanonicalForm, NnParams, RecurrenceSpec};
use crate::special::{binomial_table, digamma};

/// Errors from the moment computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MomentError {
    #[error("negative coefficient at v^{k}")]
    NegativeCoefficient { k: usize },
    #[error("zero row")]
    ZeroRow,
    #[error("vanishing denominator at n = {n}")]
    VanishingDenominator { n: i64 },
    #[error("shape not supported: {0}")]
    Shape(String),
}

/// Moments of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub n: i64,
    /// `P_n(1)`.
    pub total: Rational,
    pub mean: Rational,
    pub variance: Rational,
    /// `M_{n,0..=M}`.
    pub central: Vec<Rational>,
    /// `Q_{n,0..=M}`.
    pub factorial: Vec<Rational>,
}

/// Power sums `sum_k k^j c_k` for `j <= order`, using integer numerators.
fn power_sums(row: &Poly, order: usize) -> (Vec<BigInt>, BigInt) {
    let (num, den) = row.to_integer_parts();
    let mut sums = vec![BigInt::zero(); order + 1];
    for (k, c) in num.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let kk = BigInt::from(k);
        let mut term = c.clone();
        for s in sums.iter_mut() {
            *s += &term;
            term *= &kk;
        }
    }
    (sums, den)
}

/// Central moments from raw moments `E X^j`.
fn central_from_raw(raw: &[Rational]) -> Vec<Rational> {
    let order = raw.len() - 1;
    let binom = binomial_table(order);
    let mean = raw.get(1).cloned().unwrap_or_else(Rational::zero);
    let mut out = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut acc = Rational::zero();
        let mut neg_pow = Rational::one();
        // sum_j C(m, j) E X^(m-j) (-mean)^j
        for j in 0..=m {
            acc += Rational::from_integer(binom[m][j].clone()) * &raw[m - j] * &neg_pow;
            neg_pow = &neg_pow * -&mean;
        }
        out.push(acc);
    }
    if order >= 1 {
        out[1] = Rational::zero();
    }
    out
}

/// Falling-factorial moments from raw moments via signed Stirling numbers of the first kind.
fn factorial_from_raw(raw: &[Rational]) -> Vec<Rational> {
    let order = raw.len() - 1;
    // x(x-1)...(x-m+1) = sum_j s(m, j) x^j
    let mut s = vec![vec![BigInt::zero(); order + 1]; order + 1];
    s[0][0] = BigInt::one();
    for m in 1..=order {
        for j in 1..=m {
            s[m][j] = &s[m - 1][j - 1] - BigInt::from(m - 1) * &s[m - 1][j];
        }
    }
    (0..=order)
        .map(|m| (0..=m).map(|j| Rational::from_integer(s[m][j].clone()) * &raw[j]).sum())
        .collect()
}

fn summary_unchecked(n: i64, row: &Poly, order: usize) -> Result<MomentSummary, MomentError> {
    let order = order.max(2);
    let (sums, den) = power_sums(row, order);
    if sums[0].is_zero() {
        return Err(MomentError::ZeroRow);
    }
    let total = Rational::new(sums[0].clone(), den);
    let raw: Vec<Rational> = sums.iter().map(|s| Rational::new(s.clone(), sums[0].clone())).collect();
    let central = central_from_raw(&raw);
    let factorial = factorial_from_raw(&raw);
    Ok(MomentSummary { n, total, mean: raw[1].clone(), variance: central[2].clone(), central, factorial })
}

/// Exact moments of the distribution `[v^k]P / P(1)`.
pub fn moments_from_rows(row: &Poly, order: usize) -> Result<MomentSummary, MomentError> {
    if row.is_zero() {
        return Err(MomentError::ZeroRow);
    }
    if let Some(k) = row.coeffs().iter().position(|c| c.is_negative()) {
        return Err(MomentError::NegativeCoefficient { k });
    }
    summary_unchecked(0, row, order)
}

/// [`moments_from_rows`] with the row index recorded.
pub fn moments_of_row(n: i64, row: &Poly, order: usize) -> Result<MomentSummary, MomentError> {
    let mut s = moments_from_rows(row, order)?;
    s.n = n;
    Ok(s)
}

fn first_order_parts(cf: &CanonicalForm) -> Result<(Poly, Poly), MomentError> {
    cf.linear_parts()
        .map(|(a, b, _)| (a, b))
        .ok_or_else(|| MomentError::Shape("recurrence is not first-order linear in n".into()))
}

/// Means `mu_start ..= mu_upto` from the first-order mean recurrence.
pub fn mean_recurrence(cf: &CanonicalForm, upto: i64) -> Result<Vec<Rational>, MomentError> {
    let (alpha, beta) = first_order_parts(cf)?;
    let (a1, ap1, b1) = (alpha.eval_one(), alpha.derivative().eval_one(), beta.eval_one());
    let init = summary_unchecked(cf.start, &cf.initial, 2)?;
    let mut mu = init.mean;
    let mut out = vec![mu.clone()];
    for n in cf.start + 1..=upto {
        let g = cf.gamma_at(n);
        let nn = ri(n);
        let d = &a1 * &nn + g.eval_one();
        if d.is_zero() {
            return Err(MomentError::VanishingDenominator { n });
        }
        let num = &ap1 * &nn + g.derivative().eval_one() + (&d - &b1) * &mu;
        mu = num / d;
        out.push(mu.clone());
    }
    Ok(out)
}

/// Inputs of the solved mean, for rows counted from index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanParams {
    pub alpha: Rational,
    pub beta: Rational,
    /// `alpha'(1)`.
    pub alpha_p: Rational,
    pub gamma: Rational,
    /// `gamma'(1)`.
    pub gamma_p: Rational,
    pub mu0: Rational,
}

impl MeanParams {
    /// Parameters of a single-class first-order canonical form, re-indexed to start at 0.
    pub fn from_canonical(cf: &CanonicalForm) -> Result<MeanParams, MomentError> {
        if cf.modulus != 1 {
            return Err(MomentError::Shape("closed-form mean needs a single residue class".into()));
        }
        let (alpha, beta, gamma) =
            cf.linear_parts().ok_or_else(|| MomentError::Shape("recurrence is not first-order linear in n".into()))?;
        let s = ri(cf.start);
        let a = alpha.eval_one();
        let mu0 = summary_unchecked(cf.start, &cf.initial, 2)?.mean;
        Ok(MeanParams {
            gamma: gamma.eval_one() + &a * &s,
            gamma_p: gamma.derivative().eval_one() + alpha.derivative().eval_one() * &s,
            alpha: a,
            beta: beta.eval_one(),
            alpha_p: alpha.derivative().eval_one(),
            mu0,
        })
    }
}

/// A mean that is exact when the solved formula telescopes, else a float.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanValue {
    Exact(Rational),
    Approx(f64),
}

impl MeanValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MeanValue::Exact(r) => to_f64(r),
            MeanValue::Approx(x) => *x,
        }
    }
}

/// The solved mean `mu_n` for rows counted from index 0.
///
/// With `beta (alpha + beta) != 0` the Gamma ratio is the finite product
/// `prod_{j<=n} (alpha j + gamma - beta) / (alpha j + gamma)`, so the value
/// is exact. The `beta = 0` and `alpha + beta = 0` branches use digamma
/// differences unless their coefficient vanishes.
pub fn mean_closed_form(p: &MeanParams, n: i64) -> Result<MeanValue, MomentError> {
    let nn = ri(n);
    if n == 0 {
        return Ok(MeanValue::Exact(p.mu0.clone()));
    }
    let denom_check = |j: i64| -> Result<Rational, MomentError> {
        let d = &p.alpha * ri(j) + &p.gamma;
        if d.is_zero() {
            Err(MomentError::VanishingDenominator { n: j })
        } else {
            Ok(d)
        }
    };
    if !p.beta.is_zero() && !(&p.alpha + &p.beta).is_zero() {
        let mut ratio = Rational::one();
        for j in 1..=n {
            let d = denom_check(j)?;
            ratio *= (&d - &p.beta) / d;
        }
        let a_coef = &p.alpha_p / (&p.alpha + &p.beta);
        let b_const = &p.gamma_p / &p.beta + &p.alpha_p * (&p.beta - &p.gamma) / (&p.beta * (&p.alpha + &p.beta));
        return Ok(MeanValue::Exact(&a_coef * &nn + &b_const + ratio * (&p.mu0 - &b_const)));
    }
    if p.beta.is_zero() {
        if p.alpha.is_zero() {
            if p.gamma.is_zero() {
                return Err(MomentError::VanishingDenominator { n: 1 });
            }
            let s = (&p.alpha_p * &nn * (&nn + ri(1)) / ri(2) + &p.gamma_p * &nn) / &p.gamma;
            return Ok(MeanValue::Exact(&p.mu0 + s));
        }
        for j in 1..=n {
            denom_check(j)?;
        }
        let lin = &p.mu0 + &p.alpha_p * &nn / &p.alpha;
        let c = (&p.alpha * &p.gamma_p - &p.alpha_p * &p.gamma) / (&p.alpha * &p.alpha);
        if c.is_zero() {
            return Ok(MeanValue::Exact(lin));
        }
        let x = to_f64(&(&p.gamma / &p.alpha));
        let psi = digamma(n as f64 + 1.0 + x) - digamma(1.0 + x);
        return Ok(MeanValue::Approx(to_f64(&lin) + to_f64(&c) * psi));
    }
    // alpha + beta = 0
    for j in 1..=n + 1 {
        denom_check(j)?;
    }
    let lead = &p.alpha * (&nn + ri(1)) + &p.gamma;
    let tail = (&p.gamma_p / (&p.alpha + &p.gamma) - &p.alpha_p / &p.alpha) * &nn;
    let base = &p.mu0 / (&p.alpha + &p.gamma);
    if p.alpha_p.is_zero() {
        return Ok(MeanValue::Exact(&lead * base + tail));
    }
    let x = to_f64(&(&p.gamma / &p.alpha));
    let psi = digamma(n as f64 + 1.0 + x) - digamma(1.0 + x);
    let k = to_f64(&(&p.alpha_p / (&p.alpha * &p.alpha)));
    Ok(MeanValue::Approx(to_f64(&lead) * (k * psi + to_f64(&base)) + to_f64(&tail)))
}

/// `(alpha_j)_{j<=order}` with `alpha_j = sum_k a_k (k - delta)^j`.
fn shifted_power_sums(p: &Poly, delta: &Rational, order: usize, lag: i64) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); order + 1];
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let x = ri(k as i64 - lag) - delta;
        let mut pw = c.clone();
        for o in out.iter_mut() {
            *o += &pw;
            pw *= &x;
        }
    }
    out
}

/// Central moments `M_{n,0..=order}` for `n = start ..= upto`.
pub fn central_moment_recurrence(cf: &CanonicalForm, order: usize, upto: i64) -> Result<Vec<Vec<Rational>>, MomentError> {
    let (alpha, beta) = first_order_parts(cf)?;
    let means = mean_recurrence(cf, upto)?;
    let binom = binomial_table(order);
    let cb = |m: usize, j: usize| Rational::from_integer(binom[m][j].clone());
    let b1 = beta.eval_one();
    let a1 = alpha.eval_one();
    let mut prev = summary_unchecked(cf.start, &cf.initial, order)?.central;
    prev.truncate(order + 1);
    let mut out = vec![prev.clone()];
    for (idx, n) in (cf.start + 1..=upto).enumerate() {
        let mu_prev = &means[idx];
        let delta = &means[idx + 1] - mu_prev;
        let g = cf.gamma_at(n);
        let nn = ri(n);
        let d = &a1 * &nn + g.eval_one();
        if d.is_zero() {
            return Err(MomentError::VanishingDenominator { n });
        }
        let aj = shifted_power_sums(&alpha, &delta, order, 0);
        let gj = shifted_power_sums(g, &delta, order, 0);
        let bj_hi = shifted_power_sums(&beta, &delta, order, 0);
        let bj_lo = shifted_power_sums(&beta, &delta, order, 1);
        let bj: Vec<Rational> = bj_hi.iter().zip(&bj_lo).map(|(x, y)| x - y).collect();
        let mut cur = vec![Rational::zero(); order + 1];
        cur[0] = Rational::one();
        for m in 2..=order {
            let mut acc = (&d - ri(m as i64) * &b1) * &prev[m];
            for j in 1..=m {
                let coef = &aj[j] * &nn + &gj[j] - &bj[j] * mu_prev;
                acc += cb(m, j) * coef * &prev[m - j];
            }
            for j in 2..m {
                acc -= cb(m, j) * &bj[j] * &prev[m + 1 - j];
            }
            cur[m] = acc / &d;
        }
        out.push(cur.clone());
        prev = cur;
    }
    Ok(out)
}

/// Field operations needed by the factorial-moment recurrence.
pub trait Scalar: Clone {
    fn from_rational(r: &Rational) -> Self;
    fn s_zero() -> Self;
    fn s_one() -> Self;
    fn s_add(&self, o: &Self) -> Self;
    fn s_mul(&self, o: &Self) -> Self;
    fn s_div(&self, o: &Self) -> Self;
    fn s_is_zero(&self) -> bool;
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn s_zero() -> Self {
        Zero::zero()
    }
    fn s_one() -> Self {
        One::one()
    }
    fn s_add(&self, o: &Self) -> Self {
        self + o
    }
    fn s_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn s_div(&self, o: &Self) -> Self {
        self / o
    }
    fn s_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }
    fn s_zero() -> Self {
        0.0
    }
    fn s_one() -> Self {
        1.0
    }
    fn s_add(&self, o: &Self) -> Self {
        self + o
    }
    fn s_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn s_div(&self, o: &Self) -> Self {
        self / o
    }
    fn s_is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Factorial moments `Q_{n,0..=order}` for `n = start ..= upto`, with
/// `params` in the original index. Only the last row is kept when
/// `keep_all` is false.
pub fn factorial_moment_recurrence<S: Scalar>(
    params: &NnParams,
    start: i64,
    initial: &Poly,
    order: usize,
    upto: i64,
    keep_all: bool,
) -> Result<Vec<Vec<S>>, MomentError> {
    let init = summary_unchecked(start, initial, order)?;
    let mut prev: Vec<S> = init.factorial.iter().take(order + 1).map(S::from_rational).collect();
    let beta = S::from_rational(&params.beta);
    // m (gamma' - (m-1) beta') for each m
    let lift: Vec<S> = (0..=order)
        .map(|m| {
            let m = m as i64;
            S::from_rational(&(ri(m) * (&params.gamma_p - ri(m - 1) * &params.beta_p)))
        })
        .collect();
    let mut out = vec![prev.clone()];
    let minus_one = S::from_rational(&ri(-1));
    for n in start + 1..=upto {
        let d_exact = &params.alpha * ri(n) + &params.gamma;
        if d_exact.is_zero() {
            return Err(MomentError::VanishingDenominator { n });
        }
        let d = S::from_rational(&d_exact);
        let mut cur = vec![S::s_one(); order + 1];
        for m in 1..=order {
            let mb = S::from_rational(&ri(m as i64)).s_mul(&beta);
            let keep = S::s_one().s_add(&mb.s_div(&d).s_mul(&minus_one));
            cur[m] = keep.s_mul(&prev[m]).s_add(&lift[m].s_div(&d).s_mul(&prev[m - 1]));
        }
        if keep_all {
            out.push(cur.clone());
        } else {
            out[0] = cur.clone();
        }
        prev = cur;
    }
    Ok(out)
}

/// Multiplier of `P'` divided by `(1 - v)`, or `None`.
fn beta_part(b: &BiPoly) -> Option<BiPoly> {
    b.div_exact_v_poly(&Poly::from_ints([1, -1]))
}

/// Means and variances for `n = start ..= upto` of any first-order
/// homogeneous spec whose derivative multiplier is divisible by `1 - v`.
pub fn general_mv_recurrence(spec: &RecurrenceSpec, upto: i64) -> Result<(Vec<Rational>, Vec<Rational>), MomentError> {
    let mut betas = Vec::new();
    for (k, c) in spec.classes.iter().enumerate() {
        if !c.c2.is_zero() || !c.b2.is_zero() || c.inhomog.is_some() {
            return Err(MomentError::Shape(format!("class {k} is not first-order homogeneous")));
        }
        betas.push(beta_part(&c.b).ok_or_else(|| MomentError::Shape(format!("class {k}: b not divisible by 1-v")))?);
    }
    let init = summary_unchecked(spec.start, &spec.initial, 2)?;
    let (mut mu, mut var) = (init.mean, init.variance);
    let (mut means, mut vars) = (vec![mu.clone()], vec![var.clone()]);
    for n in spec.start + 1..=upto {
        let ci = n.rem_euclid(spec.modulus() as i64) as usize;
        let a = spec.classes[ci].a.eval_at_n(n);
        let b = betas[ci].eval_at_n(n);
        let (a0, a1, a2) = (a.eval_one(), a.derivative().eval_one(), a.derivative().derivative().eval_one());
        let (b0, b1) = (b.eval_one(), b.derivative().eval_one());
        if a0.is_zero() {
            return Err(MomentError::VanishingDenominator { n });
        }
        let f2_prev = &var - &mu + &mu * &mu;
        let mu_new = (&a1 + (&a0 - &b0) * &mu) / &a0;
        let two = ri(2);
        let f2 = (&a2 + &two * (&a1 - &b1) * &mu + (&a0 - &two * &b0) * f2_prev) / &a0;
        var = &f2 + &mu_new - &mu_new * &mu_new;
        mu = mu_new;
        means.push(mu.clone());
        vars.push(var.clone());
    }
    Ok((means, vars))
}

/// CSV with header `n,total,mean,variance,central2..M,factorial1..M`.
pub fn summaries_csv(rows: &[MomentSummary], order: usize) -> String {
    let mut s = String::from("n,total,mean,variance");
    for m in 2..=order {
        let _ = write!(s, ",central{m}");
    }
    for m in 1..=order {
        let _ = write!(s, ",factorial{m}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},{}", r.n, fmt_rational(&r.total), fmt_rational(&r.mean), fmt_rational(&r.variance));
        for m in 2..=order {
            let _ = write!(s, ",{}", r.central.get(m).map(fmt_rational).unwrap_or_default());
        }
        for m in 1..=order {
            let _ = write!(s, ",{}", r.factorial.get(m).map(fmt_rational).unwrap_or_default());
        }
        s.push('\n');
    }
    s
}
