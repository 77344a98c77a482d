//! Rational scalar helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub type Rational = BigRational;

/// `n / d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn ri(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Nearest `f64`, correct even when numerator and denominator overflow.
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    if r.is_zero() {
        return 0.0;
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db;
    // Scale both parts to about 60 significant bits before dividing.
    let n = shift_to(r.numer(), 60 - nb);
    let d = shift_to(r.denom(), 60 - db);
    let base = n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN);
    base * 2f64.powi(shift.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

fn shift_to(x: &BigInt, by: i64) -> BigInt {
    if by >= 0 {
        x << (by as usize)
    } else {
        x >> ((-by) as usize)
    }
}

/// Parse `p` or `p/q` with optional sign.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            (!q.is_zero()).then(|| Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Render as `p` or `p/q`.
pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}
