#![allow(dead_code)]

use std::path::PathBuf;

use eulerlaw::poly::Poly;
use eulerlaw::rational::Rational;
use eulerlaw::recurrence::{load_spec, RecurrenceSpec};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn spec_path(name: &str) -> PathBuf {
    fixtures().join("specs").join(format!("{name}.spec"))
}

pub fn oeis_dir() -> PathBuf {
    fixtures().join("oeis")
}

pub fn spec(name: &str) -> RecurrenceSpec {
    load_spec(&spec_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn ints(p: &Poly) -> Vec<i64> {
    p.coeffs().iter().map(|c| c.to_integer().try_into().expect("small integer")).collect()
}

/// Relative error, or absolute error against zero.
pub fn rel(x: f64, target: f64) -> f64 {
    if target == 0.0 {
        x.abs()
    } else {
        ((x - target) / target).abs()
    }
}

pub fn harmonic(n: i64) -> Rational {
    (1..=n).map(|j| Rational::new(1.into(), j.into())).sum()
}
