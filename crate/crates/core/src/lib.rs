//! Eulerian-type polynomial recurrences: exact coefficient triangles,
//! moments, limit-law classification and empirical verification.

pub mod expr;
pub mod poly;
pub mod rational;
pub mod recurrence;
pub mod special;
pub mod moments;
pub mod classify;
pub mod analytic;
pub mod verify;
pub mod oeis;
pub mod cli;

pub use expr::{parse_expr, BiPoly, NPoly};
pub use poly::Poly;
pub use rational::Rational;
