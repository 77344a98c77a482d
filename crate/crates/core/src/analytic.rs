//! Quasi-powers constants from the dominant singularity `rho(v)`.

use crate::poly::Poly;
use crate::rational::{rat, ri, to_f64, Rational};
use crate::recurrence::FamilyId;

/// Radius around `v = 1` inside which the interpolation fallback is used.
pub const SERIES_RADIUS: f64 = 1e-4;
/// Absolute tolerance of the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-12;
/// Largest accepted Richardson error estimate.
pub const MAX_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error("no dominant-singularity entry for {0}")]
    UnknownFamily(String),
    #[error("parameters out of domain: {0}")]
    Domain(String),
    #[error("extrapolation did not converge (error estimate {0:e})")]
    NonConvergent(f64),
    #[error("rho(1) = {0} is not positive")]
    NonPositive(f64),
}

/// Closed or integral forms of `rho(v)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoForm {
    /// `log v / (q (v - 1))`.
    Log { q: f64 },
    /// `(1-v)^{-q} int_v^1 t^{-1} (1-t)^{q-1} dt`.
    Incomplete { q: f64 },
    /// `v^p (1-v)^{-p-q} int_v^1 t^{-p-1} (1-t)^{p+q-1} dt`.
    IncompleteShifted { p: f64, q: f64 },
    /// `artanh(sqrt(1-v)) / sqrt(1-v)`.
    Artanh,
    /// `arccos(w) / sqrt(1 - w^2)` at `w = (1+v)/2`.
    ArccosHalf,
    /// `arccos(v) / sqrt(1 - v^2)`.
    Arccos,
    /// `arccos(1/v) / (v sqrt(1 - v^{-2}))`.
    ArccosInverse,
    /// `2 (arctan v - pi/4) / (v - 1)`.
    Arctan,
    /// `log(2v / (1+v)) / (v - 1)`.
    LogHalf,
    /// `-log v / (1 - v^2)`.
    LogSquare,
    /// `(v^{-1/q} - 1) / (1 - v)`.
    Power { q: f64 },
    Constant(f64),
}

/// A dominant-singularity entry with the `(alpha(v), beta(v))` pair it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoEntry {
    pub label: String,
    pub form: RhoForm,
    pub alpha: Poly,
    pub beta: Poly,
    /// Stated `(mu, sigma^2)`.
    pub stated: (Rational, Rational),
}

impl RhoEntry {
    /// `rho(v)`, with the removable singularity at `v = 1` filled in.
    pub fn eval(&self, v: f64) -> f64 {
        self.eval_offset(v - 1.0)
    }

    /// `rho(1 + x)`; passing `x` directly avoids cancellation near `v = 1`.
    pub fn eval_offset(&self, x: f64) -> f64 {
        if x.abs() < SERIES_RADIUS {
            return near_zero(|t| self.form.eval_direct(t), x);
        }
        self.form.eval_direct(x)
    }

    /// `rho(1)`.
    pub fn rho_one(&self) -> f64 {
        self.eval_offset(0.0)
    }
}

/// Lagrange interpolation through nodes `+- 2 k r`, `k = 1..4`.
fn near_zero(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let nodes: Vec<f64> = (1..=4).flat_map(|k| [-2.0 * k as f64 * SERIES_RADIUS, 2.0 * k as f64 * SERIES_RADIUS]).collect();
    let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    let mut acc = 0.0;
    for (i, xi) in nodes.iter().enumerate() {
        let w: f64 = nodes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, xj)| (x - xj) / (xi - xj)).product();
        acc += w * vals[i];
    }
    acc
}

/// `arccos(1 - d) / sqrt(1 - (1 - d)^2)`, continued analytically through `d = 0`.
fn arccos_ratio(d: f64) -> f64 {
    if d > 0.0 {
        2.0 * (0.5 * d).sqrt().asin() / (d * (2.0 - d)).sqrt()
    } else {
        2.0 * (-0.5 * d).sqrt().asinh() / (-d * (2.0 - d)).sqrt()
    }
}

impl RhoForm {
    /// `rho(1 + x)` away from `x = 0`.
    fn eval_direct(&self, x: f64) -> f64 {
        let v = 1.0 + x;
        match *self {
            RhoForm::Log { q } => x.ln_1p() / (q * x),
            RhoForm::Incomplete { q } => {
                // t = 1 + x u^{1/q}
                gauss_kronrod(|u| 1.0 / (1.0 + x * u.powf(1.0 / q)), 0.0, 1.0, QUAD_TOL) / q
            }
            RhoForm::IncompleteShifted { p, q } => {
                let s = p + q;
                v.powf(p) * gauss_kronrod(|u| (1.0 + x * u.powf(1.0 / s)).powf(-p - 1.0), 0.0, 1.0, QUAD_TOL) / s
            }
            RhoForm::Artanh => {
                if x < 0.0 {
                    let s = (-x).sqrt();
                    s.atanh() / s
                } else {
                    let s = x.sqrt();
                    s.atan() / s
                }
            }
            RhoForm::ArccosHalf => arccos_ratio(-0.5 * x),
            RhoForm::Arccos => arccos_ratio(-x),
            RhoForm::ArccosInverse => arccos_ratio(x / v) / v,
            // arctan v - pi/4 = arctan((v-1)/(v+1))
            RhoForm::Arctan => 2.0 * (x / (2.0 + x)).atan() / x,
            RhoForm::LogHalf => (x / (2.0 + x)).ln_1p() / x,
            RhoForm::LogSquare => x.ln_1p() / (x * (2.0 + x)),
            RhoForm::Power { q } => -(-x.ln_1p() / q).exp_m1() / x,
            RhoForm::Constant(c) => c,
        }
    }
}

fn poly(cs: &[(i64, i64)]) -> Poly {
    Poly::new(cs.iter().map(|&(n, d)| rat(n, d)).collect())
}

/// The entry for a catalog family; only the parameter `q` matters for `rho`.
pub fn rho_catalog(family: FamilyId, params: &[Rational]) -> Result<RhoEntry, AnalyticError> {
    if params.len() != family.arity() {
        return Err(AnalyticError::Domain(format!("{family:?} takes {} parameters", family.arity())));
    }
    let q = params.get(1).cloned().unwrap_or_default();
    let qf = to_f64(&q);
    let v = Poly::from_ints([0, 1]);
    let one = ri(1);
    let entry = match family {
        FamilyId::A => {
            if qf <= 0.0 {
                return Err(AnalyticError::Domain("A needs q > 0".into()));
            }
            RhoEntry {
                label: format!("A(q={q})"),
                form: RhoForm::Log { q: qf },
                alpha: v.scale(&q),
                beta: v.scale(&q),
                stated: (rat(1, 2), rat(1, 12)),
            }
        }
        FamilyId::T => {
            if qf < 1.0 {
                return Err(AnalyticError::Domain("T needs q >= 1".into()));
            }
            let q1 = &q + &one;
            RhoEntry {
                label: format!("T(q={q})"),
                form: RhoForm::Incomplete { q: qf },
                alpha: v.scale(&q),
                beta: v.clone(),
                stated: (&q / &q1, &q * &q / (&q1 * &q1 * (&q + ri(2)))),
            }
        }
        FamilyId::Q => RhoEntry {
            label: "Q".into(),
            form: RhoForm::Arccos,
            alpha: v.clone(),
            beta: Poly::from_ints([1, 1]),
            stated: (rat(1, 3), rat(8, 45)),
        },
        FamilyId::M => {
            if qf <= 1.0 {
                return Err(AnalyticError::Domain("M needs q > 1".into()));
            }
            RhoEntry {
                label: format!("M(q={q})"),
                form: RhoForm::Power { q: qf },
                alpha: Poly::new(vec![-one.clone(), &q + &one]),
                beta: v.scale(&q),
                stated: ((&q + &one) / (ri(2) * &q), (&q * &q - &one) / (ri(12) * &q * &q)),
            }
        }
        FamilyId::Polya => return Err(AnalyticError::UnknownFamily("Polya".into())),
    };
    Ok(entry)
}

/// The remaining tabulated entries, keyed by their `(alpha, beta)` pair.
pub fn named_rho_entries() -> Vec<RhoEntry> {
    let e = |label: &str, form, alpha, beta, mu: (i64, i64), s2: (i64, i64)| RhoEntry {
        label: label.into(),
        form,
        alpha,
        beta,
        stated: (rat(mu.0, mu.1), rat(s2.0, s2.1)),
    };
    vec![
        e("(v, 2v)", RhoForm::Artanh, poly(&[(0, 1), (1, 1)]), poly(&[(0, 1), (2, 1)]), (1, 3), (2, 45)),
        e("((1+v)/2, (3+v)/2)", RhoForm::ArccosHalf, poly(&[(1, 2), (1, 2)]), poly(&[(3, 2), (1, 2)]), (1, 6), (23, 180)),
        e("(v, 1+v)", RhoForm::Arccos, poly(&[(0, 1), (1, 1)]), poly(&[(1, 1), (1, 1)]), (1, 3), (8, 45)),
        e("(v^2, v(1+v))", RhoForm::ArccosInverse, poly(&[(0, 1), (0, 1), (1, 1)]), poly(&[(0, 1), (1, 1), (1, 1)]), (2, 3), (8, 45)),
        e("((1+v^2)/2, (1+v^2)/2)", RhoForm::Arctan, poly(&[(1, 2), (0, 1), (1, 2)]), poly(&[(1, 2), (0, 1), (1, 2)]), (1, 2), (5, 12)),
        e("(v(1+v), v(1+v))", RhoForm::LogHalf, poly(&[(0, 1), (1, 1), (1, 1)]), poly(&[(0, 1), (1, 1), (1, 1)]), (3, 4), (7, 48)),
        e("(2v^2, v(1+v))", RhoForm::LogSquare, poly(&[(0, 1), (0, 1), (2, 1)]), poly(&[(0, 1), (1, 1), (1, 1)]), (1, 1), (1, 3)),
    ]
}

/// Entry for `(p + q v, v)` with `p, q >= 0`, `p + q > 0`.
pub fn shifted_entry(p: &Rational, q: &Rational) -> Result<RhoEntry, AnalyticError> {
    let zero = Rational::default();
    if p < &zero || q < &zero || (p + q) <= zero {
        return Err(AnalyticError::Domain("needs p, q >= 0 and p + q > 0".into()));
    }
    let s = p + q;
    let s1 = &s + ri(1);
    Ok(RhoEntry {
        label: format!("({p} + {q} v, v)"),
        form: RhoForm::IncompleteShifted { p: to_f64(p), q: to_f64(q) },
        alpha: Poly::new(vec![p.clone(), q.clone()]),
        beta: Poly::from_ints([0, 1]),
        stated: (q / &s1, q * (p + ri(1)) * &s / (&s1 * &s1 * (&s + ri(2)))),
    })
}

/// Output of the quasi-powers computation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPowers {
    pub mu: f64,
    pub sigma2: f64,
    /// Richardson error estimates for `mu` and `sigma^2`.
    pub err_mu: f64,
    pub err_sigma2: f64,
    /// Set when the variability condition fails.
    pub degenerate: bool,
    /// Error estimate after each step of the sweep, up to acceptance.
    pub sweep: Vec<f64>,
}

/// `mu = -rho'(1)/rho(1)` and `sigma^2 = -(rho''/rho + rho'/rho - (rho'/rho)^2)` at `v = 1`,
/// obtained by differentiating `L(s) = log rho(e^s)`.
pub fn quasi_power_params(entry: &RhoEntry) -> Result<QuasiPowers, AnalyticError> {
    let r1 = entry.rho_one();
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(AnalyticError::NonPositive(r1));
    }
    let l = |s: f64| entry.eval_offset(s.exp_m1()).ln();
    let (d1, e1, sweep1) = richardson(|h| central_first(&l, h));
    let (d2, e2, sweep2) = richardson(|h| central_second(&l, h));
    let err = e1.max(e2);
    if err > MAX_ERROR {
        return Err(AnalyticError::NonConvergent(err));
    }
    let sigma2 = -d2;
    let sweep = sweep1.iter().zip(&sweep2).map(|(a, b)| a.max(*b)).collect();
    Ok(QuasiPowers { mu: -d1, sigma2, err_mu: e1, err_sigma2: e2, degenerate: sigma2.abs() < 1e-10, sweep })
}

fn central_first(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(-3.0 * h) + 9.0 * f(-2.0 * h) - 45.0 * f(-h) + 45.0 * f(h) - 9.0 * f(2.0 * h) + f(3.0 * h)) / (60.0 * h)
}

fn central_second(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    (2.0 * f(-3.0 * h) - 27.0 * f(-2.0 * h) + 270.0 * f(-h) - 490.0 * f(0.0) + 270.0 * f(h) - 27.0 * f(2.0 * h)
        + 2.0 * f(3.0 * h))
        / (180.0 * h * h)
}

/// Richardson extrapolation over `h = 2^-6 .. 2^-12` for an `O(h^6)` rule.
/// Stops at the first step whose error estimate does not decrease.
fn richardson(d: impl Fn(f64) -> f64) -> (f64, f64, Vec<f64>) {
    let mut prev_row: Vec<f64> = Vec::new();
    let mut best = (f64::NAN, f64::INFINITY);
    let mut sweep = Vec::new();
    for (k, e) in (6..=12).enumerate() {
        let h = 2f64.powi(-e);
        let mut row = vec![d(h)];
        for j in 1..=k {
            let factor = 2f64.powi(6 + 2 * (j as i32 - 1));
            let next = row[j - 1] + (row[j - 1] - prev_row[j - 1]) / (factor - 1.0);
            row.push(next);
        }
        if k > 0 {
            let est = (row[k] - row[k - 1]).abs().max((row[k] - prev_row[k - 1]).abs());
            if est >= best.1 {
                break;
            }
            sweep.push(est);
            if est < best.1 {
                best = (row[k], est);
            }
        }
        prev_row = row;
    }
    (best.0, best.1, sweep)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) quadrature with an absolute tolerance.
pub fn gauss_kronrod(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return val;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&f, a, b, tol, 40)
}
