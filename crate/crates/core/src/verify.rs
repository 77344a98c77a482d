//! Empirical checks that coefficient distributions approach the classified law.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::classify::LimitLaw;
use crate::moments::{factorial_moment_recurrence, moments_from_rows, MomentError};
use crate::poly::Poly;
use crate::rational::{fmt_rational, to_f64, Rational};
use crate::recurrence::{canonicalize, NnParams, RecurrenceSpec, RowGenerator, SpecError};
use crate::special::{normal_cdf, raw_from_factorial_f64};

/// Number of moments compared.
pub const VERIFY_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("nothing to verify for an unknown law: {0}")]
    UnknownLaw(String),
    #[error("need at least one n")]
    NoPoints,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("rate fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero distance at n = {0}")]
    ZeroDistance(i64),
}

/// Pass thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSet {
    /// Relative moment error at `n >= 1000`; widened by `sqrt(1000/n)` below.
    pub moment_rel: f64,
    /// Relative moment error when `tau1 < 1/2`.
    pub moment_rel_slow: f64,
    /// Total-variation distance for discrete laws.
    pub tv: f64,
    /// Bound on `KS * sd_n`; the lattice alone contributes about `0.2`.
    pub ks_scale: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet { moment_rel: 0.02, moment_rel_slow: 0.10, tv: 1e-3, ks_scale: 1.0 }
    }
}

impl ToleranceSet {
    fn moment_tol(&self, n: i64, slow: bool) -> f64 {
        let base = if slow { self.moment_rel_slow } else { self.moment_rel };
        base * (1000.0 / n.max(1) as f64).sqrt().max(1.0)
    }
}

/// Diagnostics at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NRecord {
    pub n: i64,
    /// Errors for `m = 1..=4`: absolute for standardized normal moments,
    /// relative otherwise.
    pub moment_errors: Vec<f64>,
    pub ks: Option<f64>,
    pub tv: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub spec_name: String,
    pub law: LimitLaw,
    pub records: Vec<NRecord>,
    /// Log-log slope of the KS distances, for normal laws with 4 or more points.
    pub slope: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "spec": self.spec_name,
            "law": self.law.to_json(),
            "records": self.records.iter().map(|r| json!({
                "n": r.n, "moment_errors": r.moment_errors, "ks": r.ks, "tv": r.tv, "pass": r.pass,
            })).collect::<Vec<_>>(),
            "slope": self.slope,
            "verdict": if self.pass { "pass" } else { "fail" },
            "notes": self.notes,
        })
    }
}

/// Probabilities `[v^k]P / P(1)` as floats, scaling the integers before conversion.
pub fn row_pmf(row: &Poly) -> Vec<f64> {
    let (num, _) = row.to_integer_parts();
    let total: BigInt = num.iter().sum();
    if total.is_zero() {
        return vec![0.0; num.len()];
    }
    let shift = (total.bits() as i64 - 900).max(0) as usize;
    let t = (&total >> shift).to_f64().unwrap_or(f64::NAN);
    num.iter().map(|c| (c >> shift).to_f64().unwrap_or(0.0) / t).collect()
}

/// Kolmogorov distance between the standardized row law and `Phi`.
pub fn ks_distance(pmf: &[f64], mean: f64, sd: f64) -> f64 {
    let mut cdf = 0.0;
    let mut worst: f64 = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        let phi = normal_cdf((k as f64 - mean) / sd);
        worst = worst.max((cdf - phi).abs());
        cdf += p;
        worst = worst.max((cdf - phi).abs());
    }
    worst.min(1.0)
}

/// Total variation between a finite pmf and the limit pmf, counting the limit's tail.
pub fn tv_distance(pmf: &[f64], limit: impl Fn(u64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut mass = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        let q = limit(k as u64);
        mass += q;
        acc += (p - q).abs();
    }
    (0.5 * (acc + (1.0 - mass).max(0.0))).min(1.0)
}

/// Least-squares slope of `log distance` against `log n`.
pub fn rate_fit(points: &[(i64, f64)]) -> Result<f64, VerifyError> {
    if points.len() < 4 {
        return Err(VerifyError::TooFewPoints(points.len()));
    }
    if let Some(&(n, _)) = points.iter().find(|(_, d)| *d <= 0.0) {
        return Err(VerifyError::ZeroDistance(n));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Moments `E (X_n / n^tau)^m`, `m <= 4`, from the factorial-moment recurrence.
pub fn scaled_moments_nn(
    nn: &NnParams,
    start: i64,
    initial: &Poly,
    n: i64,
    tau: f64,
) -> Result<Vec<f64>, VerifyError> {
    let q = factorial_moment_recurrence::<f64>(nn, start, initial, VERIFY_ORDER, n, false)?;
    let raw = raw_from_factorial_f64(&q[0]);
    Ok(raw.iter().enumerate().map(|(m, x)| x / (n as f64).powf(tau * m as f64)).collect())
}

fn rel(x: f64, target: f64) -> f64 {
    if target == 0.0 {
        x.abs()
    } else {
        ((x - target) / target).abs()
    }
}

/// Compare rows at each `n` in `ns` with `law`.
pub fn verify_law(spec: &RecurrenceSpec, law: &LimitLaw, ns: &[i64], tol: &ToleranceSet) -> Result<VerificationReport, VerifyError> {
    if let LimitLaw::Unknown { reason } = law {
        return Err(VerifyError::UnknownLaw(reason.clone()));
    }
    let mut ns: Vec<i64> = ns.iter().copied().filter(|&n| n >= spec.start).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(VerifyError::NoPoints);
    }
    let mut notes = Vec::new();
    let cf = canonicalize(spec);
    let nn = cf.nn_params();
    let scaled = law.scale_exponent();
    // Continuous laws of the non-normal pattern use the moment recurrence; the rest need rows.
    let records = match (&scaled, &nn) {
        (Some(tau), Some(nn)) => {
            notes.push("moments from the factorial-moment recurrence".into());
            let slow = *tau < crate::rational::rat(1, 2);
            let k = law.limit_moments(VERIFY_ORDER).expect("continuous law");
            let mut out = Vec::new();
            for &n in &ns {
                let got = scaled_moments_nn(nn, spec.start, &spec.initial, n, to_f64(tau))?;
                let errs: Vec<f64> = (1..=VERIFY_ORDER).map(|m| rel(got[m], k[m])).collect();
                let pass = errs.iter().all(|e| *e <= tol.moment_tol(n, slow));
                out.push(NRecord { n, moment_errors: errs, ks: None, tv: None, pass });
            }
            out
        }
        _ => row_records(spec, law, &ns, tol, &mut notes)?,
    };
    let slope = match law {
        LimitLaw::Normal { .. } if records.len() >= 4 => {
            let pts: Vec<(i64, f64)> = records.iter().filter_map(|r| r.ks.map(|d| (r.n, d))).collect();
            rate_fit(&pts).ok()
        }
        _ => None,
    };
    let pass = records.last().is_some_and(|r| r.pass);
    Ok(VerificationReport { spec_name: spec.name.clone(), law: law.clone(), records, slope, pass, notes })
}

fn row_records(
    spec: &RecurrenceSpec,
    law: &LimitLaw,
    ns: &[i64],
    tol: &ToleranceSet,
    notes: &mut Vec<String>,
) -> Result<Vec<NRecord>, VerifyError> {
    let mut gen = RowGenerator::new(spec)?;
    let mut out = Vec::new();
    let mut prev_var_ratio: Option<f64> = None;
    for &n in ns {
        let row = loop {
            let (k, row) = gen.next_row()?;
            if k == n {
                break row;
            }
        };
        let s = moments_from_rows(&row, VERIFY_ORDER)?;
        let mean = to_f64(&s.mean);
        let var = to_f64(&s.variance);
        let rec = match law {
            LimitLaw::Normal { .. } => {
                if var <= 0.0 {
                    return Err(VerifyError::Moment(MomentError::Shape(format!("zero variance at n = {n}"))));
                }
                let sd = var.sqrt();
                let std_m: Vec<f64> = (1..=VERIFY_ORDER).map(|m| to_f64(&s.central[m]) / var.powf(m as f64 / 2.0)).collect();
                let target = [0.0, 1.0, 0.0, 3.0];
                let errs: Vec<f64> = (0..VERIFY_ORDER).map(|i| if i == 3 { rel(std_m[i], 3.0) } else { (std_m[i] - target[i]).abs() }).collect();
                let ks = ks_distance(&row_pmf(&row), mean, sd);
                let pass = errs.iter().all(|e| *e <= tol.moment_tol(n, false)) && ks * sd <= tol.ks_scale;
                NRecord { n, moment_errors: errs, ks: Some(ks), tv: None, pass }
            }
            LimitLaw::Degenerate { .. } => {
                let ratio = var / n.max(1) as f64;
                let pass = ratio < 1e-9 || prev_var_ratio.is_some_and(|p| ratio < p);
                prev_var_ratio = Some(ratio);
                NRecord { n, moment_errors: vec![ratio], ks: None, tv: None, pass }
            }
            l if l.is_discrete() => {
                let fm = l.factorial_moments(VERIFY_ORDER).expect("discrete law");
                let errs: Vec<f64> = (1..=VERIFY_ORDER).map(|m| rel(to_f64(&s.factorial[m]), to_f64(&fm[m]))).collect();
                let tv = tv_distance(&row_pmf(&row), |k| l.pmf(k).unwrap_or(0.0));
                let pass = tv <= tol.tv || errs.iter().all(|e| *e <= tol.moment_tol(n, false));
                if tv > tol.tv && pass {
                    notes.push(format!("n = {n}: TV above tolerance, factorial moments within tolerance"));
                }
                NRecord { n, moment_errors: errs, ks: None, tv: Some(tv), pass }
            }
            l => {
                let tau = to_f64(&l.scale_exponent().unwrap_or_default());
                let k = l.limit_moments(VERIFY_ORDER).ok_or_else(|| VerifyError::UnknownLaw(l.kind().into()))?;
                let raw = raw_moments(&s.central, mean);
                let errs: Vec<f64> = (1..=VERIFY_ORDER).map(|m| rel(raw[m] / (n as f64).powf(tau * m as f64), k[m])).collect();
                let pass = errs.iter().all(|e| *e <= tol.moment_tol(n, tau < 0.5 && tau > 0.0));
                NRecord { n, moment_errors: errs, ks: None, tv: None, pass }
            }
        };
        out.push(rec);
    }
    Ok(out)
}

fn raw_moments(central: &[Rational], mean: f64) -> Vec<f64> {
    let m = central.len() - 1;
    let binom = crate::special::binomial_table(m);
    (0..=m)
        .map(|i| (0..=i).map(|j| binom[i][j].to_f64().unwrap_or(f64::NAN) * to_f64(&central[j]) * mean.powi((i - j) as i32)).sum())
        .collect()
}

/// Plot-ready CSV `n,k,empirical,limit` for the requested rows.
pub fn pmf_csv(spec: &RecurrenceSpec, law: &LimitLaw, ns: &[i64]) -> Result<String, VerifyError> {
    let mut out = String::from("n,k,empirical,limit\n");
    let mut gen = RowGenerator::new(spec)?;
    let mut ns: Vec<i64> = ns.to_vec();
    ns.sort_unstable();
    for n in ns {
        let row = loop {
            if gen.next_index() > n {
                return Err(VerifyError::NoPoints);
            }
            let (k, row) = gen.next_row()?;
            if k == n {
                break row;
            }
        };
        let pmf = row_pmf(&row);
        let s = moments_from_rows(&row, 2)?;
        let (mean, sd) = (to_f64(&s.mean), to_f64(&s.variance).sqrt());
        for (k, p) in pmf.iter().enumerate() {
            let limit = match law {
                LimitLaw::Normal { .. } if sd > 0.0 => {
                    let z = (k as f64 - mean) / sd;
                    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
                }
                l => l.pmf(k as u64).unwrap_or(f64::NAN),
            };
            let _ = writeln!(out, "{n},{k},{p:e},{limit:e}");
        }
    }
    Ok(out)
}

/// Exact mean and variance rendered for reports.
pub fn exact_mean_variance(row: &Poly) -> Result<(String, String), VerifyError> {
    let s = moments_from_rows(row, 2)?;
    Ok((fmt_rational(&s.mean), fmt_rational(&s.variance)))
}
