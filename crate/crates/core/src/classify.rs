//! Limit-law classification of canonical recurrences.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::moments::moments_from_rows;
use crate::poly::Poly;
use crate::rational::{fmt_rational, rat, ri, to_f64, Rational};
use crate::recurrence::{canonicalize, generate_rows, BetaRrParams, CanonicalForm, NnParams, RecurrenceSpec, Shape};
use crate::special::{gamma_ratio, lgamma, rgamma};

/// Default number of rows checked for nonnegative coefficients.
pub const NONNEG_HORIZON: i64 = 40;
/// Default number of limit moments computed.
pub const MOMENT_ORDER: usize = 8;
/// Relative residual accepted by the moment-template matcher.
pub const TEMPLATE_TOL: f64 = 1e-6;

/// Growth scale of a mean or variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn name(self) -> &'static str {
        match self {
            Scale::Linear => "n",
            Scale::Log => "log n",
        }
    }
}

/// One Beta component of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaComponent {
    pub weight: Rational,
    pub a: Rational,
    pub b: Rational,
}

/// A classified limit law.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitLaw {
    /// Mean `mu * scale + log_correction * log n`, variance `sigma2 * scale`.
    Normal { mu: Rational, sigma2: Rational, mean_scale: Scale, var_scale: Scale, log_correction: Option<Rational> },
    Poisson { lambda: Rational },
    /// Failures before the `r`-th success with success probability `1 - p`;
    /// pgf `((1 - p) / (1 - p v))^r`.
    NegBinomial { r: Rational, p: Rational },
    BernoulliSum { l: u64, p: Rational },
    Beta { a: Rational, b: Rational },
    BetaMixture { components: Vec<BetaComponent> },
    /// `X_n / sqrt(n)` tends to Rayleigh with scale `sqrt(sigma2)`.
    Rayleigh { sigma2: Rational },
    /// `X_n / sqrt(n)` tends to half-normal with scale `sqrt(sigma2)`.
    HalfNormal { sigma2: Rational },
    /// `X_n / n^p` has moments `scale^m m! Gamma(q) / Gamma(p m + q)`.
    MittagLeffler { p: Rational, q: f64, scale: f64 },
    /// `X_n / n^tau1` is uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    Degenerate { mu: Rational },
    /// `E (X_n / n^tau1)^m -> k[m]`.
    MomentSequence { tau1: Rational, k: Vec<f64> },
    Unknown { reason: String },
}

impl LimitLaw {
    pub fn kind(&self) -> &'static str {
        match self {
            LimitLaw::Normal { .. } => "Normal",
            LimitLaw::Poisson { .. } => "Poisson",
            LimitLaw::NegBinomial { .. } => "NegBinomial",
            LimitLaw::BernoulliSum { .. } => "BernoulliSum",
            LimitLaw::Beta { .. } => "Beta",
            LimitLaw::BetaMixture { .. } => "BetaMixture",
            LimitLaw::Rayleigh { .. } => "Rayleigh",
            LimitLaw::HalfNormal { .. } => "HalfNormal",
            LimitLaw::MittagLeffler { .. } => "MittagLeffler",
            LimitLaw::Uniform { .. } => "Uniform",
            LimitLaw::Degenerate { .. } => "Degenerate",
            LimitLaw::MomentSequence { .. } => "MomentSequence",
            LimitLaw::Unknown { .. } => "Unknown",
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, LimitLaw::Unknown { .. })
    }

    /// Whether the law lives on the integers (no rescaling).
    pub fn is_discrete(&self) -> bool {
        matches!(self, LimitLaw::Poisson { .. } | LimitLaw::NegBinomial { .. } | LimitLaw::BernoulliSum { .. })
    }

    /// Exponent `tau` with `X_n / n^tau` converging, for continuous non-normal laws.
    pub fn scale_exponent(&self) -> Option<Rational> {
        match self {
            LimitLaw::Beta { .. } | LimitLaw::BetaMixture { .. } | LimitLaw::Uniform { .. } => Some(ri(1)),
            LimitLaw::Rayleigh { .. } | LimitLaw::HalfNormal { .. } => Some(rat(1, 2)),
            LimitLaw::MittagLeffler { p, .. } => Some(p.clone()),
            LimitLaw::MomentSequence { tau1, .. } => Some(tau1.clone()),
            _ => None,
        }
    }

    /// Limit moments `E Y^m`, `m <= order`, for continuous non-normal laws.
    pub fn limit_moments(&self, order: usize) -> Option<Vec<f64>> {
        let ms = 0..=order;
        match self {
            LimitLaw::Beta { a, b } => Some(ms.map(|m| beta_moment(to_f64(a), to_f64(b), m)).collect()),
            LimitLaw::BetaMixture { components } => Some(
                ms.map(|m| {
                    components.iter().map(|c| to_f64(&c.weight) * beta_moment(to_f64(&c.a), to_f64(&c.b), m)).sum()
                })
                .collect(),
            ),
            LimitLaw::Rayleigh { sigma2 } => {
                let s = (to_f64(sigma2) / 2.0).sqrt();
                Some(ms.map(|m| rayleigh_moment(s, m)).collect())
            }
            LimitLaw::HalfNormal { sigma2 } => {
                let s = (to_f64(sigma2) / 2.0).sqrt();
                Some(ms.map(|m| half_normal_moment(s, m)).collect())
            }
            LimitLaw::MittagLeffler { p, q, scale } => {
                Some(ms.map(|m| mittag_leffler_moment(to_f64(p), *q, *scale, m)).collect())
            }
            LimitLaw::Uniform { lo, hi } => Some(ms.map(|m| uniform_moment(*lo, *hi, m)).collect()),
            LimitLaw::MomentSequence { k, .. } => Some(k.iter().take(order + 1).cloned().collect()),
            _ => None,
        }
    }

    /// Limiting factorial moments for the discrete laws.
    pub fn factorial_moments(&self, order: usize) -> Option<Vec<Rational>> {
        let mut out = vec![Rational::one()];
        for m in 1..=order {
            let prev = out[m - 1].clone();
            let mm = ri(m as i64 - 1);
            let next = match self {
                LimitLaw::Poisson { lambda } => prev * lambda,
                // (r)_m (p / (1 - p))^m
                LimitLaw::NegBinomial { r, p } => prev * (r + &mm) * p / (ri(1) - p),
                LimitLaw::BernoulliSum { l, p } => prev * (ri(*l as i64) - &mm) * p,
                _ => return None,
            };
            out.push(next);
        }
        Some(out)
    }

    /// Limiting probability of `k`, for the discrete laws.
    pub fn pmf(&self, k: u64) -> Option<f64> {
        let kf = k as f64;
        match self {
            LimitLaw::Poisson { lambda } => {
                let l = to_f64(lambda);
                Some((kf * l.ln() - l - lgamma(kf + 1.0)).exp())
            }
            LimitLaw::NegBinomial { r, p } => {
                let (r, p) = (to_f64(r), to_f64(p));
                Some((lgamma(kf + r) - lgamma(r) - lgamma(kf + 1.0) + r * (1.0 - p).ln() + kf * p.ln()).exp())
            }
            LimitLaw::BernoulliSum { l, p } => {
                if k > *l {
                    return Some(0.0);
                }
                let (lf, p) = (*l as f64, to_f64(p));
                let logc = lgamma(lf + 1.0) - lgamma(kf + 1.0) - lgamma(lf - kf + 1.0);
                Some(logc.exp() * p.powf(kf) * (1.0 - p).powf(lf - kf))
            }
            LimitLaw::Degenerate { mu } => Some(if (kf - to_f64(mu)).abs() < 0.5 { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    /// JSON with a kind tag and exact plus decimal parameter renderings.
    pub fn to_json(&self) -> Value {
        let r = |x: &Rational| json!({"exact": fmt_rational(x), "decimal": to_f64(x)});
        let f = |x: f64| json!({"exact": Value::Null, "decimal": x});
        let sqrt = |x: &Rational| json!({"exact": format!("sqrt({})", fmt_rational(x)), "decimal": to_f64(x).sqrt()});
        let params = match self {
            LimitLaw::Normal { mu, sigma2, mean_scale, var_scale, log_correction } => json!({
                "mu": r(mu), "sigma2": r(sigma2),
                "mean_scale": mean_scale.name(), "var_scale": var_scale.name(),
                "log_correction": log_correction.as_ref().map(r),
            }),
            LimitLaw::Poisson { lambda } => json!({"lambda": r(lambda)}),
            LimitLaw::NegBinomial { r: rr, p } => json!({"r": r(rr), "p": r(p)}),
            LimitLaw::BernoulliSum { l, p } => json!({"l": l, "p": r(p)}),
            LimitLaw::Beta { a, b } => json!({"a": r(a), "b": r(b)}),
            LimitLaw::BetaMixture { components } => json!({
                "components": components.iter().map(|c| json!({"weight": r(&c.weight), "a": r(&c.a), "b": r(&c.b)})).collect::<Vec<_>>()
            }),
            LimitLaw::Rayleigh { sigma2 } | LimitLaw::HalfNormal { sigma2 } => json!({"sigma": sqrt(sigma2), "sigma2": r(sigma2)}),
            LimitLaw::MittagLeffler { p, q, scale } => json!({"p": r(p), "q": f(*q), "scale": f(*scale), "tau1": r(p)}),
            LimitLaw::Uniform { lo, hi } => json!({"lo": f(*lo), "hi": f(*hi)}),
            LimitLaw::Degenerate { mu } => json!({"mu": r(mu)}),
            LimitLaw::MomentSequence { tau1, k } => json!({"tau1": r(tau1), "k": k}),
            LimitLaw::Unknown { reason } => json!({"reason": reason}),
        };
        json!({"kind": self.kind(), "params": params})
    }
}

pub fn beta_moment(a: f64, b: f64, m: usize) -> f64 {
    (0..m).map(|j| (a + j as f64) / (a + b + j as f64)).product()
}

pub fn rayleigh_moment(sigma_over_sqrt2: f64, m: usize) -> f64 {
    let mf = m as f64;
    std::f64::consts::PI.sqrt() * gamma_ratio(mf + 1.0, mf / 2.0 + 0.5) * sigma_over_sqrt2.powi(m as i32)
}

pub fn half_normal_moment(sigma_over_sqrt2: f64, m: usize) -> f64 {
    let mf = m as f64;
    gamma_ratio(mf + 1.0, mf / 2.0 + 1.0) * sigma_over_sqrt2.powi(m as i32)
}

pub fn mittag_leffler_moment(p: f64, q: f64, scale: f64, m: usize) -> f64 {
    let mf = m as f64;
    scale.powi(m as i32) * (lgamma(mf + 1.0) + lgamma(q) - lgamma(p * mf + q)).exp()
}

pub fn uniform_moment(lo: f64, hi: f64, m: usize) -> f64 {
    if (hi - lo).abs() < f64::EPSILON {
        return lo.powi(m as i32);
    }
    (hi.powi(m as i32 + 1) - lo.powi(m as i32 + 1)) / ((m as f64 + 1.0) * (hi - lo))
}

/// Errors from the closed-form parameter formulas.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("vanishing denominator: {0}")]
    Denominator(&'static str),
    #[error("{0}")]
    Domain(String),
}

/// `(mu, sigma^2)` of the central limit theorem for `(alpha(v), beta(v))`.
pub fn normal_params(alpha: &Poly, beta: &Poly) -> Result<(Rational, Rational), ClassifyError> {
    let a = alpha.eval_one();
    let a1 = alpha.derivative().eval_one();
    let a2 = alpha.derivative().derivative().eval_one();
    let b = beta.eval_one();
    let b1 = beta.derivative().eval_one();
    let d1 = &a + &b;
    let d2 = &a + ri(2) * &b;
    if d1.is_zero() {
        return Err(ClassifyError::Denominator("alpha(1) + beta(1) = 0"));
    }
    if d2.is_zero() {
        return Err(ClassifyError::Denominator("alpha(1) + 2 beta(1) = 0"));
    }
    let mu = a1 / d1;
    let sigma2 = &mu + (a2 - ri(2) * &mu * b1 - &a * &mu * &mu) / d2;
    Ok((mu, sigma2))
}

/// Constants of the derivative-free recurrence `P_n = (alpha(v) n + gamma(v)) P_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaZeroParams {
    pub mu_alpha: Option<Rational>,
    pub sigma2_alpha: Option<Rational>,
    pub mu_gamma: Option<Rational>,
    pub sigma2_gamma: Option<Rational>,
    pub nu: Option<Rational>,
    pub varsigma: Option<Rational>,
}

fn mu_of(f: &Poly) -> Option<Rational> {
    let f0 = f.eval_one();
    (!f0.is_zero()).then(|| f.derivative().eval_one() / f0)
}

fn sigma2_of(f: &Poly) -> Option<Rational> {
    let f0 = f.eval_one();
    if f0.is_zero() {
        return None;
    }
    let m = f.derivative().eval_one() / &f0;
    Some(&m + f.derivative().derivative().eval_one() / &f0 - &m * &m)
}

pub fn beta_zero_params(alpha: &Poly, gamma: &Poly) -> Result<BetaZeroParams, ClassifyError> {
    let a = alpha.eval_one();
    let g = gamma.eval_one();
    if !(a.is_positive() || (alpha.is_zero() && g.is_positive())) {
        return Err(ClassifyError::Domain("needs alpha(1) > 0, or alpha = 0 and gamma(1) > 0".into()));
    }
    let (a1, g1, g2) = (alpha.derivative().eval_one(), gamma.derivative().eval_one(), gamma.derivative().derivative().eval_one());
    let (nu, varsigma) = if a.is_zero() {
        (None, None)
    } else {
        let nu = (&a * &g1 - &a1 * &g) / (&a * &a);
        let vs = (&g1 + &g2) / &a - ri(2) * &a1 * &g1 / (&a * &a) + &g * &a1 * &a1 / (&a * &a * &a);
        (Some(nu), Some(vs))
    };
    Ok(BetaZeroParams {
        mu_alpha: mu_of(alpha),
        sigma2_alpha: sigma2_of(alpha),
        mu_gamma: mu_of(gamma),
        sigma2_gamma: sigma2_of(gamma),
        nu,
        varsigma,
    })
}

/// Limit moments for the non-normal pattern, with parameters counted from index 0.
///
/// For `tau1 < 0` these are factorial-moment limits, taken from the
/// limiting pgf as `prod_{j<m} (gamma' - j beta') / beta`. For `tau1 > 0`
/// they are `lim E (X_n / n^tau1)^m`.
pub fn km_moments(nn: &NnParams, order: usize) -> Result<Vec<f64>, ClassifyError> {
    if nn.alpha.is_zero() || nn.beta.is_zero() {
        return Err(ClassifyError::Domain("needs alpha != 0 and beta != 0".into()));
    }
    let tau1 = -&nn.beta / &nn.alpha;
    if tau1.is_negative() {
        return Ok(discrete_km(nn, order).iter().map(to_f64).collect());
    }
    if nn.c0.is_zero() {
        return Err(ClassifyError::Denominator("P_0(1) = 0"));
    }
    let tau2 = to_f64(&(&nn.gamma / &nn.alpha));
    let t1 = to_f64(&tau1);
    let mut out = vec![1.0];
    let mut prod = Rational::one();
    for m in 1..=order {
        if m >= 2 {
            prod *= (ri(m as i64 - 1) * &nn.beta_p - &nn.gamma_p) / &nn.beta;
        }
        let lead = ri(m as i64) * &nn.c1 / &nn.c0 - &nn.gamma_p / &nn.beta;
        let arg = 1.0 + tau2 + m as f64 * t1;
        if arg <= 0.0 && arg == arg.floor() {
            return Err(ClassifyError::Domain(format!("Gamma pole at moment {m}")));
        }
        let g = gamma_ratio(1.0 + tau2, arg);
        out.push(g * to_f64(&(lead * &prod)));
    }
    Ok(out)
}

/// Exact factorial-moment limits `prod_{j<m} (gamma' - j beta') / beta`.
pub fn discrete_km(nn: &NnParams, order: usize) -> Vec<Rational> {
    let mut out = vec![Rational::one()];
    for m in 1..=order {
        let next = &out[m - 1] * (&nn.gamma_p - ri(m as i64 - 1) * &nn.beta_p) / &nn.beta;
        out.push(next);
    }
    out
}

/// Side information collected while classifying.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyContext {
    pub canonical: CanonicalForm,
    pub nonneg_checked_upto: i64,
    pub warnings: Vec<String>,
}

/// Classify with the default nonnegativity horizon.
pub fn classify(spec: &RecurrenceSpec) -> (LimitLaw, ClassifyContext) {
    classify_with(spec, NONNEG_HORIZON)
}

/// Classify after checking rows `start ..= start + horizon` for negative coefficients.
pub fn classify_with(spec: &RecurrenceSpec, horizon: i64) -> (LimitLaw, ClassifyContext) {
    let canonical = canonicalize(spec);
    let mut ctx = ClassifyContext { canonical: canonical.clone(), nonneg_checked_upto: spec.start - 1, warnings: Vec::new() };
    let unknown = |reason: String| LimitLaw::Unknown { reason };
    let rows = match generate_rows(spec, spec.start + horizon) {
        Ok(r) => r,
        Err(e) => return (unknown(format!("rows not generable: {e}")), ctx),
    };
    for (i, row) in rows.iter().enumerate() {
        if row.coeffs().iter().any(|c| c.is_negative()) {
            let n = spec.start + i as i64;
            ctx.warnings.push(format!("negative coefficient in row {n}"));
            return (unknown("negative coefficients".into()), ctx);
        }
        if row.is_zero() {
            let n = spec.start + i as i64;
            ctx.warnings.push(format!("row {n} vanishes"));
            return (unknown("zero row".into()), ctx);
        }
    }
    ctx.nonneg_checked_upto = spec.start + horizon;
    let law = match &canonical.shape {
        Shape::General { reason } => unknown(reason.clone()),
        Shape::BetaZero { alpha, gamma } => classify_beta_zero(spec, alpha, gamma, &mut ctx),
        Shape::NnForm(p) => classify_nn(spec, &p.reindexed(spec.start), None, &mut ctx),
        Shape::BetaRR(p) => {
            let p0 = p.reindexed(spec.start);
            classify_nn(spec, &p0.to_nn(), Some(&p0), &mut ctx)
        }
        Shape::EulerianLinear { alpha, beta, .. } => classify_linear(alpha, beta),
    };
    (law, ctx)
}

fn classify_linear(alpha: &Poly, beta: &Poly) -> LimitLaw {
    let a = alpha.eval_one();
    let d2 = &a + ri(2) * beta.eval_one();
    if !a.is_positive() {
        return LimitLaw::Unknown { reason: "alpha(1) <= 0".into() };
    }
    if !d2.is_positive() {
        return LimitLaw::Unknown { reason: "alpha(1) + 2 beta(1) <= 0 outside the non-normal pattern".into() };
    }
    match normal_params(alpha, beta) {
        Ok((mu, sigma2)) if sigma2.is_positive() => {
            LimitLaw::Normal { mu, sigma2, mean_scale: Scale::Linear, var_scale: Scale::Linear, log_correction: None }
        }
        Ok((mu, _)) => LimitLaw::Degenerate { mu },
        Err(e) => LimitLaw::Unknown { reason: e.to_string() },
    }
}

fn classify_beta_zero(spec: &RecurrenceSpec, alpha: &Poly, gamma: &Poly, ctx: &mut ClassifyContext) -> LimitLaw {
    let p = match beta_zero_params(alpha, gamma) {
        Ok(p) => p,
        Err(e) => return LimitLaw::Unknown { reason: e.to_string() },
    };
    if ctx.canonical.modulus > 1 {
        ctx.warnings.push("residue classes differ in gamma; class 0 used".into());
    }
    let pos = |x: &Option<Rational>| x.as_ref().is_some_and(|v| v.is_positive());
    if !alpha.is_zero() {
        let (mu_a, s2_a) = (p.mu_alpha.clone().unwrap_or_default(), p.sigma2_alpha.clone().unwrap_or_default());
        if s2_a.is_positive() {
            return LimitLaw::Normal {
                mu: mu_a,
                sigma2: s2_a,
                mean_scale: Scale::Linear,
                var_scale: Scale::Linear,
                log_correction: p.nu.clone(),
            };
        }
        if pos(&p.varsigma) {
            let vs = p.varsigma.clone().expect("checked");
            return if mu_a.is_zero() {
                let a = alpha.eval_one();
                LimitLaw::Normal {
                    mu: gamma.derivative().eval_one() / a,
                    sigma2: vs,
                    mean_scale: Scale::Log,
                    var_scale: Scale::Log,
                    log_correction: None,
                }
            } else {
                LimitLaw::Normal {
                    mu: mu_a,
                    sigma2: vs,
                    mean_scale: Scale::Linear,
                    var_scale: Scale::Log,
                    log_correction: p.nu.clone(),
                }
            };
        }
    } else if pos(&p.sigma2_gamma) {
        return LimitLaw::Normal {
            mu: p.mu_gamma.clone().expect("gamma(1) > 0"),
            sigma2: p.sigma2_gamma.clone().expect("gamma(1) > 0"),
            mean_scale: Scale::Linear,
            var_scale: Scale::Linear,
            log_correction: None,
        };
    }
    bounded_branch(spec, ctx)
}

/// Bounded-variance fallback: moments of a far row stand in for the limit.
fn bounded_branch(spec: &RecurrenceSpec, ctx: &mut ClassifyContext) -> LimitLaw {
    let n = spec.start + 200;
    let row = match crate::recurrence::generate_row(spec, n) {
        Ok(r) => r,
        Err(e) => return LimitLaw::Unknown { reason: format!("bounded-variance branch: {e}") },
    };
    let s = match moments_from_rows(&row, MOMENT_ORDER) {
        Ok(s) => s,
        Err(e) => return LimitLaw::Unknown { reason: format!("bounded-variance branch: {e}") },
    };
    ctx.warnings.push(format!("bounded variance: limit moments estimated from row {n}"));
    if s.variance.is_zero() {
        return LimitLaw::Degenerate { mu: s.mean };
    }
    let mut raw = vec![1.0];
    let mean = to_f64(&s.mean);
    // Raw moments from central ones.
    for m in 1..=MOMENT_ORDER {
        let binom = crate::special::binomial_table(m);
        let v: f64 = (0..=m)
            .map(|j| to_f64(&Rational::from_integer(binom[m][j].clone())) * to_f64(&s.central[j]) * mean.powi((m - j) as i32))
            .sum();
        raw.push(v);
    }
    LimitLaw::MomentSequence { tau1: Rational::zero(), k: raw }
}

fn classify_nn(spec: &RecurrenceSpec, nn: &NnParams, rr: Option<&BetaRrParams>, ctx: &mut ClassifyContext) -> LimitLaw {
    if nn.alpha.is_zero() {
        return bounded_branch(spec, ctx);
    }
    if nn.alpha.is_negative() {
        return LimitLaw::Unknown { reason: "alpha < 0 in the non-normal pattern".into() };
    }
    if nn.beta.is_zero() {
        return LimitLaw::Unknown { reason: "beta(1) = 0 in the non-normal pattern".into() };
    }
    if nn.beta.is_positive() {
        return classify_discrete(nn, ctx);
    }
    let tau1 = -&nn.beta / &nn.alpha;
    let tau2 = &nn.gamma / &nn.alpha;
    let k = match km_moments(nn, MOMENT_ORDER) {
        Ok(k) => k,
        Err(e) => return LimitLaw::Unknown { reason: e.to_string() },
    };
    if let Some(rr) = rr {
        if let Some(law) = beta_mixture(rr) {
            return law;
        }
    }
    if tau1 == rat(1, 2) && nn.beta_p.is_negative() && !nn.c0.is_zero() {
        if let Some(law) = rayleigh_or_half_normal(nn, &tau2) {
            return law;
        }
    }
    if let Some(law) = match_templates(&tau1, &k) {
        return law;
    }
    LimitLaw::MomentSequence { tau1, k }
}

fn classify_discrete(nn: &NnParams, ctx: &mut ClassifyContext) -> LimitLaw {
    let (b, bp, gp) = (&nn.beta, &nn.beta_p, &nn.gamma_p);
    if bp.is_zero() {
        return LimitLaw::Poisson { lambda: gp / b };
    }
    if bp.is_negative() {
        ctx.warnings.push("factorial-moment limits taken from the limiting pgf".into());
        return LimitLaw::NegBinomial { r: -(gp / bp), p: -(bp / (b - bp)) };
    }
    let l = gp / bp;
    if b != bp && l.is_integer() && l.is_positive() {
        if let Ok(l) = u64::try_from(l.to_integer()) {
            return LimitLaw::BernoulliSum { l, p: bp / b };
        }
    }
    LimitLaw::Unknown { reason: "beta' > 0 with gamma' not a positive multiple of beta'".into() }
}

fn beta_mixture(rr: &BetaRrParams) -> Option<LimitLaw> {
    let (a, p, q, h0, h1) = (&rr.alpha, &rr.p, &rr.q, &rr.h0, &rr.h1);
    if !(p.is_positive() && q.is_positive() && a.is_positive()) {
        return None;
    }
    if h0.is_negative() || h1.is_negative() || (h0 + h1).is_zero() {
        return None;
    }
    let h = h0 + h1;
    let one = Rational::one();
    let comps = vec![
        BetaComponent { weight: h1 / &h, a: p / a + &one, b: q / a },
        BetaComponent { weight: h0 / &h, a: p / a, b: q / a + &one },
    ];
    let nonzero: Vec<BetaComponent> = comps.iter().filter(|c| !c.weight.is_zero()).cloned().collect();
    if nonzero.len() == 1 {
        let c = &nonzero[0];
        return Some(LimitLaw::Beta { a: c.a.clone(), b: c.b.clone() });
    }
    Some(LimitLaw::BetaMixture { components: comps })
}

fn rayleigh_or_half_normal(nn: &NnParams, tau2: &Rational) -> Option<LimitLaw> {
    let rho1 = -(&nn.c1 * &nn.alpha) / (ri(2) * &nn.c0 * &nn.beta_p);
    let rho2 = -(&nn.gamma_p / &nn.beta_p);
    let h = rat(1, 2);
    let t2 = tau2.clone();
    let diff = &t2 - &rho2;
    let ray = (rho1.is_zero() && rho2 == &t2 + rat(3, 2) && (t2 == -h.clone() || t2 == h))
        || [(ri(1), rat(-1, 2), rat(-1, 2)), (ri(1), rat(-1, 2), rat(1, 2)), (rat(2, 3), rat(-1, 2), rat(3, 2))]
            .iter()
            .any(|(r1, d, t)| rho1 == *r1 && diff == *d && t2 == *t);
    let sigma2 = ri(8) * &nn.beta_p * &nn.beta_p / (&nn.alpha * &nn.alpha);
    if ray {
        return Some(LimitLaw::Rayleigh { sigma2 });
    }
    let half = (rho1.is_zero() && rho2 == &t2 + ri(1) && t2.is_zero())
        || (rho2 == t2 && [(ri(1), ri(0)), (rat(1, 2), ri(1))].iter().any(|(r1, t)| rho1 == *r1 && t2 == *t));
    half.then_some(LimitLaw::HalfNormal { sigma2 })
}

fn residual_ok(k: &[f64], template: impl Fn(usize) -> f64) -> bool {
    (1..=6.min(k.len() - 1)).all(|m| {
        let t = template(m);
        t.is_finite() && ((k[m] - t) / k[m].abs().max(1e-300)).abs() < TEMPLATE_TOL
    })
}

/// Match limit moments against Uniform, Beta and Mittag-Leffler templates.
pub fn match_templates(tau1: &Rational, k: &[f64]) -> Option<LimitLaw> {
    if k.len() < 3 || !k[1].is_finite() || k[1] <= 0.0 {
        return None;
    }
    let (k1, k2) = (k[1], k[2]);
    if *tau1 == ri(1) {
        let hi = 2.0 * k1;
        if residual_ok(k, |m| uniform_moment(0.0, hi, m)) {
            return Some(LimitLaw::Uniform { lo: 0.0, hi });
        }
        let denom = k2 - k1 * k1;
        if denom > 0.0 {
            let s = (k1 - k2) / denom;
            let (a, b) = (k1 * s, (1.0 - k1) * s);
            if a > 0.0 && b > 0.0 && residual_ok(k, |m| beta_moment(a, b, m)) {
                if let (Some(ar), Some(br)) = (snap(a), snap(b)) {
                    return Some(LimitLaw::Beta { a: ar, b: br });
                }
            }
        }
    }
    let p = to_f64(tau1);
    if p > 0.0 && p <= 1.0 {
        let target = k2 / (k1 * k1);
        let f = |q: f64| 2.0 * gamma_ratio(p + q, q) * gamma_ratio(p + q, 2.0 * p + q) - target;
        let grid: Vec<f64> = (1..=4000).map(|i| i as f64 * 0.01).collect();
        let mut best: Option<(f64, f64)> = None;
        for w in grid.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (f(lo), f(hi));
            if !(flo.is_finite() && fhi.is_finite()) || flo * fhi > 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let q = 0.5 * (lo + hi);
            let scale = k1 * gamma_ratio(p + q, q);
            if residual_ok(k, |m| mittag_leffler_moment(p, q, scale, m)) {
                best = Some((q, scale));
                break;
            }
        }
        if let Some((q, scale)) = best {
            return Some(LimitLaw::MittagLeffler { p: tau1.clone(), q, scale });
        }
    }
    None
}

/// Nearest rational with denominator at most 64, if within 1e-9.
fn snap(x: f64) -> Option<Rational> {
    (1..=64i64).find_map(|d| {
        let n = (x * d as f64).round();
        ((x - n / d as f64).abs() < 1e-9).then(|| rat(n as i64, d))
    })
}

/// `1/Gamma` re-exported for report code.
pub fn reciprocal_gamma(x: f64) -> f64 {
    rgamma(x)
}
