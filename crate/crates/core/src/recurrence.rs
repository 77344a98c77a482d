//! Recurrence specifications, exact row generation, canonical shapes,
//! spec transforms and the family catalog.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::expr::{parse_expr, BiPoly, ExprError, NPoly};
use crate::poly::Poly;
use crate::rational::{parse_rational, rat, ri, Rational};

/// Errors from parsing, validating or running a recurrence.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Grammar { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ExprError },
    #[error("modulus {modulus} but {classes} class sections")]
    ModulusMismatch { modulus: usize, classes: usize },
    #[error("normalizer e_n vanishes at n = {n}")]
    ZeroNormalizer { n: i64 },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("second-order recurrence needs `initial2`")]
    MissingInitial2,
    #[error("unknown sequence reference `{0}`")]
    UnknownRef(String),
    #[error("row {n} has non-integer coefficient at v^{k}")]
    NotIntegral { n: i64, k: usize },
    #[error("requested rows up to {upto} but the spec starts at {start}")]
    BadRange { start: i64, upto: i64 },
    #[error("unsupported shape: {0}")]
    Shape(String),
    #[error("parameters out of domain: {0}")]
    Domain(String),
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("io: {0}")]
    Io(String),
}

/// Non-homogeneous term `mult(n, v) * T_{n - shift}(v)` where `T` is the
/// row sequence of another spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRef {
    pub name: String,
    pub spec: Box<RecurrenceSpec>,
    pub mult: BiPoly,
    pub shift: i64,
}

/// Coefficients for one residue class of `n` modulo the spec modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    /// Multiplier of `P_{n-1}`.
    pub a: BiPoly,
    /// Full multiplier of `P'_{n-1}`, any `(1 - v)` factor included.
    pub b: BiPoly,
    /// Multiplier of `P''_{n-1}`.
    pub b2: BiPoly,
    /// Normalizer: the row is divided by `e(n)`.
    pub e: NPoly,
    /// Multiplier of `P_{n-2}`.
    pub c2: BiPoly,
    pub inhomog: Option<SequenceRef>,
}

impl ClassSpec {
    /// First-order class with unit normalizer.
    pub fn simple(a: BiPoly, b: BiPoly) -> Self {
        ClassSpec { a, b, b2: BiPoly::zero(), e: Poly::one(), c2: BiPoly::zero(), inhomog: None }
    }

    /// Parse `a` and `b` from expression strings.
    pub fn from_exprs(a: &str, b: &str) -> Result<Self, SpecError> {
        let a = parse_expr(a).map_err(|source| SpecError::Expr { line: 0, source })?;
        let b = parse_expr(b).map_err(|source| SpecError::Expr { line: 0, source })?;
        Ok(ClassSpec::simple(a, b))
    }

    pub fn with_e(mut self, e: NPoly) -> Self {
        self.e = e;
        self
    }

    fn is_first_order_homogeneous(&self) -> bool {
        self.c2.is_zero() && self.b2.is_zero() && self.inhomog.is_none()
    }
}

/// A full Eulerian-type recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceSpec {
    pub name: String,
    pub start: i64,
    pub classes: Vec<ClassSpec>,
    /// `P_start`.
    pub initial: Poly,
    /// `P_{start+1}`, required when some `c2` is nonzero.
    pub initial2: Option<Poly>,
    pub require_integer: bool,
}

impl RecurrenceSpec {
    /// Single-class spec starting at `start`.
    pub fn single(name: &str, start: i64, class: ClassSpec, initial: Poly) -> Self {
        RecurrenceSpec {
            name: name.to_string(),
            start,
            classes: vec![class],
            initial,
            initial2: None,
            require_integer: false,
        }
    }

    pub fn modulus(&self) -> usize {
        self.classes.len()
    }

    pub fn class_for(&self, n: i64) -> &ClassSpec {
        &self.classes[n.rem_euclid(self.classes.len() as i64) as usize]
    }

    pub fn is_second_order(&self) -> bool {
        self.classes.iter().any(|c| !c.c2.is_zero())
    }

    /// Check structural invariants.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.classes.is_empty() {
            return Err(SpecError::ModulusMismatch { modulus: 0, classes: 0 });
        }
        if self.is_second_order() && self.initial2.is_none() {
            return Err(SpecError::MissingInitial2);
        }
        let first = if self.is_second_order() { self.start + 2 } else { self.start + 1 };
        for (k, class) in self.classes.iter().enumerate() {
            if class.e.is_zero() {
                return Err(SpecError::ZeroNormalizer { n: first });
            }
            if let Some(n) = integer_root_at_or_after(&class.e, first, k as i64, self.modulus() as i64) {
                return Err(SpecError::ZeroNormalizer { n });
            }
        }
        Ok(())
    }

    /// Render in the spec-file format.
    pub fn to_spec_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = \"{}\"", self.name);
        let _ = writeln!(s, "start = {}", self.start);
        let _ = writeln!(s, "modulus = {}", self.modulus());
        let _ = writeln!(s, "initial = \"{}\"", self.initial);
        if let Some(p) = &self.initial2 {
            let _ = writeln!(s, "initial2 = \"{p}\"");
        }
        if self.require_integer {
            let _ = writeln!(s, "require_integer = true");
        }
        for (k, c) in self.classes.iter().enumerate() {
            let _ = writeln!(s, "\n[class {k}]");
            let _ = writeln!(s, "a = \"{}\"", c.a);
            let _ = writeln!(s, "b = \"{}\"", c.b);
            if !c.b2.is_zero() {
                let _ = writeln!(s, "b2 = \"{}\"", c.b2);
            }
            if !c.c2.is_zero() {
                let _ = writeln!(s, "c2 = \"{}\"", c.c2);
            }
            let _ = writeln!(s, "e = \"{}\"", c.e.display_in("n"));
            if let Some(r) = &c.inhomog {
                let _ = writeln!(s, "inhomog_ref = \"{}\"", r.name);
                let _ = writeln!(s, "inhomog_mult = \"{}\"", r.mult);
                if r.shift != 0 {
                    let _ = writeln!(s, "inhomog_shift = {}", r.shift);
                }
            }
        }
        s
    }
}

/// Smallest `n >= from` with `n = class (mod m)` at which `e` vanishes.
fn integer_root_at_or_after(e: &NPoly, from: i64, class: i64, m: i64) -> Option<i64> {
    let (nums, _) = e.to_integer_parts();
    let low = nums.iter().position(|c| !c.is_zero())?;
    let mut candidates = Vec::new();
    if low > 0 {
        candidates.push(0i64);
    }
    let c0 = nums[low].abs();
    if let Ok(c) = i64::try_from(&c0) {
        if c <= 1_000_000 {
            let mut d = 1;
            while d * d <= c {
                if c % d == 0 {
                    for r in [d, c / d] {
                        candidates.push(r);
                        candidates.push(-r);
                    }
                }
                d += 1;
            }
        } else {
            candidates.extend(from..from + 4096);
        }
    } else {
        candidates.extend(from..from + 4096);
    }
    candidates.sort_unstable();
    candidates.dedup();
    candidates
        .into_iter()
        .filter(|&r| r >= from && (r - class).rem_euclid(m) == 0)
        .find(|&r| e.eval(&ri(r)).is_zero())
}

/// Resolves `inhomog_ref` names to specs.
pub trait SpecResolver {
    fn resolve(&self, name: &str) -> Result<RecurrenceSpec, SpecError>;
}

/// Resolves only the built-in names (`eulerian`).
pub struct BuiltinResolver;

impl SpecResolver for BuiltinResolver {
    fn resolve(&self, name: &str) -> Result<RecurrenceSpec, SpecError> {
        builtin_spec(name).ok_or_else(|| SpecError::UnknownRef(name.to_string()))
    }
}

/// Resolves `<dir>/<name>.spec`, then built-ins.
pub struct DirResolver<'a>(pub &'a Path);

impl SpecResolver for DirResolver<'_> {
    fn resolve(&self, name: &str) -> Result<RecurrenceSpec, SpecError> {
        let path = self.0.join(format!("{name}.spec"));
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| SpecError::Io(e.to_string()))?;
            return parse_spec_with(&text, self);
        }
        BuiltinResolver.resolve(name)
    }
}

/// Specs known by name without a file.
pub fn builtin_spec(name: &str) -> Option<RecurrenceSpec> {
    match name {
        "eulerian" => catalog_spec(FamilyId::A, &[ri(1), ri(1), ri(1)]).ok().map(|c| c.spec),
        _ => None,
    }
}

/// Parse a spec file, resolving references with the built-in names.
pub fn parse_spec(text: &str) -> Result<RecurrenceSpec, SpecError> {
    parse_spec_with(text, &BuiltinResolver)
}

/// Read and parse a spec file; references resolve relative to its directory.
pub fn load_spec(path: &Path) -> Result<RecurrenceSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_spec_with(&text, &DirResolver(dir))
}

#[derive(Default)]
struct RawClass {
    a: Option<BiPoly>,
    b: Option<BiPoly>,
    b2: Option<BiPoly>,
    e: Option<BiPoly>,
    c2: Option<BiPoly>,
    inhomog_ref: Option<String>,
    inhomog_mult: Option<BiPoly>,
    inhomog_shift: i64,
}

/// Parse a spec file with a custom reference resolver.
pub fn parse_spec_with(text: &str, resolver: &dyn SpecResolver) -> Result<RecurrenceSpec, SpecError> {
    let mut name = String::from("unnamed");
    let mut start = 0i64;
    let mut modulus: Option<usize> = None;
    let mut initial: Option<Poly> = None;
    let mut initial2: Option<Poly> = None;
    let mut require_integer = false;
    let mut classes: HashMap<usize, RawClass> = HashMap::new();
    let mut current: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let gerr = |msg: String| SpecError::Grammar { line, msg };
        if let Some(h) = body.strip_prefix('[') {
            let inner = h.strip_suffix(']').ok_or_else(|| gerr("unterminated section header".into()))?;
            let mut parts = inner.split_whitespace();
            if parts.next() != Some("class") {
                return Err(gerr(format!("unknown section `{inner}`")));
            }
            let k: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| gerr("expected `[class K]`".into()))?;
            if parts.next().is_some() {
                return Err(gerr("expected `[class K]`".into()));
            }
            if classes.contains_key(&k) {
                return Err(gerr(format!("duplicate class {k}")));
            }
            classes.insert(k, RawClass::default());
            current = Some(k);
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| gerr("expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim();
        let expr = |v: &str| -> Result<BiPoly, SpecError> {
            parse_expr(&unquote(v, line)?).map_err(|source| SpecError::Expr { line, source })
        };
        let vpoly = |v: &str| -> Result<Poly, SpecError> {
            let p = expr(v)?;
            if !p.is_n_free() {
                return Err(gerr(format!("`{key}` must not depend on n")));
            }
            Ok(p.coeff_of_n(0))
        };
        match (current, key) {
            (None, "name") => name = unquote(value, line)?,
            (None, "start") => {
                start = unquote(value, line)?.parse().map_err(|_| gerr("`start` must be an integer".into()))?
            }
            (None, "modulus") => {
                let m: usize = unquote(value, line)?.parse().map_err(|_| gerr("`modulus` must be a positive integer".into()))?;
                if m == 0 {
                    return Err(gerr("`modulus` must be a positive integer".into()));
                }
                modulus = Some(m);
            }
            (None, "initial") => initial = Some(vpoly(value)?),
            (None, "initial2") => initial2 = Some(vpoly(value)?),
            (None, "require_integer") => {
                require_integer = match unquote(value, line)?.as_str() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(gerr("`require_integer` must be true or false".into())),
                }
            }
            (Some(k), _) => {
                let c = classes.get_mut(&k).expect("section registered");
                match key {
                    "a" => c.a = Some(expr(value)?),
                    "b" => c.b = Some(expr(value)?),
                    "b2" => c.b2 = Some(expr(value)?),
                    "c2" => c.c2 = Some(expr(value)?),
                    "e" => {
                        let e = expr(value)?;
                        if e.degree_v() > 0 {
                            return Err(gerr("`e` must not depend on v".into()));
                        }
                        c.e = Some(e);
                    }
                    "inhomog_ref" => c.inhomog_ref = Some(unquote(value, line)?),
                    "inhomog_mult" => c.inhomog_mult = Some(expr(value)?),
                    "inhomog_shift" => {
                        c.inhomog_shift = unquote(value, line)?
                            .parse()
                            .map_err(|_| gerr("`inhomog_shift` must be an integer".into()))?
                    }
                    _ => return Err(gerr(format!("unknown class key `{key}`"))),
                }
            }
            (None, _) => return Err(gerr(format!("unknown key `{key}` outside a class section"))),
        }
    }

    let modulus = modulus.unwrap_or(1);
    if classes.len() != modulus || (0..modulus).any(|k| !classes.contains_key(&k)) {
        return Err(SpecError::ModulusMismatch { modulus, classes: classes.len() });
    }
    let initial = initial.ok_or(SpecError::Missing("initial"))?;
    let mut out = Vec::with_capacity(modulus);
    for k in 0..modulus {
        let raw = classes.remove(&k).expect("checked above");
        let a = raw.a.ok_or(SpecError::Missing("a"))?;
        let inhomog = match raw.inhomog_ref {
            Some(r) => Some(SequenceRef {
                spec: Box::new(resolver.resolve(&r)?),
                name: r,
                mult: raw.inhomog_mult.unwrap_or_else(|| BiPoly::constant(Rational::one())),
                shift: raw.inhomog_shift,
            }),
            None => {
                if raw.inhomog_mult.is_some() {
                    return Err(SpecError::Missing("inhomog_ref"));
                }
                None
            }
        };
        out.push(ClassSpec {
            a,
            b: raw.b.unwrap_or_default(),
            b2: raw.b2.unwrap_or_default(),
            e: raw.e.map(|e| e.coeff_of_v(0)).unwrap_or_else(Poly::one),
            c2: raw.c2.unwrap_or_default(),
            inhomog,
        });
    }
    let spec = RecurrenceSpec { name, start, classes: out, initial, initial2, require_integer };
    spec.validate()?;
    Ok(spec)
}

fn strip_comment(s: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &s[..i],
            _ => {}
        }
    }
    s
}

fn unquote(v: &str, line: usize) -> Result<String, SpecError> {
    let v = v.trim();
    if let Some(inner) = v.strip_prefix('"') {
        inner
            .strip_suffix('"')
            .map(str::to_string)
            .ok_or(SpecError::Grammar { line, msg: "unterminated string".into() })
    } else {
        Ok(v.to_string())
    }
}

/// Integer numerators over a positive common denominator.
#[derive(Clone, Debug)]
struct IntRow {
    num: Vec<BigInt>,
    den: BigInt,
}

impl IntRow {
    fn from_poly(p: &Poly) -> Self {
        let (num, den) = p.to_integer_parts();
        IntRow { num, den }
    }

    fn to_poly(&self) -> Poly {
        if self.den.is_one() {
            Poly::new(self.num.iter().map(|c| Rational::new_raw(c.clone(), BigInt::one())).collect())
        } else {
            Poly::new(self.num.iter().map(|c| Rational::new(c.clone(), self.den.clone())).collect())
        }
    }

    fn derivative(&self, order: usize) -> Vec<BigInt> {
        let mut d = self.num.clone();
        for _ in 0..order {
            d = d.iter().enumerate().skip(1).map(|(k, c)| c * BigInt::from(k)).collect();
        }
        d
    }
}

/// Sequential row generator with a window of the last two rows.
pub struct RowGenerator {
    spec: RecurrenceSpec,
    next_n: i64,
    prev1: Option<IntRow>,
    prev2: Option<IntRow>,
    refs: Vec<Option<RefCache>>,
}

struct RefCache {
    gen: Box<RowGenerator>,
    rows: Vec<Poly>,
}

impl RefCache {
    fn row(&mut self, n: i64) -> Result<Poly, SpecError> {
        let start = self.gen.spec.start;
        if n < start {
            return Ok(Poly::zero());
        }
        while (self.rows.len() as i64) <= n - start {
            let (_, p) = self.gen.next_row()?;
            self.rows.push(p);
        }
        Ok(self.rows[(n - start) as usize].clone())
    }
}

impl RowGenerator {
    pub fn new(spec: &RecurrenceSpec) -> Result<Self, SpecError> {
        spec.validate()?;
        let mut refs = Vec::new();
        for c in &spec.classes {
            refs.push(match &c.inhomog {
                Some(r) => Some(RefCache { gen: Box::new(RowGenerator::new(&r.spec)?), rows: Vec::new() }),
                None => None,
            });
        }
        Ok(RowGenerator { spec: spec.clone(), next_n: spec.start, prev1: None, prev2: None, refs })
    }

    /// Index of the row the next call returns.
    pub fn next_index(&self) -> i64 {
        self.next_n
    }

    /// Produce the next row and its index.
    pub fn next_row(&mut self) -> Result<(i64, Poly), SpecError> {
        let n = self.next_n;
        let row = if n == self.spec.start {
            IntRow::from_poly(&self.spec.initial)
        } else if n == self.spec.start + 1 && self.spec.initial2.is_some() {
            IntRow::from_poly(self.spec.initial2.as_ref().expect("checked"))
        } else {
            self.step(n)?
        };
        if self.spec.require_integer && !row.den.is_one() {
            let p = row.to_poly();
            let k = p.coeffs().iter().position(|c| !c.is_integer()).unwrap_or(0);
            return Err(SpecError::NotIntegral { n, k });
        }
        let out = row.to_poly();
        self.prev2 = self.prev1.take();
        self.prev1 = Some(row);
        self.next_n += 1;
        Ok((n, out))
    }

    fn step(&mut self, n: i64) -> Result<IntRow, SpecError> {
        let m = self.spec.modulus() as i64;
        let ci = n.rem_euclid(m) as usize;
        let class = &self.spec.classes[ci];
        let e = class.e.eval(&ri(n));
        if e.is_zero() {
            return Err(SpecError::ZeroNormalizer { n });
        }
        let p1 = self.prev1.as_ref().expect("previous row");
        let mut parts: Vec<(Poly, Vec<BigInt>, BigInt)> = Vec::new();
        parts.push((class.a.eval_at_n(n), p1.num.clone(), p1.den.clone()));
        if !class.b.is_zero() {
            parts.push((class.b.eval_at_n(n), p1.derivative(1), p1.den.clone()));
        }
        if !class.b2.is_zero() {
            parts.push((class.b2.eval_at_n(n), p1.derivative(2), p1.den.clone()));
        }
        if !class.c2.is_zero() {
            let p2 = self.prev2.as_ref().ok_or(SpecError::MissingInitial2)?;
            parts.push((class.c2.eval_at_n(n), p2.num.clone(), p2.den.clone()));
        }
        if let Some(r) = &class.inhomog {
            let t = self.refs[ci].as_mut().expect("ref cache").row(n - r.shift)?;
            let t = IntRow::from_poly(&t);
            parts.push((r.mult.eval_at_n(n), t.num, t.den));
        }

        let mut den = BigInt::one();
        for (coef, _, d) in &parts {
            den = den.lcm(d);
            for c in coef.coeffs() {
                den = den.lcm(c.denom());
            }
        }
        let mut num: Vec<BigInt> = Vec::new();
        for (coef, row, d) in &parts {
            if coef.is_zero() || row.is_empty() {
                continue;
            }
            let row_scale = &den / d;
            let len = coef.len() + row.len() - 1;
            if num.len() < len {
                num.resize(len, BigInt::zero());
            }
            for (i, c) in coef.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let ci = c.numer() * (&row_scale / c.denom());
                for (j, x) in row.iter().enumerate() {
                    if !x.is_zero() {
                        num[i + j] += &ci * x;
                    }
                }
            }
        }
        // Divide by e = p / q.
        let (ep, eq) = (e.numer().clone(), e.denom().clone());
        if !eq.is_one() {
            for c in num.iter_mut() {
                *c *= &eq;
            }
        }
        den *= ep;
        if den.is_negative() {
            den = -den;
            for c in num.iter_mut() {
                *c = -&*c;
            }
        }
        while num.last().is_some_and(|c| c.is_zero()) {
            num.pop();
        }
        if !den.is_one() {
            let mut g = den.clone();
            for c in &num {
                if g.is_one() {
                    break;
                }
                g = g.gcd(c);
            }
            if !g.is_one() && !g.is_zero() {
                for c in num.iter_mut() {
                    *c /= &g;
                }
                den /= &g;
            }
            if num.is_empty() {
                den = BigInt::one();
            }
        }
        Ok(IntRow { num, den })
    }
}

/// Exact rows `P_start ..= P_upto`.
pub fn generate_rows(spec: &RecurrenceSpec, upto: i64) -> Result<Vec<Poly>, SpecError> {
    if upto < spec.start {
        return Err(SpecError::BadRange { start: spec.start, upto });
    }
    let mut gen = RowGenerator::new(spec)?;
    let mut out = Vec::with_capacity((upto - spec.start + 1) as usize);
    while gen.next_index() <= upto {
        out.push(gen.next_row()?.1);
    }
    Ok(out)
}

/// The single row `P_n`, keeping only a sliding window in memory.
pub fn generate_row(spec: &RecurrenceSpec, n: i64) -> Result<Poly, SpecError> {
    if n < spec.start {
        return Err(SpecError::BadRange { start: spec.start, upto: n });
    }
    let mut gen = RowGenerator::new(spec)?;
    loop {
        let (k, p) = gen.next_row()?;
        if k == n {
            return Ok(p);
        }
    }
}

/// Parameters of the pattern `((alpha n + gamma + gamma'(v-1)), (beta + beta'(v-1)); c0 + c1(v-1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnParams {
    pub alpha: Rational,
    pub beta: Rational,
    pub beta_p: Rational,
    pub gamma: Rational,
    pub gamma_p: Rational,
    pub c0: Rational,
    pub c1: Rational,
}

impl NnParams {
    /// Parameters for the same rows counted from index 0.
    pub fn reindexed(&self, start: i64) -> NnParams {
        NnParams { gamma: &self.gamma + &self.alpha * ri(start), ..self.clone() }
    }

    /// `tau1 = -beta / alpha`.
    pub fn tau1(&self) -> Option<Rational> {
        (!self.alpha.is_zero()).then(|| -&self.beta / &self.alpha)
    }

    /// `tau2 = gamma / alpha`.
    pub fn tau2(&self) -> Option<Rational> {
        (!self.alpha.is_zero()).then(|| &self.gamma / &self.alpha)
    }

    /// `(alpha(v), beta(v), gamma(v))` as polynomials.
    pub fn linear_parts(&self) -> (Poly, Poly, Poly) {
        let lin = |c: &Rational, cp: &Rational| Poly::new(vec![c - cp, cp.clone()]);
        (Poly::constant(self.alpha.clone()), lin(&self.beta, &self.beta_p), lin(&self.gamma, &self.gamma_p))
    }
}

/// Parameters of the pattern `(alpha n + p v + q, -alpha v; h0 + h1 v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRrParams {
    pub alpha: Rational,
    pub p: Rational,
    pub q: Rational,
    pub h0: Rational,
    pub h1: Rational,
}

impl BetaRrParams {
    pub fn reindexed(&self, start: i64) -> BetaRrParams {
        BetaRrParams { q: &self.q + &self.alpha * ri(start), ..self.clone() }
    }

    pub fn to_nn(&self) -> NnParams {
        NnParams {
            alpha: self.alpha.clone(),
            beta: -self.alpha.clone(),
            beta_p: -self.alpha.clone(),
            gamma: &self.p + &self.q,
            gamma_p: self.p.clone(),
            c0: &self.h0 + &self.h1,
            c1: self.h1.clone(),
        }
    }
}

/// The detected shape of a recurrence.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `(alpha(v) n + gamma(v)) P + beta(v)(1-v) P'`.
    EulerianLinear { alpha: Poly, beta: Poly, gamma: Poly },
    NnForm(NnParams),
    /// `(alpha(v) n + gamma(v)) P` with no derivative term.
    BetaZero { alpha: Poly, gamma: Poly },
    BetaRR(BetaRrParams),
    General { reason: String },
}

/// Canonical data extracted from a spec. Coefficients refer to the
/// original row index; `start` and `initial` give the anchor row.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub shape: Shape,
    pub start: i64,
    pub initial: Poly,
    pub modulus: usize,
    /// `gamma(v)` for each residue class (after per-class scaling).
    pub class_gammas: Vec<Poly>,
    /// Set when several residue classes share `alpha` and `beta`.
    pub parity_collapsed: bool,
}

impl CanonicalForm {
    /// `(alpha, beta, gamma)` for first-order shapes.
    pub fn linear_parts(&self) -> Option<(Poly, Poly, Poly)> {
        match &self.shape {
            Shape::EulerianLinear { alpha, beta, gamma } => Some((alpha.clone(), beta.clone(), gamma.clone())),
            Shape::BetaZero { alpha, gamma } => Some((alpha.clone(), Poly::zero(), gamma.clone())),
            Shape::NnForm(p) => Some(p.linear_parts()),
            Shape::BetaRR(p) => Some(p.to_nn().linear_parts()),
            Shape::General { .. } => None,
        }
    }

    /// `gamma(v)` used at row index `n`.
    pub fn gamma_at(&self, n: i64) -> &Poly {
        &self.class_gammas[n.rem_euclid(self.modulus as i64) as usize]
    }

    /// NnForm parameters, also for the BetaRR sub-pattern.
    pub fn nn_params(&self) -> Option<NnParams> {
        match &self.shape {
            Shape::NnForm(p) => Some(p.clone()),
            Shape::BetaRR(p) => Some(p.to_nn()),
            _ => None,
        }
    }

    pub fn is_general(&self) -> bool {
        matches!(self.shape, Shape::General { .. })
    }
}

fn one_minus_v() -> Poly {
    Poly::from_ints([1, -1])
}

struct ClassParts {
    alpha: Poly,
    beta: Option<Poly>,
    gamma: Poly,
}

fn class_parts(c: &ClassSpec) -> Result<ClassParts, String> {
    if !c.c2.is_zero() {
        return Err("second-order term (c2 nonzero)".into());
    }
    if !c.b2.is_zero() {
        return Err("second-derivative term".into());
    }
    if c.inhomog.is_some() {
        return Err("inhomogeneous term".into());
    }
    if c.a.is_zero() {
        return Err("multiplier of P_{n-1} is identically zero".into());
    }
    let mut g = Poly::zero();
    for q in c.a.v_coeffs().into_iter().chain(c.b.v_coeffs()) {
        g = g.gcd(&q);
    }
    let (a, b) = if g.degree().unwrap_or(0) > 0 {
        (c.a.div_exact_n_poly(&g).expect("gcd divides"), c.b.div_exact_n_poly(&g).expect("gcd divides"))
    } else {
        (c.a.clone(), c.b.clone())
    };
    if a.degree_n() > 1 {
        return Err("multiplier of P_{n-1} is not linear in n".into());
    }
    let alpha = a.coeff_of_n(1);
    let gamma = a.coeff_of_n(0);
    if b.is_zero() {
        return Ok(ClassParts { alpha, beta: None, gamma });
    }
    if !b.is_n_free() {
        return Err("derivative multiplier depends on n".into());
    }
    let beta = b
        .coeff_of_n(0)
        .div_exact(&one_minus_v())
        .ok_or_else(|| "derivative multiplier not divisible by 1-v".to_string())?;
    Ok(ClassParts { alpha, beta: Some(beta), gamma })
}

/// Detect the most specific shape of a spec.
pub fn canonicalize(spec: &RecurrenceSpec) -> CanonicalForm {
    let general = |reason: String| CanonicalForm {
        shape: Shape::General { reason },
        start: spec.start,
        initial: spec.initial.clone(),
        modulus: spec.modulus(),
        class_gammas: vec![Poly::zero(); spec.modulus()],
        parity_collapsed: false,
    };
    let mut parts = Vec::new();
    for c in &spec.classes {
        match class_parts(c) {
            Ok(p) => parts.push(p),
            Err(reason) => return general(reason),
        }
    }
    let base = &parts[0];
    let mut class_gammas = vec![base.gamma.clone()];
    for p in &parts[1..] {
        // Classes must agree with class 0 up to one constant factor.
        let lambda = match (base.alpha.leading(), p.alpha.leading()) {
            (Some(x), Some(y)) => y / x,
            (None, None) => match (&base.beta, &p.beta) {
                (Some(x), Some(y)) => y.leading().expect("nonzero") / x.leading().expect("nonzero"),
                (None, None) => Rational::one(),
                _ => return general("parity classes with differing alpha/beta".into()),
            },
            _ => return general("parity classes with differing alpha/beta".into()),
        };
        let same_alpha = p.alpha == base.alpha.scale(&lambda);
        let same_beta = match (&base.beta, &p.beta) {
            (Some(x), Some(y)) => *y == x.scale(&lambda),
            (None, None) => true,
            _ => false,
        };
        if !same_alpha || !same_beta {
            return general("parity classes with differing alpha/beta".into());
        }
        class_gammas.push(p.gamma.scale(&lambda.recip()));
    }
    let uniform_gamma = class_gammas.iter().all(|g| *g == class_gammas[0]);
    let alpha = base.alpha.clone();
    let gamma = base.gamma.clone();
    let shape = match &base.beta {
        None => Shape::BetaZero { alpha, gamma },
        Some(beta) => {
            let small = |p: &Poly| p.degree().unwrap_or(0) <= 1;
            if alpha.is_constant() && small(beta) && small(&gamma) && small(&spec.initial) && uniform_gamma {
                let a0 = alpha.coeff(0);
                let nn = NnParams {
                    alpha: a0.clone(),
                    beta: beta.eval_one(),
                    beta_p: beta.coeff(1),
                    gamma: gamma.eval_one(),
                    gamma_p: gamma.coeff(1),
                    c0: spec.initial.eval_one(),
                    c1: spec.initial.coeff(1),
                };
                if !a0.is_zero() && *beta == Poly::monomial(-a0.clone(), 1) {
                    Shape::BetaRR(BetaRrParams {
                        alpha: a0,
                        p: gamma.coeff(1),
                        q: gamma.coeff(0),
                        h0: spec.initial.coeff(0),
                        h1: spec.initial.coeff(1),
                    })
                } else {
                    Shape::NnForm(nn)
                }
            } else {
                Shape::EulerianLinear { alpha, beta: beta.clone(), gamma }
            }
        }
    };
    CanonicalForm {
        shape,
        start: spec.start,
        initial: spec.initial.clone(),
        modulus: spec.modulus(),
        class_gammas,
        parity_collapsed: spec.modulus() > 1,
    }
}

/// Spec whose rows are `v^(n+m) P_n(1/v)`.
pub fn reciprocal_spec(spec: &RecurrenceSpec, m: i64) -> Result<RecurrenceSpec, SpecError> {
    let mut classes = Vec::new();
    for (k, c) in spec.classes.iter().enumerate() {
        if !c.is_first_order_homogeneous() {
            return Err(SpecError::Shape(format!("class {k} is not a first-order homogeneous recurrence")));
        }
        let beta = c
            .b
            .div_exact_v_poly(&one_minus_v())
            .ok_or_else(|| SpecError::Shape(format!("class {k}: derivative multiplier not divisible by 1-v")))?;
        // Laurent terms (deg_n, deg_v, coeff) before the final check.
        let mut a_terms: Vec<(u32, i64, Rational)> = Vec::new();
        for ((i, j), x) in c.a.terms() {
            a_terms.push((*i, 1 - *j as i64, x.clone()));
        }
        // -(n - 1 + m) v (1 - v) beta(n, 1/v)
        let shift = ri(m - 1);
        for ((i, j), x) in beta.terms() {
            for (di, coef) in [(1u32, Rational::one()), (0u32, shift.clone())] {
                if coef.is_zero() {
                    continue;
                }
                let base = -(x * &coef);
                a_terms.push((i + di, 1 - *j as i64, base.clone()));
                a_terms.push((i + di, 2 - *j as i64, -base));
            }
        }
        let mut b_terms: Vec<(u32, i64, Rational)> = Vec::new();
        for ((i, j), x) in beta.terms() {
            b_terms.push((*i, 2 - *j as i64, x.clone()));
            b_terms.push((*i, 3 - *j as i64, -x.clone()));
        }
        let a = laurent_to_bipoly(a_terms).ok_or_else(|| {
            SpecError::Shape(format!("class {k}: reciprocal multiplier is not a polynomial (deg_v a too high)"))
        })?;
        let b = laurent_to_bipoly(b_terms).ok_or_else(|| {
            SpecError::Shape(format!("class {k}: reciprocal derivative multiplier is not a polynomial"))
        })?;
        classes.push(ClassSpec { a, b, b2: BiPoly::zero(), e: c.e.clone(), c2: BiPoly::zero(), inhomog: None });
    }
    let initial_shift = spec.start + m;
    let initial = laurent_reverse_poly(&spec.initial, initial_shift)
        .ok_or_else(|| SpecError::Shape("initial row has too high a degree for this m".into()))?;
    Ok(RecurrenceSpec {
        name: format!("{}-reciprocal", spec.name),
        start: spec.start,
        classes,
        initial,
        initial2: None,
        require_integer: spec.require_integer,
    })
}

fn laurent_to_bipoly(terms: Vec<(u32, i64, Rational)>) -> Option<BiPoly> {
    let mut acc: HashMap<(u32, i64), Rational> = HashMap::new();
    for (i, j, x) in terms {
        *acc.entry((i, j)).or_insert_with(Rational::zero) += x;
    }
    let mut out = Vec::new();
    for ((i, j), x) in acc {
        if x.is_zero() {
            continue;
        }
        if j < 0 {
            return None;
        }
        out.push((i, j as u32, x));
    }
    Some(BiPoly::from_terms(out))
}

/// `v^d p(1/v)` for an explicit exponent `d`.
fn laurent_reverse_poly(p: &Poly, d: i64) -> Option<Poly> {
    let mut cs: Vec<Rational> = Vec::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e = d - k as i64;
        if e < 0 {
            return None;
        }
        let e = e as usize;
        if cs.len() <= e {
            cs.resize(e + 1, Rational::zero());
        }
        cs[e] = c.clone();
    }
    Some(Poly::new(cs))
}

/// Spec whose rows are `R_n(v) = P_n(v / s)`.
pub fn scale_spec(spec: &RecurrenceSpec, s: &Rational) -> Result<RecurrenceSpec, SpecError> {
    if s.is_zero() {
        return Err(SpecError::ZeroScale);
    }
    let inv = s.recip();
    let mut classes = Vec::new();
    for c in &spec.classes {
        let inhomog = match &c.inhomog {
            Some(r) => Some(SequenceRef {
                name: r.name.clone(),
                spec: Box::new(scale_spec(&r.spec, s)?),
                mult: r.mult.scale_v(&inv),
                shift: r.shift,
            }),
            None => None,
        };
        classes.push(ClassSpec {
            a: c.a.scale_v(&inv),
            b: c.b.scale_v(&inv).scale(s),
            b2: c.b2.scale_v(&inv).scale(&(s * s)),
            e: c.e.clone(),
            c2: c.c2.scale_v(&inv),
            inhomog,
        });
    }
    Ok(RecurrenceSpec {
        name: spec.name.clone(),
        start: spec.start,
        classes,
        initial: spec.initial.substitute_scaled(&inv),
        initial2: spec.initial2.as_ref().map(|p| p.substitute_scaled(&inv)),
        require_integer: false,
    })
}

/// Catalog families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyId {
    /// `(q v n + p + (q r - q - p) v, q v; 1)`.
    A,
    /// `(q v n + p + (r - p - q) v, v; 1)`.
    T,
    /// `(v n + p + (q - p - 1) v, 1 + v; 1)`.
    Q,
    /// `((-1 + (q+1) v) n + 1 + p + (q r - p - q - 1) v) / n, q v / n; 1`.
    M,
    /// Urn with parameters `(a, b, c, d, s0, x0)`.
    Polya,
}

impl FamilyId {
    pub fn parse(s: &str) -> Option<FamilyId> {
        match s {
            "A" | "a" => Some(FamilyId::A),
            "T" | "t" => Some(FamilyId::T),
            "Q" | "q" => Some(FamilyId::Q),
            "M" | "m" => Some(FamilyId::M),
            "Polya" | "polya" | "P" => Some(FamilyId::Polya),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            FamilyId::A | FamilyId::T | FamilyId::M => 3,
            FamilyId::Q => 2,
            FamilyId::Polya => 6,
        }
    }
}

/// A catalog spec together with the family's stated normal constants.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub family: FamilyId,
    pub params: Vec<Rational>,
    pub spec: RecurrenceSpec,
    /// `(mu, sigma^2)` stated for the family.
    pub predicted_normal: (Rational, Rational),
}

fn bi(terms: &[(u32, u32, Rational)]) -> BiPoly {
    BiPoly::from_terms(terms.iter().cloned())
}

/// Build the recurrence of a catalog family.
pub fn catalog_spec(family: FamilyId, params: &[Rational]) -> Result<CatalogEntry, SpecError> {
    if params.len() != family.arity() {
        return Err(SpecError::Domain(format!("{family:?} takes {} parameters", family.arity())));
    }
    let zero = Rational::zero();
    let one = Rational::one();
    let dom = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(SpecError::Domain(msg.to_string())) };
    let v_minus_v2 = bi(&[(0, 1, one.clone()), (0, 2, -one.clone())]);
    let (name, spec, predicted) = match family {
        FamilyId::A => {
            let (p, q, r) = (&params[0], &params[1], &params[2]);
            dom(q > &zero && r > &zero && p >= &zero && p <= &(q * r), "A(p,q,r) needs q,r > 0 and 0 <= p <= q r")?;
            let a = bi(&[(1, 1, q.clone()), (0, 0, p.clone()), (0, 1, q * r - q - p)]);
            let b = v_minus_v2.scale(q);
            ("A", RecurrenceSpec::single("", 0, ClassSpec::simple(a, b), Poly::one()), (rat(1, 2), rat(1, 12)))
        }
        FamilyId::T => {
            let (p, q, r) = (&params[0], &params[1], &params[2]);
            dom(q >= &one && r >= p && p >= &zero && (r + p) > zero, "T(p,q,r) needs q >= 1, r >= p >= 0, r + p > 0")?;
            let a = bi(&[(1, 1, q.clone()), (0, 0, p.clone()), (0, 1, r - p - q)]);
            let q1 = q + &one;
            let mu = q / &q1;
            let s2 = q * q / (&q1 * &q1 * (q + ri(2)));
            ("T", RecurrenceSpec::single("", 0, ClassSpec::simple(a, v_minus_v2.clone()), Poly::one()), (mu, s2))
        }
        FamilyId::Q => {
            let (p, q) = (&params[0], &params[1]);
            dom(q >= p && p >= &zero && q > &zero, "Q(p,q) needs q >= p >= 0 and q > 0")?;
            let a = bi(&[(1, 1, one.clone()), (0, 0, p.clone()), (0, 1, q - p - &one)]);
            let b = bi(&[(0, 0, one.clone()), (0, 2, -one.clone())]);
            ("Q", RecurrenceSpec::single("", 0, ClassSpec::simple(a, b), Poly::one()), (rat(1, 3), rat(8, 45)))
        }
        FamilyId::M => {
            let (p, q, r) = (&params[0], &params[1], &params[2]);
            dom(q > &one, "M(p,q,r) needs q > 1")?;
            let a = bi(&[
                (1, 0, -one.clone()),
                (1, 1, q + &one),
                (0, 0, &one + p),
                (0, 1, q * r - p - q - &one),
            ]);
            let b = v_minus_v2.scale(q);
            let class = ClassSpec::simple(a, b).with_e(Poly::from_ints([0, 1]));
            let mu = (q + &one) / (ri(2) * q);
            let s2 = (q * q - &one) / (ri(12) * q * q);
            ("M", RecurrenceSpec::single("", 0, class, Poly::one()), (mu, s2))
        }
        FamilyId::Polya => {
            let ints: Option<Vec<i64>> = params
                .iter()
                .map(|x| x.is_integer().then(|| i64::try_from(x.numer()).ok()).flatten())
                .collect();
            let ints = ints.ok_or_else(|| SpecError::Domain("Polya parameters must be integers".into()))?;
            let (a, b, c, d, s0, x0) = (ints[0], ints[1], ints[2], ints[3], ints[4], ints[5]);
            dom(
                a >= 0 && b >= 0 && c >= 0 && d >= 0 && a + b == c + d && a + b >= 1,
                "Polya needs nonnegative a+b = c+d = q >= 1",
            )?;
            dom(s0 >= 1 && (0..=s0).contains(&x0), "Polya needs s0 >= 1 and 0 <= x0 <= s0")?;
            let q = a + b;
            let mult = bi(&[(1, c as u32, ri(q)), (0, c as u32, ri(s0 - q))]);
            let deriv = bi(&[(0, (a + 1) as u32, one.clone()), (0, (c + 1) as u32, -one.clone())]);
            let initial = Poly::monomial(one.clone(), x0 as usize);
            let mu = ri(c * q) / ri(b + c);
            let num = ri(q * b * c * (c - a) * (c - a));
            let den = ri((b + c) * (b + c) * (2 * c + b - a));
            let s2 = if den.is_zero() { Rational::zero() } else { num / den };
            ("Polya", RecurrenceSpec::single("", 0, ClassSpec::simple(mult, deriv), initial), (mu, s2))
        }
    };
    let label = params.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut spec = spec;
    spec.name = format!("{name}({label})");
    spec.validate()?;
    Ok(CatalogEntry { family, params: params.to_vec(), spec, predicted_normal: predicted })
}

/// Parse catalog parameters given as rational strings.
pub fn parse_params(items: &[String]) -> Result<Vec<Rational>, SpecError> {
    items
        .iter()
        .map(|s| parse_rational(s).ok_or_else(|| SpecError::Domain(format!("bad parameter `{s}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULERIAN: &str = r#"
# Eulerian numbers
name = "eulerian"
start = 0
initial = "1"
[class 0]
a = "v*n+1-v"
b = "v-v^2"
e = "1"
"#;

    const A244312: &str = r#"
name = "a244312"
start = 1
modulus = 2
initial = "v"
[class 0]
a = "v*n-1"
b = "v-v^2"
[class 1]
a = "v*n-v"
b = "v-v^2"
"#;

    fn ints(p: &Poly) -> Vec<i64> {
        p.coeffs().iter().map(|c| i64::try_from(c.to_integer()).unwrap()).collect()
    }

    #[test]
    fn eulerian_rows() {
        let spec = parse_spec(EULERIAN).unwrap();
        assert_eq!(spec.modulus(), 1);
        let rows = generate_rows(&spec, 6).unwrap();
        assert_eq!(rows[0], Poly::one());
        assert_eq!(ints(&rows[4]), vec![1, 11, 11, 1]);
        assert_eq!(ints(&rows[6]), vec![1, 57, 302, 302, 57, 1]);
    }

    #[test]
    fn a008971_row_five() {
        let spec = RecurrenceSpec::single(
            "a008971",
            0,
            ClassSpec::from_exprs("v*n+1-v", "2*v-2*v^2").unwrap(),
            Poly::one(),
        );
        let rows = generate_rows(&spec, 5).unwrap();
        assert_eq!(ints(&rows[5]), vec![1, 58, 61]);
    }

    #[test]
    fn parity_spec_parses_and_sums_to_factorial() {
        // Row n sums to (n-1)!.
        let spec = parse_spec(A244312).unwrap();
        assert_eq!(spec.modulus(), 2);
        let rows = generate_rows(&spec, 12).unwrap();
        let mut fact = BigInt::one();
        for (i, r) in rows.iter().enumerate() {
            let n = i as i64 + 1;
            if n > 1 {
                fact *= BigInt::from(n - 1);
            }
            assert!(r.has_nonnegative_coeffs());
            assert_eq!(r.eval_one(), Rational::from_integer(fact.clone()), "n = {n}");
        }
    }

    #[test]
    fn missing_initial_is_error() {
        let text = "name = \"x\"\n[class 0]\na = \"1+v\"\n";
        assert_eq!(parse_spec(text), Err(SpecError::Missing("initial")));
    }

    #[test]
    fn modulus_mismatch_is_error() {
        let text = "initial = \"1\"\nmodulus = 2\n[class 0]\na = \"1+v\"\n";
        assert!(matches!(parse_spec(text), Err(SpecError::ModulusMismatch { .. })));
    }

    #[test]
    fn order_two_needs_second_initial() {
        let text = "initial = \"1\"\n[class 0]\na = \"v*n\"\nc2 = \"(1-v)^2\"\n";
        assert_eq!(parse_spec(text), Err(SpecError::MissingInitial2));
    }

    #[test]
    fn zero_normalizer_is_error() {
        let text = "initial = \"1\"\n[class 0]\na = \"v*n\"\ne = \"n-3\"\n";
        assert_eq!(parse_spec(text), Err(SpecError::ZeroNormalizer { n: 3 }));
        // A root before the first generated index is harmless.
        let ok = "initial = \"1\"\nstart = 0\n[class 0]\na = \"v*n\"\ne = \"n\"\n";
        assert!(parse_spec(ok).is_ok());
    }

    #[test]
    fn spec_text_round_trips() {
        let spec = parse_spec(A244312).unwrap();
        assert_eq!(parse_spec(&spec.to_spec_text()).unwrap(), spec);
    }

    #[test]
    fn canonical_eulerian() {
        let spec = parse_spec(EULERIAN).unwrap();
        let c = canonicalize(&spec);
        assert_eq!(
            c.shape,
            Shape::EulerianLinear {
                alpha: Poly::from_ints([0, 1]),
                beta: Poly::from_ints([0, 1]),
                gamma: Poly::from_ints([1, -1]),
            }
        );
    }

    #[test]
    fn canonical_rencontres_is_nn_form() {
        let spec = RecurrenceSpec::single("a008290", 0, ClassSpec::from_exprs("n-1+v", "1-v").unwrap(), Poly::one());
        let c = canonicalize(&spec);
        let nn = NnParams {
            alpha: ri(1),
            beta: ri(1),
            beta_p: ri(0),
            gamma: ri(0),
            gamma_p: ri(1),
            c0: ri(1),
            c1: ri(0),
        };
        // Re-substitute: alpha n + gamma + gamma'(v-1) must equal n - 1 + v.
        let (al, _, ga) = nn.linear_parts();
        assert_eq!(&al.scale(&ri(5)) + &ga, Poly::from_ints([4, 1]));
        assert_eq!(c.shape, Shape::NnForm(nn));
    }

    #[test]
    fn canonical_beta_rr() {
        let spec = RecurrenceSpec::single("a091441", 0, ClassSpec::from_exprs("n+1+2*v", "-v*(1-v)").unwrap(), Poly::one());
        assert_eq!(
            canonicalize(&spec).shape,
            Shape::BetaRR(BetaRrParams { alpha: ri(1), p: ri(2), q: ri(1), h0: ri(1), h1: ri(0) })
        );
    }

    #[test]
    fn canonical_drops_common_n_factor_and_normalizer() {
        let spec = RecurrenceSpec::single(
            "scaled",
            0,
            ClassSpec::from_exprs("(n+2)*(v*n+1-v)", "(n+2)*(v-v^2)").unwrap().with_e(Poly::from_ints([5, 7])),
            Poly::one(),
        );
        let c = canonicalize(&spec);
        assert_eq!(
            c.shape,
            Shape::EulerianLinear {
                alpha: Poly::from_ints([0, 1]),
                beta: Poly::from_ints([0, 1]),
                gamma: Poly::from_ints([1, -1]),
            }
        );
    }

    #[test]
    fn canonical_parity_collapses() {
        let c = canonicalize(&parse_spec(A244312).unwrap());
        assert!(c.parity_collapsed);
        assert_eq!(c.class_gammas[0], Poly::from_ints([-1]));
        assert_eq!(c.class_gammas[1], Poly::from_ints([0, -1]));
        assert!(matches!(c.shape, Shape::EulerianLinear { .. }));
    }

    #[test]
    fn canonical_general_reasons() {
        let text = "initial = \"1\"\ninitial2 = \"v\"\n[class 0]\na = \"v*n\"\nb = \"v-v^2\"\nc2 = \"(1-v)^2\"\n";
        let c = canonicalize(&parse_spec(text).unwrap());
        assert!(matches!(c.shape, Shape::General { ref reason } if reason.contains("c2")));
        let text = "initial = \"1\"\n[class 0]\na = \"v*n\"\nb = \"v\"\n";
        let c = canonicalize(&parse_spec(text).unwrap());
        assert!(matches!(c.shape, Shape::General { ref reason } if reason.contains("1-v")));
    }

    #[test]
    fn reciprocal_of_second_order_eulerian() {
        let t = catalog_spec(FamilyId::T, &[ri(0), ri(2), ri(1)]).unwrap().spec;
        let r = reciprocal_spec(&t, 1).unwrap();
        assert_eq!(r.classes[0].a, parse_expr("(1+v)*n - 1").unwrap());
        assert_eq!(r.classes[0].b, parse_expr("v - v^2").unwrap());
        let p = generate_rows(&t, 12).unwrap();
        let q = generate_rows(&r, 12).unwrap();
        for (n, (pn, qn)) in p.iter().zip(&q).enumerate() {
            assert_eq!(*qn, laurent_reverse_poly(pn, n as i64 + 1).unwrap());
        }
    }

    #[test]
    fn reciprocal_of_constant_rows_is_monomial() {
        let spec = RecurrenceSpec::single("one", 0, ClassSpec::from_exprs("1", "0").unwrap(), Poly::one());
        let r = reciprocal_spec(&spec, 0).unwrap();
        let rows = generate_rows(&r, 5).unwrap();
        for (n, p) in rows.iter().enumerate() {
            assert_eq!(*p, Poly::monomial(Rational::one(), n));
        }
    }

    #[test]
    fn scale_examples() {
        let spec = RecurrenceSpec::single("a156920", 0, ClassSpec::from_exprs("2*v*n+1-2*v", "2*v-4*v^2").unwrap(), Poly::one());
        let s = scale_spec(&spec, &ri(2)).unwrap();
        assert_eq!(s.classes[0].a, parse_expr("v*n + 1 - v").unwrap());
        assert_eq!(s.classes[0].b, parse_expr("2*v - 2*v^2").unwrap());
        let id = scale_spec(&spec, &ri(1)).unwrap();
        assert_eq!(id.classes, spec.classes);
        let back = scale_spec(&s, &rat(1, 2)).unwrap();
        assert_eq!(back.classes, spec.classes);
    }

    #[test]
    fn catalog_examples() {
        let e = catalog_spec(FamilyId::A, &[ri(1), ri(1), ri(1)]).unwrap().spec;
        assert_eq!(e.classes[0].a, parse_expr("v*n+1-v").unwrap());
        assert_eq!(e.classes[0].b, parse_expr("v-v^2").unwrap());
        let m = catalog_spec(FamilyId::A, &[ri(1), ri(2), ri(1)]).unwrap().spec;
        assert_eq!(m.classes[0].a, parse_expr("2*v*n+1-v").unwrap());
        assert_eq!(m.classes[0].b, parse_expr("2*v-2*v^2").unwrap());
        let t = catalog_spec(FamilyId::T, &[ri(0), ri(2), ri(1)]).unwrap().spec;
        assert_eq!(t.classes[0].a, parse_expr("(2*n-1)*v").unwrap());
        assert!(catalog_spec(FamilyId::A, &[ri(3), ri(1), ri(1)]).is_err());
        assert!(catalog_spec(FamilyId::T, &[ri(0), rat(1, 2), ri(1)]).is_err());
        assert!(catalog_spec(FamilyId::Polya, &[ri(1), ri(1), ri(1), ri(2), ri(1), ri(0)]).is_err());
    }

    #[test]
    fn inhomogeneous_descents_starting_with_ascent() {
        // P_n = sum_k k <n, k-1> v^k
        let text = r#"
name = "a065826"
start = 1
initial = "v"
[class 0]
a = "v*n-1"
b = "v-v^2"
inhomog_ref = "eulerian"
inhomog_mult = "v"
"#;
        let spec = parse_spec(text).unwrap();
        let rows = generate_rows(&spec, 9).unwrap();
        let eul = generate_rows(&parse_spec(EULERIAN).unwrap(), 9).unwrap();
        for (i, p) in rows.iter().enumerate() {
            let n = i + 1;
            let want = Poly::new(
                (0..=n).map(|k| if k == 0 { Rational::zero() } else { ri(k as i64) * eul[n].coeff(k - 1) }).collect(),
            );
            assert_eq!(*p, want, "n = {n}");
        }
    }

    #[test]
    fn second_order_derangement_polynomials() {
        // P_n = sum_k C(n,k) (-1)^(n-k) A_k(v)
        let text = "start = 0\ninitial = \"1\"\ninitial2 = \"0\"\n[class 0]\na = \"(n-1)*v\"\nb = \"v-v^2\"\nc2 = \"(n-1)*v\"\n";
        let rows = generate_rows(&parse_spec(text).unwrap(), 10).unwrap();
        let eul = generate_rows(&parse_spec(EULERIAN).unwrap(), 10).unwrap();
        for n in 0..=10usize {
            let mut want = Poly::zero();
            let mut binom = BigInt::one();
            for k in 0..=n {
                let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
                want = &want + &eul[k].scale(&(Rational::from_integer(binom.clone()) * ri(sign)));
                binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
            }
            assert_eq!(rows[n], want, "n = {n}");
        }
    }

    #[test]
    fn second_derivative_big_ascents() {
        // [v^k] P_n = 1/(n+1) C(n+1,k) sum_j C(k+j-1,k-1) C(n+1-k, n-2k-j)
        let text = r#"
start = 0
initial = "1"
[class 0]
a = "n*((1+3*v)*n+1-3*v)"
b = "2*(4*n-3)*v*(1-v)"
b2 = "4*v*(1-v)^2"
e = "n*(n+1)"
"#;
        let rows = generate_rows(&parse_spec(text).unwrap(), 12).unwrap();
        let c = |n: i64, k: i64| -> BigInt {
            if k < 0 || n < 0 || k > n {
                return BigInt::zero();
            }
            (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
        };
        for n in 1..=12i64 {
            let mut cs = Vec::new();
            for k in 0..=n / 2 {
                let mut s = BigInt::zero();
                for j in 0..=(n - 2 * k) {
                    let first = if k == 0 { if j == 0 { BigInt::one() } else { BigInt::zero() } } else { c(k + j - 1, k - 1) };
                    s += first * c(n + 1 - k, n - 2 * k - j);
                }
                cs.push(Rational::new(c(n + 1, k) * s, BigInt::from(n + 1)));
            }
            assert_eq!(rows[n as usize], Poly::new(cs), "n = {n}");
        }
    }

    #[test]
    fn require_integer_flags_fractions() {
        let text = "require_integer = true\ninitial = \"1\"\n[class 0]\na = \"1+v\"\ne = \"2\"\n";
        let spec = parse_spec(text).unwrap();
        assert!(matches!(generate_rows(&spec, 3), Err(SpecError::NotIntegral { n: 1, .. })));
    }

    #[test]
    fn single_row_matches_triangle() {
        let spec = parse_spec(EULERIAN).unwrap();
        assert_eq!(generate_row(&spec, 9).unwrap(), generate_rows(&spec, 9).unwrap()[9]);
    }
}
