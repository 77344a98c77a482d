//! Polynomial expressions in the two symbols `n` and `v`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::poly::Poly;
use crate::rational::{ri, Rational};

/// Largest exponent accepted after `^`.
pub const MAX_EXPONENT: u32 = 64;

/// Parse failures, with a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("bad exponent at {pos}: {msg}")]
    Exponent { pos: usize, msg: String },
    #[error("division at {pos}: only rational literals p/q may be divided")]
    Division { pos: usize },
}

/// A univariate polynomial in `n`, used for normalizers `e_n`.
pub type NPoly = Poly;

/// Sparse bivariate polynomial keyed by `(deg_n, deg_v)`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BiPoly {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl BiPoly {
    pub fn zero() -> Self {
        BiPoly::default()
    }

    pub fn constant(c: Rational) -> Self {
        BiPoly::monomial(c, 0, 0)
    }

    pub fn monomial(c: Rational, dn: u32, dv: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((dn, dv), c);
        }
        BiPoly { terms }
    }

    pub fn n() -> Self {
        BiPoly::monomial(Rational::one(), 1, 0)
    }

    pub fn v() -> Self {
        BiPoly::monomial(Rational::one(), 0, 1)
    }

    /// Build from `(deg_n, deg_v, coeff)` triples, dropping zeros and merging repeats.
    pub fn from_terms<I: IntoIterator<Item = (u32, u32, Rational)>>(it: I) -> Self {
        let mut out = BiPoly::zero();
        for (i, j, c) in it {
            out.add_term(i, j, c);
        }
        out
    }

    /// A polynomial in `v` only.
    pub fn from_v_poly(p: &Poly) -> Self {
        BiPoly::from_terms(p.coeffs().iter().enumerate().map(|(j, c)| (0, j as u32, c.clone())))
    }

    /// A polynomial in `n` only.
    pub fn from_n_poly(p: &NPoly) -> Self {
        BiPoly::from_terms(p.coeffs().iter().enumerate().map(|(i, c)| (i as u32, 0, c.clone())))
    }

    /// `sum_i n^i * parts[i](v)`.
    pub fn from_n_coeffs(parts: &[Poly]) -> Self {
        let mut out = BiPoly::zero();
        for (i, p) in parts.iter().enumerate() {
            for (j, c) in p.coeffs().iter().enumerate() {
                out.add_term(i as u32, j as u32, c.clone());
            }
        }
        out
    }

    fn add_term(&mut self, i: u32, j: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((i, j)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum degree in `n` (0 for the zero polynomial).
    pub fn degree_n(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Maximum degree in `v` (0 for the zero polynomial).
    pub fn degree_v(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn is_n_free(&self) -> bool {
        self.terms.keys().all(|k| k.0 == 0)
    }

    /// Coefficient of `n^i`, a polynomial in `v`.
    pub fn coeff_of_n(&self, i: u32) -> Poly {
        let mut cs = vec![Rational::zero(); self.degree_v() as usize + 1];
        for ((a, b), c) in &self.terms {
            if *a == i {
                cs[*b as usize] = c.clone();
            }
        }
        Poly::new(cs)
    }

    /// Coefficient of `v^j`, a polynomial in `n`.
    pub fn coeff_of_v(&self, j: u32) -> NPoly {
        let mut cs = vec![Rational::zero(); self.degree_n() as usize + 1];
        for ((a, b), c) in &self.terms {
            if *b == j {
                cs[*a as usize] = c.clone();
            }
        }
        Poly::new(cs)
    }

    /// The `n`-coefficients `[P_0(v), P_1(v), ...]`.
    pub fn n_coeffs(&self) -> Vec<Poly> {
        if self.is_zero() {
            return Vec::new();
        }
        (0..=self.degree_n()).map(|i| self.coeff_of_n(i)).collect()
    }

    /// The `v`-coefficients `[Q_0(n), Q_1(n), ...]`.
    pub fn v_coeffs(&self) -> Vec<NPoly> {
        if self.is_zero() {
            return Vec::new();
        }
        (0..=self.degree_v()).map(|j| self.coeff_of_v(j)).collect()
    }

    /// Substitute an integer for `n`.
    pub fn eval_at_n(&self, n: i64) -> Poly {
        self.eval_at_n_rational(&ri(n))
    }

    /// Substitute a rational for `n`.
    pub fn eval_at_n_rational(&self, n: &Rational) -> Poly {
        let mut cs = vec![Rational::zero(); self.degree_v() as usize + 1];
        for ((i, j), c) in &self.terms {
            cs[*j as usize] += c * pow_rational(n, *i);
        }
        Poly::new(cs)
    }

    /// Substitute a rational for `v`, giving a polynomial in `n`.
    pub fn eval_at_v(&self, v: &Rational) -> NPoly {
        let mut cs = vec![Rational::zero(); self.degree_n() as usize + 1];
        for ((i, j), c) in &self.terms {
            cs[*i as usize] += c * pow_rational(v, *j);
        }
        Poly::new(cs)
    }

    /// Full numeric evaluation.
    pub fn eval(&self, n: &Rational, v: &Rational) -> Rational {
        self.terms
            .iter()
            .map(|((i, j), c)| c * pow_rational(n, *i) * pow_rational(v, *j))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn scale(&self, c: &Rational) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|((i, j), x)| (*i, *j, x * c)))
    }

    /// `p(n, s v)`.
    pub fn scale_v(&self, s: &Rational) -> BiPoly {
        BiPoly::from_terms(self.terms.iter().map(|((i, j), x)| (*i, *j, x * pow_rational(s, *j))))
    }

    /// `p(n + c, v)`.
    pub fn shift_n(&self, c: &Rational) -> BiPoly {
        let parts: Vec<NPoly> = self.v_coeffs().iter().map(|q| q.translate(c)).collect();
        let mut out = BiPoly::zero();
        for (j, q) in parts.iter().enumerate() {
            for (i, x) in q.coeffs().iter().enumerate() {
                out.add_term(i as u32, j as u32, x.clone());
            }
        }
        out
    }

    /// `v^d p(n, 1/v)`; `None` if some `v`-degree exceeds `d`.
    pub fn reverse_v(&self, d: u32) -> Option<BiPoly> {
        if self.degree_v() > d && !self.is_zero() {
            return None;
        }
        Some(BiPoly::from_terms(self.terms.iter().map(|((i, j), x)| (*i, d - *j, x.clone()))))
    }

    /// Multiply by a polynomial in `v` only.
    pub fn mul_v_poly(&self, p: &Poly) -> BiPoly {
        self * &BiPoly::from_v_poly(p)
    }

    /// Divide every `n`-coefficient by the same `v`-polynomial exactly.
    pub fn div_exact_v_poly(&self, d: &Poly) -> Option<BiPoly> {
        let mut parts = Vec::new();
        for p in self.n_coeffs() {
            parts.push(p.div_exact(d)?);
        }
        Some(BiPoly::from_n_coeffs(&parts))
    }

    /// Divide every `v`-coefficient by the same `n`-polynomial exactly.
    pub fn div_exact_n_poly(&self, d: &NPoly) -> Option<BiPoly> {
        let mut out = BiPoly::zero();
        for (j, q) in self.v_coeffs().iter().enumerate() {
            let quot = q.div_exact(d)?;
            for (i, x) in quot.coeffs().iter().enumerate() {
                out.add_term(i as u32, j as u32, x.clone());
            }
        }
        Some(out)
    }

    /// Derivative with respect to `v`.
    pub fn d_v(&self) -> BiPoly {
        BiPoly::from_terms(
            self.terms
                .iter()
                .filter(|((_, j), _)| *j > 0)
                .map(|((i, j), x)| (*i, j - 1, x * ri(*j as i64))),
        )
    }

    fn pow(&self, e: u32) -> BiPoly {
        let mut acc = BiPoly::constant(Rational::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

fn pow_rational(x: &Rational, e: u32) -> Rational {
    num_traits::pow::pow(x.clone(), e as usize)
}

impl std::ops::Add for &BiPoly {
    type Output = BiPoly;
    fn add(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for ((i, j), c) in &rhs.terms {
            out.add_term(*i, *j, c.clone());
        }
        out
    }
}

impl std::ops::Sub for &BiPoly {
    type Output = BiPoly;
    fn sub(self, rhs: &BiPoly) -> BiPoly {
        let mut out = self.clone();
        for ((i, j), c) in &rhs.terms {
            out.add_term(*i, *j, -c.clone());
        }
        out
    }
}

impl std::ops::Mul for &BiPoly {
    type Output = BiPoly;
    fn mul(self, rhs: &BiPoly) -> BiPoly {
        let mut out = BiPoly::zero();
        for ((i1, j1), a) in &self.terms {
            for ((i2, j2), b) in &rhs.terms {
                out.add_term(i1 + i2, j1 + j2, a * b);
            }
        }
        out
    }
}

impl std::ops::Neg for &BiPoly {
    type Output = BiPoly;
    fn neg(self) -> BiPoly {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for BiPoly {
    /// Prints in the parser grammar, so output reparses to the same terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for ((i, j), c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || (*i == 0 && *j == 0) {
                factors.push(mag.to_string());
            }
            for (sym, e) in [("n", *i), ("v", *j)] {
                match e {
                    0 => {}
                    1 => factors.push(sym.to_string()),
                    _ => factors.push(format!("{sym}^{e}")),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiPoly({self})")
    }
}

impl std::str::FromStr for BiPoly {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

/// Parse an expression into its expanded polynomial.
pub fn parse_expr(text: &str) -> Result<BiPoly, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.err("empty expression"));
    }
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

/// Substitute an integer for `n`.
pub fn eval_at_n(p: &BiPoly, n: i64) -> Poly {
    p.eval_at_n(n)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<BiPoly, ExprError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BiPoly, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = &acc * &rhs;
                }
                Some(b'/') => return Err(ExprError::Division { pos: self.pos }),
                Some(c) if c == b'(' || c == b'n' || c == b'v' || c.is_ascii_digit() => {
                    return Err(self.err("implicit multiplication is not allowed"));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<BiPoly, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<BiPoly, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let at = {
            self.skip_ws();
            self.pos
        };
        if self.peek() == Some(b'-') {
            return Err(ExprError::Exponent { pos: at, msg: "negative exponent".into() });
        }
        let Some(digits) = self.digits() else {
            return Err(ExprError::Exponent { pos: at, msg: "expected integer literal".into() });
        };
        if self.peek() == Some(b'/') || self.peek() == Some(b'.') {
            return Err(ExprError::Exponent { pos: at, msg: "non-integer exponent".into() });
        }
        let e = digits
            .to_u32()
            .filter(|e| *e <= MAX_EXPONENT)
            .ok_or_else(|| ExprError::Exponent { pos: at, msg: format!("exponent above {MAX_EXPONENT}") })?;
        Ok(base.pow(e))
    }

    fn digits(&mut self) -> Option<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn atom(&mut self) -> Result<BiPoly, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'n') => {
                self.pos += 1;
                self.no_ident_tail()?;
                Ok(BiPoly::n())
            }
            Some(b'v') => {
                self.pos += 1;
                self.no_ident_tail()?;
                Ok(BiPoly::v())
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits().expect("digit present");
                if self.peek() == Some(b'/') {
                    let slash = self.pos;
                    self.pos += 1;
                    let Some(den) = self.digits() else {
                        return Err(ExprError::Division { pos: slash });
                    };
                    if den.is_zero() {
                        return Err(ExprError::Syntax { pos: slash, msg: "zero denominator".into() });
                    }
                    return Ok(BiPoly::constant(Rational::new(num, den)));
                }
                Ok(BiPoly::constant(Rational::from_integer(num)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn no_ident_tail(&self) -> Result<(), ExprError> {
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphanumeric() || *c == b'_' => {
                Err(ExprError::Syntax { pos: self.pos, msg: "unknown identifier".into() })
            }
            _ => Ok(()),
        }
    }
}
