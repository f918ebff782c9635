//! Sparse multivariate polynomial arithmetic and monomial-basis enumeration.
//!
//! Polynomials are stored as maps from exponent multi-indices to coefficients,
//! ordered graded-lexicographically so that every traversal (arithmetic,
//! compilation, file export) is deterministic. Coefficients with magnitude
//! below [`DROP_TOLERANCE`] are removed after arithmetic to keep the maps from
//! accumulating numerical noise.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::Scalar;

/// Coefficients with `|c|` below this are dropped after arithmetic.
pub const DROP_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },
    #[error("parse error at byte {at}: {message}")]
    Parse { at: usize, message: String },
}

/// Exponent multi-index of a monomial; `powers.len()` equals the ambient
/// dimension of the enclosing polynomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponent {
    powers: Vec<u32>,
}

impl Exponent {
    pub fn new(powers: Vec<u32>) -> Self {
        Exponent { powers }
    }

    pub fn zeros(nvars: usize) -> Self {
        Exponent {
            powers: vec![0; nvars],
        }
    }

    /// The multi-index of the bare variable `var` in `nvars` dimensions.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut powers = vec![0; nvars];
        powers[var] = 1;
        Exponent { powers }
    }

    pub fn nvars(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    /// Total degree: the sum of the entries.
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    /// Component-wise sum; panics on mismatched lengths (callers validate).
    pub fn mul(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.powers.len(), other.powers.len());
        Exponent {
            powers: self
                .powers
                .iter()
                .zip(&other.powers)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Re-embeds into a ring with one extra trailing variable.
    pub fn lift(&self) -> Exponent {
        let mut powers = self.powers.clone();
        powers.push(0);
        Exponent { powers }
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exp{:?}", self.powers)
    }
}

/// Graded lexicographic order: lower total degree first; within a degree,
/// the monomial with the larger leading power comes first (x1^2 < x1*x2 < x2^2).
impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| {
                for (a, b) in self.powers.iter().zip(&other.powers) {
                    match b.cmp(a) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
            .then_with(|| self.powers.len().cmp(&other.powers.len()))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponents of length `nvars` with total degree at most `max_degree`,
/// in graded lexicographic order. The count is C(nvars + max_degree, max_degree).
pub fn monomial_basis(nvars: usize, max_degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    for d in 0..=max_degree {
        emit_degree(nvars, d, 0, &mut current, &mut out);
    }
    out
}

fn emit_degree(nvars: usize, remaining: u32, var: usize, current: &mut [u32], out: &mut Vec<Exponent>) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Exponent::zeros(0));
        }
        return;
    }
    if var == nvars - 1 {
        current[var] = remaining;
        out.push(Exponent::new(current.to_vec()));
        current[var] = 0;
        return;
    }
    // Descending leading power matches the graded-lex order above.
    for p in (0..=remaining).rev() {
        current[var] = p;
        emit_degree(nvars, remaining - p, var + 1, current, out);
        current[var] = 0;
    }
}

/// Sparse multivariate polynomial with real coefficients.
///
/// Immutable by convention: every operation returns a fresh value, so shared
/// references are safe across threads.
#[derive(Clone, PartialEq)]
pub struct Poly<T> {
    nvars: usize,
    terms: BTreeMap<Exponent, T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, value: T) -> Self {
        let mut p = Poly::zero(nvars);
        p.insert(Exponent::zeros(nvars), value);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, T::one())
    }

    /// The bare variable `var` (zero-based).
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars, "variable index out of range");
        let mut p = Poly::zero(nvars);
        p.insert(Exponent::unit(nvars, var), T::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, T)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.nvars(), nvars, "exponent length must equal nvars");
            p.insert_add(e, c);
        }
        p
    }

    /// The polynomial `‖x − center‖₂²` in `center.len()` variables.
    pub fn squared_distance(center: &[T]) -> Self {
        let n = center.len();
        let mut p = Poly::zero(n);
        let mut constant = T::zero();
        for (i, &c) in center.iter().enumerate() {
            let mut sq = Exponent::zeros(n);
            sq.powers[i] = 2;
            p.insert_add(sq, T::one());
            p.insert_add(Exponent::unit(n, i), -(T::of(2.0) * c));
            constant += c * c;
        }
        p.insert_add(Exponent::zeros(n), constant);
        p.cleanup();
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Max total degree over stored exponents; 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, e: &Exponent) -> T {
        self.terms.get(e).copied().unwrap_or_else(T::zero)
    }

    fn insert(&mut self, e: Exponent, c: T) {
        if c.abs().to64() >= DROP_TOLERANCE {
            self.terms.insert(e, c);
        }
    }

    fn insert_add(&mut self, e: Exponent, c: T) {
        let entry = self.terms.entry(e).or_insert_with(T::zero);
        *entry += c;
    }

    fn cleanup(&mut self) {
        let tol = T::of(DROP_TOLERANCE);
        self.terms.retain(|_, c| c.abs() >= tol);
    }

    fn check_dims(&self, other: &Poly<T>) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly<T>) -> Result<Poly<T>, PolyError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), *c);
        }
        out.cleanup();
        Ok(out)
    }

    pub fn sub(&self, other: &Poly<T>) -> Result<Poly<T>, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly<T> {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, factor: T) -> Poly<T> {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.cleanup();
        out
    }

    /// Term-map convolution.
    pub fn mul(&self, other: &Poly<T>) -> Result<Poly<T>, PolyError> {
        self.check_dims(other)?;
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.insert_add(ea.mul(eb), *ca * *cb);
            }
        }
        out.cleanup();
        Ok(out)
    }

    /// Plain term-sum evaluation.
    pub fn eval(&self, point: &[T]) -> Result<T, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                left: self.nvars,
                right: point.len(),
            });
        }
        let mut total = T::zero();
        for (e, c) in &self.terms {
            let mut term = *c;
            for (i, &p) in e.powers.iter().enumerate() {
                if p > 0 {
                    term *= point[i].powi(p as i32);
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Embeds into the ring with one extra trailing variable; the new variable
    /// never appears, so evaluation agrees on `(point, anything)`.
    pub fn lift(&self) -> Poly<T> {
        let mut out = Poly::zero(self.nvars + 1);
        for (e, c) in &self.terms {
            out.terms.insert(e.lift(), *c);
        }
        out
    }

    /// Sum of absolute coefficient magnitudes weighted by `rho^degree`,
    /// excluding the constant term. Bounds `|p(x) − c₀|` on the ball `‖x‖₂ ≤ rho`
    /// since `|x^α| ≤ ‖x‖₂^{|α|}` there.
    pub fn ball_coefficient_bound(&self, rho: T) -> T {
        let mut bound = T::zero();
        for (e, c) in &self.terms {
            if e.degree() > 0 {
                bound += c.abs() * rho.powi(e.degree() as i32);
            }
        }
        bound
    }

    pub fn constant_term(&self) -> T {
        self.coefficient(&Exponent::zeros(self.nvars))
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Poly<T> {
        assert!(var < self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let p = e.powers[var];
            if p == 0 {
                continue;
            }
            let mut powers = e.powers.clone();
            powers[var] = p - 1;
            out.insert_add(Exponent::new(powers), *c * T::of(p as f64));
        }
        out.cleanup();
        out
    }
}

impl<T: Scalar> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let cv = *c;
            if first {
                if cv < T::zero() {
                    write!(f, "-")?;
                }
                first = false;
            } else if cv < T::zero() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = cv.abs();
            let monomial: Vec<String> = e
                .powers
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| {
                    if p == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, p)
                    }
                })
                .collect();
            if monomial.is_empty() {
                write!(f, "{}", mag)?;
            } else if (mag - T::one()).abs() < T::of(DROP_TOLERANCE) {
                write!(f, "{}", monomial.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, monomial.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<T: fmt::Debug> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]{:?}", self.nvars, self.terms)
    }
}

/// Parses a sum of monomial terms such as
/// `-4*x1^3 + 9*x1^2 - 6.75*x1 - 7.3125`.
///
/// Variables are `x1..x<nvars>`; the name `xt` is reserved for the lifted
/// variable and only accepted when `lifted` is set, in which case it aliases
/// the last variable of the ring.
pub fn parse_poly<T: Scalar>(input: &str, nvars: usize, lifted: bool) -> Result<Poly<T>, PolyError> {
    Parser {
        bytes: input.as_bytes(),
        pos: 0,
        nvars,
        lifted,
    }
    .parse()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    nvars: usize,
    lifted: bool,
}

impl<'a> Parser<'a> {
    fn parse<T: Scalar>(&mut self) -> Result<Poly<T>, PolyError> {
        let mut poly = Poly::zero(self.nvars);
        self.skip_ws();
        if self.pos == self.bytes.len() {
            return Err(self.err("empty polynomial"));
        }
        let mut sign = T::one();
        if self.eat(b'+') {
        } else if self.eat(b'-') {
            sign = -T::one();
        }
        loop {
            let (exp, coeff) = self.parse_term::<T>()?;
            poly.insert_add(exp, sign * coeff);
            self.skip_ws();
            if self.pos == self.bytes.len() {
                break;
            }
            if self.eat(b'+') {
                sign = T::one();
            } else if self.eat(b'-') {
                sign = -T::one();
            } else {
                return Err(self.err("expected '+' or '-' between terms"));
            }
        }
        poly.cleanup();
        Ok(poly)
    }

    fn parse_term<T: Scalar>(&mut self) -> Result<(Exponent, T), PolyError> {
        self.skip_ws();
        let mut coeff = T::one();
        let mut exp = Exponent::zeros(self.nvars);
        let mut saw_factor = false;
        if let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                coeff = self.parse_number()?;
                saw_factor = true;
            }
        }
        loop {
            self.skip_ws();
            let had_star = self.eat(b'*');
            self.skip_ws();
            match self.peek() {
                Some(b'x') => {
                    let (var, pow) = self.parse_var_power()?;
                    exp.powers[var] += pow;
                    saw_factor = true;
                }
                Some(c) if had_star && (c.is_ascii_digit() || c == b'.') => {
                    let n: T = self.parse_number()?;
                    coeff *= n;
                }
                _ if had_star => return Err(self.err("expected variable or number after '*'")),
                _ => break,
            }
        }
        if !saw_factor {
            return Err(self.err("expected a term"));
        }
        Ok((exp, coeff))
    }

    fn parse_var_power(&mut self) -> Result<(usize, u32), PolyError> {
        self.pos += 1; // consumed 'x'
        let var = if self.peek() == Some(b't') {
            self.pos += 1;
            if !self.lifted {
                return Err(self.err("'xt' is reserved for the lifted variable"));
            }
            self.nvars - 1
        } else {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected variable index after 'x'"));
            }
            let idx: usize = std::str::from_utf8(&self.bytes[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("variable index out of range"))?;
            let limit = if self.lifted { self.nvars - 1 } else { self.nvars };
            if idx == 0 || idx > limit {
                return Err(self.err(&format!("variable x{idx} outside x1..x{limit}")));
            }
            idx - 1
        };
        self.skip_ws();
        let pow = if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected exponent after '^'"));
            }
            std::str::from_utf8(&self.bytes[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent out of range"))?
        } else {
            1
        };
        Ok((var, pow))
    }

    fn parse_number<T: Scalar>(&mut self) -> Result<T, PolyError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E')
        {
            // Accept exponent signs like 1e-3 only right after e/E.
            self.pos += 1;
            if matches!(self.bytes[self.pos - 1], b'e' | b'E')
                && self.peek().is_some_and(|c| c == b'+' || c == b'-')
            {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(&format!("invalid number '{text}'")))?;
        Ok(T::of(value))
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, message: &str) -> PolyError {
        PolyError::Parse {
            at: self.pos,
            message: message.to_string(),
        }
    }
}
