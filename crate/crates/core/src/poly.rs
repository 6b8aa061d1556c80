//! Bivariate polynomials, the annihilator parser, and the diagonal automaton.
//!
//! [`IntPoly`] holds integer polynomials in `x, y` (annihilators, rational
//! functions). [`BivarPoly`] is the same over Z/p^αZ. The automaton for
//! `Diag(P/Q) mod p^α` is built over states `S` with
//! `v_S(n) = [xⁿyⁿ] S / Q^e`, `e = p^(α−1)`, using
//! `Q^(p^α) ≡ Q(x^p, y^p)^e (mod p^α)`:
//!
//! * initial state `P · Q^(e−1)`,
//! * digit `r` sends `S` to `Λ_{r,r}(S · Q^(e(p−1)))`,
//! * output `S(0,0) · Q(0,0)^(−e)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize};

use crate::dfao::{Dfao, Output, Reading, STATE_BUDGET};
use crate::error::{Error, Result};
use crate::oracles;
use crate::residue::{check_prime, digits_lsd_unchecked, Modulus};

/// Exponents above this are rejected by the parser and by `pow`.
pub const MAX_EXPONENT: u32 = 4096;

/// Number of terms checked against an oracle before an automaton is returned.
pub const VALIDATION_WINDOW: usize = 1 << 12;

/// Total stored coefficients allowed across all states of one diagonal automaton.
pub const COEFFICIENT_BUDGET: usize = 1 << 26;

// ---------------------------------------------------------------------------
// Integer polynomials

/// A polynomial in `x, y` with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct IntPoly {
    terms: BTreeMap<(u32, u32), i128>,
}

fn overflow() -> Error {
    Error::InvalidInput("integer coefficient overflow".into())
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly::default()
    }

    pub fn constant(c: i128) -> Self {
        IntPoly::monomial(c, 0, 0)
    }

    pub fn monomial(c: i128, i: u32, j: u32) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert((i, j), c);
        }
        IntPoly { terms }
    }

    pub fn x() -> Self {
        IntPoly::monomial(1, 1, 0)
    }

    pub fn y() -> Self {
        IntPoly::monomial(1, 0, 1)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), i128)>) -> Result<Self> {
        let mut p = IntPoly::zero();
        for ((i, j), c) in terms {
            p.add_term(i, j, c)?;
        }
        Ok(p)
    }

    fn add_term(&mut self, i: u32, j: u32, c: i128) -> Result<()> {
        if c == 0 {
            return Ok(());
        }
        let e = self.terms.entry((i, j)).or_insert(0);
        *e = e.checked_add(c).ok_or_else(overflow)?;
        if *e == 0 {
            self.terms.remove(&(i, j));
        }
        Ok(())
    }

    pub fn coeff(&self, i: u32, j: u32) -> i128 {
        self.terms.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Non-zero terms in `(i, j)` order.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), i128)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn deg_x(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn deg_y(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn add(&self, o: &IntPoly) -> Result<IntPoly> {
        let mut r = self.clone();
        for ((i, j), c) in o.terms() {
            r.add_term(i, j, c)?;
        }
        Ok(r)
    }

    pub fn neg(&self) -> IntPoly {
        IntPoly { terms: self.terms.iter().map(|(&k, &c)| (k, -c)).collect() }
    }

    pub fn sub(&self, o: &IntPoly) -> Result<IntPoly> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &IntPoly) -> Result<IntPoly> {
        let mut r = IntPoly::zero();
        for ((i, j), a) in self.terms() {
            for ((k, l), b) in o.terms() {
                let c = a.checked_mul(b).ok_or_else(overflow)?;
                r.add_term(i + k, j + l, c)?;
            }
        }
        Ok(r)
    }

    pub fn pow(&self, e: u32) -> Result<IntPoly> {
        if e > MAX_EXPONENT {
            return Err(Error::InvalidInput(format!("exponent {e} exceeds {MAX_EXPONENT}")));
        }
        let mut acc = IntPoly::constant(1);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `∂/∂y`.
    pub fn dy(&self) -> Result<IntPoly> {
        let mut r = IntPoly::zero();
        for ((i, j), c) in self.terms() {
            if j > 0 {
                r.add_term(i, j - 1, c.checked_mul(j as i128).ok_or_else(overflow)?)?;
            }
        }
        Ok(r)
    }

    /// The substitution `x ↦ x·y` (exponent `(i, j)` becomes `(i, i + j)`).
    pub fn subst_xy_y(&self) -> IntPoly {
        IntPoly { terms: self.terms.iter().map(|(&(i, j), &c)| ((i, i + j), c)).collect() }
    }

    /// Exact division by `y^k`, if possible.
    pub fn div_y_pow(&self, k: u32) -> Option<IntPoly> {
        if self.terms.keys().any(|&(_, j)| j < k) {
            return None;
        }
        Some(IntPoly { terms: self.terms.iter().map(|(&(i, j), &c)| ((i, j - k), c)).collect() })
    }

    pub fn reduce(&self, m: &Modulus) -> BivarPoly {
        let mut out = BivarPoly::zero(*m);
        for ((i, j), c) in self.terms() {
            let v = c.rem_euclid(m.modulus() as i128) as u64;
            if v != 0 {
                out.terms.insert((i, j), v);
            }
        }
        out
    }

    pub fn parse(src: &str) -> Result<IntPoly> {
        Parser::new(src)?.parse()
    }
}

impl FromStr for IntPoly {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IntPoly::parse(s)
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, i: u32, j: u32, c: i128) -> fmt::Result {
    let mut parts = Vec::new();
    if c != 1 || (i == 0 && j == 0) {
        parts.push(c.to_string());
    }
    for (var, e) in [("x", i), ("y", j)] {
        match e {
            0 => {}
            1 => parts.push(var.to_string()),
            _ => parts.push(format!("{var}^{e}")),
        }
    }
    write!(f, "{}", parts.join("*"))
}

impl fmt::Display for IntPoly {
    /// Terms by decreasing total degree, then decreasing x-degree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut terms: Vec<_> = self.terms().collect();
        terms.sort_by_key(|&((i, j), _)| std::cmp::Reverse((i + j, i)));
        for (n, ((i, j), c)) in terms.into_iter().enumerate() {
            if n == 0 {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            write_monomial(f, i, j, c.abs())?;
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        IntPoly::parse(&s).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Parser: integers, x, y, + - * ^ and parentheses; juxtaposition multiplies.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(i128),
    X,
    Y,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

impl Parser {
    fn new(src: &str) -> Result<Parser> {
        let mut toks = Vec::new();
        let (mut line, mut col) = (1, 1);
        let mut chars = src.chars().peekable();
        while let Some(&c) = chars.peek() {
            let (l, cl) = (line, col);
            let tok = match c {
                '\n' => {
                    chars.next();
                    line += 1;
                    col = 1;
                    continue;
                }
                c if c.is_whitespace() => {
                    chars.next();
                    col += 1;
                    continue;
                }
                '0'..='9' => {
                    let mut v: i128 = 0;
                    while let Some(&d) = chars.peek() {
                        let Some(d) = d.to_digit(10) else { break };
                        v = v
                            .checked_mul(10)
                            .and_then(|v| v.checked_add(d as i128))
                            .ok_or_else(|| parse_err(l, cl, "integer literal too large"))?;
                        chars.next();
                        col += 1;
                    }
                    toks.push((Tok::Num(v), l, cl));
                    continue;
                }
                'x' | 'X' => Tok::X,
                'y' | 'Y' => Tok::Y,
                '+' => Tok::Plus,
                '-' | '−' => Tok::Minus,
                '*' | '·' => Tok::Star,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => return Err(parse_err(l, cl, format!("unexpected character '{other}'"))),
            };
            chars.next();
            col += 1;
            toks.push((tok, l, cl));
        }
        toks.push((Tok::End, line, col));
        Ok(Parser { toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn wrap(&self, r: Result<IntPoly>) -> Result<IntPoly> {
        let (l, c) = self.here();
        r.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => parse_err(l, c, other.to_string()),
        })
    }

    fn parse(mut self) -> Result<IntPoly> {
        let p = self.expr()?;
        if *self.peek() != Tok::End {
            let (l, c) = self.here();
            return Err(parse_err(l, c, format!("unexpected {:?}", self.peek())));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<IntPoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let t = self.term()?;
                    acc = self.wrap(acc.add(&t))?;
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    acc = self.wrap(acc.sub(&t))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<IntPoly> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                }
                Tok::Num(_) | Tok::X | Tok::Y | Tok::LParen => {}
                _ => return Ok(acc),
            }
            let f = self.factor()?;
            acc = self.wrap(acc.mul(&f))?;
        }
    }

    fn factor(&mut self) -> Result<IntPoly> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(self.factor()?.neg());
        }
        if *self.peek() == Tok::Plus {
            self.bump();
            return self.factor();
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let (l, c) = self.here();
            match self.bump() {
                Tok::Num(e) if e <= MAX_EXPONENT as i128 => self.wrap(base.pow(e as u32)),
                Tok::Num(_) => Err(parse_err(l, c, format!("exponent exceeds {MAX_EXPONENT}"))),
                _ => Err(parse_err(l, c, "expected a non-negative integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<IntPoly> {
        let (l, c) = self.here();
        match self.bump() {
            Tok::Num(v) => Ok(IntPoly::constant(v)),
            Tok::X => Ok(IntPoly::x()),
            Tok::Y => Ok(IntPoly::y()),
            Tok::LParen => {
                let e = self.expr()?;
                let (l2, c2) = self.here();
                match self.bump() {
                    Tok::RParen => Ok(e),
                    _ => Err(parse_err(l2, c2, "expected ')'")),
                }
            }
            Tok::End => Err(parse_err(l, c, "unexpected end of input")),
            t => Err(parse_err(l, c, format!("unexpected {t:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomials over Z/p^αZ

/// A polynomial in `x, y` over Z/p^αZ; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BivarPoly {
    modulus: Modulus,
    terms: BTreeMap<(u32, u32), u64>,
}

impl BivarPoly {
    pub fn zero(modulus: Modulus) -> Self {
        BivarPoly { modulus, terms: BTreeMap::new() }
    }

    pub fn constant(modulus: Modulus, c: u64) -> Self {
        BivarPoly::from_terms(modulus, [(0, 0, c)])
    }

    pub fn from_terms(modulus: Modulus, terms: impl IntoIterator<Item = (u32, u32, u64)>) -> Self {
        let mut p = BivarPoly::zero(modulus);
        for (i, j, c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: u64) {
        let m = self.modulus;
        let c = m.reduce(c);
        if c == 0 {
            return;
        }
        let e = self.terms.entry((i, j)).or_insert(0);
        *e = m.add(*e, c);
        if *e == 0 {
            self.terms.remove(&(i, j));
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn coeff(&self, i: u32, j: u32) -> u64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        self.terms.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn deg_x(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn deg_y(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    fn same_ring(&self, o: &BivarPoly) {
        assert_eq!(self.modulus, o.modulus, "polynomials over different rings");
    }

    pub fn add(&self, o: &BivarPoly) -> BivarPoly {
        self.same_ring(o);
        let mut r = self.clone();
        for (i, j, c) in o.terms() {
            r.add_term(i, j, c);
        }
        r
    }

    pub fn scale(&self, c: u64) -> BivarPoly {
        let m = self.modulus;
        BivarPoly::from_terms(m, self.terms().map(|(i, j, v)| (i, j, m.mul(v, c))))
    }

    pub fn mul(&self, o: &BivarPoly) -> BivarPoly {
        self.same_ring(o);
        let m = self.modulus;
        let mut r = BivarPoly::zero(m);
        for (i, j, a) in self.terms() {
            for (k, l, b) in o.terms() {
                r.add_term(i + k, j + l, m.mul(a, b));
            }
        }
        r
    }

    /// Binary exponentiation.
    pub fn pow(&self, mut e: u64) -> BivarPoly {
        let mut base = self.clone();
        let mut acc = BivarPoly::constant(self.modulus, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// The Cartier operator `Λ_{r,s}`: keeps exponents `≡ (r, s) mod p` and divides them by `p`.
    pub fn cartier(&self, r: u32, s: u32) -> BivarPoly {
        let p = self.modulus.p() as u32;
        assert!(r < p && s < p, "digit out of range");
        BivarPoly {
            modulus: self.modulus,
            terms: self
                .terms()
                .filter(|&(i, j, _)| i % p == r && j % p == s)
                .map(|(i, j, c)| ((i / p, j / p), c))
                .collect(),
        }
    }

    /// `S(x^p, y^p)`.
    pub fn frobenius_inflate(&self) -> BivarPoly {
        let p = self.modulus.p() as u32;
        BivarPoly { modulus: self.modulus, terms: self.terms().map(|(i, j, c)| ((i * p, j * p), c)).collect() }
    }

    #[cfg(test)]
    fn shift(&self, di: u32, dj: u32) -> BivarPoly {
        BivarPoly { modulus: self.modulus, terms: self.terms().map(|(i, j, c)| ((i + di, j + dj), c)).collect() }
    }
}

/// Serializes as a list of `[i, j, value]` triples in `(i, j)` order.
impl Serialize for BivarPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (i, j, c) in self.terms() {
            seq.serialize_element(&[i as u64, j as u64, c])?;
        }
        seq.end()
    }
}

/// `P / Q` with integer coefficients; reduced modulo p^α on use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalBivar {
    pub numerator: IntPoly,
    pub denominator: IntPoly,
}

impl RationalBivar {
    pub fn new(numerator: IntPoly, denominator: IntPoly) -> Result<Self> {
        if denominator.coeff(0, 0) == 0 {
            return Err(Error::InvalidInput("denominator vanishes at the origin".into()));
        }
        Ok(RationalBivar { numerator, denominator })
    }

    /// Checks that `Q(0,0)` is a unit modulo `p`.
    pub fn check_unit(&self, p: u64) -> Result<()> {
        check_prime(p)?;
        if self.denominator.coeff(0, 0).rem_euclid(p as i128) == 0 {
            return Err(Error::InvalidInput(format!("denominator constant term is not a unit modulo {p}")));
        }
        Ok(())
    }
}

impl fmt::Display for RationalBivar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.numerator, self.denominator)
    }
}

// ---------------------------------------------------------------------------
// Furstenberg embedding

/// Result of [`furstenberg`]: `Diag(rational)(n + shift) = [xⁿ] f`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Embedding {
    pub rational: RationalBivar,
    pub shift: u64,
    /// Annihilator of `g = x·f` in the variables `(x, g)`, written with `y` for `g`.
    pub shifted_annihilator: IntPoly,
}

/// With `g = x·f`: substitute `y ↦ g/x` into `P`, clear powers of `x`.
pub fn shifted_annihilator(pann: &IntPoly) -> Result<IntPoly> {
    if pann.is_zero() {
        return Err(Error::InvalidInput("zero annihilator".into()));
    }
    let d = pann.deg_y();
    // x^d · P(x, g/x): term c x^i y^j becomes c x^(i + d − j) g^j.
    let raised: Vec<_> = pann.terms().map(|((i, j), c)| ((i + d - j, j), c)).collect();
    let low = raised.iter().map(|&((i, _), _)| i).min().unwrap_or(0);
    IntPoly::from_terms(raised.into_iter().map(|((i, j), c)| ((i - low, j), c)))
}

/// Realizes the power-series root `f` of `P(x, f) = 0` as a diagonal:
/// `G = y · P̃_g(xy, y) / (P̃(xy, y) / y)` with `Diag(G)(n + 1) = [xⁿ] f`.
pub fn furstenberg(pann: &IntPoly, p: u64) -> Result<Embedding> {
    check_prime(p)?;
    let pt = shifted_annihilator(pann)?;
    if pt.coeff(0, 0) != 0 {
        return Err(Error::NotSupported(format!("shifted annihilator {pt} does not vanish at the origin")));
    }
    let dg = pt.dy()?;
    if dg.coeff(0, 0).rem_euclid(p as i128) == 0 {
        return Err(Error::NotSupported(format!("derivative of {pt} at the origin is not a unit modulo {p}")));
    }
    let numerator = IntPoly::y().mul(&dg.subst_xy_y())?;
    let denominator = pt
        .subst_xy_y()
        .div_y_pow(1)
        .ok_or_else(|| Error::Internal(format!("{pt} at (xy, y) is not divisible by y")))?;
    Ok(Embedding { rational: RationalBivar::new(numerator, denominator)?, shift: 1, shifted_annihilator: pt })
}

// ---------------------------------------------------------------------------
// Diagonal automaton

type Coeffs = Rc<[(u32, u32, u64)]>;

/// Shared data for the transition map `S ↦ Λ_{r,r}(S · Qt)`.
struct Engine {
    m: Modulus,
    p: u32,
    /// Terms of `Qt` bucketed by `(k mod p, l mod p)`.
    classes: Vec<Vec<(u32, u32, u64)>>,
    qt_deg: u32,
    bound: u32,
    buf: Vec<u64>,
}

impl Engine {
    fn step(&mut self, s: &[(u32, u32, u64)], r: u32) -> Result<Vec<(u32, u32, u64)>> {
        let p = self.p;
        let m = self.m.modulus();
        let width = ((self.bound + self.qt_deg) / p + 1) as usize;
        let cells = width * width;
        if self.buf.len() < cells {
            self.buf.resize(cells, 0);
        }
        let buf = &mut self.buf[..cells];
        buf.fill(0);
        let max_class = self.classes.iter().map(Vec::len).max().unwrap_or(0) as u128;
        let worst = (m as u128 - 1).pow(2) * max_class * s.len() as u128;
        let lazy = worst < u64::MAX as u128;
        for &(i, j, c) in s {
            let kc = (r + p - i % p) % p;
            let lc = (r + p - j % p) % p;
            for &(k, l, c2) in &self.classes[(kc * p + lc) as usize] {
                let a = ((i + k - r) / p) as usize;
                let b = ((j + l - r) / p) as usize;
                let cell = &mut buf[a * width + b];
                if lazy {
                    *cell += c * c2;
                } else {
                    *cell = ((*cell as u128 + c as u128 * c2 as u128) % m as u128) as u64;
                }
            }
        }
        let mut out = Vec::new();
        for a in 0..width {
            for b in 0..width {
                let v = buf[a * width + b] % m;
                if v != 0 {
                    if a as u32 > self.bound || b as u32 > self.bound {
                        return Err(Error::Internal(format!(
                            "state degree ({a}, {b}) exceeds the bound {}",
                            self.bound
                        )));
                    }
                    out.push((a as u32, b as u32, v));
                }
            }
        }
        Ok(out)
    }
}

/// LSD automaton for `n ↦ [xⁿyⁿ] P/Q mod p^α`, validated against the series
/// expansion on the first [`VALIDATION_WINDOW`] terms.
pub fn diagonal_automaton(f: &RationalBivar, p: u64, alpha: u32) -> Result<Dfao> {
    let lsd = diagonal_automaton_unchecked(f, p, alpha)?;
    if !lsd.is_zero_invariant() {
        return Err(Error::Internal("diagonal automaton is not trailing-zero invariant".into()));
    }
    let expected = oracles::diagonal_series(f, VALIDATION_WINDOW, p, alpha)?;
    validate(&lsd, alpha, expected.iter().map(|r| r.value()))?;
    Ok(lsd)
}

/// Compares `m` with `expected` term by term.
pub(crate) fn validate(m: &Dfao, level: u32, expected: impl IntoIterator<Item = u64>) -> Result<()> {
    for (n, want) in expected.into_iter().enumerate() {
        let got = m.eval(n as u64);
        let ok = got.as_residue().is_some_and(|r| r.value() == want);
        if !ok {
            return Err(Error::Construction {
                level,
                index: n as u64,
                expected: want.to_string(),
                found: got.to_string(),
            });
        }
    }
    Ok(())
}

/// The construction without the oracle comparison.
pub fn diagonal_automaton_unchecked(f: &RationalBivar, p: u64, alpha: u32) -> Result<Dfao> {
    f.check_unit(p)?;
    let m = Modulus::new(p, alpha)?;
    if alpha == 0 {
        return Dfao::constant(p, Reading::Lsd, Output::Residue(m.residue(0)));
    }
    let e = m.modulus() / p;
    let q = f.denominator.reduce(&m);
    let pn = f.numerator.reduce(&m);
    let qt = q.pow(e * (p - 1));
    let s0 = pn.mul(&q.pow(e - 1));
    let out_scale = m.inv(m.pow(q.coeff(0, 0), e))?;

    let d = q.deg_x().max(q.deg_y()) as u64;
    let s0_deg = s0.deg_x().max(s0.deg_y()) as u64;
    let bound = s0_deg.max(d * e) + d * e;
    let qt_deg = qt.deg_x().max(qt.deg_y()) as u64;
    if bound + qt_deg > u32::MAX as u64 / 4 {
        return Err(Error::Budget(format!("state degree bound {bound} too large")));
    }
    let pu = p as u32;
    let mut classes = vec![Vec::new(); (pu * pu) as usize];
    for (k, l, c) in qt.terms() {
        classes[((k % pu) * pu + l % pu) as usize].push((k, l, c));
    }
    let mut engine = Engine { m, p: pu, classes, qt_deg: qt_deg as u32, bound: bound as u32, buf: Vec::new() };

    let start: Coeffs = s0.terms().collect::<Vec<_>>().into();
    let mut index: HashMap<Coeffs, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut stored = states[0].len();
    let mut delta = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        for r in 0..pu {
            let next: Coeffs = engine.step(&s, r)?.into();
            let fresh = states.len();
            let id = *index.entry(next.clone()).or_insert(fresh);
            if id == fresh {
                stored += next.len();
                if fresh >= STATE_BUDGET || stored > COEFFICIENT_BUDGET {
                    return Err(Error::Budget(format!(
                        "diagonal automaton exceeded {fresh} states / {stored} coefficients"
                    )));
                }
                states.push(next);
            }
            delta.push(id);
        }
        i += 1;
    }
    let outputs = states
        .iter()
        .map(|s| {
            let c = s.first().filter(|t| t.0 == 0 && t.1 == 0).map_or(0, |t| t.2);
            Output::Residue(m.residue(m.mul(c, out_scale)))
        })
        .collect();
    Ok(Dfao::from_parts(p, Reading::Lsd, 0, delta, outputs))
}

/// LSD automaton for `n ↦ eval(m, n + c)`: the product of `m` with the base-p
/// `+c` carry transducer, pruned and minimized.
pub fn shift_compose(m: &Dfao, c: u64) -> Result<Dfao> {
    if m.reading() != Reading::Lsd {
        return Err(Error::InvalidParameter("shift_compose needs an LSD automaton".into()));
    }
    let p = m.p();
    if c as u128 > (p as u128).pow(8) {
        return Err(Error::InvalidParameter(format!("shift {c} exceeds p^8")));
    }
    if !m.is_zero_invariant() {
        return Err(Error::Normalization("shift_compose needs a zero-invariant automaton".into()));
    }
    let mut index: HashMap<(usize, u64), usize> = HashMap::from([((m.initial(), c), 0)]);
    let mut states = vec![(m.initial(), c)];
    let mut delta = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (q, carry) = states[i];
        for d in 0..p {
            let t = d + carry;
            let next = (m.next(q, (t % p) as u32), t / p);
            let fresh = states.len();
            let id = *index.entry(next).or_insert(fresh);
            if id == fresh {
                states.push(next);
            }
            delta.push(id);
        }
        i += 1;
    }
    let outputs = states.iter().map(|&(q, carry)| *m.output(m.run(q, &digits_lsd_unchecked(carry, p)))).collect();
    Ok(Dfao::from_parts(p, Reading::Lsd, 0, delta, outputs).minimize().0)
}

/// Minimal direct-reading automaton for the root `f` of `P(x, f) = 0` modulo
/// `p^α`: embedding, diagonal automaton, index shift, reversal, minimization,
/// then comparison with the series oracle.
pub fn algebraic_automaton(pann: &IntPoly, p: u64, alpha: u32) -> Result<Dfao> {
    let emb = furstenberg(pann, p)?;
    let lsd = diagonal_automaton_unchecked(&emb.rational, p, alpha)?;
    if !lsd.is_zero_invariant() {
        return Err(Error::Internal("diagonal automaton is not trailing-zero invariant".into()));
    }
    let shifted = shift_compose(&lsd, emb.shift)?;
    let msd = shifted.reverse_reading()?.minimize().0;
    let expected = oracles::algebraic_series(pann, VALIDATION_WINDOW, p, alpha)?;
    validate(&msd, alpha, expected.iter().map(|r| r.value()))?;
    Ok(msd)
}
