//! Exact arithmetic in Z/p^αZ and base-p digit strings.
//!
//! Every modulus is a prime power `p^α` that fits in 62 bits, so residues are
//! single machine words and products are formed in `u128`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible modulus.
pub const MAX_MODULUS: u64 = 1 << 62;

/// Primes are checked by trial division, so they are kept below this bound.
pub const MAX_PRIME: u64 = 1 << 20;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if p >= MAX_PRIME || !is_prime(p) {
        return Err(Error::InvalidParameter(format!("{p} is not a supported prime")));
    }
    Ok(())
}

/// The ring Z/p^αZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Modulus {
    p: u64,
    alpha: u32,
    #[serde(skip)]
    m: u64,
}

impl Modulus {
    pub fn new(p: u64, alpha: u32) -> Result<Self> {
        check_prime(p)?;
        let mut m: u64 = 1;
        for _ in 0..alpha {
            m = m
                .checked_mul(p)
                .filter(|&m| m <= MAX_MODULUS)
                .ok_or_else(|| Error::Budget(format!("modulus {p}^{alpha} exceeds 2^62")))?;
        }
        Ok(Modulus { p, alpha, m })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    /// `p^α`.
    #[inline]
    pub fn modulus(&self) -> u64 {
        self.m
    }

    /// The ring one precision lower, or higher.
    pub fn with_alpha(&self, alpha: u32) -> Result<Self> {
        Modulus::new(self.p, alpha)
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v % self.m
    }

    pub fn reduce_i64(&self, v: i64) -> u64 {
        (v as i128).rem_euclid(self.m as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.m - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.m as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = self.reduce(1);
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            exp >>= 1;
            if exp > 0 {
                base = self.mul(base, base);
            }
        }
        acc
    }

    pub fn is_unit(&self, a: u64) -> bool {
        self.alpha == 0 || !a.is_multiple_of(self.p)
    }

    /// Inverse of a unit, by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if !self.is_unit(a) {
            return Err(Error::NotInvertible(format!("{a} mod {}", self.m)));
        }
        if self.m == 1 {
            return Ok(0);
        }
        let (mut r0, mut r1) = (self.m as i128, (a % self.m) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Ok(t0.rem_euclid(self.m as i128) as u64)
    }

    pub fn residue(&self, value: u64) -> Residue {
        Residue { p: self.p, alpha: self.alpha, value: self.reduce(value) }
    }
}

impl<'de> Deserialize<'de> for Modulus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: u64,
            alpha: u32,
        }
        let raw = Raw::deserialize(d)?;
        Modulus::new(raw.p, raw.alpha).map_err(serde::de::Error::custom)
    }
}

/// An element of Z/p^αZ. Serializes as `{"p":2,"alpha":4,"value":9}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Residue {
    p: u64,
    alpha: u32,
    value: u64,
}

impl<'de> Deserialize<'de> for Residue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: u64,
            alpha: u32,
            value: u64,
        }
        let raw = Raw::deserialize(d)?;
        Residue::new(raw.p, raw.alpha, raw.value).map_err(serde::de::Error::custom)
    }
}

impl Residue {
    /// Checked constructor: `value` must already lie in `[0, p^α)`.
    pub fn new(p: u64, alpha: u32, value: u64) -> Result<Self> {
        let m = Modulus::new(p, alpha)?;
        if value >= m.modulus() {
            return Err(Error::InvalidParameter(format!("{value} is not reduced modulo {p}^{alpha}")));
        }
        Ok(Residue { p, alpha, value })
    }

    pub fn from_i64(value: i64, m: Modulus) -> Self {
        m.residue(m.reduce_i64(value))
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn modulus(&self) -> Modulus {
        // (p, α) were validated when the residue was built.
        Modulus::new(self.p, self.alpha).expect("validated modulus")
    }

    /// Reduction to Z/p^βZ for `β ≤ α`.
    pub fn project(&self, beta: u32) -> Result<Residue> {
        if beta > self.alpha {
            return Err(Error::Precision(format!(
                "cannot project a residue mod {}^{} to precision {beta}",
                self.p, self.alpha
            )));
        }
        Ok(Modulus::new(self.p, beta)?.residue(self.value))
    }

    pub fn inv_unit(&self) -> Result<Residue> {
        let m = self.modulus();
        Ok(m.residue(m.inv(self.value)?))
    }

    fn same_ring(&self, other: &Residue) {
        assert!(
            self.p == other.p && self.alpha == other.alpha,
            "residues from different rings: {self:?} and {other:?}"
        );
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}^{}", self.value, self.p, self.alpha)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        self.same_ring(&rhs);
        let m = self.modulus();
        m.residue(m.add(self.value, rhs.value))
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        self.same_ring(&rhs);
        let m = self.modulus();
        m.residue(m.sub(self.value, rhs.value))
    }
}

impl Mul for Residue {
    type Output = Residue;
    fn mul(self, rhs: Residue) -> Residue {
        self.same_ring(&rhs);
        let m = self.modulus();
        m.residue(m.mul(self.value, rhs.value))
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        let m = self.modulus();
        m.residue(m.neg(self.value))
    }
}

/// Base-p representation, most significant digit first, without leading zeros.
/// Zero is the empty string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitString {
    p: u64,
    digits: Vec<u32>,
}

impl DigitString {
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn value(&self) -> u128 {
        self.digits.iter().fold(0u128, |acc, &d| acc * self.p as u128 + d as u128)
    }

    /// Left-pads with zeros to at least `width` digits.
    pub fn padded(&self, width: usize) -> Vec<u32> {
        let mut out = vec![0; width.saturating_sub(self.digits.len())];
        out.extend_from_slice(&self.digits);
        out
    }
}

pub fn digits_msd(n: u64, p: u64) -> Result<DigitString> {
    check_prime(p)?;
    Ok(DigitString { p, digits: digits_msd_unchecked(n, p) })
}

pub(crate) fn digits_msd_unchecked(mut n: u64, p: u64) -> Vec<u32> {
    let mut digits = Vec::new();
    while n > 0 {
        digits.push((n % p) as u32);
        n /= p;
    }
    digits.reverse();
    digits
}

/// Least-significant-first digits of `n`, empty for zero.
pub(crate) fn digits_lsd_unchecked(n: u64, p: u64) -> Vec<u32> {
    let mut d = digits_msd_unchecked(n, p);
    d.reverse();
    d
}

/// A p-adic integer known to a fixed number of digits, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncatedPadic {
    p: u64,
    digits: Vec<u32>,
}

impl TruncatedPadic {
    pub fn from_residue(r: &Residue) -> Self {
        let mut digits = Vec::with_capacity(r.alpha() as usize);
        let mut v = r.value();
        for _ in 0..r.alpha() {
            digits.push((v % r.p()) as u32);
            v /= r.p();
        }
        TruncatedPadic { p: r.p(), digits }
    }

    pub fn from_digits(p: u64, digits: Vec<u32>) -> Result<Self> {
        check_prime(p)?;
        if let Some(d) = digits.iter().find(|&&d| d as u64 >= p) {
            return Err(Error::InvalidParameter(format!("digit {d} out of range for p = {p}")));
        }
        Ok(TruncatedPadic { p, digits })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.digits.len() as u32
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn project(&self, beta: u32) -> Result<TruncatedPadic> {
        if beta > self.precision() {
            return Err(Error::Precision(format!("cannot project precision {} to {beta}", self.precision())));
        }
        Ok(TruncatedPadic { p: self.p, digits: self.digits[..beta as usize].to_vec() })
    }

    pub fn to_residue(&self) -> Result<Residue> {
        let m = Modulus::new(self.p, self.precision())?;
        let v = self.digits.iter().rev().fold(0u64, |acc, &d| acc * self.p + d as u64);
        Ok(m.residue(v))
    }
}

impl fmt::Display for TruncatedPadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "...")?;
        for d in self.digits.iter().rev() {
            if self.p <= 10 {
                write!(f, "{d}")?;
            } else {
                write!(f, "[{d}]")?;
            }
        }
        write!(f, "_{}", self.p)
    }
}
