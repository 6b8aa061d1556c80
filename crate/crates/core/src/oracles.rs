//! Brute-force sequence generators used to validate every automaton.
//!
//! None of these share code with the automaton constructions: Catalan numbers
//! come from the convolution recurrence, diagonals from a direct double-series
//! expansion, algebraic roots from coefficient-by-coefficient solving.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::dfao::STATE_BUDGET;
use crate::error::{Error, Result};
use crate::poly::{IntPoly, RationalBivar};
use crate::residue::{Modulus, Residue};

/// Largest prefix the quadratic Catalan convolution will compute.
pub const CATALAN_BUDGET: usize = 1 << 15;

/// Largest `N` for the double-series diagonal.
pub const DIAGONAL_BUDGET: usize = 1 << 12;

/// Largest index accepted by [`catalan_at`].
pub const CATALAN_INDEX_BUDGET: u64 = 1 << 26;

/// `C(0), …, C(N−1)` modulo `p^α` by `C(n+1) = Σ C(i) C(n−i)`.
pub fn catalan_mod(n: usize, p: u64, alpha: u32) -> Result<Vec<Residue>> {
    if n > CATALAN_BUDGET {
        return Err(Error::Budget(format!("Catalan oracle limited to {CATALAN_BUDGET} terms")));
    }
    let m = Modulus::new(p, alpha)?;
    let mut c: Vec<u64> = Vec::with_capacity(n);
    if n > 0 {
        c.push(m.reduce(1));
    }
    while c.len() < n {
        let k = c.len();
        let mut acc = 0u64;
        for i in 0..k {
            acc = m.add(acc, m.mul(c[i], c[k - 1 - i]));
        }
        c.push(acc);
    }
    Ok(c.into_iter().map(|v| m.residue(v)).collect())
}

fn check_linrec(coeffs: &[i64], init: &[i64]) -> Result<()> {
    if coeffs.is_empty() || coeffs.len() != init.len() {
        return Err(Error::InvalidInput(format!(
            "recurrence of order {} needs as many initial values, got {}",
            coeffs.len(),
            init.len()
        )));
    }
    Ok(())
}

/// `a(n) = Σ coeffs[i−1]·a(n−i)` with `a(0..k) = init`, modulo `p^α`.
pub fn linrec_mod(coeffs: &[i64], init: &[i64], n: usize, p: u64, alpha: u32) -> Result<Vec<Residue>> {
    check_linrec(coeffs, init)?;
    let m = Modulus::new(p, alpha)?;
    let cs: Vec<u64> = coeffs.iter().map(|&c| m.reduce_i64(c)).collect();
    let mut a: Vec<u64> = init.iter().map(|&v| m.reduce_i64(v)).collect();
    while a.len() < n {
        let k = a.len();
        let v = cs.iter().enumerate().fold(0, |acc, (i, &c)| m.add(acc, m.mul(c, a[k - 1 - i])));
        a.push(v);
    }
    a.truncate(n);
    Ok(a.into_iter().map(|v| m.residue(v)).collect())
}

/// `(preperiod, period)` of a linear recurrence modulo `p^α`, found by
/// detecting the first repeated window of `k` consecutive terms.
pub fn linrec_period(coeffs: &[i64], init: &[i64], p: u64, alpha: u32) -> Result<(usize, usize)> {
    check_linrec(coeffs, init)?;
    let m = Modulus::new(p, alpha)?;
    let cs: Vec<u64> = coeffs.iter().map(|&c| m.reduce_i64(c)).collect();
    let mut window: Vec<u64> = init.iter().map(|&v| m.reduce_i64(v)).collect();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for t in 0.. {
        if let Some(&s) = seen.get(&window) {
            return Ok((s, t - s));
        }
        if t >= STATE_BUDGET {
            return Err(Error::Budget(format!("no period found within {STATE_BUDGET} terms")));
        }
        seen.insert(window.clone(), t);
        let k = window.len();
        let v = cs.iter().enumerate().fold(0, |acc, (i, &c)| m.add(acc, m.mul(c, window[k - 1 - i])));
        window.remove(0);
        window.push(v);
    }
    unreachable!()
}

fn mat_mul(a: &[Vec<BigUint>], b: &[Vec<BigUint>], modulus: &BigUint) -> Vec<Vec<BigUint>> {
    let k = a.len();
    let mut out = vec![vec![BigUint::ZERO; k]; k];
    for i in 0..k {
        for l in 0..k {
            if a[i][l] == BigUint::ZERO {
                continue;
            }
            for j in 0..k {
                out[i][j] = (&out[i][j] + &a[i][l] * &b[l][j]) % modulus;
            }
        }
    }
    out
}

/// A single term `a(n) mod modulus` of a linear recurrence, by powering the
/// companion matrix.
pub fn linrec_at(coeffs: &[i64], init: &[i64], n: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    check_linrec(coeffs, init)?;
    if *modulus == BigUint::ZERO {
        return Err(Error::InvalidParameter("zero modulus".into()));
    }
    let reduce = |v: i64| -> BigUint {
        let mag = BigUint::from(v.unsigned_abs()) % modulus;
        if v < 0 && mag != BigUint::ZERO {
            modulus - mag
        } else {
            mag
        }
    };
    let k = coeffs.len();
    if let Ok(i) = u64::try_from(n) {
        if i < k as u64 {
            return Ok(reduce(init[i as usize]));
        }
    }
    // Row vector (a(t+k−1), …, a(t)) times the companion matrix steps t by one.
    let mut c = vec![vec![BigUint::ZERO; k]; k];
    for (i, &v) in coeffs.iter().enumerate() {
        c[0][i] = reduce(v);
    }
    for i in 1..k {
        c[i][i - 1] = BigUint::from(1u32);
    }
    let mut e = n - BigUint::from(k as u64 - 1);
    let mut acc: Vec<Vec<BigUint>> =
        (0..k).map(|i| (0..k).map(|j| BigUint::from(u32::from(i == j))).collect()).collect();
    let mut base = c;
    while e > BigUint::ZERO {
        if e.bit(0) {
            acc = mat_mul(&acc, &base, modulus);
        }
        e >>= 1;
        if e > BigUint::ZERO {
            base = mat_mul(&base, &base, modulus);
        }
    }
    // acc · (a(k−1), …, a(0))ᵀ gives (a(n), …); take the first entry.
    let state: Vec<BigUint> = (0..k).map(|i| reduce(init[k - 1 - i])).collect();
    let mut out = BigUint::ZERO;
    for (j, s) in state.iter().enumerate() {
        out = (out + &acc[0][j] * s) % modulus;
    }
    Ok(out)
}

/// `[xⁿyⁿ] P/Q mod p^α` for `n < N`, by solving `Q·F = P` coefficient by
/// coefficient over the square `[0, N)²`.
pub fn diagonal_series(f: &RationalBivar, n: usize, p: u64, alpha: u32) -> Result<Vec<Residue>> {
    if n > DIAGONAL_BUDGET {
        return Err(Error::Budget(format!("diagonal oracle limited to {DIAGONAL_BUDGET} terms")));
    }
    f.check_unit(p)?;
    let m = Modulus::new(p, alpha)?;
    let num = f.numerator.reduce(&m);
    let den = f.denominator.reduce(&m);
    let inv0 = m.inv(den.coeff(0, 0))?;
    let q: Vec<(usize, usize, u64)> =
        den.terms().filter(|&(i, j, _)| (i, j) != (0, 0)).map(|(i, j, c)| (i as usize, j as usize, m.neg(c))).collect();
    let depth = den.deg_x() as usize + 1;
    // rows[i % depth] holds row i of F.
    let mut rows = vec![vec![0u64; n]; depth];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = num.coeff(i as u32, j as u32);
            for &(k, l, c) in &q {
                if k <= i && l <= j {
                    acc = m.add(acc, m.mul(c, rows[(i - k) % depth][j - l]));
                }
            }
            rows[i % depth][j] = m.mul(acc, inv0);
        }
        out.push(m.residue(rows[i % depth][i]));
    }
    Ok(out)
}

/// The first `N` coefficients modulo `p^α` of the power series `f` with
/// `P(x, f) = 0`, via `g = x·f`: each `g_n` is the only unknown in
/// `[xⁿ] P̃(x, g) = 0` once lower coefficients are known.
pub fn algebraic_series(pann: &IntPoly, n: usize, p: u64, alpha: u32) -> Result<Vec<Residue>> {
    if n > CATALAN_BUDGET {
        return Err(Error::Budget(format!("algebraic oracle limited to {CATALAN_BUDGET} terms")));
    }
    let m = Modulus::new(p, alpha)?;
    // Coefficients of P̃(x, g) = x^d P(x, g/x) / x^low, grouped by power of g.
    let d = pann.deg_y() as i64;
    let raw: Vec<(i64, usize, i128)> =
        pann.terms().map(|((i, j), c)| (i as i64 + d - j as i64, j as usize, c)).collect();
    let low = raw.iter().map(|t| t.0).min().unwrap_or(0);
    let deg_g = raw.iter().map(|t| t.1).max().unwrap_or(0);
    let mut by_power: Vec<Vec<(usize, u64)>> = vec![Vec::new(); deg_g + 1];
    let mut c01 = 0u64;
    for (i, j, c) in raw {
        let i = (i - low) as usize;
        let c = c.rem_euclid(m.modulus() as i128) as u64;
        if c == 0 {
            continue;
        }
        if (i, j) == (0, 0) {
            return Err(Error::NotSupported("no power-series root through the origin".into()));
        }
        if (i, j) == (0, 1) {
            c01 = c;
        } else {
            by_power[j].push((i, c));
        }
    }
    if !m.is_unit(c01) && alpha > 0 {
        return Err(Error::NotSupported("root is not simple at the origin".into()));
    }
    let inv = if alpha == 0 { 0 } else { m.inv(c01)? };
    // pw[j][t] = [x^t] g^j.
    let len = n + 2;
    let mut pw = vec![vec![0u64; len]; deg_g + 1];
    pw[0][0] = m.reduce(1);
    for t in 1..len {
        for j in 2..=deg_g {
            let mut acc = 0;
            for k in 1..t {
                acc = m.add(acc, m.mul(pw[1][k], pw[j - 1][t - k]));
            }
            pw[j][t] = acc;
        }
        let mut sum = 0;
        for (j, terms) in by_power.iter().enumerate() {
            for &(i, c) in terms {
                if i <= t {
                    sum = m.add(sum, m.mul(c, pw[j][t - i]));
                }
            }
        }
        pw[1][t] = m.neg(m.mul(sum, inv));
    }
    Ok((0..n).map(|t| m.residue(pw[1][t + 1])).collect())
}

fn legendre(mut n: u64, q: u64) -> u64 {
    let mut e = 0;
    while n > 0 {
        n /= q;
        e += n;
    }
    e
}

/// `C(n) mod p^width` for a single, possibly large, index, from the prime
/// factorization of `(2n)! / (n! (n+1)!)`.
pub fn catalan_at(n: u64, p: u64, width: u32) -> Result<BigUint> {
    if n > CATALAN_INDEX_BUDGET {
        return Err(Error::Budget(format!("Catalan index limited to {CATALAN_INDEX_BUDGET}")));
    }
    crate::residue::check_prime(p)?;
    let modulus = BigUint::from(p).pow(width);
    let limit = (2 * n) as usize;
    let mut composite = vec![false; limit + 1];
    let mut acc = BigUint::from(1u32) % &modulus;
    for q in 2..=limit {
        if composite[q] {
            continue;
        }
        let mut k = q * q;
        while k <= limit {
            composite[k] = true;
            k += q;
        }
        let q = q as u64;
        let e = legendre(2 * n, q) - legendre(n, q) - legendre(n + 1, q);
        if e > 0 {
            acc = acc * BigUint::from(q).modpow(&BigUint::from(e), &modulus) % &modulus;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(v: &[Residue]) -> Vec<u64> {
        v.iter().map(Residue::value).collect()
    }

    #[test]
    fn catalan_prefixes() {
        assert_eq!(vals(&catalan_mod(8, 2, 40).unwrap()), [1, 1, 2, 5, 14, 42, 132, 429]);
        assert_eq!(vals(&catalan_mod(8, 2, 2).unwrap()), [1, 1, 2, 1, 2, 2, 0, 1]);
        assert_eq!(vals(&catalan_mod(1, 3, 1).unwrap()), [1]);
        assert!(catalan_mod(CATALAN_BUDGET + 1, 2, 1).is_err());
    }

    #[test]
    fn catalan_single_terms_agree() {
        let seq = catalan_mod(300, 2, 20).unwrap();
        for (n, r) in seq.iter().enumerate() {
            assert_eq!(catalan_at(n as u64, 2, 20).unwrap(), BigUint::from(r.value()));
        }
        let seq3 = catalan_mod(200, 3, 7).unwrap();
        for (n, r) in seq3.iter().enumerate() {
            assert_eq!(catalan_at(n as u64, 3, 7).unwrap(), BigUint::from(r.value()));
        }
    }

    #[test]
    fn fibonacci() {
        let fib = linrec_mod(&[1, 1], &[0, 1], 8, 2, 40).unwrap();
        assert_eq!(vals(&fib), [0, 1, 1, 2, 3, 5, 8, 13]);
        assert_eq!(linrec_period(&[1, 1], &[0, 1], 2, 1).unwrap(), (0, 3));
        assert_eq!(linrec_period(&[1, 1], &[0, 1], 2, 12).unwrap(), (0, 6144));
        assert_eq!(vals(&linrec_mod(&[1], &[7], 5, 3, 2).unwrap()), [7; 5]);
        assert!(linrec_mod(&[1, 1], &[0], 5, 2, 2).is_err());
    }

    #[test]
    fn linrec_single_terms_agree() {
        let fib = linrec_mod(&[1, 1], &[0, 1], 500, 2, 30).unwrap();
        let md = BigUint::from(1u64 << 30);
        for (n, r) in fib.iter().enumerate() {
            assert_eq!(linrec_at(&[1, 1], &[0, 1], &BigUint::from(n), &md).unwrap(), BigUint::from(r.value()));
        }
        let tri = linrec_mod(&[2, -1, 3], &[4, -5, 6], 100, 5, 6).unwrap();
        let md = BigUint::from(15625u32);
        for (n, r) in tri.iter().enumerate() {
            assert_eq!(linrec_at(&[2, -1, 3], &[4, -5, 6], &BigUint::from(n), &md).unwrap(), BigUint::from(r.value()));
        }
    }

    #[test]
    fn diagonals() {
        let f = RationalBivar::new(IntPoly::constant(1), IntPoly::parse("1 - x - y").unwrap()).unwrap();
        assert_eq!(vals(&diagonal_series(&f, 6, 2, 20).unwrap()), [1, 2, 6, 20, 70, 252]);
        let one = RationalBivar::new(IntPoly::constant(1), IntPoly::constant(1)).unwrap();
        assert_eq!(vals(&diagonal_series(&one, 5, 3, 2).unwrap()), [1, 0, 0, 0, 0]);
        let g =
            RationalBivar::new(IntPoly::parse("y*(2y - 1)").unwrap(), IntPoly::parse("x + y - 1").unwrap()).unwrap();
        assert_eq!(vals(&diagonal_series(&g, 6, 2, 20).unwrap()), [0, 1, 1, 2, 5, 14]);
        let bad = RationalBivar::new(IntPoly::constant(1), IntPoly::parse("3 - x").unwrap()).unwrap();
        assert!(diagonal_series(&bad, 4, 3, 1).is_err());
    }

    #[test]
    fn algebraic_roots() {
        let cat = IntPoly::parse("x*y^2 - y + 1").unwrap();
        let a = algebraic_series(&cat, 500, 2, 30).unwrap();
        assert_eq!(a, catalan_mod(500, 2, 30).unwrap());
        let geo = IntPoly::parse("(1 - x)*y - x").unwrap();
        assert_eq!(vals(&algebraic_series(&geo, 6, 5, 3).unwrap()), [0, 1, 1, 1, 1, 1]);
        // Motzkin numbers: x^2 y^2 + (x − 1) y + 1 = 0.
        let motz = IntPoly::parse("x^2*y^2 + (x - 1)*y + 1").unwrap();
        assert_eq!(vals(&algebraic_series(&motz, 8, 3, 10).unwrap()), [1, 1, 2, 4, 9, 21, 51, 127]);
    }
}
