//! Limits of `a(k·pⁿ + r)` as `n → ∞`, and digit grids of such subsequences.

use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::dfao::Dfao;
use crate::error::{Error, Result};
use crate::oracles;
use crate::residue::{check_prime, digits_msd_unchecked, Modulus, TruncatedPadic};
use crate::tower::{SequenceSpec, Tower};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LimitResult {
    Limit {
        value: TruncatedPadic,
    },
    /// `values[n mod period]` is the value at `k·pⁿ + r` for all large `n`.
    Cycle {
        period: usize,
        values: Vec<TruncatedPadic>,
    },
}

impl LimitResult {
    pub fn is_limit(&self) -> bool {
        matches!(self, LimitResult::Limit { .. })
    }
}

/// State reached on `(k)_p 0^z (r)_p`.
fn run_kzr(m: &Dfao, k: u64, zeros: u64, r: u64) -> usize {
    let p = m.p();
    let mut s = m.run(m.initial(), &digits_msd_unchecked(k, p));
    for _ in 0..zeros {
        s = m.next(s, 0);
    }
    m.run(s, &digits_msd_unchecked(r, p))
}

/// `a(k·p^e + r)` read off the automaton without forming the index.
pub fn eval_k_pow_r(m: &Dfao, k: u64, e: u64, r: u64) -> Result<u64> {
    let w = digits_msd_unchecked(r, m.p()).len() as u64;
    if e < w {
        return Err(Error::InvalidParameter(format!("p^{e} does not exceed r = {r}")));
    }
    let s = run_kzr(m, k, e - w, r);
    m.output(s)
        .as_residue()
        .map(|r| r.value())
        .ok_or_else(|| Error::InvalidInput("automaton does not output residues".into()))
}

/// Shortest `v` with `vals[n mod v.len()] = a(k·pⁿ + r)` for all large `n`.
fn level_orbit(m: &Dfao, k: u64, r: u64) -> Result<Vec<u64>> {
    let p = m.p();
    let rd = digits_msd_unchecked(r, p);
    let w = rd.len() as i64;
    let start = m.run(m.initial(), &digits_msd_unchecked(k, p));
    let mut first_visit = vec![usize::MAX; m.num_states()];
    let mut orbit = Vec::new();
    let mut s = start;
    while first_visit[s] == usize::MAX {
        first_visit[s] = orbit.len();
        orbit.push(s);
        s = m.next(s, 0);
    }
    let mu = first_visit[s] as i64;
    let cycle = &orbit[mu as usize..];
    let v: Vec<u64> = cycle
        .iter()
        .map(|&c| {
            m.output(m.run(c, &rd))
                .as_residue()
                .map(|r| r.value())
                .ok_or_else(|| Error::InvalidInput("automaton does not output residues".into()))
        })
        .collect::<Result<_>>()?;
    let lambda = v.len();
    let period =
        (1..=lambda).find(|&t| lambda.is_multiple_of(t) && (0..lambda).all(|i| v[i] == v[(i + t) % lambda])).unwrap_or(lambda);
    // With z = n − w zeros the state is cycle[(z − μ) mod λ].
    Ok((0..period as i64).map(|i| v[(i - w - mu).rem_euclid(period as i64) as usize]).collect())
}

/// Limit or eventual cycle of `a(k·pⁿ + r)` at the tower's top precision,
/// checked for coherence against every lower level.
pub fn padic_limit(t: &Tower, k: u64, r: u64) -> Result<LimitResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let p = t.p();
    let top = t.top();
    let orbits = (0..=top).map(|a| level_orbit(t.machine(a)?, k, r)).collect::<Result<Vec<_>>>()?;
    let hi = &orbits[top as usize];
    for (a, lo) in orbits.iter().enumerate() {
        let m = Modulus::new(p, a as u32)?.modulus();
        if hi.len() % lo.len() != 0 || (0..hi.len()).any(|i| hi[i] % m != lo[i % lo.len()]) {
            return Err(Error::Internal(format!("level {a} disagrees with level {top}")));
        }
    }
    let md = Modulus::new(p, top)?;
    let to_padic = |v: u64| TruncatedPadic::from_residue(&md.residue(v));
    Ok(if hi.len() == 1 {
        LimitResult::Limit { value: to_padic(hi[0]) }
    } else {
        LimitResult::Cycle { period: hi.len(), values: hi.iter().map(|&v| to_padic(v)).collect() }
    })
}

pub enum GridSource<'a> {
    Tower(&'a Tower),
    Oracle(&'a SequenceSpec),
}

/// Row `n` holds the base-p digits of `a(k·pⁿ + r) mod p^width`, most
/// significant first, so the least significant digit is at the right edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitGrid {
    pub p: u64,
    pub k: u64,
    pub r: u64,
    pub width: u32,
    pub rows: Vec<Vec<u32>>,
}

impl DigitGrid {
    /// Plain PBM; any non-zero digit is black.
    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.width, self.rows.len());
        for row in &self.rows {
            let line: Vec<&str> = row.iter().map(|&d| if d == 0 { "0" } else { "1" }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            for &d in row {
                let c = std::char::from_digit(d, 36).unwrap_or('?');
                s.push(c);
            }
            s.push('\n');
        }
        s
    }

    /// Column indices (from the right) on which rows `from..` all agree.
    pub fn stable_columns(&self, from: usize) -> usize {
        let rows = &self.rows[from.min(self.rows.len())..];
        let w = self.width as usize;
        (0..w).take_while(|&c| rows.windows(2).all(|pair| pair[0][w - 1 - c] == pair[1][w - 1 - c])).count()
    }
}

fn big_digits(mut v: BigUint, p: u64, width: u32) -> Vec<u32> {
    let pb = BigUint::from(p);
    let mut d = vec![0u32; width as usize];
    for slot in d.iter_mut().rev() {
        let q = &v / &pb;
        let rem = &v - &q * &pb;
        *slot = u32::try_from(&rem).unwrap_or(0);
        v = q;
    }
    d
}

pub fn digit_grid(source: GridSource<'_>, p: u64, k: u64, r: u64, rows: usize, width: u32) -> Result<DigitGrid> {
    check_prime(p)?;
    let mut out = Vec::with_capacity(rows);
    match source {
        GridSource::Tower(t) => {
            if t.p() != p {
                return Err(Error::InvalidParameter(format!("tower is over p = {}", t.p())));
            }
            if width > t.top() {
                return Err(Error::Precision(format!("width {width} exceeds the tower's precision {}", t.top())));
            }
            let m = t.machine(width)?;
            let w = digits_msd_unchecked(r, p).len() as u64;
            for n in 0..rows as u64 {
                let v = if n >= w {
                    eval_k_pow_r(m, k, n, r)?
                } else {
                    let idx = (k as u128 * (p as u128).pow(n as u32) + r as u128) as u64;
                    m.eval(idx).as_residue().map(|x| x.value()).unwrap_or(0)
                };
                out.push(big_digits(BigUint::from(v), p, width));
            }
        }
        GridSource::Oracle(spec) => {
            let modulus = BigUint::from(p).pow(width);
            for n in 0..rows as u32 {
                let idx = BigUint::from(k) * BigUint::from(p).pow(n) + BigUint::from(r);
                let v = match spec {
                    SequenceSpec::Linrec { coeffs, init } => oracles::linrec_at(coeffs, init, &idx, &modulus)?,
                    SequenceSpec::Oracle { name } if name == "fibonacci" => {
                        oracles::linrec_at(&[1, 1], &[0, 1], &idx, &modulus)?
                    }
                    SequenceSpec::Oracle { name } if name == "identity" => &idx % &modulus,
                    SequenceSpec::Oracle { name } if name == "catalan" => {
                        let i = u64::try_from(&idx).map_err(|_| Error::Budget("index too large".into()))?;
                        oracles::catalan_at(i, p, width)?
                    }
                    _ => {
                        return Err(Error::NotSupported(
                            "grid oracles cover linear recurrences and the named oracles".into(),
                        ))
                    }
                };
                out.push(big_digits(v, p, width));
            }
        }
    }
    Ok(DigitGrid { p, k, r, width, rows: out })
}

/// Renders a grid as text with row labels `n`.
pub fn labelled_text(g: &DigitGrid) -> String {
    let mut s = String::new();
    let pad = g.rows.len().saturating_sub(1).to_string().len();
    for (n, row) in g.rows.iter().enumerate() {
        let digits: String = row.iter().map(|&d| std::char::from_digit(d, 36).unwrap_or('?')).collect();
        let _ = writeln!(s, "{n:>pad$} {digits}");
    }
    s
}
