//! Vershik maps on the stationary Bratteli diagram with all-ones incidence,
//! and the cocycle sequence they induce.
//!
//! Vertices on every level are `0..p`. The edge from `i` (level `n`) to `j`
//! (level `n+1`) is labelled by the position of `i` in `θ(j)`. A path is stored
//! by its vertex labels `v_0, v_1, …` and continues with zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residue::{check_prime, Modulus};
use crate::substitution::Substitution;

/// Paths never grow beyond this many levels.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedDiagram {
    p: u64,
    theta: Vec<Vec<u32>>,
    /// `rank[j][i]` = position of `i` in `θ(j)`.
    rank: Vec<Vec<u32>>,
}

impl OrderedDiagram {
    pub fn new(p: u64, theta: Vec<Vec<u32>>) -> Result<Self> {
        check_prime(p)?;
        if theta.len() as u64 != p {
            return Err(Error::InvalidInput(format!("need {p} permutation words, got {}", theta.len())));
        }
        let mut rank = vec![vec![0; p as usize]; p as usize];
        for (j, w) in theta.iter().enumerate() {
            let mut seen = vec![false; p as usize];
            if w.len() as u64 != p {
                return Err(Error::InvalidInput(format!("word {j} has length {}", w.len())));
            }
            for (pos, &i) in w.iter().enumerate() {
                if i as u64 >= p || seen[i as usize] {
                    return Err(Error::InvalidInput(format!("word {j} is not a permutation")));
                }
                seen[i as usize] = true;
                rank[j][i as usize] = pos as u32;
            }
        }
        if theta[0][0] != 0 {
            return Err(Error::InvalidInput("the image of 0 must begin with 0".into()));
        }
        Ok(OrderedDiagram { p, theta, rank })
    }

    /// The odometer order `θ*(j) = 01⋯(p−1)`.
    pub fn odometer(p: u64) -> Result<Self> {
        OrderedDiagram::new(p, vec![(0..p as u32).collect(); p as usize])
    }

    /// Parses semicolon-joined words, e.g. `"01;10"`. Letters are digits (or
    /// `a–z` for 10 and up); words may instead be comma-separated numbers.
    pub fn parse(p: u64, src: &str) -> Result<Self> {
        let words = src
            .split(';')
            .map(|w| {
                let w = w.trim();
                if w.contains(',') {
                    w.split(',')
                        .map(|t| t.trim().parse::<u32>().map_err(|e| Error::InvalidInput(format!("{t}: {e}"))))
                        .collect()
                } else {
                    w.chars()
                        .map(|c| c.to_digit(36).ok_or_else(|| Error::InvalidInput(format!("bad letter '{c}'"))))
                        .collect()
                }
            })
            .collect::<Result<Vec<Vec<u32>>>>()?;
        OrderedDiagram::new(p, words)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn theta(&self) -> &[Vec<u32>] {
        &self.theta
    }

    /// The words joined with `;`.
    pub fn to_theta_string(&self) -> String {
        let sep = if self.p > 36 { "," } else { "" };
        self.theta
            .iter()
            .map(|w| {
                w.iter()
                    .map(
                        |&d| {
                            if self.p > 36 {
                                d.to_string()
                            } else {
                                std::char::from_digit(d, 36).unwrap().to_string()
                            }
                        },
                    )
                    .collect::<Vec<_>>()
                    .join(sep)
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn substitution(&self) -> Substitution {
        Substitution::with_numeric_names(self.p, self.theta.clone(), 0, None).expect("validated words")
    }
}

impl Serialize for OrderedDiagram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct J<'a> {
            p: u64,
            theta: &'a [Vec<u32>],
        }
        J { p: self.p, theta: &self.theta }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrderedDiagram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct J {
            p: u64,
            theta: Vec<Vec<u32>>,
        }
        let j = J::deserialize(d)?;
        OrderedDiagram::new(j.p, j.theta).map_err(serde::de::Error::custom)
    }
}

/// Vertex labels `v_0..v_{D−1}`; all deeper vertices are 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdicPath {
    pub vertices: Vec<u32>,
}

impl AdicPath {
    /// The minimal path `0^∞` stored to the given depth.
    pub fn zero(depth: usize) -> Self {
        AdicPath { vertices: vec![0; depth] }
    }

    pub fn depth(&self) -> usize {
        self.vertices.len()
    }

    fn vertex(&self, j: usize) -> u32 {
        self.vertices.get(j).copied().unwrap_or(0)
    }

    /// `Σ v_j p^j`.
    pub fn reading(&self, p: u64) -> u128 {
        self.vertices.iter().rev().fold(0u128, |acc, &v| acc * p as u128 + v as u128)
    }
}

/// The next path in the order: find the lowest non-maximal edge, replace it by
/// its successor among edges with the same target, and make everything below
/// minimal. Grows the stored depth by one when all stored edges are maximal.
pub fn vershik_successor(d: &OrderedDiagram, x: &AdicPath) -> Result<AdicPath> {
    let last = d.p as u32 - 1;
    let mut v = x.vertices.clone();
    let n = loop {
        let found = (0..v.len()).find(|&j| {
            let target = v.get(j + 1).copied().unwrap_or(0) as usize;
            d.rank[target][v[j] as usize] != last
        });
        match found {
            Some(n) => break n,
            None if v.len() < MAX_DEPTH => v.push(0),
            None => return Err(Error::NeedsDeeperPath { depth: v.len() }),
        }
    };
    let target = x.vertex(n + 1) as usize;
    let pos = d.rank[target][v[n] as usize];
    v[n] = d.theta[target][pos as usize + 1];
    for j in (1..=n).rev() {
        v[j - 1] = d.theta[v[j] as usize][0];
    }
    Ok(AdicPath { vertices: v })
}

/// `s(0), …, s(N−1)`: the readings of the successive iterates of `0^∞`.
pub fn cocycle_sequence(d: &OrderedDiagram, n: usize) -> Result<Vec<u64>> {
    let mut depth = 2;
    let mut reach = d.p as u128;
    while reach < n as u128 {
        reach *= d.p as u128;
        depth += 1;
    }
    let mut x = AdicPath::zero(depth + 1);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let v = x.reading(d.p);
        out.push(u64::try_from(v).map_err(|_| Error::Budget("cocycle value exceeds 64 bits".into()))?);
        if k + 1 < n {
            x = vershik_successor(d, &x)?;
        }
    }
    Ok(out)
}

/// `θ_α(j) = θ(j mod p) + p·(j mod p^(α−1))` entrywise, on letters `0..p^α`,
/// coded by the letter's residue mod `p^α`.
pub fn cocycle_substitution(d: &OrderedDiagram, alpha: u32) -> Result<Substitution> {
    if alpha == 0 {
        return Err(Error::InvalidParameter("cocycle substitutions start at level 1".into()));
    }
    let m = Modulus::new(d.p, alpha)?;
    let size = m.modulus();
    if size > crate::dfao::STATE_BUDGET as u64 {
        return Err(Error::Budget(format!("{size} letters")));
    }
    let high = size / d.p;
    let images = (0..size)
        .map(|j| {
            let shift = d.p * (j % high);
            d.theta[(j % d.p) as usize].iter().map(|&t| (t as u64 + shift) as u32).collect()
        })
        .collect();
    let coding = (0..size).map(|j| crate::dfao::Output::Residue(m.residue(j))).collect();
    Substitution::with_numeric_names(d.p, images, 0, Some(coding))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CocycleReport {
    pub alpha: u32,
    pub checked: usize,
    /// `(n, fixed point value, s(n) mod p^α)` at the first disagreement.
    pub mismatch: Option<(usize, u64, u64)>,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Compares the fixed point of `θ_α` with `s(n) mod p^α` for `n < N`.
pub fn verify_cocycle(d: &OrderedDiagram, alpha: u32, n: usize) -> Result<CocycleReport> {
    let s = cocycle_sequence(d, n)?;
    verify_cocycle_against(d, alpha, &s)
}

/// As [`verify_cocycle`], against a precomputed `s`.
pub fn verify_cocycle_against(d: &OrderedDiagram, alpha: u32, s: &[u64]) -> Result<CocycleReport> {
    let th = cocycle_substitution(d, alpha)?;
    let modulus = Modulus::new(d.p, alpha)?.modulus();
    let u = th.fixed_point(s.len());
    let mismatch = u
        .iter()
        .zip(s)
        .enumerate()
        .find(|(_, (&a, &b))| a as u64 != b % modulus)
        .map(|(n, (&a, &b))| (n, a as u64, b % modulus));
    Ok(CocycleReport { alpha, checked: s.len(), mismatch })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurrenceReport {
    pub checked: usize,
    /// First failing `n` for each of the four identities.
    pub first_failure: [Option<usize>; 4],
}

impl RecurrenceReport {
    pub fn passed(&self) -> bool {
        self.first_failure.iter().all(Option::is_none)
    }
}

/// Checks, for `n < N`:
/// `s(4n) = −2s(n) + 3s(2n)`, `s(4n+1) = −2s(n) + 2s(2n) + s(2n+1)`,
/// `s(4n+2) = −2s(n) + 3s(2n+1)`, `s(4n+3) = −2s(n) + s(2n) + 2s(2n+1)`.
pub fn regular_recurrence_check(s: &[u64], n: usize) -> Result<RecurrenceReport> {
    if s.len() < 4 * n {
        return Err(Error::InvalidInput(format!("need {} terms, have {}", 4 * n, s.len())));
    }
    let v = |k: usize| s[k] as i128;
    let mut first_failure = [None; 4];
    for k in 0..n {
        let (a, b, c) = (v(k), v(2 * k), v(2 * k + 1));
        let rhs = [-2 * a + 3 * b, -2 * a + 2 * b + c, -2 * a + 3 * c, -2 * a + b + 2 * c];
        for (i, r) in rhs.into_iter().enumerate() {
            if first_failure[i].is_none() && v(4 * k + i) != r {
                first_failure[i] = Some(k);
            }
        }
    }
    Ok(RecurrenceReport { checked: n, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn tm() -> OrderedDiagram {
        OrderedDiagram::parse(2, "01;10").unwrap()
    }

    #[test]
    fn odometer_successor_is_increment() {
        let d = OrderedDiagram::odometer(2).unwrap();
        let x = AdicPath { vertices: vec![1, 1, 0] };
        assert_eq!(vershik_successor(&d, &x).unwrap().vertices, [0, 0, 1]);
        let d3 = OrderedDiagram::odometer(3).unwrap();
        let mut x = AdicPath::zero(2);
        for n in 0..100u128 {
            assert_eq!(x.reading(3), n);
            x = vershik_successor(&d3, &x).unwrap();
        }
    }

    #[test]
    fn thue_morse_cocycle() {
        assert_eq!(cocycle_sequence(&tm(), 16).unwrap(), [0, 1, 3, 2, 7, 6, 4, 5, 15, 14, 12, 13, 8, 9, 11, 10]);
    }

    #[test]
    fn depth_grows_and_caps() {
        let d = OrderedDiagram::odometer(2).unwrap();
        let x = AdicPath { vertices: vec![1, 1] };
        assert_eq!(vershik_successor(&d, &x).unwrap().vertices, [0, 0, 1]);
        let full = AdicPath { vertices: vec![1; MAX_DEPTH] };
        assert_eq!(vershik_successor(&d, &full), Err(Error::NeedsDeeperPath { depth: MAX_DEPTH }));
    }

    #[test]
    fn block_bijectivity() {
        for d in [tm(), OrderedDiagram::parse(3, "021;102;210").unwrap(), OrderedDiagram::odometer(2).unwrap()] {
            let p = d.p() as usize;
            for depth in 1..=if p == 2 { 8 } else { 5 } {
                let n = p.pow(depth as u32);
                let s = cocycle_sequence(&d, n).unwrap();
                let got: BTreeSet<u64> = s.into_iter().collect();
                assert_eq!(got, (0..n as u64).collect());
            }
        }
    }

    #[test]
    fn odometer_is_identity() {
        for p in [2u64, 3] {
            let n = (p as usize).pow(8).min(1 << 13);
            let s = cocycle_sequence(&OrderedDiagram::odometer(p).unwrap(), n).unwrap();
            assert!(s.iter().enumerate().all(|(i, &v)| v == i as u64));
        }
    }

    #[test]
    fn cocycle_substitution_examples() {
        let th1 = cocycle_substitution(&tm(), 1).unwrap();
        assert_eq!(th1.images(), tm().theta());
        let th2 = cocycle_substitution(&tm(), 2).unwrap();
        assert_eq!(th2.images(), &[vec![0, 1], vec![3, 2], vec![0, 1], vec![3, 2]]);
        assert_eq!(th2.fixed_point(8), [0, 1, 3, 2, 3, 2, 0, 1]);
        let star = cocycle_substitution(&OrderedDiagram::odometer(3).unwrap(), 3).unwrap();
        assert!(star.fixed_point(200).iter().enumerate().all(|(n, &v)| v as usize == n % 27));
    }

    #[test]
    fn verify_thue_morse_and_odometer() {
        for alpha in 1..=4 {
            assert!(verify_cocycle(&tm(), alpha, 1024).unwrap().passed());
            assert!(verify_cocycle(&OrderedDiagram::odometer(3).unwrap(), alpha, 729).unwrap().passed());
        }
    }

    #[test]
    fn fault_injection_is_caught() {
        // Sequence from one order, substitution from another.
        let s = cocycle_sequence(&tm(), 64).unwrap();
        let r = verify_cocycle_against(&OrderedDiagram::odometer(2).unwrap(), 3, &s).unwrap();
        assert_eq!(r.mismatch, Some((2, 2, 3)));
    }

    #[test]
    fn recurrences() {
        let s = cocycle_sequence(&tm(), 4000).unwrap();
        assert!(regular_recurrence_check(&s, 1000).unwrap().passed());
        let id: Vec<u64> = (0..40).collect();
        let r = regular_recurrence_check(&id, 10).unwrap();
        assert_eq!(r.first_failure, [None, None, Some(0), Some(0)]);
        assert!(regular_recurrence_check(&id, 11).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(tm().to_theta_string(), "01;10");
        let d = OrderedDiagram::parse(3, "0,2,1; 1,0,2; 2,1,0").unwrap();
        assert_eq!(d.to_theta_string(), "021;102;210");
        assert!(OrderedDiagram::parse(2, "10;01").is_err());
        assert!(OrderedDiagram::parse(2, "00;10").is_err());
        assert!(OrderedDiagram::parse(2, "01").is_err());
    }
}
