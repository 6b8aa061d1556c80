//! Length-p substitutions, Cobham extraction, incidence matrices, primitivity.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dfao::{Dfao, Output, Reading};
use crate::error::{Error, Result};
use crate::residue::check_prime;

/// A substitution on letters `0..m` in which every image has length `p`.
/// Letters carry display names and an optional coding to output letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    p: u64,
    names: Vec<String>,
    images: Vec<Vec<u32>>,
    seed: u32,
    coding: Option<Vec<Output>>,
}

impl Substitution {
    pub fn new(
        p: u64,
        names: Vec<String>,
        images: Vec<Vec<u32>>,
        seed: u32,
        coding: Option<Vec<Output>>,
    ) -> Result<Self> {
        check_prime(p)?;
        let m = images.len();
        if m == 0 || names.len() != m {
            return Err(Error::InvalidInput("alphabet and images disagree in size".into()));
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != m {
            return Err(Error::InvalidInput("duplicate letter names".into()));
        }
        for (l, img) in images.iter().enumerate() {
            if img.len() as u64 != p {
                return Err(Error::InvalidInput(format!(
                    "image of {} has length {}, expected {p}",
                    names[l],
                    img.len()
                )));
            }
            if img.iter().any(|&t| t as usize >= m) {
                return Err(Error::InvalidInput(format!("image of {} uses an unknown letter", names[l])));
            }
        }
        if seed as usize >= m || images[seed as usize][0] != seed {
            return Err(Error::InvalidInput("seed image must begin with the seed".into()));
        }
        if let Some(c) = &coding {
            if c.len() != m {
                return Err(Error::InvalidInput("coding must cover the alphabet".into()));
            }
        }
        Ok(Substitution { p, names, images, seed, coding })
    }

    /// Letters named `0, 1, …`.
    pub fn with_numeric_names(p: u64, images: Vec<Vec<u32>>, seed: u32, coding: Option<Vec<Output>>) -> Result<Self> {
        let names = (0..images.len()).map(|i| i.to_string()).collect();
        Substitution::new(p, names, images, seed, coding)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn image(&self, letter: u32) -> &[u32] {
        &self.images[letter as usize]
    }

    pub fn images(&self) -> &[Vec<u32>] {
        &self.images
    }

    pub fn coding(&self) -> Option<&[Output]> {
        self.coding.as_deref()
    }

    /// Coded letter, or the letter itself as a tag when there is no coding.
    pub fn code(&self, letter: u32) -> Output {
        match &self.coding {
            Some(c) => c[letter as usize],
            None => Output::Tag(letter),
        }
    }

    /// `θ(s) = δ(s,0)⋯δ(s,p−1)` on the states of a direct-reading automaton,
    /// with coding `τ`. If `δ(s0,0) ≠ s0` a new seed `s0′` is added with
    /// `θ(s0′) = s0′ δ(s0,1)⋯δ(s0,p−1)` and `τ(s0′) = τ(s0)`.
    pub fn cobham_extract(m: &Dfao) -> Result<Substitution> {
        if m.reading() != Reading::Msd {
            return Err(Error::InvalidParameter("Cobham extraction needs a direct-reading automaton".into()));
        }
        let n = m.num_states();
        let mut names: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
        let mut images: Vec<Vec<u32>> = (0..n).map(|s| m.row(s).iter().map(|&t| t as u32).collect()).collect();
        let mut coding: Vec<Output> = m.outputs().to_vec();
        let s0 = m.initial();
        let seed = if m.next(s0, 0) == s0 {
            s0 as u32
        } else {
            let extra = n as u32;
            let mut img = images[s0].clone();
            img[0] = extra;
            names.push(format!("s{s0}'"));
            images.push(img);
            coding.push(*m.output(s0));
            extra
        };
        Substitution::new(m.p(), names, images, seed, Some(coding))
    }

    /// The automaton with states = letters, `δ(ℓ, r) = θ(ℓ)[r]`, output = coding.
    pub fn to_dfao(&self) -> Dfao {
        let delta = self.images.iter().flatten().map(|&t| t as usize).collect();
        let outputs = (0..self.len() as u32).map(|l| self.code(l)).collect();
        Dfao::from_parts(self.p, Reading::Msd, self.seed as usize, delta, outputs)
    }

    /// First `n` letters of the fixed point beginning with the seed.
    pub fn fixed_point(&self, n: usize) -> Vec<u32> {
        let mut u = Vec::with_capacity(n);
        if n == 0 {
            return u;
        }
        u.push(self.seed);
        // u(pk + r) = θ(u(k))[r]; position k is always known before pk + r.
        let p = self.p as usize;
        let mut k = 0;
        while u.len() < n {
            let img = &self.images[u[k] as usize];
            let start = if k == 0 { 1 } else { 0 };
            for &t in &img[start..] {
                if u.len() == n {
                    break;
                }
                u.push(t);
            }
            k += 1;
            debug_assert!(u.len() <= p * k.max(1));
        }
        u
    }

    pub fn coded_fixed_point(&self, n: usize) -> Vec<Output> {
        self.fixed_point(n).into_iter().map(|l| self.code(l)).collect()
    }

    /// Applies `θ` letterwise to a word.
    pub fn apply(&self, word: &[u32]) -> Vec<u32> {
        word.iter().flat_map(|&l| self.images[l as usize].iter().copied()).collect()
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let cols = self
            .images
            .iter()
            .map(|img| {
                let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
                for &t in img {
                    *counts.entry(t).or_default() += 1;
                }
                counts.into_iter().collect()
            })
            .collect();
        IncidenceMatrix { cols }
    }

    /// Perron vector of `M/p` by power iteration; requires primitivity.
    pub fn letter_frequencies(&self, tol: f64) -> Result<Vec<f64>> {
        let mat = self.incidence();
        if !mat.is_primitive() {
            return Err(Error::NotSupported("letter frequencies need a primitive substitution".into()));
        }
        let m = self.len();
        let p = self.p as f64;
        let mut f = vec![1.0 / m as f64; m];
        for _ in 0..1_000_000 {
            let g = mat.apply_scaled(&f, 1.0 / p);
            let diff = g.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            f = g;
            if diff < tol {
                return Ok(f);
            }
        }
        Err(Error::Budget("power iteration did not converge".into()))
    }
}

/// `M[i][j]` = occurrences of letter `i` in the image of `j`, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    cols: Vec<Vec<(u32, u64)>>,
}

impl IncidenceMatrix {
    pub fn from_dense(rows: &[Vec<u64>]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("incidence matrix must be square".into()));
        }
        let cols =
            (0..m).map(|j| (0..m).filter(|&i| rows[i][j] != 0).map(|i| (i as u32, rows[i][j])).collect()).collect();
        Ok(IncidenceMatrix { cols })
    }

    pub fn size(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.cols[j].iter().find(|&&(r, _)| r as usize == i).map_or(0, |&(_, c)| c)
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let m = self.size();
        (0..m).map(|i| (0..m).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        self.cols.iter().map(|c| c.iter().map(|e| e.1).sum()).collect()
    }

    fn apply_scaled(&self, v: &[f64], scale: f64) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, c) in col {
                out[i as usize] += c as f64 * scale * v[j];
            }
        }
        out
    }

    /// Primitive iff the letter graph is strongly connected and the gcd of its
    /// cycle lengths is 1.
    pub fn is_primitive(&self) -> bool {
        let m = self.size();
        if m == 0 {
            return false;
        }
        // Edge j → i whenever i occurs in θ(j).
        let fwd: Vec<Vec<usize>> = self.cols.iter().map(|c| c.iter().map(|e| e.0 as usize).collect()).collect();
        let mut rev = vec![Vec::new(); m];
        for (j, out) in fwd.iter().enumerate() {
            for &i in out {
                rev[i].push(j);
            }
        }
        let bfs = |adj: &[Vec<usize>]| -> Vec<Option<usize>> {
            let mut level = vec![None; m];
            level[0] = Some(0);
            let mut q = VecDeque::from([0]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if level[v].is_none() {
                        level[v] = Some(level[u].unwrap() + 1);
                        q.push_back(v);
                    }
                }
            }
            level
        };
        let level = bfs(&fwd);
        if level.iter().any(Option::is_none) || bfs(&rev).iter().any(Option::is_none) {
            return false;
        }
        let mut g = 0usize;
        for (u, out) in fwd.iter().enumerate() {
            for &v in out {
                let d = (level[u].unwrap() + 1).abs_diff(level[v].unwrap());
                g = gcd(g, d);
            }
        }
        g == 1
    }

    /// Primitivity by boolean matrix powers: `M^(2^k)` with `2^k` at least the
    /// Wielandt bound `(m−1)² + 1`.
    pub fn has_positive_power(&self) -> bool {
        let m = self.size();
        let mut b: Vec<Vec<bool>> = self.to_dense().iter().map(|r| r.iter().map(|&c| c > 0).collect()).collect();
        let bound = (m.saturating_sub(1)).pow(2) + 1;
        let mut power = 1;
        while power < bound {
            let mut sq = vec![vec![false; m]; m];
            for (row, out) in b.iter().zip(sq.iter_mut()) {
                for (k, _) in row.iter().enumerate().filter(|(_, &x)| x) {
                    for (o, &x) in out.iter_mut().zip(&b[k]) {
                        *o |= x;
                    }
                }
            }
            b = sq;
            power *= 2;
        }
        b.iter().all(|r| r.iter().all(|&x| x))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `{"p", "alphabet", "images": {name: [names]}, "seed", "coding": {name: output}}`.
#[derive(Serialize, Deserialize)]
struct SubstitutionJson {
    p: u64,
    alphabet: Vec<String>,
    images: BTreeMap<String, Vec<String>>,
    seed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coding: Option<BTreeMap<String, Output>>,
}

impl Serialize for Substitution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let name = |l: &u32| self.names[*l as usize].clone();
        SubstitutionJson {
            p: self.p,
            alphabet: self.names.clone(),
            images: self
                .images
                .iter()
                .enumerate()
                .map(|(l, img)| (self.names[l].clone(), img.iter().map(name).collect()))
                .collect(),
            seed: name(&self.seed),
            coding: self
                .coding
                .as_ref()
                .map(|c| c.iter().enumerate().map(|(l, o)| (self.names[l].clone(), *o)).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Substitution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = SubstitutionJson::deserialize(d)?;
        let index: BTreeMap<&str, u32> = j.alphabet.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
        let look = |n: &str| index.get(n).copied().ok_or_else(|| D::Error::custom(format!("unknown letter {n}")));
        let mut images = Vec::with_capacity(j.alphabet.len());
        for n in &j.alphabet {
            let img = j.images.get(n).ok_or_else(|| D::Error::custom(format!("no image for {n}")))?;
            images.push(img.iter().map(|t| look(t)).collect::<std::result::Result<Vec<_>, _>>()?);
        }
        let coding = match &j.coding {
            None => None,
            Some(c) => Some(
                j.alphabet
                    .iter()
                    .map(|n| c.get(n).copied().ok_or_else(|| D::Error::custom(format!("no coding for {n}"))))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
            ),
        };
        let seed = look(&j.seed)?;
        Substitution::new(j.p, j.alphabet.clone(), images, seed, coding).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfao::fixtures::catalan_mod4;
    use crate::residue::Modulus;

    pub fn thue_morse() -> Substitution {
        Substitution::with_numeric_names(2, vec![vec![0, 1], vec![1, 0]], 0, None).unwrap()
    }

    pub fn theta_star(p: u64) -> Substitution {
        let img: Vec<u32> = (0..p as u32).collect();
        Substitution::with_numeric_names(p, vec![img; p as usize], 0, None).unwrap()
    }

    #[test]
    fn cobham_on_catalan_mod4() {
        let th = Substitution::cobham_extract(&catalan_mod4()).unwrap();
        assert_eq!(th.images(), &[vec![0, 1], vec![2, 3], vec![2, 4], vec![5, 3], vec![5, 4], vec![5, 5]]);
        assert_eq!(th.seed(), 0);
        assert_eq!(th.fixed_point(16), [0, 1, 2, 3, 2, 4, 5, 3, 2, 4, 5, 4, 5, 5, 5, 3]);
        let coded: Vec<u64> = th.coded_fixed_point(16).iter().map(|o| o.as_residue().unwrap().value()).collect();
        assert_eq!(coded, [1, 1, 2, 1, 2, 2, 0, 1, 2, 2, 0, 2, 0, 0, 0, 1]);
        assert!(th.to_dfao().equal_behavior(&catalan_mod4()).unwrap());
        assert!(th.fixed_point(0).is_empty());
    }

    #[test]
    fn cobham_adds_new_seed() {
        let t = Output::Tag;
        let m = Dfao::new(2, Reading::Msd, 0, vec![vec![1, 0], vec![1, 1]], vec![t(0), t(1)]).unwrap();
        let th = Substitution::cobham_extract(&m).unwrap();
        assert_eq!(th.len(), 3);
        assert_eq!(th.seed(), 2);
        assert_eq!(th.names()[2], "s0'");
        let back = th.to_dfao();
        for n in 0..1024 {
            assert_eq!(back.eval(n), m.eval(n));
        }
    }

    #[test]
    fn fixed_point_recursion_matches_automaton() {
        for th in [thue_morse(), theta_star(3), Substitution::cobham_extract(&catalan_mod4()).unwrap()] {
            let u = th.fixed_point(1 << 12);
            let m = th.to_dfao();
            let p = th.p() as usize;
            for n in 0..u.len() {
                assert_eq!(Output::Tag(u[n]), *m.state_valued().eval(n as u64));
                if p * n + p - 1 < u.len() {
                    for r in 0..p {
                        assert_eq!(u[p * n + r], th.image(u[n])[r]);
                    }
                }
            }
            let prefix = &u[..64];
            assert_eq!(&th.apply(prefix)[..64], prefix);
        }
    }

    #[test]
    fn theta_star_reads_last_digit() {
        let th = theta_star(3);
        let m = th.to_dfao();
        for n in 0..1u64 << 12 {
            assert_eq!(*m.eval(n), Output::Tag((n % 3) as u32));
        }
    }

    #[test]
    fn round_trip_preserves_behavior() {
        let m = catalan_mod4();
        let back = Substitution::cobham_extract(&m).unwrap().to_dfao();
        assert!(back.equal_behavior(&m).unwrap());
    }

    #[test]
    fn incidence_examples() {
        assert_eq!(theta_star(3).incidence().to_dense(), vec![vec![1; 3]; 3]);
        assert_eq!(thue_morse().incidence().to_dense(), vec![vec![1, 1], vec![1, 1]]);
        let cat = Substitution::cobham_extract(&catalan_mod4()).unwrap().incidence();
        let col5: Vec<u64> = (0..6).map(|i| cat.get(i, 5)).collect();
        assert_eq!(col5, [0, 0, 0, 0, 0, 2]);
        assert!(cat.column_sums().iter().all(|&s| s == 2));
    }

    #[test]
    fn primitivity() {
        assert!(theta_star(2).incidence().is_primitive());
        assert!(thue_morse().incidence().is_primitive());
        let cat = Substitution::cobham_extract(&catalan_mod4()).unwrap().incidence();
        assert!(!cat.is_primitive());
        assert!(!cat.has_positive_power());
        // Period 2: a ↦ bb, b ↦ aa.
        let swap = IncidenceMatrix::from_dense(&[vec![0, 2], vec![2, 0]]).unwrap();
        assert!(!swap.is_primitive());
        assert!(!swap.has_positive_power());
    }

    #[test]
    fn primitivity_methods_agree_exhaustively() {
        // Every 0/1 pattern of a 3×3 matrix.
        for bits in 0u32..512 {
            let rows: Vec<Vec<u64>> =
                (0..3).map(|i| (0..3).map(|j| u64::from(bits >> (3 * i + j) & 1)).collect()).collect();
            let m = IncidenceMatrix::from_dense(&rows).unwrap();
            assert_eq!(m.is_primitive(), m.has_positive_power(), "{rows:?}");
        }
    }

    #[test]
    fn frequencies() {
        let f = theta_star(3).letter_frequencies(1e-12).unwrap();
        assert!(f.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
        let f = thue_morse().letter_frequencies(1e-12).unwrap();
        assert!(f.iter().all(|&x| (x - 0.5).abs() < 1e-12));
        let cat = Substitution::cobham_extract(&catalan_mod4()).unwrap();
        assert!(matches!(cat.letter_frequencies(1e-12), Err(Error::NotSupported(_))));
        // Fibonacci-like 0 ↦ 01, 1 ↦ 00 has frequencies (2/3, 1/3).
        let s = Substitution::with_numeric_names(2, vec![vec![0, 1], vec![0, 0]], 0, None).unwrap();
        let f = s.letter_frequencies(1e-13).unwrap();
        assert!((f[0] - 2.0 / 3.0).abs() < 1e-12 && (f[1] - 1.0 / 3.0).abs() < 1e-12);
        let mf = s.incidence().apply_scaled(&f, 0.5);
        assert!(mf.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn json_round_trip() {
        let th = Substitution::cobham_extract(&catalan_mod4()).unwrap();
        let s = serde_json::to_string(&th).unwrap();
        assert!(s.contains(r#""images":{"s0":["s0","s1"],"s1":["s2","s3"]"#));
        let back: Substitution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, th);
        let m = Modulus::new(2, 1).unwrap();
        let coded = Substitution::with_numeric_names(
            2,
            vec![vec![0, 1], vec![1, 0]],
            0,
            Some(vec![Output::Residue(m.residue(0)), Output::Residue(m.residue(1))]),
        )
        .unwrap();
        let back: Substitution = serde_json::from_str(&serde_json::to_string(&coded).unwrap()).unwrap();
        assert_eq!(back, coded);
    }

    #[test]
    fn validation() {
        assert!(Substitution::with_numeric_names(2, vec![vec![1, 0], vec![1, 0]], 0, None).is_err());
        assert!(Substitution::with_numeric_names(2, vec![vec![0, 1, 1], vec![1, 0, 0]], 0, None).is_err());
        assert!(Substitution::with_numeric_names(4, vec![vec![0; 4]], 0, None).is_err());
    }
}
