//! The family of minimal automata `M_α` (outputs mod p^α), their substitutions
//! `θ_α`, and the state maps `π*: S_{α+1} → S_α` linking adjacent levels.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cocycle::{self, OrderedDiagram};
use crate::dfao::{Dfao, Output, Reading, STATE_BUDGET};
use crate::error::{Error, Result};
use crate::oracles;
use crate::poly::{self, IntPoly, RationalBivar, VALIDATION_WINDOW};
use crate::residue::Modulus;
use crate::substitution::Substitution;

/// Default highest level for algebraic and diagonal specifications.
pub const DEFAULT_ALGEBRAIC_CAP: u32 = 8;

/// A finite description of a p-adic integer sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    /// The power-series root `f` of `P(x, f) = 0` with `f(0)` determined by `P`.
    Algebraic { annihilator: IntPoly },
    /// `n ↦ [xⁿyⁿ] P/Q`.
    Diagonal { numerator: IntPoly, denominator: IntPoly },
    /// `a(n) = Σ coeffs[i−1]·a(n−i)`, `a(0..k) = init`.
    Linrec { coeffs: Vec<i64>, init: Vec<i64> },
    /// The cocycle of an ordered diagram, words joined by `;`.
    Cocycle { theta: String },
    /// A named brute-force generator; usable for checks, never for building.
    Oracle { name: String },
}

impl SequenceSpec {
    pub fn catalan() -> Self {
        SequenceSpec::Algebraic { annihilator: IntPoly::parse("x*y^2 - y + 1").expect("literal") }
    }

    pub fn identity() -> Self {
        SequenceSpec::Linrec { coeffs: vec![2, -1], init: vec![0, 1] }
    }

    pub fn fibonacci() -> Self {
        SequenceSpec::Linrec { coeffs: vec![1, 1], init: vec![0, 1] }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => Error::InvalidInput(e.to_string()),
            _ => Error::Parse { line: e.line(), column: e.column(), message: e.to_string() },
        })
    }

    /// Brute-force values `a(0), …, a(N−1)` modulo `p^α`.
    pub fn oracle_values(&self, n: usize, p: u64, alpha: u32) -> Result<Vec<u64>> {
        let vals = match self {
            SequenceSpec::Algebraic { annihilator } => oracles::algebraic_series(annihilator, n, p, alpha)?,
            SequenceSpec::Diagonal { numerator, denominator } => {
                let f = RationalBivar::new(numerator.clone(), denominator.clone())?;
                oracles::diagonal_series(&f, n, p, alpha)?
            }
            SequenceSpec::Linrec { coeffs, init } => oracles::linrec_mod(coeffs, init, n, p, alpha)?,
            SequenceSpec::Cocycle { theta } => {
                let d = OrderedDiagram::parse(p, theta)?;
                let m = Modulus::new(p, alpha)?;
                return Ok(cocycle::cocycle_sequence(&d, n)?.into_iter().map(|v| m.reduce(v)).collect());
            }
            SequenceSpec::Oracle { name } => match name.as_str() {
                "catalan" => oracles::catalan_mod(n, p, alpha)?,
                "fibonacci" => oracles::linrec_mod(&[1, 1], &[0, 1], n, p, alpha)?,
                "identity" => {
                    let m = Modulus::new(p, alpha)?;
                    return Ok((0..n as u64).map(|v| m.reduce(v)).collect());
                }
                other => return Err(Error::InvalidInput(format!("unknown oracle '{other}'"))),
            },
        };
        Ok(vals.into_iter().map(|r| r.value()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerOptions {
    /// Highest level accepted for algebraic and diagonal specifications.
    pub algebraic_cap: u32,
}

impl Default for TowerOptions {
    fn default() -> Self {
        TowerOptions { algebraic_cap: DEFAULT_ALGEBRAIC_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub alpha: u32,
    pub machine: Dfao,
    pub substitution: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tower {
    p: u64,
    spec: Option<SequenceSpec>,
    levels: Vec<Level>,
    /// `proj[α]` sends states of level `α+1` to states of level `α`.
    proj: Vec<Vec<usize>>,
}

/// Minimal direct-reading automaton of an eventually periodic sequence: states
/// are indices folded into `[0, μ + P)`.
fn eventually_periodic_machine(values: &[u64], pre: usize, period: usize, m: Modulus) -> Dfao {
    let p = m.p() as usize;
    let size = pre + period;
    let fold = |u: usize| if u < pre { u } else { pre + (u - pre) % period };
    let mut delta = Vec::with_capacity(size * p);
    for u in 0..size {
        for d in 0..p {
            delta.push(fold(u * p + d));
        }
    }
    let outputs = values[..size].iter().map(|&v| Output::Residue(m.residue(v))).collect();
    Dfao::from_parts(m.p(), Reading::Msd, 0, delta, outputs).minimize().0
}

/// Builds and validates the minimal direct-reading automaton of one level.
pub fn level_machine(spec: &SequenceSpec, p: u64, alpha: u32) -> Result<Dfao> {
    let m = Modulus::new(p, alpha)?;
    if alpha == 0 {
        return Dfao::constant(p, Reading::Msd, Output::Residue(m.residue(0)));
    }
    let machine = match spec {
        SequenceSpec::Algebraic { annihilator } => poly::algebraic_automaton(annihilator, p, alpha)?,
        SequenceSpec::Diagonal { numerator, denominator } => {
            let f = RationalBivar::new(numerator.clone(), denominator.clone())?;
            poly::diagonal_automaton(&f, p, alpha)?.reverse_reading()?.minimize().0
        }
        SequenceSpec::Linrec { coeffs, init } => {
            let (pre, period) = oracles::linrec_period(coeffs, init, p, alpha)?;
            let size = pre + period;
            if size > STATE_BUDGET {
                return Err(Error::Budget(format!("period {period} too long")));
            }
            let vals: Vec<u64> = oracles::linrec_mod(coeffs, init, size.max(init.len()), p, alpha)?
                .into_iter()
                .map(|r| r.value())
                .collect();
            eventually_periodic_machine(&vals, pre, period, m)
        }
        SequenceSpec::Cocycle { theta } => {
            let d = OrderedDiagram::parse(p, theta)?;
            cocycle::cocycle_substitution(&d, alpha)?.to_dfao().minimize().0
        }
        SequenceSpec::Oracle { name } => {
            return Err(Error::NotSupported(format!(
                "oracle '{name}' only validates; automata cannot be inferred from it"
            )))
        }
    };
    if !machine.is_zero_invariant() {
        return Err(Error::Internal(format!("level {alpha} automaton is not zero-invariant")));
    }
    let expected = spec.oracle_values(VALIDATION_WINDOW, p, alpha)?;
    poly::validate(&machine, alpha, expected)?;
    Ok(machine)
}

/// The state map `S_high → S_low`: project the outputs of `high`, minimize
/// while tracking merges, and match the result to `low` from the initial state.
pub fn projection_map(high: &Dfao, low: &Dfao) -> Result<Vec<usize>> {
    if high.p() != low.p() || high.reading() != low.reading() {
        return Err(Error::InvalidParameter("levels over different bases or readings".into()));
    }
    let beta = low
        .output(0)
        .as_residue()
        .ok_or_else(|| Error::InvalidParameter("levels must output residues".into()))?
        .alpha();
    let projected = high.map_outputs(|_, o| match o {
        Output::Residue(r) => Output::Residue(r.project(beta).unwrap_or(*r)),
        other => *other,
    })?;
    if projected.outputs().iter().any(|o| o.as_residue().is_none_or(|r| r.alpha() != beta)) {
        return Err(Error::InvalidParameter("upper level has lower precision".into()));
    }
    let (min, merge) = projected.minimize();
    let mismatch = || Error::Internal("projected automaton is not isomorphic to the lower level".into());
    if min.num_states() != low.num_states() {
        return Err(mismatch());
    }
    let mut iso = vec![usize::MAX; min.num_states()];
    iso[min.initial()] = low.initial();
    let mut queue = VecDeque::from([min.initial()]);
    while let Some(s) = queue.pop_front() {
        if min.output(s) != low.output(iso[s]) {
            return Err(mismatch());
        }
        for d in 0..min.p() as u32 {
            let (a, b) = (min.next(s, d), low.next(iso[s], d));
            if iso[a] == usize::MAX {
                iso[a] = b;
                queue.push_back(a);
            } else if iso[a] != b {
                return Err(mismatch());
            }
        }
    }
    merge.iter().map(|c| c.map(|c| iso[c]).filter(|&t| t != usize::MAX).ok_or_else(mismatch)).collect()
}

pub fn build_tower(spec: &SequenceSpec, p: u64, top: u32) -> Result<Tower> {
    build_tower_with(spec, p, top, &TowerOptions::default())
}

pub fn build_tower_with(spec: &SequenceSpec, p: u64, top: u32, opts: &TowerOptions) -> Result<Tower> {
    if matches!(spec, SequenceSpec::Algebraic { .. } | SequenceSpec::Diagonal { .. }) && top > opts.algebraic_cap {
        return Err(Error::Budget(format!(
            "level {top} exceeds the cap {} for series specifications",
            opts.algebraic_cap
        )));
    }
    Modulus::new(p, top)?;
    let mut levels = Vec::with_capacity(top as usize + 1);
    for alpha in 0..=top {
        let machine = level_machine(spec, p, alpha)?;
        let substitution = Substitution::cobham_extract(&machine)?;
        if substitution.len() != machine.num_states() {
            return Err(Error::Internal(format!("level {alpha} needed an extra seed letter")));
        }
        levels.push(Level { alpha, machine, substitution });
    }
    let proj = levels.windows(2).map(|w| projection_map(&w[1].machine, &w[0].machine)).collect::<Result<Vec<_>>>()?;
    Ok(Tower { p, spec: Some(spec.clone()), levels, proj })
}

impl Tower {
    /// Assembles a tower from parts, checking only shapes.
    pub fn from_parts(p: u64, spec: Option<SequenceSpec>, levels: Vec<Level>, proj: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() || proj.len() + 1 != levels.len() {
            return Err(Error::InvalidInput("a tower needs one map per adjacent pair of levels".into()));
        }
        for (a, l) in levels.iter().enumerate() {
            if l.alpha as usize != a || l.machine.p() != p || l.machine.reading() != Reading::Msd {
                return Err(Error::InvalidInput(format!("level {a} is malformed")));
            }
        }
        for (a, map) in proj.iter().enumerate() {
            let (hi, lo) = (levels[a + 1].machine.num_states(), levels[a].machine.num_states());
            if map.len() != hi || map.iter().any(|&s| s >= lo) {
                return Err(Error::InvalidInput(format!("state map {a} has the wrong shape")));
            }
        }
        Ok(Tower { p, spec, levels, proj })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn top(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn spec(&self) -> Option<&SequenceSpec> {
        self.spec.as_ref()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, alpha: u32) -> Result<&Level> {
        self.levels
            .get(alpha as usize)
            .ok_or_else(|| Error::Precision(format!("level {alpha} not built (top is {})", self.top())))
    }

    pub fn machine(&self, alpha: u32) -> Result<&Dfao> {
        Ok(&self.level(alpha)?.machine)
    }

    /// `π*_{α,α+1}` as a table indexed by level-(α+1) states.
    pub fn proj(&self, alpha: u32) -> Result<&[usize]> {
        self.proj
            .get(alpha as usize)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Precision(format!("no map below level {}", alpha + 1)))
    }

    /// Mutable access for fault injection in tests.
    #[doc(hidden)]
    pub fn proj_mut(&mut self, alpha: u32) -> &mut Vec<usize> {
        &mut self.proj[alpha as usize]
    }

    pub fn state_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.machine.num_states()).collect()
    }

    /// Whether `θ_α` is primitive, per level.
    pub fn primitive_levels(&self) -> Vec<bool> {
        self.levels.iter().map(|l| l.substitution.incidence().is_primitive()).collect()
    }
}

impl<'de> Deserialize<'de> for Tower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct J {
            p: u64,
            spec: Option<SequenceSpec>,
            levels: Vec<Level>,
            proj: Vec<Vec<usize>>,
        }
        let j = J::deserialize(d)?;
        Tower::from_parts(j.p, j.spec, j.levels, j.proj).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerCheck {
    /// The lower of the two levels compared.
    pub level: u32,
    pub identity: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerReport {
    pub checks: Vec<TowerCheck>,
}

impl TowerReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TowerCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn state_map_witness(hi: &Dfao, lo: &Dfao, map: &[usize], beta: u32) -> Option<String> {
    if map[hi.initial()] != lo.initial() {
        return Some(format!("initial state {} maps to {}", hi.initial(), map[hi.initial()]));
    }
    for s in 0..hi.num_states() {
        let projected = hi.output(s).as_residue().and_then(|r| r.project(beta).ok());
        if projected.as_ref() != lo.output(map[s]).as_residue() {
            return Some(format!("output of state {s}"));
        }
        for d in 0..hi.p() as u32 {
            if map[hi.next(s, d)] != lo.next(map[s], d) {
                return Some(format!("state {s}, digit {d}"));
            }
        }
    }
    None
}

/// Checks the identities linking every adjacent pair of levels: the state map
/// (outputs, transitions, initial state), letterwise compatibility with the
/// substitutions, the fixed points on `[0, N)`, and commutation with the shift.
pub fn verify_tower(t: &Tower, n: usize) -> TowerReport {
    let mut checks = Vec::new();
    let mut push = |level: u32, identity: &str, witness: Option<String>| {
        checks.push(TowerCheck { level, identity: identity.to_string(), passed: witness.is_none(), witness });
    };
    for (a, map) in t.proj.iter().enumerate() {
        let (lo, hi) = (&t.levels[a], &t.levels[a + 1]);
        let level = a as u32;
        push(level, "state-map", state_map_witness(&hi.machine, &lo.machine, map, level));

        let (th_hi, th_lo) = (&hi.substitution, &lo.substitution);
        let letters = if th_hi.len() == map.len() && th_lo.len() == lo.machine.num_states() {
            (0..th_hi.len() as u32)
                .find(|&s| {
                    let img: Vec<u32> = th_hi.image(s).iter().map(|&c| map[c as usize] as u32).collect();
                    img != th_lo.image(map[s as usize] as u32)
                })
                .map(|s| format!("letter {}", th_hi.names()[s as usize]))
        } else {
            Some("alphabets differ from state sets".to_string())
        };
        push(level, "substitution", letters);

        let u_hi = th_hi.fixed_point(n);
        let u_lo = th_lo.fixed_point(n);
        let image: Vec<u32> = u_hi.iter().map(|&c| map.get(c as usize).copied().unwrap_or(usize::MAX) as u32).collect();
        let seq = image.iter().zip(&u_lo).position(|(a, b)| a != b).map(|i| format!("n = {i}"));
        push(level, "sequence", seq);

        let shifted_then_mapped: Vec<u32> =
            u_hi.iter().skip(1).map(|&c| map.get(c as usize).copied().unwrap_or(usize::MAX) as u32).collect();
        let shift =
            shifted_then_mapped.iter().zip(image.iter().skip(1)).position(|(a, b)| a != b).map(|i| format!("n = {i}"));
        push(level, "shift", shift);
    }
    TowerReport { checks }
}

/// Level `α` holds every residue `a(n) mod p^α`; parents are reductions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueTree {
    pub p: u64,
    pub levels: Vec<Vec<u64>>,
}

impl ResidueTree {
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// `(level, child, parent)` for every edge.
    pub fn edges(&self) -> Vec<(u32, u64, u64)> {
        let mut out = Vec::new();
        let mut m = 1u64;
        for (a, level) in self.levels.iter().enumerate().skip(1) {
            for &j in level {
                out.push((a as u32, j, j % m));
            }
            m *= self.p;
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph residue_tree {\n  rankdir=TB;\n");
        for (a, level) in self.levels.iter().enumerate() {
            for &j in level {
                let _ = writeln!(s, "  \"{a}:{j}\" [label=\"{j}\"];");
            }
        }
        for (a, child, parent) in self.edges() {
            let _ = writeln!(s, "  \"{}:{parent}\" -> \"{a}:{child}\";", a - 1);
        }
        s.push_str("}\n");
        s
    }
}

pub fn residue_tree(t: &Tower) -> Result<ResidueTree> {
    let mut levels = Vec::with_capacity(t.levels.len());
    for l in &t.levels {
        let vals: BTreeSet<u64> = l
            .machine
            .reachable_outputs()
            .iter()
            .map(|o| o.as_residue().map(|r| r.value()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidInput("residue trees need residue outputs".into()))?;
        levels.push(vals.into_iter().collect::<Vec<_>>());
    }
    let tree = ResidueTree { p: t.p, levels };
    let mut m = 1u64;
    for a in 1..tree.levels.len() {
        let above: BTreeSet<u64> = tree.levels[a - 1].iter().copied().collect();
        if let Some(j) = tree.levels[a].iter().find(|&&j| !above.contains(&(j % m))) {
            return Err(Error::Internal(format!("residue {j} at level {a} has no parent")));
        }
        m *= t.p;
    }
    Ok(tree)
}

/// Residues mod `p^α` never attained.
pub fn forbidden_residues(t: &Tower, alpha: u32) -> Result<Vec<u64>> {
    let m = Modulus::new(t.p, alpha)?.modulus();
    if m > 1 << 24 {
        return Err(Error::Budget(format!("listing residues modulo {m}")));
    }
    let tree = residue_tree(t)?;
    let level = tree.levels.get(alpha as usize).ok_or_else(|| Error::Precision(format!("level {alpha} not built")))?;
    let attained: BTreeSet<u64> = level.iter().copied().collect();
    Ok((0..m).filter(|j| !attained.contains(j)).collect())
}

/// States of level `α+1` mapped onto `state` of level `α`.
pub fn letter_preimages(t: &Tower, alpha: u32, state: usize) -> Result<Vec<usize>> {
    if alpha >= t.top() {
        return Err(Error::InvalidParameter(format!("level {alpha} has no level above it")));
    }
    if state >= t.levels[alpha as usize].machine.num_states() {
        return Err(Error::InvalidParameter(format!("no state {state} at level {alpha}")));
    }
    Ok(t.proj[alpha as usize].iter().enumerate().filter(|&(_, &s)| s == state).map(|(i, _)| i).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfao::fixtures::catalan_mod4;

    #[test]
    fn catalan_small_tower() {
        let t = build_tower(&SequenceSpec::catalan(), 2, 2).unwrap();
        assert_eq!(t.state_counts(), [1, 3, 6]);
        assert!(t.machine(2).unwrap().equal_behavior(&catalan_mod4()).unwrap());
        assert!(verify_tower(&t, 4096).passed());
    }

    #[test]
    fn catalan_projection_groups() {
        // Match the machine to the reference numbering, then read off π*.
        let t = build_tower(&SequenceSpec::catalan(), 2, 2).unwrap();
        let fig = catalan_mod4();
        let ours = t.machine(2).unwrap();
        let to_fig = projection_map(ours, &fig).unwrap();
        let proj = t.proj(1).unwrap();
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (s, &fig_state) in to_fig.iter().enumerate() {
            groups.entry(proj[s]).or_default().push(fig_state);
        }
        let mut g: Vec<Vec<usize>> = groups
            .into_values()
            .map(|mut v| {
                v.sort();
                v
            })
            .collect();
        g.sort();
        assert_eq!(g, vec![vec![0], vec![1, 3], vec![2, 4, 5]]);
        let m1 = t.machine(1).unwrap();
        let t2 = proj[to_fig.iter().position(|&s| s == 5).unwrap()];
        let mut pre = letter_preimages(&t, 1, t2).unwrap();
        pre.iter_mut().for_each(|s| *s = to_fig[*s]);
        pre.sort();
        assert_eq!(pre, [2, 4, 5]);
        assert_eq!(letter_preimages(&t, 1, m1.initial()).unwrap().len(), 1);
        assert!(letter_preimages(&t, 2, 0).is_err());
        assert!(letter_preimages(&t, 1, 7).is_err());
    }

    #[test]
    fn identity_tower() {
        for p in [2u64, 3] {
            let t = build_tower(&SequenceSpec::identity(), p, 3).unwrap();
            let m = Modulus::new(p, 3).unwrap().modulus();
            let th = &t.level(3).unwrap().substitution;
            for s in 0..th.len() as u32 {
                let v = t.machine(3).unwrap().output(s as usize).as_residue().unwrap().value();
                let img: Vec<u64> = th
                    .image(s)
                    .iter()
                    .map(|&c| t.machine(3).unwrap().output(c as usize).as_residue().unwrap().value())
                    .collect();
                let want: Vec<u64> = (0..p).map(|r| (p * v + r) % m).collect();
                assert_eq!(img, want);
            }
            assert!(verify_tower(&t, 4096).passed());
            assert!(forbidden_residues(&t, 3).unwrap().is_empty());
        }
    }

    #[test]
    fn trivial_tower() {
        let t = build_tower(&SequenceSpec::catalan(), 2, 0).unwrap();
        assert_eq!(t.top(), 0);
        assert_eq!(t.state_counts(), [1]);
        assert!(verify_tower(&t, 16).passed());
        assert_eq!(residue_tree(&t).unwrap().levels, vec![vec![0]]);
    }

    #[test]
    fn corrupted_map_is_caught() {
        let mut t = build_tower(&SequenceSpec::catalan(), 2, 2).unwrap();
        let map = t.proj_mut(1);
        map[3] = (map[3] + 1) % 3;
        let r = verify_tower(&t, 256);
        let f: Vec<_> = r.failures().collect();
        assert!(f.iter().any(|c| c.identity == "state-map" && c.level == 1 && c.witness.is_some()));
    }

    #[test]
    fn constant_sequence_maps_are_bijections() {
        let spec = SequenceSpec::Linrec { coeffs: vec![1], init: vec![5] };
        let t = build_tower(&spec, 2, 4).unwrap();
        for a in 1..4 {
            assert_eq!(t.proj(a).unwrap(), &[0]);
            assert_eq!(letter_preimages(&t, a, 0).unwrap(), [0]);
        }
    }

    #[test]
    fn residue_tree_catalan() {
        let t = build_tower(&SequenceSpec::catalan(), 2, 4).unwrap();
        let tree = residue_tree(&t).unwrap();
        assert_eq!(tree.levels[0], [0]);
        assert_eq!(tree.levels[2], [0, 1, 2]);
        assert_eq!(tree.sizes()[4], 11);
        assert_eq!(forbidden_residues(&t, 2).unwrap(), [3]);
        assert!(forbidden_residues(&t, 4).unwrap().contains(&9));
        let sizes = tree.sizes();
        for a in 1..sizes.len() {
            assert!(sizes[a] <= 2 * sizes[a - 1]);
        }
        assert!(tree.to_dot().contains("\"1:1\" -> \"2:1\""));
    }

    #[test]
    fn oracle_specs_do_not_build() {
        let spec = SequenceSpec::Oracle { name: "catalan".into() };
        assert!(matches!(build_tower(&spec, 2, 2), Err(Error::NotSupported(_))));
        assert_eq!(spec.oracle_values(4, 2, 2).unwrap(), [1, 1, 2, 1]);
    }

    #[test]
    fn algebraic_cap() {
        assert!(matches!(build_tower(&SequenceSpec::catalan(), 2, 9), Err(Error::Budget(_))));
    }

    #[test]
    fn cocycle_and_diagonal_towers() {
        let spec = SequenceSpec::Cocycle { theta: "01;10".into() };
        let t = build_tower(&spec, 2, 4).unwrap();
        assert!(verify_tower(&t, 1024).passed());
        let s = cocycle::cocycle_sequence(&OrderedDiagram::parse(2, "01;10").unwrap(), 1024).unwrap();
        for (n, v) in s.iter().enumerate() {
            assert_eq!(t.machine(4).unwrap().eval(n as u64).as_residue().unwrap().value(), v % 16);
        }
        let spec = SequenceSpec::Diagonal {
            numerator: IntPoly::constant(1),
            denominator: IntPoly::parse("1 - x - y").unwrap(),
        };
        let t = build_tower(&spec, 3, 2).unwrap();
        assert!(verify_tower(&t, 1024).passed());
    }

    #[test]
    fn spec_json() {
        let s = serde_json::to_string(&SequenceSpec::catalan()).unwrap();
        assert_eq!(s, r#"{"kind":"algebraic","annihilator":"x*y^2 - y + 1"}"#);
        assert_eq!(SequenceSpec::from_json(&s).unwrap(), SequenceSpec::catalan());
        let lin = SequenceSpec::from_json(r#"{"kind":"linrec","coeffs":[1,1],"init":[0,1]}"#).unwrap();
        assert_eq!(lin, SequenceSpec::fibonacci());
        assert!(SequenceSpec::from_json(r#"{"kind":"algebraic","annihilator":"x*"}"#).is_err());
        assert!(matches!(SequenceSpec::from_json("{\n  \"kind\": "), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn tower_json_round_trip() {
        let t = build_tower(&SequenceSpec::catalan(), 2, 3).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: Tower = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
