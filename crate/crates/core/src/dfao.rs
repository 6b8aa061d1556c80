//! Deterministic finite automata with output over the digit alphabet {0, …, p−1}.
//!
//! A [`Dfao`] reads the base-p digits of `n`, either most significant digit
//! first ([`Reading::Msd`], direct reading) or least significant first
//! ([`Reading::Lsd`]), and emits the output attached to the state it stops in.
//! Only canonical representations are ever fed to [`Dfao::eval`]; the exact
//! comparison routines below honour that convention.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residue::{check_prime, digits_lsd_unchecked, digits_msd_unchecked, Residue};

/// Upper bound on the number of states any construction may create.
pub const STATE_BUDGET: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reading {
    /// Most significant digit first.
    Msd,
    /// Least significant digit first.
    Lsd,
}

impl Reading {
    pub fn flipped(self) -> Reading {
        match self {
            Reading::Msd => Reading::Lsd,
            Reading::Lsd => Reading::Msd,
        }
    }
}

/// What a state emits: a residue, or an abstract letter (for automata whose
/// output alphabet is their own state set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Residue(Residue),
    Tag(u32),
}

impl Output {
    pub fn as_residue(&self) -> Option<&Residue> {
        match self {
            Output::Residue(r) => Some(r),
            Output::Tag(_) => None,
        }
    }

    fn kind(&self) -> (u8, u64, u32) {
        match self {
            Output::Residue(r) => (0, r.p(), r.alpha()),
            Output::Tag(_) => (1, 0, 0),
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Residue(r) => write!(f, "{}", r.value()),
            Output::Tag(t) => write!(f, "s{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfao {
    p: u64,
    reading: Reading,
    initial: usize,
    /// Row-major `states × p` transition table.
    delta: Vec<usize>,
    outputs: Vec<Output>,
}

/// Back-pointers of a breadth-first search over state pairs.
type Parents = HashMap<(usize, usize), Option<((usize, usize), u32)>>;

impl Dfao {
    pub fn new(p: u64, reading: Reading, initial: usize, delta: Vec<Vec<usize>>, outputs: Vec<Output>) -> Result<Self> {
        check_prime(p)?;
        let n = delta.len();
        if n == 0 || outputs.len() != n {
            return Err(Error::InvalidInput(format!("{n} transition rows but {} outputs", outputs.len())));
        }
        if initial >= n {
            return Err(Error::InvalidInput(format!("initial state {initial} out of range")));
        }
        let mut flat = Vec::with_capacity(n * p as usize);
        for (s, row) in delta.iter().enumerate() {
            if row.len() != p as usize {
                return Err(Error::InvalidInput(format!("state {s} has {} transitions, expected {p}", row.len())));
            }
            if let Some(t) = row.iter().find(|&&t| t >= n) {
                return Err(Error::InvalidInput(format!("transition from {s} to missing state {t}")));
            }
            flat.extend_from_slice(row);
        }
        let kind = outputs[0].kind();
        if outputs.iter().any(|o| o.kind() != kind) {
            return Err(Error::InvalidInput("outputs must share one kind and modulus".into()));
        }
        Ok(Dfao { p, reading, initial, delta: flat, outputs })
    }

    /// Internal constructor for tables already known to be consistent.
    pub(crate) fn from_parts(
        p: u64,
        reading: Reading,
        initial: usize,
        delta: Vec<usize>,
        outputs: Vec<Output>,
    ) -> Self {
        debug_assert_eq!(delta.len(), outputs.len() * p as usize);
        debug_assert!(initial < outputs.len());
        Dfao { p, reading, initial, delta, outputs }
    }

    /// One-state automaton emitting `output` everywhere.
    pub fn constant(p: u64, reading: Reading, output: Output) -> Result<Self> {
        check_prime(p)?;
        Ok(Dfao::from_parts(p, reading, 0, vec![0; p as usize], vec![output]))
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reading(&self) -> Reading {
        self.reading
    }

    #[inline]
    pub fn initial(&self) -> usize {
        self.initial
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.outputs.len()
    }

    #[inline]
    pub fn next(&self, state: usize, digit: u32) -> usize {
        self.delta[state * self.p as usize + digit as usize]
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[usize] {
        let p = self.p as usize;
        &self.delta[state * p..(state + 1) * p]
    }

    #[inline]
    pub fn output(&self, state: usize) -> &Output {
        &self.outputs[state]
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    /// Follows `digits` in the order given, regardless of the reading order.
    pub fn run(&self, state: usize, digits: &[u32]) -> usize {
        digits.iter().fold(state, |s, &d| self.next(s, d))
    }

    /// The state reached on the canonical representation of `n`.
    pub fn state_for(&self, n: u64) -> usize {
        let digits = match self.reading {
            Reading::Msd => digits_msd_unchecked(n, self.p),
            Reading::Lsd => digits_lsd_unchecked(n, self.p),
        };
        self.run(self.initial, &digits)
    }

    pub fn eval(&self, n: u64) -> &Output {
        self.output(self.state_for(n))
    }

    /// `eval(0), …, eval(count − 1)`.
    pub fn sequence(&self, count: usize) -> Vec<Output> {
        (0..count as u64).map(|n| *self.eval(n)).collect()
    }

    /// Replaces every output through `f`.
    pub fn map_outputs(&self, f: impl Fn(usize, &Output) -> Output) -> Result<Dfao> {
        let outputs: Vec<Output> = self.outputs.iter().enumerate().map(|(s, o)| f(s, o)).collect();
        let kind = outputs[0].kind();
        if outputs.iter().any(|o| o.kind() != kind) {
            return Err(Error::InvalidInput("outputs must share one kind and modulus".into()));
        }
        Ok(Dfao { outputs, ..self.clone() })
    }

    /// The same automaton with each state emitting its own index.
    pub fn state_valued(&self) -> Dfao {
        Dfao { outputs: (0..self.num_states() as u32).map(Output::Tag).collect(), ..self.clone() }
    }

    /// Restriction to states reachable from the initial state, renumbered in
    /// breadth-first order (digits ascending). The map sends old states to new
    /// ones; unreachable states map to `None`.
    pub fn prune(&self) -> (Dfao, Vec<Option<usize>>) {
        let p = self.p as usize;
        let mut map = vec![None; self.num_states()];
        let mut order = vec![self.initial];
        map[self.initial] = Some(0);
        let mut i = 0;
        while i < order.len() {
            for &t in self.row(order[i]) {
                if map[t].is_none() {
                    map[t] = Some(order.len());
                    order.push(t);
                }
            }
            i += 1;
        }
        let mut delta = Vec::with_capacity(order.len() * p);
        let mut outputs = Vec::with_capacity(order.len());
        for &s in &order {
            delta.extend(self.row(s).iter().map(|&t| map[t].expect("reachable")));
            outputs.push(self.outputs[s]);
        }
        (Dfao::from_parts(self.p, self.reading, 0, delta, outputs), map)
    }

    /// Moore partition refinement seeded by the outputs. Returns the minimal
    /// automaton (canonically numbered) and the class of every original state.
    pub fn minimize(&self) -> (Dfao, Vec<Option<usize>>) {
        let n = self.num_states();
        let p = self.p as usize;
        let letters: BTreeSet<&Output> = self.outputs.iter().collect();
        let letter_id: BTreeMap<&Output, usize> = letters.into_iter().enumerate().map(|(i, o)| (o, i)).collect();
        let mut class: Vec<usize> = self.outputs.iter().map(|o| letter_id[o]).collect();
        let mut count = letter_id.len();
        loop {
            let mut ids: HashMap<Vec<usize>, usize> = HashMap::with_capacity(count * 2);
            let mut next = Vec::with_capacity(n);
            let mut sig = Vec::with_capacity(p + 1);
            for s in 0..n {
                sig.clear();
                sig.push(class[s]);
                sig.extend(self.row(s).iter().map(|&t| class[t]));
                let fresh = ids.len();
                let id = *ids.entry(sig.clone()).or_insert(fresh);
                next.push(id);
            }
            let new_count = ids.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // Quotient, then canonical numbering by pruning.
        let mut rep = vec![usize::MAX; count];
        for s in 0..n {
            if rep[class[s]] == usize::MAX {
                rep[class[s]] = s;
            }
        }
        let mut delta = Vec::with_capacity(count * p);
        let mut outputs = Vec::with_capacity(count);
        for &s in &rep {
            delta.extend(self.row(s).iter().map(|&t| class[t]));
            outputs.push(self.outputs[s]);
        }
        let quotient = Dfao::from_parts(self.p, self.reading, class[self.initial], delta, outputs);
        let (min, canon) = quotient.prune();
        let merge = class.iter().map(|&c| canon[c]).collect();
        (min, merge)
    }

    /// True when padding with zeros on the insignificant side never changes
    /// the output: leading zeros for MSD, trailing zeros for LSD.
    pub fn is_zero_invariant(&self) -> bool {
        match self.reading {
            Reading::Msd => {
                let start = (self.initial, self.next(self.initial, 0));
                self.pair_search(self, &[start], |_, _| true).is_none()
            }
            Reading::Lsd => {
                let mut seen = vec![false; self.num_states()];
                let mut stack = vec![self.initial];
                seen[self.initial] = true;
                while let Some(s) = stack.pop() {
                    if self.outputs[self.next(s, 0)] != self.outputs[s] {
                        return false;
                    }
                    for &t in self.row(s) {
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
                true
            }
        }
    }

    /// Breadth-first search over pairs of states starting from `starts`
    /// (reached by the given digit words). Every visited pair is compared when
    /// `check` allows; returns the word leading to the first disagreement.
    fn pair_search(
        &self,
        other: &Dfao,
        starts: &[(usize, usize)],
        check: impl Fn(&[u32], u32) -> bool,
    ) -> Option<Vec<u32>> {
        let mut parent: Parents = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in starts {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(s) {
                e.insert(None);
                queue.push_back(s);
            }
        }
        let word_to = |parent: &HashMap<_, Option<((usize, usize), u32)>>, mut at: (usize, usize)| {
            let mut word = Vec::new();
            while let Some(Some((prev, d))) = parent.get(&at) {
                word.push(*d);
                at = *prev;
            }
            word.reverse();
            word
        };
        while let Some(pair @ (a, b)) = queue.pop_front() {
            if self.outputs[a] != other.outputs[b] {
                let word = word_to(&parent, pair);
                if check(&word, 0) {
                    return Some(word);
                }
            }
            for d in 0..self.p as u32 {
                let next = (self.next(a, d), other.next(b, d));
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                    e.insert(Some((pair, d)));
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// A canonical digit word (in this automaton's reading order) on which the
    /// two automata disagree, or `None` if they generate the same sequence.
    pub fn distinguishing_word(&self, other: &Dfao) -> Result<Option<Vec<u32>>> {
        if self.p != other.p {
            return Err(Error::InvalidParameter(format!("automata over different bases {} and {}", self.p, other.p)));
        }
        if self.reading != other.reading {
            return Err(Error::InvalidParameter("automata with different reading orders".into()));
        }
        let (a0, b0) = (self.initial, other.initial);
        if self.outputs[a0] != other.outputs[b0] {
            return Ok(Some(Vec::new()));
        }
        match self.reading {
            Reading::Msd => {
                // Canonical words start with a non-zero digit; after that anything goes.
                for d in 1..self.p as u32 {
                    let start = (self.next(a0, d), other.next(b0, d));
                    if let Some(mut w) = self.pair_search(other, &[start], |_, _| true) {
                        w.insert(0, d);
                        return Ok(Some(w));
                    }
                }
                Ok(None)
            }
            Reading::Lsd => {
                // Canonical words end with a non-zero digit: explore every pair,
                // compare only the images under non-zero digits.
                let mut parent: Parents =
                    HashMap::from([((a0, b0), None)]);
                let mut queue = VecDeque::from([(a0, b0)]);
                while let Some(pair @ (a, b)) = queue.pop_front() {
                    for d in 0..self.p as u32 {
                        let next = (self.next(a, d), other.next(b, d));
                        if d != 0 && self.outputs[next.0] != other.outputs[next.1] {
                            let mut word = vec![d];
                            let mut at = pair;
                            while let Some(Some((prev, dd))) = parent.get(&at) {
                                word.push(*dd);
                                at = *prev;
                            }
                            word.reverse();
                            return Ok(Some(word));
                        }
                        if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                            e.insert(Some((pair, d)));
                            queue.push_back(next);
                        }
                    }
                }
                Ok(None)
            }
        }
    }

    /// Exact behavioural equality on every `n ≥ 0`, decided on the product automaton.
    pub fn equal_behavior(&self, other: &Dfao) -> Result<bool> {
        Ok(self.distinguishing_word(other)?.is_none())
    }

    /// Every output emitted on some canonical input, by graph reachability.
    pub fn reachable_outputs(&self) -> BTreeSet<Output> {
        let mut out = BTreeSet::from([self.outputs[self.initial]]);
        let mut seen = vec![false; self.num_states()];
        let mut stack = Vec::new();
        match self.reading {
            Reading::Msd => {
                for d in 1..self.p as u32 {
                    let t = self.next(self.initial, d);
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
                while let Some(s) = stack.pop() {
                    out.insert(self.outputs[s]);
                    for &t in self.row(s) {
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
            }
            Reading::Lsd => {
                seen[self.initial] = true;
                stack.push(self.initial);
                while let Some(s) = stack.pop() {
                    for (d, &t) in self.row(s).iter().enumerate() {
                        if d != 0 {
                            out.insert(self.outputs[t]);
                        }
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
            }
        }
        out
    }

    /// An automaton with the opposite reading order generating the same
    /// sequence. Requires zero-invariance. States of the result are the
    /// functions `q ↦ τ(δ(q, w))` for the digits `w` read so far; the result is
    /// pruned and minimized.
    pub fn reverse_reading(&self) -> Result<Dfao> {
        if !self.is_zero_invariant() {
            return Err(Error::Normalization("reading order can only be reversed for zero-invariant automata".into()));
        }
        let (m, _) = self.minimize();
        let p = m.p as usize;
        let letters: BTreeSet<&Output> = m.outputs.iter().collect();
        let letters: Vec<Output> = letters.into_iter().copied().collect();
        let letter_id: HashMap<Output, u32> = letters.iter().enumerate().map(|(i, o)| (*o, i as u32)).collect();

        let first: Vec<u32> = m.outputs.iter().map(|o| letter_id[o]).collect();
        let mut index: HashMap<Vec<u32>, usize> = HashMap::from([(first.clone(), 0)]);
        let mut states = vec![first];
        let mut delta: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < states.len() {
            for d in 0..p as u32 {
                let g: Vec<u32> = (0..m.num_states()).map(|q| states[i][m.next(q, d)]).collect();
                let fresh = states.len();
                let id = *index.entry(g.clone()).or_insert(fresh);
                if id == fresh {
                    if fresh >= STATE_BUDGET {
                        return Err(Error::Budget(format!("reversal exceeded {STATE_BUDGET} states")));
                    }
                    states.push(g);
                }
                delta.push(id);
            }
            i += 1;
        }
        let outputs = states.iter().map(|g| letters[g[m.initial] as usize]).collect();
        let rev = Dfao::from_parts(m.p, m.reading.flipped(), 0, delta, outputs);
        Ok(rev.minimize().0)
    }

    /// Graphviz rendering, states in index order and edges by digit.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph dfao {{");
        let _ = writeln!(s, "  rankdir=LR; start [shape=point]; start -> {};", self.initial);
        for (i, o) in self.outputs.iter().enumerate() {
            let _ = writeln!(s, "  {i} [label=\"{i} / {o}\"];");
        }
        for st in 0..self.num_states() {
            for (d, t) in self.row(st).iter().enumerate() {
                let _ = writeln!(s, "  {st} -> {t} [label=\"{d}\"];");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Serialized form: `{"p", "reading", "initial", "delta": [[...]], "outputs": [...]}`.
#[derive(Serialize, Deserialize)]
struct DfaoJson {
    p: u64,
    reading: Reading,
    initial: usize,
    delta: Vec<Vec<usize>>,
    outputs: Vec<Output>,
}

impl Serialize for Dfao {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DfaoJson {
            p: self.p,
            reading: self.reading,
            initial: self.initial,
            delta: (0..self.num_states()).map(|q| self.row(q).to_vec()).collect(),
            outputs: self.outputs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dfao {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DfaoJson::deserialize(d)?;
        Dfao::new(j.p, j.reading, j.initial, j.delta, j.outputs).map_err(serde::de::Error::custom)
    }
}

/// Reachable state set.
pub fn reachable_states(m: &Dfao) -> HashSet<usize> {
    let mut seen = HashSet::from([m.initial()]);
    let mut stack = vec![m.initial()];
    while let Some(s) = stack.pop() {
        for &t in m.row(s) {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::residue::Modulus;

    /// The six-state direct-reading machine for Catalan numbers mod 4, with
    /// states numbered s0..s5 in the conventional order.
    pub fn catalan_mod4() -> Dfao {
        let m = Modulus::new(2, 2).unwrap();
        let out = |v| Output::Residue(m.residue(v));
        Dfao::new(
            2,
            Reading::Msd,
            0,
            vec![vec![0, 1], vec![2, 3], vec![2, 4], vec![5, 3], vec![5, 4], vec![5, 5]],
            vec![out(1), out(1), out(2), out(1), out(2), out(0)],
        )
        .unwrap()
    }

    /// LSD machine computing n mod 3 in base 2: state (value, weight).
    pub fn mod3_lsd() -> Dfao {
        let m = Modulus::new(3, 1).unwrap();
        let idx = |v: usize, w: usize| v * 2 + if w == 1 { 0 } else { 1 };
        let mut delta = vec![vec![0; 2]; 6];
        let mut outputs = vec![Output::Tag(0); 6];
        for v in 0..3 {
            for (wi, w) in [1usize, 2].into_iter().enumerate() {
                let s = v * 2 + wi;
                outputs[s] = Output::Residue(m.residue(v as u64));
                for (d, t) in delta[s].iter_mut().enumerate() {
                    *t = idx((v + d * w) % 3, (w * 2) % 3);
                }
            }
        }
        Dfao::new(2, Reading::Lsd, idx(0, 1), delta, outputs).unwrap()
    }
}
