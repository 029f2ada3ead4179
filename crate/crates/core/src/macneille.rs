//! Dedekind-MacNeille completion of finite posets and the solvability
//! criterion for abstract equations `T(A) = F` over completed posets.
//!
//! Subsets of a poset are bitsets (`u64`), so posets hold at most 64
//! elements. A cut is a pair `(A, B)` with `B` the upper bounds of `A` and
//! `A` the lower bounds of `B`; cuts are ordered by inclusion of `A`.
//!
//! Cuts are generated as the intersection closure of the principal ideals
//! `↓y` (plus the whole set), which is the same family as
//! `{ lower(upper(S)) : S ⊆ P }` without scanning all `2^n` subsets.
//! [`cuts_by_subset_scan`] is the direct scan, kept as an oracle.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

pub const MAX_ELEMENTS: usize = 64;
/// Largest poset the exhaustive subset scans accept.
pub const MAX_SCAN_ELEMENTS: usize = 16;
const MAX_CUTS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PosetError {
    #[error("relation is not reflexive at {0:?}")]
    NotReflexive(String),
    #[error("relation is not antisymmetric: {0:?} and {1:?} are mutually below each other")]
    NotAntisymmetric(String, String),
    #[error("relation is not transitive: {0:?} <= {1:?} <= {2:?}")]
    NotTransitive(String, String, String),
    #[error("relation matrix has {got} entries, expected {expected}")]
    BadMatrix { expected: usize, got: usize },
    #[error("{0} elements exceed the limit of {1}; sample a sub-poset instead")]
    TooLarge(usize, usize),
    #[error("completion would exceed {0} cuts")]
    TooManyCuts(usize),
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("map sends element {0} outside the codomain")]
    BadMap(usize),
    #[error("cut index {0} is out of range")]
    BadCut(usize),
}

pub type Bits = u64;

fn bit(i: usize) -> Bits {
    1 << i
}

fn full(n: usize) -> Bits {
    if n == 64 {
        Bits::MAX
    } else {
        bit(n) - 1
    }
}

fn members(set: Bits) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| set & bit(i) != 0)
}

/// Finite partially ordered set with a dense relation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePoset {
    labels: Vec<String>,
    leq: Vec<bool>,
    below: Vec<Bits>,
    above: Vec<Bits>,
}

impl FinitePoset {
    /// `leq[a * n + b]` is `a <= b`. Validated.
    pub fn new(labels: Vec<String>, leq: Vec<bool>) -> Result<Self, PosetError> {
        let n = labels.len();
        if n > MAX_ELEMENTS {
            return Err(PosetError::TooLarge(n, MAX_ELEMENTS));
        }
        if leq.len() != n * n {
            return Err(PosetError::BadMatrix { expected: n * n, got: leq.len() });
        }
        for a in 0..n {
            if !leq[a * n + a] {
                return Err(PosetError::NotReflexive(labels[a].clone()));
            }
            for b in 0..n {
                if a != b && leq[a * n + b] && leq[b * n + a] {
                    return Err(PosetError::NotAntisymmetric(labels[a].clone(), labels[b].clone()));
                }
                if !leq[a * n + b] {
                    continue;
                }
                for c in 0..n {
                    if leq[b * n + c] && !leq[a * n + c] {
                        return Err(PosetError::NotTransitive(labels[a].clone(), labels[b].clone(), labels[c].clone()));
                    }
                }
            }
        }
        let below = (0..n).map(|b| (0..n).filter(|&a| leq[a * n + b]).fold(0, |s, a| s | bit(a))).collect();
        let above = (0..n).map(|a| (0..n).filter(|&b| leq[a * n + b]).fold(0, |s, b| s | bit(b))).collect();
        Ok(Self { labels, leq, below, above })
    }

    /// Reflexive-transitive closure of the given strict relations.
    pub fn from_relations(labels: Vec<String>, less: &[(usize, usize)]) -> Result<Self, PosetError> {
        let n = labels.len();
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for &(a, b) in less {
            if a >= n || b >= n {
                return Err(PosetError::BadMap(a.max(b)));
            }
            leq[a * n + b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        Self::new(labels, leq)
    }

    pub fn chain(n: usize) -> Self {
        let labels = (0..n).map(|i| format!("c{i}")).collect();
        let less: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_relations(labels, &less).expect("chains are posets")
    }

    pub fn antichain(n: usize) -> Self {
        let labels = (0..n).map(|i| format!("a{i}")).collect();
        Self::from_relations(labels, &[]).expect("antichains are posets")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a * self.len() + b]
    }

    pub fn all(&self) -> Bits {
        full(self.len())
    }

    /// Elements above every member of `set`.
    pub fn upper_bounds(&self, set: Bits) -> Bits {
        members(set).fold(self.all(), |acc, a| acc & self.above[a])
    }

    /// Elements below every member of `set`.
    pub fn lower_bounds(&self, set: Bits) -> Bits {
        members(set).fold(self.all(), |acc, b| acc & self.below[b])
    }

    /// `lower(upper(set))`.
    pub fn closure(&self, set: Bits) -> Bits {
        self.lower_bounds(self.upper_bounds(set))
    }

    pub fn principal_ideal(&self, a: usize) -> Bits {
        self.below[a]
    }

    /// Least element of `set`, if it has one.
    pub fn least_of(&self, set: Bits) -> Option<usize> {
        members(set).find(|&a| members(set).all(|b| self.leq(a, b)))
    }

    pub fn greatest_of(&self, set: Bits) -> Option<usize> {
        members(set).find(|&a| members(set).all(|b| self.leq(b, a)))
    }

    /// Supremum of `set` in the poset, if it exists.
    pub fn sup(&self, set: Bits) -> Option<usize> {
        self.least_of(self.upper_bounds(set))
    }

    pub fn inf(&self, set: Bits) -> Option<usize> {
        self.greatest_of(self.lower_bounds(set))
    }

    /// Cover pairs `(a, b)`: `a < b` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a == b || !self.leq(a, b) {
                    continue;
                }
                let between = (0..n).any(|c| c != a && c != b && self.leq(a, c) && self.leq(c, b));
                if !between {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Parse the adjacency-list text format: one element per line, optionally
    /// followed by `:` and the elements covering it. `#` starts a comment.
    ///
    /// ```text
    /// bottom: a b
    /// a: top
    /// b: top
    /// top
    /// ```
    pub fn from_text(text: &str) -> Result<Self, PosetError> {
        let mut labels: Vec<String> = Vec::new();
        let mut less = Vec::new();
        let intern = |name: &str, labels: &mut Vec<String>| -> usize {
            match labels.iter().position(|l| l == name) {
                Some(i) => i,
                None => {
                    labels.push(name.to_string());
                    labels.len() - 1
                }
            }
        };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default();
            if line.trim().is_empty() {
                continue;
            }
            let (head, tail) = match line.find(':') {
                Some(p) => (&line[..p], Some((p + 1, &line[p + 1..]))),
                None => (line, None),
            };
            let name = head.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                let column = head.find(|c: char| !c.is_whitespace()).map_or(1, |c| c + 1);
                return Err(PosetError::Parse { line: no + 1, column, msg: format!("expected a single element name, got {:?}", name) });
            }
            let a = intern(name, &mut labels);
            if let Some((_, rest)) = tail {
                for cover in rest.split_whitespace() {
                    let b = intern(cover, &mut labels);
                    less.push((a, b));
                }
            }
        }
        if labels.len() > MAX_ELEMENTS {
            return Err(PosetError::TooLarge(labels.len(), MAX_ELEMENTS));
        }
        Self::from_relations(labels, &less)
    }

    pub fn to_text(&self) -> String {
        let mut covers: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (a, b) in self.covers() {
            covers[a].push(b);
        }
        let mut s = String::new();
        for (a, cs) in covers.iter().enumerate() {
            s.push_str(&self.labels[a]);
            if !cs.is_empty() {
                s.push(':');
                for &b in cs {
                    s.push(' ');
                    s.push_str(&self.labels[b]);
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cut {
    pub lower: Bits,
    pub upper: Bits,
}

/// The completion: all cuts of `base`, ordered by inclusion of lower sets.
#[derive(Debug, Clone)]
pub struct CutLattice {
    base: FinitePoset,
    cuts: Vec<Cut>,
    index: HashMap<Bits, usize>,
    embed: Vec<usize>,
}

fn cut_order_key(set: Bits) -> (u32, Bits) {
    (set.count_ones(), set)
}

impl CutLattice {
    fn from_lower_sets(base: FinitePoset, lowers: BTreeSet<(u32, Bits)>) -> Self {
        let cuts: Vec<Cut> = lowers.into_iter().map(|(_, a)| Cut { lower: a, upper: base.upper_bounds(a) }).collect();
        let index: HashMap<Bits, usize> = cuts.iter().enumerate().map(|(i, c)| (c.lower, i)).collect();
        let embed = (0..base.len()).map(|x| index[&base.principal_ideal(x)]).collect();
        Self { base, cuts, index, embed }
    }

    pub fn base(&self) -> &FinitePoset {
        &self.base
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Index of the principal cut `<x]`.
    pub fn embed(&self, x: usize) -> usize {
        self.embed[x]
    }

    pub fn embedding(&self) -> &[usize] {
        &self.embed
    }

    pub fn find(&self, lower: Bits) -> Option<usize> {
        self.index.get(&lower).copied()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.cuts[i].lower & !self.cuts[j].lower == 0
    }

    pub fn bottom(&self) -> usize {
        0
    }

    pub fn top(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn meet(&self, i: usize, j: usize) -> usize {
        self.index[&(self.cuts[i].lower & self.cuts[j].lower)]
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        self.index[&self.base.closure(self.cuts[i].lower | self.cuts[j].lower)]
    }

    /// Join of any family; the empty join is the bottom cut.
    pub fn join_all(&self, family: impl IntoIterator<Item = usize>) -> usize {
        let union = family.into_iter().fold(0, |acc, i| acc | self.cuts[i].lower);
        self.index[&self.base.closure(union)]
    }

    /// Meet of any family; the empty meet is the top cut.
    pub fn meet_all(&self, family: impl IntoIterator<Item = usize>) -> usize {
        let inter = family.into_iter().fold(self.base.all(), |acc, i| acc & self.cuts[i].lower);
        self.index[&inter]
    }

    pub fn is_principal(&self, i: usize) -> bool {
        self.embed.contains(&i)
    }

    /// Bottom cut not coming from an element of the base poset.
    pub fn is_adjoined_bottom(&self, i: usize) -> bool {
        i == self.bottom() && !self.is_principal(i)
    }

    pub fn is_adjoined_top(&self, i: usize) -> bool {
        i == self.top() && !self.is_principal(i)
    }

    pub fn cut_label(&self, i: usize) -> String {
        let names: Vec<&str> = members(self.cuts[i].lower).map(|a| self.base.labels[a].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// The cuts as a poset in their own right.
    pub fn to_poset(&self) -> FinitePoset {
        let n = self.len();
        let labels = (0..n).map(|i| self.cut_label(i)).collect();
        let leq = (0..n * n).map(|k| self.leq(k / n, k % n)).collect();
        FinitePoset::new(labels, leq).expect("inclusion is a partial order")
    }

    /// Hasse diagram as a dot-style edge list.
    pub fn to_dot(&self) -> String {
        let p = self.to_poset();
        let mut s = String::from("digraph cuts {\n");
        for i in 0..self.len() {
            let mut attrs = format!("label=\"{}\"", self.cut_label(i));
            if let Some(x) = self.embed.iter().position(|&c| c == i) {
                let _ = write!(attrs, ", element=\"{}\"", self.base.labels[x]);
            }
            if self.is_adjoined_bottom(i) || self.is_adjoined_top(i) {
                attrs.push_str(", adjoined=true");
            }
            let _ = writeln!(s, "  c{i} [{attrs}];");
        }
        for (a, b) in p.covers() {
            let _ = writeln!(s, "  c{a} -> c{b};");
        }
        s.push_str("}\n");
        s
    }
}

/// Dedekind-MacNeille completion of `poset`.
pub fn macneille_complete(poset: &FinitePoset) -> Result<CutLattice, PosetError> {
    let n = poset.len();
    let mut found: BTreeSet<(u32, Bits)> = BTreeSet::new();
    let mut queue: Vec<Bits> = Vec::new();
    for seed in std::iter::once(poset.all()).chain((0..n).map(|y| poset.principal_ideal(y))) {
        if found.insert(cut_order_key(seed)) {
            queue.push(seed);
        }
    }
    let generators: Vec<Bits> = (0..n).map(|y| poset.principal_ideal(y)).collect();
    while let Some(set) = queue.pop() {
        for g in &generators {
            let next = set & g;
            if found.insert(cut_order_key(next)) {
                if found.len() > MAX_CUTS {
                    return Err(PosetError::TooManyCuts(MAX_CUTS));
                }
                queue.push(next);
            }
        }
    }
    Ok(CutLattice::from_lower_sets(poset.clone(), found))
}

/// Every lower set `lower(upper(S))` over all `2^n` subsets `S`.
pub fn cuts_by_subset_scan(poset: &FinitePoset) -> Result<BTreeSet<Bits>, PosetError> {
    let n = poset.len();
    if n > MAX_SCAN_ELEMENTS {
        return Err(PosetError::TooLarge(n, MAX_SCAN_ELEMENTS));
    }
    Ok((0..(1u64 << n)).map(|s| poset.closure(s)).collect())
}

/// Checks, by order search alone, that every pair of cuts has a least upper
/// and greatest lower bound and that a bottom and top exist.
pub fn is_complete_lattice(lattice: &CutLattice) -> bool {
    let n = lattice.len();
    if n == 0 {
        return false;
    }
    let least_of = |cands: &[usize]| cands.iter().copied().find(|&a| cands.iter().all(|&b| lattice.leq(a, b)));
    let greatest_of = |cands: &[usize]| cands.iter().copied().find(|&a| cands.iter().all(|&b| lattice.leq(b, a)));
    let all: Vec<usize> = (0..n).collect();
    if least_of(&all).is_none() || greatest_of(&all).is_none() {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let ub: Vec<usize> = (0..n).filter(|&k| lattice.leq(i, k) && lattice.leq(j, k)).collect();
            let lb: Vec<usize> = (0..n).filter(|&k| lattice.leq(k, i) && lattice.leq(k, j)).collect();
            match (least_of(&ub), greatest_of(&lb)) {
                (Some(u), Some(l)) if u == lattice.join(i, j) && l == lattice.meet(i, j) => {}
                _ => return false,
            }
        }
    }
    true
}

/// `x <= y` iff `embed(x) ⊑ embed(y)`, and `embed` is injective.
pub fn is_order_embedding(lattice: &CutLattice) -> bool {
    let p = lattice.base();
    (0..p.len()).all(|x| (0..p.len()).all(|y| p.leq(x, y) == lattice.leq(lattice.embed(x), lattice.embed(y)) && (x == y || lattice.embed(x) != lattice.embed(y))))
}

/// For every subset of the base with a supremum (infimum) in the base, the
/// join (meet) of its embedded image is the embedded supremum (infimum).
pub fn preserves_bounds_check(poset: &FinitePoset, lattice: &CutLattice) -> Result<bool, PosetError> {
    let n = poset.len();
    if n > MAX_SCAN_ELEMENTS {
        return Err(PosetError::TooLarge(n, MAX_SCAN_ELEMENTS));
    }
    for s in 0..(1u64 << n) {
        if let Some(sup) = poset.sup(s) {
            if lattice.join_all(members(s).map(|x| lattice.embed(x))) != lattice.embed(sup) {
                return Ok(false);
            }
        }
        if let Some(inf) = poset.inf(s) {
            if lattice.meet_all(members(s).map(|x| lattice.embed(x))) != lattice.embed(inf) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Completing a complete lattice changes nothing: every cut of the cut
/// lattice is principal, so the embedding is an order isomorphism.
pub fn completion_is_idempotent(lattice: &CutLattice) -> Result<bool, PosetError> {
    let again = macneille_complete(&lattice.to_poset())?;
    Ok(again.len() == lattice.len() && (0..again.len()).all(|i| again.is_principal(i)) && is_order_embedding(&again))
}

/// Equation `T(A) = F` for a map `T` from a bare set `X` into a poset `Y`.
#[derive(Debug, Clone)]
pub struct AbstractEquation {
    pub domain: Vec<String>,
    pub codomain: FinitePoset,
    pub map: Vec<usize>,
}

impl AbstractEquation {
    pub fn new(domain: Vec<String>, codomain: FinitePoset, map: Vec<usize>) -> Result<Self, PosetError> {
        if map.len() != domain.len() {
            return Err(PosetError::BadMatrix { expected: domain.len(), got: map.len() });
        }
        if let Some(i) = map.iter().position(|&y| y >= codomain.len()) {
            return Err(PosetError::BadMap(i));
        }
        Ok(Self { domain, codomain, map })
    }
}

/// `X_T`: the quotient of `X` by `T(x) = T(x')`, ordered by `T(x) <= T(x')`.
#[derive(Debug, Clone)]
pub struct PullbackPoset {
    pub poset: FinitePoset,
    /// Class of each element of `X`.
    pub class_of: Vec<usize>,
    /// `T` value shared by each class.
    pub image: Vec<usize>,
}

pub fn pullback_order(eq: &AbstractEquation) -> PullbackPoset {
    let mut image: Vec<usize> = Vec::new();
    let mut names: Vec<Vec<&str>> = Vec::new();
    let mut class_of = Vec::with_capacity(eq.map.len());
    for (x, &y) in eq.map.iter().enumerate() {
        let c = match image.iter().position(|&v| v == y) {
            Some(c) => c,
            None => {
                image.push(y);
                names.push(Vec::new());
                image.len() - 1
            }
        };
        names[c].push(&eq.domain[x]);
        class_of.push(c);
    }
    let k = image.len();
    let labels = names.iter().map(|ns| ns.join("|")).collect();
    let leq = (0..k * k).map(|i| eq.codomain.leq(image[i / k], image[i % k])).collect();
    let poset = FinitePoset::new(labels, leq).expect("restriction of a partial order");
    PullbackPoset { poset, class_of, image }
}

/// Outcome of the sup/inf solvability test for one right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Solvability {
    pub solvable: bool,
    /// `sup { T#(U) : T#(U) ⊑ F }` as a cut index of `Y#`.
    pub lower_side: usize,
    /// `inf { T#(V) : F ⊑ T#(V) }` as a cut index of `Y#`.
    pub upper_side: usize,
    /// A cut of `X_T#` with `T#(A) = F`, when solvable.
    pub witness: Option<usize>,
}

/// `X_T#`, `Y#` and the extension `T#` between them.
#[derive(Debug, Clone)]
pub struct CompletedEquation {
    pub pullback: PullbackPoset,
    pub domain: CutLattice,
    pub codomain: CutLattice,
    t_sharp: Vec<usize>,
}

impl CompletedEquation {
    pub fn new(eq: &AbstractEquation) -> Result<Self, PosetError> {
        let pullback = pullback_order(eq);
        let domain = macneille_complete(&pullback.poset)?;
        let codomain = macneille_complete(&eq.codomain)?;
        // T# on a cut: direct image, then closure in Y
        let t_sharp = domain
            .cuts()
            .iter()
            .map(|c| {
                let img = members(c.lower).fold(0, |acc, cls| acc | bit(pullback.image[cls]));
                codomain.find(eq.codomain.closure(img)).expect("closures are cuts")
            })
            .collect();
        Ok(Self { pullback, domain, codomain, t_sharp })
    }

    pub fn t_sharp(&self, a: usize) -> usize {
        self.t_sharp[a]
    }

    pub fn criterion(&self, f: usize) -> Result<Solvability, PosetError> {
        if f >= self.codomain.len() {
            return Err(PosetError::BadCut(f));
        }
        let y = &self.codomain;
        let below: Vec<usize> = (0..self.domain.len()).filter(|&u| y.leq(self.t_sharp[u], f)).collect();
        let above: Vec<usize> = (0..self.domain.len()).filter(|&v| y.leq(f, self.t_sharp[v])).collect();
        let lower_side = y.join_all(below.iter().map(|&u| self.t_sharp[u]));
        let upper_side = y.meet_all(above.iter().map(|&v| self.t_sharp[v]));
        let solvable = lower_side == upper_side;
        let witness = solvable.then(|| self.domain.join_all(below.iter().copied()));
        Ok(Solvability { solvable, lower_side, upper_side, witness })
    }

    /// All cuts `A` of `X_T#` with `T#(A) = F`, by exhaustive search.
    pub fn brute_force_solutions(&self, f: usize) -> Vec<usize> {
        (0..self.domain.len()).filter(|&a| self.t_sharp[a] == f).collect()
    }
}

/// Evaluate the sup = inf criterion for `T#(A) = F` with `F` a cut of `Y#`.
pub fn solvability_criterion(eq: &AbstractEquation, f: usize) -> Result<Solvability, PosetError> {
    CompletedEquation::new(eq)?.criterion(f)
}
