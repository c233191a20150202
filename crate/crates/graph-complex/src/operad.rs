//! The cyclic Lie and cyclic commutative operads.
//!
//! `cyc C(S)` for `|S| = k` is realized inside the cyclic associative
//! span: the vector space spanned by cyclic words visiting each element
//! of S exactly once. The extended symmetric-group action is then pure
//! relabeling of letters, and partial composition is splicing of cyclic
//! words. The Lie operad sits inside as the span of commutator
//! expansions of left-normed brackets; `cyc Com(S)` is one-dimensional
//! and is represented by the empty word.

use crate::linalg::{rat, Rat, SpanSolver};
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Letter = u16;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, serde::Serialize, serde::Deserialize)]
pub enum OperadTag {
    Lie,
    Com,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum OperadError {
    #[error("arity {0} below minimum 2")]
    ArityTooSmall(usize),
    #[error("map is not a bijection of the arity set")]
    NotABijection,
    #[error("slot {0} not in the arity set")]
    BadSlot(Letter),
}

/// A cyclic word: a sequence of distinct letters up to rotation,
/// normalized so the smallest letter comes first. The empty word is the
/// basis element of the commutative operad.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CyclicWord(Vec<Letter>);

impl CyclicWord {
    pub fn new(seq: Vec<Letter>) -> Self {
        if seq.is_empty() {
            return CyclicWord(seq);
        }
        let min_pos = seq
            .iter()
            .enumerate()
            .min_by_key(|(_, l)| **l)
            .map(|(i, _)| i)
            .unwrap();
        let mut rotated = Vec::with_capacity(seq.len());
        rotated.extend_from_slice(&seq[min_pos..]);
        rotated.extend_from_slice(&seq[..min_pos]);
        CyclicWord(rotated)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn relabel(&self, map: impl Fn(Letter) -> Letter) -> CyclicWord {
        CyclicWord::new(self.0.iter().map(|l| map(*l)).collect())
    }

    /// Rotate so `at` comes first, then drop it. Panics if absent.
    fn cut(&self, at: Letter) -> Vec<Letter> {
        let pos = self.0.iter().position(|l| *l == at).expect("letter in word");
        let mut out = Vec::with_capacity(self.0.len() - 1);
        out.extend_from_slice(&self.0[pos + 1..]);
        out.extend_from_slice(&self.0[..pos]);
        out
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Sparse linear combination of cyclic words.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct WordSum(pub BTreeMap<CyclicWord, Rat>);

impl WordSum {
    pub fn zero() -> Self {
        WordSum(BTreeMap::new())
    }

    pub fn single(w: CyclicWord, c: Rat) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(w, c);
        }
        WordSum(m)
    }

    pub fn add_term(&mut self, w: CyclicWord, c: Rat) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry(w).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            // re-fetch key to remove; avoid holding borrow
        }
        self.0.retain(|_, v| !v.is_zero());
    }

    pub fn add_scaled(&mut self, other: &WordSum, c: &Rat) {
        if c.is_zero() {
            return;
        }
        for (w, v) in &other.0 {
            let slot = self.0.entry(w.clone()).or_insert_with(Rat::zero);
            *slot += v * c;
        }
        self.0.retain(|_, v| !v.is_zero());
    }

    pub fn scale(&mut self, c: &Rat) {
        if c.is_zero() {
            self.0.clear();
            return;
        }
        for v in self.0.values_mut() {
            *v *= c;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn relabel(&self, map: impl Fn(Letter) -> Letter + Copy) -> WordSum {
        let mut out = WordSum::zero();
        for (w, c) in &self.0 {
            out.add_term(w.relabel(map), c.clone());
        }
        out
    }
}

/// An element of `cyc C(k)` over the standard arity set `{0, .., k-1}`.
#[derive(Clone, PartialEq, Debug)]
pub struct CyclicOp {
    pub tag: OperadTag,
    pub arity: usize,
    pub words: WordSum,
}

impl CyclicOp {
    pub fn zero(tag: OperadTag, arity: usize) -> Self {
        CyclicOp { tag, arity, words: WordSum::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_zero()
    }
}

/// The generator of `cyc C(2)`.
pub fn identity2(tag: OperadTag) -> CyclicOp {
    match tag {
        OperadTag::Com => CyclicOp {
            tag,
            arity: 2,
            words: WordSum::single(CyclicWord::new(vec![]), rat(1)),
        },
        OperadTag::Lie => lie_cyclic_basis(2).expect("arity 2 valid").pop().unwrap(),
    }
}

fn expand_left_normed(letters: &[Letter]) -> Vec<(Vec<Letter>, i64)> {
    // [[..[x_0, x_1], ..], x_r] expanded into associative words
    assert!(!letters.is_empty());
    let mut terms: Vec<(Vec<Letter>, i64)> = vec![(vec![letters[0]], 1)];
    for x in &letters[1..] {
        let mut next = Vec::with_capacity(terms.len() * 2);
        for (w, c) in &terms {
            let mut wx = w.clone();
            wx.push(*x);
            next.push((wx, *c));
            let mut xw = vec![*x];
            xw.extend_from_slice(w);
            next.push((xw, -*c));
        }
        terms = next;
    }
    terms
}

/// Canonical basis of `cyc Lie(k)`: left-normed brackets on the inputs
/// `{0, .., k-2}` starting with letter 0, the output being `k-1`, ordered
/// lexicographically by the bracket's remaining letter sequence. The
/// basis has `(k-2)!` elements.
pub fn lie_cyclic_basis(k: usize) -> Result<Vec<CyclicOp>, OperadError> {
    if k < 2 {
        return Err(OperadError::ArityTooSmall(k));
    }
    let rest: Vec<Letter> = (1..=(k - 2) as Letter).collect();
    let mut basis = Vec::new();
    for perm in permutations(&rest) {
        let mut letters = vec![0 as Letter];
        letters.extend_from_slice(&perm);
        let mut words = WordSum::zero();
        for (w, c) in expand_left_normed(&letters) {
            let mut cyc = w;
            cyc.push((k - 1) as Letter);
            words.add_term(CyclicWord::new(cyc), rat(c));
        }
        basis.push(CyclicOp { tag: OperadTag::Lie, arity: k, words });
    }
    Ok(basis)
}

fn permutations(items: &[Letter]) -> Vec<Vec<Letter>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, *x);
            out.push(p);
        }
    }
    out
}

/// Left action of a bijection of the arity set: `perm[i]` is the image of
/// letter `i`. Satisfies `act(s . t, x) = act(s, act(t, x))`.
pub fn act(perm: &[Letter], x: &CyclicOp) -> Result<CyclicOp, OperadError> {
    if perm.len() != x.arity {
        return Err(OperadError::NotABijection);
    }
    let mut seen = vec![false; x.arity];
    for p in perm {
        let idx = *p as usize;
        if idx >= x.arity || seen[idx] {
            return Err(OperadError::NotABijection);
        }
        seen[idx] = true;
    }
    Ok(CyclicOp {
        tag: x.tag,
        arity: x.arity,
        words: x.words.relabel(|l| perm[l as usize]),
    })
}

/// Splice `q` (cut at `t`) into the position of `s` in `p`. Letters are
/// arbitrary; the caller guarantees disjointness. Works on a single word
/// pair; signless since the operads here sit in degree zero.
pub fn splice(pw: &CyclicWord, s: Letter, qw: &CyclicWord, t: Letter) -> CyclicWord {
    let mut out = Vec::with_capacity(pw.len() + qw.len() - 2);
    let q_lin = qw.cut(t);
    for l in pw.letters() {
        if *l == s {
            out.extend_from_slice(&q_lin);
        } else {
            out.push(*l);
        }
    }
    CyclicWord::new(out)
}

/// Partial composition on word sums over arbitrary disjoint letter sets;
/// used by the graph differentials where letters are flag ids.
pub fn compose_words(p: &WordSum, s: Letter, q: &WordSum, t: Letter, tag: OperadTag) -> WordSum {
    let mut out = WordSum::zero();
    match tag {
        OperadTag::Com => {
            let mut c = Rat::zero();
            for (_, a) in &p.0 {
                for (_, b) in &q.0 {
                    c += a * b;
                }
            }
            out.add_term(CyclicWord::new(vec![]), c);
        }
        OperadTag::Lie => {
            for (pw, a) in &p.0 {
                for (qw, b) in &q.0 {
                    out.add_term(splice(pw, s, qw, t), a * b);
                }
            }
        }
    }
    out
}

/// Cyclic-operad partial composition on standard arity sets. The output
/// arity set `(S \ s) + (T \ t)` carries the order
/// `S_{<s} < T_{>t} < T_{<t} < S_{>s}` and is relabeled to `{0, ..}`
/// order-preservingly.
pub fn compose(
    p: &CyclicOp,
    s: Letter,
    q: &CyclicOp,
    t: Letter,
) -> Result<CyclicOp, OperadError> {
    assert_eq!(p.tag, q.tag, "operad tags must match");
    let (k, l) = (p.arity, q.arity);
    if (s as usize) >= k {
        return Err(OperadError::BadSlot(s));
    }
    if (t as usize) >= l {
        return Err(OperadError::BadSlot(t));
    }
    let shift = k as Letter;
    let t_sh = t + shift;
    // output order: S_{<s} < T_{>t} < T_{<t} < S_{>s}
    let mut order: Vec<Letter> = Vec::with_capacity(k + l - 2);
    order.extend(0..s);
    order.extend((t_sh + 1)..(shift + l as Letter));
    order.extend(shift..t_sh);
    order.extend((s + 1)..(k as Letter));
    let mut rank = BTreeMap::new();
    for (i, letter) in order.iter().enumerate() {
        rank.insert(*letter, i as Letter);
    }
    let q_shifted = q.words.relabel(|x| x + shift);
    let raw = compose_words(&p.words, s, &q_shifted, t_sh, p.tag);
    let words = match p.tag {
        OperadTag::Com => raw,
        OperadTag::Lie => raw.relabel(|x| rank[&x]),
    };
    Ok(CyclicOp { tag: p.tag, arity: k + l - 2, words })
}

/// Whether `x` lies in the span of `lie_cyclic_basis(arity)`.
pub fn is_lie(x: &CyclicOp) -> bool {
    assert_eq!(x.tag, OperadTag::Lie);
    if x.is_zero() {
        return true;
    }
    let mut solver: SpanSolver<CyclicWord> = SpanSolver::new();
    for b in lie_cyclic_basis(x.arity).expect("valid arity") {
        solver.insert(&b.words.0);
    }
    solver.solve(&x.words.0).is_some()
}

/// Coordinates of `x` in the canonical Lie basis of its arity.
pub fn lie_coordinates(x: &CyclicOp) -> Option<Vec<Rat>> {
    assert_eq!(x.tag, OperadTag::Lie);
    let mut solver: SpanSolver<CyclicWord> = SpanSolver::new();
    for b in lie_cyclic_basis(x.arity).expect("valid arity") {
        let fresh = solver.insert(&b.words.0);
        assert!(fresh, "canonical basis must be independent");
    }
    solver.solve(&x.words.0)
}

/// Dimension of the operad space attached to a vertex of the given valence.
pub fn decoration_dim(tag: OperadTag, valence: usize) -> usize {
    match tag {
        OperadTag::Com => 1,
        OperadTag::Lie => (1..=valence.saturating_sub(2)).product::<usize>().max(1),
    }
}

/// Basis of `cyc C(k)` as word sums over the standard letters.
pub fn operad_basis(tag: OperadTag, k: usize) -> Vec<WordSum> {
    match tag {
        OperadTag::Com => vec![WordSum::single(CyclicWord::new(vec![]), rat(1))],
        OperadTag::Lie => lie_cyclic_basis(k)
            .expect("valence >= 2")
            .into_iter()
            .map(|b| b.words)
            .collect(),
    }
}
