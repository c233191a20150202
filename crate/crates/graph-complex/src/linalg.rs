//! Exact sparse linear algebra over the rationals.
//!
//! Ranks are computed by fraction-free (Bareiss) elimination on the
//! integer matrix obtained by clearing denominators row by row; a modular
//! path (elimination modulo two distinct word-size primes with an
//! agreement check) is available as a fast cross-check. Kernels are
//! computed by rational Gauss-Jordan elimination.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::collections::BTreeMap;

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

/// Sparse matrix in coordinate form: sorted `(row, col, value)` triplets
/// with no explicit zeros and at most one entry per position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Rat)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, triplets: Vec<(usize, usize, Rat)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "entry ({r},{c}) out of range");
            let slot = merged.entry((r, c)).or_insert_with(Rat::zero);
            *slot += v;
        }
        let entries = merged
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseMatrix { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (i, i, Rat::one())).collect();
        SparseMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Rat)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = self.entries.iter().map(|(r, c, v)| (*c, *r, v.clone())).collect();
        SparseMatrix::new(self.cols, self.rows, triplets)
    }

    /// Matrix product, used by tests and the d^2 = 0 checks.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        // index other by row
        let mut by_row: Vec<Vec<(usize, &Rat)>> = vec![Vec::new(); other.rows];
        for (r, c, v) in &other.entries {
            by_row[*r].push((*c, v));
        }
        let mut acc: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
        for (r, c, v) in &self.entries {
            for (c2, v2) in &by_row[*c] {
                let slot = acc.entry((*r, *c2)).or_insert_with(Rat::zero);
                *slot += v * *v2;
            }
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseMatrix { rows: self.rows, cols: other.cols, entries }
    }

    pub fn apply(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Rat::zero(); self.rows];
        for (r, c, val) in &self.entries {
            out[*r] += val * &v[*c];
        }
        out
    }

    fn integer_rows(&self) -> Vec<BTreeMap<usize, Int>> {
        let mut rows: Vec<BTreeMap<usize, Rat>> = vec![BTreeMap::new(); self.rows];
        for (r, c, v) in &self.entries {
            rows[*r].insert(*c, v.clone());
        }
        rows.into_iter()
            .map(|row| {
                if row.is_empty() {
                    return BTreeMap::new();
                }
                let mut lcm = Int::one();
                for v in row.values() {
                    lcm = num::integer::lcm(lcm, v.denom().clone());
                }
                row.into_iter()
                    .map(|(c, v)| {
                        let scaled = v.numer() * (&lcm / v.denom());
                        (c, scaled)
                    })
                    .collect()
            })
            .collect()
    }

    /// Rank over Q by fraction-free (Bareiss) elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.integer_rows();
        rows.retain(|r| !r.is_empty());
        let mut rank = 0usize;
        let mut prev = Int::one();
        while !rows.is_empty() {
            // pivot: smallest column present; among rows with it, fewest entries
            let pc = rows.iter().filter_map(|r| r.keys().next().copied()).min();
            let pc = match pc {
                Some(c) => c,
                None => break,
            };
            let pi = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.contains_key(&pc))
                .min_by_key(|(_, r)| r.len())
                .map(|(i, _)| i)
                .unwrap();
            let prow = rows.swap_remove(pi);
            let pval = prow[&pc].clone();
            rank += 1;
            for row in rows.iter_mut() {
                let factor = row.remove(&pc);
                let mut next: BTreeMap<usize, Int> = BTreeMap::new();
                match factor {
                    None => {
                        for (c, v) in row.iter() {
                            let num = &pval * v;
                            debug_assert!((&num % &prev).is_zero());
                            next.insert(*c, num / &prev);
                        }
                    }
                    Some(f) => {
                        let mut cols: Vec<usize> = row.keys().copied().collect();
                        for c in prow.keys() {
                            if *c != pc && !row.contains_key(c) {
                                cols.push(*c);
                            }
                        }
                        for c in cols {
                            let a = row.get(&c).cloned().unwrap_or_else(Int::zero);
                            let b = prow.get(&c).cloned().unwrap_or_else(Int::zero);
                            let num = &pval * a - &f * b;
                            if !num.is_zero() {
                                debug_assert!((&num % &prev).is_zero());
                                next.insert(c, num / &prev);
                            }
                        }
                    }
                }
                *row = next;
            }
            rows.retain(|r| !r.is_empty());
            prev = pval;
        }
        rank
    }

    /// Rank modulo a prime; `None` if a denominator vanishes mod `p`.
    pub fn rank_mod(&self, p: u64) -> Option<usize> {
        let mut rows: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); self.rows];
        for (r, c, v) in &self.entries {
            let num = mod_big(v.numer(), p);
            let den = mod_big(v.denom(), p);
            if den == 0 {
                return None;
            }
            let val = mul_mod(num, inv_mod(den, p), p);
            if val != 0 {
                rows[*r].insert(*c, val);
            }
        }
        rows.retain(|r| !r.is_empty());
        let mut rank = 0usize;
        while !rows.is_empty() {
            let pc = match rows.iter().filter_map(|r| r.keys().next().copied()).min() {
                Some(c) => c,
                None => break,
            };
            let pi = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.contains_key(&pc))
                .min_by_key(|(_, r)| r.len())
                .map(|(i, _)| i)
                .unwrap();
            let prow = rows.swap_remove(pi);
            let pinv = inv_mod(prow[&pc], p);
            rank += 1;
            for row in rows.iter_mut() {
                if let Some(f) = row.remove(&pc) {
                    let scale = mul_mod(f, pinv, p);
                    for (c, b) in prow.iter() {
                        if *c == pc {
                            continue;
                        }
                        let sub = mul_mod(scale, *b, p);
                        let a = row.get(c).copied().unwrap_or(0);
                        let val = (a + p - sub) % p;
                        if val == 0 {
                            row.remove(c);
                        } else {
                            row.insert(*c, val);
                        }
                    }
                }
            }
            rows.retain(|r| !r.is_empty());
        }
        Some(rank)
    }

    /// Modular rank with a dual-prime agreement check. Panics if the two
    /// primes disagree, which at these sizes indicates a bug rather than
    /// bad luck.
    pub fn rank_modular_checked(&self) -> usize {
        const PRIMES: [u64; 4] = [1_000_000_007, 998_244_353, 1_000_000_021, 999_999_937];
        let mut found = Vec::new();
        for p in PRIMES {
            if let Some(r) = self.rank_mod(p) {
                found.push(r);
                if found.len() == 2 {
                    break;
                }
            }
        }
        assert!(found.len() == 2, "all cross-check primes divided a denominator");
        assert_eq!(found[0], found[1], "modular ranks disagree between primes");
        found[0]
    }

    /// Basis of the right kernel, exact. Size is `cols - rank`.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        // rational Gauss-Jordan to reduced row echelon form
        let mut rows: Vec<BTreeMap<usize, Rat>> = vec![BTreeMap::new(); self.rows];
        for (r, c, v) in &self.entries {
            rows[*r].insert(*c, v.clone());
        }
        rows.retain(|r| !r.is_empty());
        let mut echelon: Vec<(usize, BTreeMap<usize, Rat>)> = Vec::new();
        while let Some(pc) = rows.iter().filter_map(|r| r.keys().next().copied()).min() {
            let pi = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.contains_key(&pc))
                .min_by_key(|(_, r)| r.len())
                .map(|(i, _)| i)
                .unwrap();
            let mut prow = rows.swap_remove(pi);
            let pval = prow[&pc].clone();
            for v in prow.values_mut() {
                *v /= &pval;
            }
            for row in rows.iter_mut() {
                if let Some(f) = row.remove(&pc) {
                    for (c, b) in prow.iter() {
                        if *c == pc {
                            continue;
                        }
                        let sub = &f * b;
                        let a = row.remove(c).unwrap_or_else(Rat::zero);
                        let val = a - sub;
                        if !val.is_zero() {
                            row.insert(*c, val);
                        }
                    }
                }
            }
            rows.retain(|r| !r.is_empty());
            echelon.push((pc, prow));
        }
        // back-substitute to RREF
        for i in (0..echelon.len()).rev() {
            let (pc, prow) = echelon[i].clone();
            for j in 0..i {
                if let Some(f) = echelon[j].1.remove(&pc) {
                    for (c, b) in prow.iter() {
                        if *c == pc {
                            continue;
                        }
                        let sub = &f * b;
                        let a = echelon[j].1.remove(c).unwrap_or_else(Rat::zero);
                        let val = a - sub;
                        if !val.is_zero() {
                            echelon[j].1.insert(*c, val);
                        }
                    }
                }
            }
        }
        let pivot_cols: Vec<usize> = echelon.iter().map(|(c, _)| *c).collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (pc, prow) in &echelon {
                if let Some(coef) = prow.get(&free) {
                    v[*pc] = -coef.clone();
                }
            }
            basis.push(v);
        }
        basis
    }
}

/// `ambient_dim - rank(span)` for a list of vectors of length `ambient_dim`.
pub fn quotient_dim(ambient_dim: usize, spanning_vectors: &[Vec<Rat>]) -> usize {
    for v in spanning_vectors {
        assert_eq!(v.len(), ambient_dim, "vector length must equal ambient dim");
    }
    let triplets = spanning_vectors
        .iter()
        .enumerate()
        .flat_map(|(i, v)| {
            v.iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(move |(j, x)| (i, j, x.clone()))
        })
        .collect();
    let m = SparseMatrix::new(spanning_vectors.len().max(1), ambient_dim.max(1), triplets);
    ambient_dim - m.rank()
}

fn mod_big(x: &Int, p: u64) -> u64 {
    let m = x % Int::from(p);
    let m = if m.is_negative() { m + Int::from(p) } else { m };
    let (_, digits) = m.to_u64_digits();
    match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => unreachable!("residue fits one digit"),
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat; p is prime
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Incremental echelon over Q with membership solving, generic over an
/// ordered key type. Used to select coinvariant bases and to express
/// vectors in them.
#[derive(Clone, Debug)]
pub struct SpanSolver<K: Ord + Clone> {
    // each pivot: (pivot key, reduced vector, expression in inserted independents)
    pivots: Vec<(K, BTreeMap<K, Rat>, Vec<Rat>)>,
    n_independent: usize,
}

impl<K: Ord + Clone> Default for SpanSolver<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone> SpanSolver<K> {
    pub fn new() -> Self {
        SpanSolver { pivots: Vec::new(), n_independent: 0 }
    }

    pub fn dim(&self) -> usize {
        self.n_independent
    }

    fn reduce(&self, v: &BTreeMap<K, Rat>) -> (BTreeMap<K, Rat>, Vec<Rat>) {
        let mut v = v.clone();
        let mut combo = vec![Rat::zero(); self.n_independent];
        for (pk, pv, pcombo) in &self.pivots {
            if let Some(f) = v.remove(pk) {
                for (c, b) in pv {
                    if c == pk {
                        continue;
                    }
                    let sub = &f * b;
                    let a = v.remove(c).unwrap_or_else(Rat::zero);
                    let val = a - sub;
                    if !val.is_zero() {
                        v.insert(c.clone(), val);
                    }
                }
                for (i, pc) in pcombo.iter().enumerate() {
                    combo[i] += &f * pc;
                }
            }
        }
        (v, combo)
    }

    /// Insert a vector; returns `true` if it was independent of the span.
    pub fn insert(&mut self, v: &BTreeMap<K, Rat>) -> bool {
        let (mut red, combo) = self.reduce(v);
        if red.is_empty() {
            return false;
        }
        let pk = red.keys().next().unwrap().clone();
        let pval = red[&pk].clone();
        for x in red.values_mut() {
            *x /= &pval;
        }
        let mut combo: Vec<Rat> = combo.iter().map(|c| -(c / &pval)).collect();
        combo.push(Rat::one() / pval);
        self.n_independent += 1;
        for (_, _, pc) in self.pivots.iter_mut() {
            pc.push(Rat::zero());
        }
        self.pivots.push((pk, red, combo));
        true
    }

    /// Coordinates of `v` in terms of the independent vectors inserted so
    /// far, or `None` if `v` is outside their span.
    pub fn solve(&self, v: &BTreeMap<K, Rat>) -> Option<Vec<Rat>> {
        let (red, combo) = self.reduce(v);
        if red.is_empty() {
            Some(combo)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mat(rows: usize, cols: usize, data: &[&[i64]]) -> SparseMatrix {
        let mut t = Vec::new();
        for (i, row) in data.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0 {
                    t.push((i, j, rat(*v)));
                }
            }
        }
        SparseMatrix::new(rows, cols, t)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(SparseMatrix::zero(3, 4).rank(), 0);
        assert_eq!(SparseMatrix::identity(5).rank(), 5);
        // [[1,2],[2,4]] has rank 1: row 2 = 2 * row 1
        assert_eq!(mat(2, 2, &[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn kernel_examples() {
        assert!(SparseMatrix::identity(3).kernel_basis().is_empty());
        assert_eq!(SparseMatrix::zero(2, 3).kernel_basis().len(), 3);
        let m = mat(1, 3, &[&[1, 1, 0]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(m.apply(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(quotient_dim(4, &[]), 4);
        let std3: Vec<Vec<Rat>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { rat(1) } else { rat(0) }).collect())
            .collect();
        assert_eq!(quotient_dim(3, &std3), 0);
        assert_eq!(quotient_dim(2, &[vec![rat(1), rat(1)]]), 1);
    }

    #[test]
    fn random_rank_cross_check() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let rows = rng.gen_range(1..=20);
            let cols = rng.gen_range(1..=20);
            let mut t = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    let v: i64 = rng.gen_range(-5..=5);
                    if v != 0 && rng.gen_bool(0.5) {
                        t.push((i, j, rat(v)));
                    }
                }
            }
            let m = SparseMatrix::new(rows, cols, t);
            let r = m.rank();
            assert_eq!(r, m.rank_modular_checked());
            assert_eq!(r + m.kernel_basis().len(), cols);
        }
    }

    #[test]
    fn composable_rank_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rows = rng.gen_range(1..=8);
            let cols = rng.gen_range(1..=8);
            let mut t = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    let v: i64 = rng.gen_range(-3..=3);
                    if v != 0 {
                        t.push((i, j, rat(v)));
                    }
                }
            }
            let m = SparseMatrix::new(rows, cols, t);
            let kernel = m.kernel_basis();
            // columns of N span ker M, so M * N = 0 exactly
            let mut nt = Vec::new();
            for (j, v) in kernel.iter().enumerate() {
                for (i, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        nt.push((i, j, x.clone()));
                    }
                }
            }
            let n = SparseMatrix::new(cols, kernel.len().max(1), nt);
            assert!(m.mul(&n).is_zero());
            assert!(m.rank() + n.rank() <= cols);
        }
    }

    #[test]
    fn span_solver_roundtrip() {
        let mut s: SpanSolver<usize> = SpanSolver::new();
        let v1: BTreeMap<usize, Rat> = [(0, rat(1)), (1, rat(2))].into_iter().collect();
        let v2: BTreeMap<usize, Rat> = [(1, rat(1)), (2, rat(1))].into_iter().collect();
        assert!(s.insert(&v1));
        assert!(s.insert(&v2));
        assert!(!s.insert(&v1));
        // 3*v1 - 2*v2
        let mut w: BTreeMap<usize, Rat> = BTreeMap::new();
        for (k, v) in &v1 {
            *w.entry(*k).or_insert_with(Rat::zero) += v * rat(3);
        }
        for (k, v) in &v2 {
            *w.entry(*k).or_insert_with(Rat::zero) -= v * rat(2);
        }
        w.retain(|_, v| !v.is_zero());
        assert_eq!(s.solve(&w), Some(vec![rat(3), rat(-2)]));
        let out: BTreeMap<usize, Rat> = [(5, rat(1))].into_iter().collect();
        assert_eq!(s.solve(&out), None);
    }
}
