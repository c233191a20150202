//! Acceptance suite: every criterion is exercised exactly, all arithmetic
//! over Q, and one pass/fail line is printed per criterion.

use graph_complex::cechains::{end_tensor_coinv_dim, verify_identification};
use graph_complex::complexes::{
    cube_check, homology, Chain, HomologyRecord, Kind, Session, TensorChain, TripleChain,
    TupleVec,
};
use graph_complex::graphs::{
    self, disjoint_union_directed, disjoint_union_undirected, DirectedGraph, UndirectedGraph,
};
use graph_complex::linalg::{rat, Rat, SparseMatrix};
use graph_complex::operad::OperadTag;
use num::Zero;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::sync::OnceLock;

const TAGS: [OperadTag; 2] = [OperadTag::Lie, OperadTag::Com];

fn tag_name(tag: OperadTag) -> &'static str {
    match tag {
        OperadTag::Lie => "lie",
        OperadTag::Com => "com",
    }
}

// ---------------------------------------------------------------------------
// shared homology computations for criteria 4-7, 11, 12

struct Runs {
    // key: (kind, operad, m, genus)
    map: BTreeMap<(&'static str, &'static str, i64, i64), (Vec<HomologyRecord>, Vec<SparseMatrix>)>,
}

fn shared_runs() -> &'static Runs {
    static CELL: OnceLock<Runs> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut map = BTreeMap::new();
        for m in 0..=1i64 {
            for tag in TAGS {
                for (kind, kname) in [(Kind::Ugc, "ugc"), (Kind::DgcTrunc, "dgc-trunc")] {
                    let run = homology(kind, tag, m, 2, m + 1, m + 5);
                    map.insert((kname, tag_name(tag), m, 2), (run.records, run.matrices));
                    let run = homology(kind, tag, m, 3, 2 * m + 1, 2 * m + 4);
                    map.insert((kname, tag_name(tag), m, 3), (run.records, run.matrices));
                }
            }
            let run = homology(Kind::Ugc, OperadTag::Lie, m, 4, 3 * m + 1, 3 * m + 6);
            map.insert(("ugc4", "lie", m, 4), (run.records, run.matrices));
        }
        Runs { map }
    })
}

fn dims_of(records: &[HomologyRecord]) -> BTreeMap<i64, usize> {
    records.iter().map(|r| (r.degree, r.dim_h)).collect()
}

// ---------------------------------------------------------------------------
// criterion 1: d^2 = 0

/// Whether two successive non-loop contractions are possible at all; if
/// not, every term of d^2 vanishes before any decoration is touched.
fn has_second_level(edges: &[(usize, usize)]) -> bool {
    let nonloop: Vec<&(usize, usize)> = edges.iter().filter(|(u, v)| u != v).collect();
    for (i, e) in nonloop.iter().enumerate() {
        for e2 in nonloop.iter().skip(i + 1) {
            let s1 = [e.0.min(e.1), e.0.max(e.1)];
            let s2 = [e2.0.min(e2.1), e2.0.max(e2.1)];
            if s1 != s2 {
                return true;
            }
        }
    }
    false
}

fn d_squared_on_undirected(tag: OperadTag, m: i64, g: &UndirectedGraph) -> bool {
    let mut session = Session::new(tag, m);
    let (id, _) = session.class_of_undirected(g);
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|(f, fp)| (g.a[*f], g.a[*fp])).collect();
    if !has_second_level(&edges) {
        return true;
    }
    assert!(session.class(id).tuple_dim <= 2000, "unexpectedly large class");
    for j in 0..session.coinv_dim(id) {
        let v = session.coinv(id).vectors[j].clone();
        let c1 = session.differential(Kind::Ugc, id, &v);
        let c2 = session.differential_chain(Kind::Ugc, &c1);
        if !session.chain_is_zero(&c2) {
            return false;
        }
    }
    true
}

fn d_squared_on_directed(tag: OperadTag, m: i64, g: &DirectedGraph) -> bool {
    let mut session = Session::new(tag, m);
    let (id, _) = session.class_of_directed(g);
    let edges: Vec<(usize, usize)> = g
        .sources()
        .iter()
        .map(|s| (g.a[*s], g.a[g.mu[*s]]))
        .collect();
    if !has_second_level(&edges) {
        return true;
    }
    assert!(session.class(id).tuple_dim <= 2000, "unexpectedly large class");
    for j in 0..session.coinv_dim(id) {
        let v = session.coinv(id).vectors[j].clone();
        let c1 = session.differential(Kind::Dgc, id, &v);
        let c2 = session.differential_chain(Kind::Dgc, &c1);
        if !session.chain_is_zero(&c2) {
            return false;
        }
    }
    true
}

#[test]
fn criterion_01_chain_complex_axioms() {
    let mut ok = true;
    let max_edges = 6usize;
    for tag in TAGS {
        for m in 0..=3i64 {
            // undirected: genus determines the edge range
            for genus in 2..=7usize {
                for g in graphs::enumerate_undirected(genus, None) {
                    if g.n_edges() <= max_edges && !d_squared_on_undirected(tag, m, &g) {
                        eprintln!("d^2 != 0: ugc {tag:?} m={m} genus={genus}");
                        ok = false;
                    }
                }
            }
            // directed (valences >= 2) and its truncated subcomplex
            for genus in 1..=6usize {
                for n in 1..=(max_edges + 1 - genus) {
                    for g in graphs::enumerate_directed_min2(genus, n) {
                        if g.n_edges() > max_edges {
                            continue;
                        }
                        if !d_squared_on_directed(tag, m, &g) {
                            eprintln!("d^2 != 0: dgc {tag:?} m={m} genus={genus} n={n}");
                            ok = false;
                        }
                    }
                }
            }
        }
    }
    println!("criterion 1 (d^2 = 0, all kinds, m in 0..3, <= 6 edges): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 2: coalgebra axioms

fn counit_chain(session: &mut Session, t: &TensorChain) -> (Chain, Chain) {
    // (eps (x) 1) Delta and (1 (x) eps) Delta
    let mut left = Chain::new();
    let mut right = Chain::new();
    for (((i1, t1), (i2, t2)), c) in t {
        let mut v1 = TupleVec::new();
        v1.insert(t1.clone(), rat(1));
        let e1 = session.counit(*i1, &v1);
        if !e1.is_zero() {
            let slot = left.entry((*i2, t2.clone())).or_insert_with(Rat::zero);
            *slot += c * e1;
        }
        let mut v2 = TupleVec::new();
        v2.insert(t2.clone(), rat(1));
        let e2 = session.counit(*i2, &v2);
        if !e2.is_zero() {
            let slot = right.entry((*i1, t1.clone())).or_insert_with(Rat::zero);
            *slot += c * e2;
        }
    }
    left.retain(|_, c| !c.is_zero());
    right.retain(|_, c| !c.is_zero());
    (left, right)
}

fn coalgebra_axioms_on(session: &mut Session, kind: Kind, id: usize) -> bool {
    let degree_of = |session: &Session, cid: usize| session.class(cid).degree;
    let n = session.coinv_dim(id);
    for j in 0..n {
        let v = session.coinv(id).vectors[j].clone();
        let delta = session.coproduct(id, &v);
        // counit law
        let (l, r) = counit_chain(session, &delta);
        let x: Chain = v.iter().map(|(t, c)| ((id, t.clone()), c.clone())).collect();
        if !session.chains_equal(&l, &x) || !session.chains_equal(&r, &x) {
            eprintln!("counit law fails");
            return false;
        }
        // cocommutativity: tau Delta = Delta
        let mut tau = TensorChain::new();
        for (((i1, t1), (i2, t2)), c) in &delta {
            let d1 = degree_of(session, *i1);
            let d2 = degree_of(session, *i2);
            let sign = if d1 % 2 != 0 && d2 % 2 != 0 { -1 } else { 1 };
            let slot = tau
                .entry(((*i2, t2.clone()), (*i1, t1.clone())))
                .or_insert_with(Rat::zero);
            *slot += c * rat(sign);
        }
        if !session.tensors_equal(&tau, &delta) {
            eprintln!("cocommutativity fails");
            return false;
        }
        // coassociativity
        let mut lhs = TripleChain::new();
        for (((i1, t1), (i2, t2)), c) in &delta {
            let mut v1 = TupleVec::new();
            v1.insert(t1.clone(), c.clone());
            for (((j1, u1), (j2, u2)), c2) in session.coproduct(*i1, &v1) {
                let slot = lhs
                    .entry(((j1, u1), (j2, u2), (*i2, t2.clone())))
                    .or_insert_with(Rat::zero);
                *slot += c2;
            }
        }
        let mut rhs = TripleChain::new();
        for (((i1, t1), (i2, t2)), c) in &delta {
            let mut v2 = TupleVec::new();
            v2.insert(t2.clone(), c.clone());
            for (((j1, u1), (j2, u2)), c2) in session.coproduct(*i2, &v2) {
                let slot = rhs
                    .entry(((*i1, t1.clone()), (j1, u1), (j2, u2)))
                    .or_insert_with(Rat::zero);
                *slot += c2;
            }
        }
        let mut diff = lhs;
        for (k, c) in rhs {
            let slot = diff.entry(k).or_insert_with(Rat::zero);
            *slot -= c;
        }
        diff.retain(|_, c| !c.is_zero());
        if !session.triple_is_zero(&diff) {
            eprintln!("coassociativity fails");
            return false;
        }
        // co-Leibniz: Delta d = (d (x) 1 + 1 (x) d) Delta
        let dx = session.differential(kind, id, &v);
        let mut lhs = TensorChain::new();
        for ((cid, t), c) in &dx {
            let mut v1 = TupleVec::new();
            v1.insert(t.clone(), c.clone());
            for (k, c2) in session.coproduct(*cid, &v1) {
                let slot = lhs.entry(k).or_insert_with(Rat::zero);
                *slot += c2;
            }
        }
        let mut rhs = TensorChain::new();
        for (((i1, t1), (i2, t2)), c) in &delta {
            // d on the first factor
            let mut v1 = TupleVec::new();
            v1.insert(t1.clone(), c.clone());
            for ((cid, u), c2) in session.differential(kind, *i1, &v1) {
                let slot = rhs
                    .entry(((cid, u), (*i2, t2.clone())))
                    .or_insert_with(Rat::zero);
                *slot += c2;
            }
            // d on the second factor, with the Koszul sign of passing d
            // (degree -1) past the first factor
            let d1 = degree_of(session, *i1);
            let sign = if d1 % 2 != 0 { -1 } else { 1 };
            let mut v2 = TupleVec::new();
            v2.insert(t2.clone(), c * rat(sign));
            for ((cid, u), c2) in session.differential(kind, *i2, &v2) {
                let slot = rhs
                    .entry(((*i1, t1.clone()), (cid, u)))
                    .or_insert_with(Rat::zero);
                *slot += c2;
            }
        }
        if !session.tensors_equal(&lhs, &rhs) {
            eprintln!("co-Leibniz fails");
            return false;
        }
    }
    true
}

#[test]
fn criterion_02_coalgebra_axioms() {
    let mut ok = true;
    for tag in TAGS {
        for m in 0..=1i64 {
            // undirected: connected genus-2/3 classes and two-component
            // unions with at most 5 edges
            let mut connected_u: Vec<UndirectedGraph> = Vec::new();
            for genus in [2usize, 3] {
                connected_u
                    .extend(graphs::enumerate_undirected(genus, None).into_iter().filter(|g| g.n_edges() <= 5));
            }
            let mut session = Session::new(tag, m);
            let mut targets: Vec<usize> = Vec::new();
            for g in &connected_u {
                let (id, _) = session.class_of_undirected(g);
                targets.push(id);
            }
            for i in 0..connected_u.len() {
                for j in i..connected_u.len() {
                    if connected_u[i].n_edges() + connected_u[j].n_edges() <= 5 {
                        let u = disjoint_union_undirected(&connected_u[i], &connected_u[j]);
                        let (id, _) = session.class_of_undirected(&u);
                        targets.push(id);
                    }
                }
            }
            targets.sort_unstable();
            targets.dedup();
            for id in targets {
                if !coalgebra_axioms_on(&mut session, Kind::Ugc, id) {
                    eprintln!("coalgebra axioms fail: ugc {tag:?} m={m} class {id}");
                    ok = false;
                }
            }
            // directed: truncated genus-2 classes and small unions
            let mut connected_d: Vec<DirectedGraph> = Vec::new();
            for n in 1..=4usize {
                connected_d.extend(
                    graphs::enumerate_directed_min2(2, n)
                        .into_iter()
                        .filter(|d| d.is_truncated() && d.n_edges() <= 5),
                );
            }
            let mut session = Session::new(tag, m);
            let mut targets: Vec<usize> = Vec::new();
            for g in &connected_d {
                let (id, _) = session.class_of_directed(g);
                targets.push(id);
            }
            for i in 0..connected_d.len() {
                for j in i..connected_d.len() {
                    if connected_d[i].n_edges() + connected_d[j].n_edges() <= 5 {
                        let u = disjoint_union_directed(&connected_d[i], &connected_d[j]);
                        let (id, _) = session.class_of_directed(&u);
                        targets.push(id);
                    }
                }
            }
            targets.sort_unstable();
            targets.dedup();
            for id in targets {
                if !coalgebra_axioms_on(&mut session, Kind::DgcTrunc, id) {
                    eprintln!("coalgebra axioms fail: dgc-trunc {tag:?} m={m} class {id}");
                    ok = false;
                }
            }
        }
    }
    println!("criterion 2 (coalgebra axioms, <= 5 edges, <= 2 components): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 3: degree concentration

#[test]
fn criterion_03_degree_concentration() {
    let mut ok = true;
    for tag in TAGS {
        for m in 0..=2i64 {
            for genus in [2i64, 3] {
                let lo = m * (genus - 1) + 1;
                let hi = (m + 2) * (genus - 1);
                let mut session = Session::new(tag, m);
                for p in (lo - 3)..=(hi + 3) {
                    let b = session.block(Kind::Ugc, genus, p);
                    let inside = p >= lo && p <= hi;
                    if !inside && b.dim != 0 {
                        eprintln!(
                            "basis outside the window: {tag:?} m={m} g={genus} p={p} dim={}",
                            b.dim
                        );
                        ok = false;
                    }
                }
            }
        }
    }
    println!("criterion 3 (degree window m(g-1)+1 <= p <= (m+2)(g-1)): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criteria 4-6: Lie homology values

#[test]
fn criterion_04_genus2_lie_homology() {
    let runs = shared_runs();
    let mut ok = true;
    // m odd: everything vanishes
    let dims = dims_of(&runs.map[&("ugc", "lie", 1, 2)].0);
    for (p, h) in &dims {
        if *h != 0 {
            eprintln!("g=2 m=1: H_{p} = {h}, expected 0");
            ok = false;
        }
    }
    // m even: H_2 = 1, H_1 = 0, all others 0
    let dims = dims_of(&runs.map[&("ugc", "lie", 0, 2)].0);
    for (p, h) in &dims {
        let expect = if *p == 2 { 1 } else { 0 };
        if *h != expect {
            eprintln!("g=2 m=0: H_{p} = {h}, expected {expect}");
            ok = false;
        }
    }
    println!("criterion 4 (genus-2 Lie homology): {}", verdict(ok));
    assert!(ok);
}

#[test]
fn criterion_05_genus3_lie_homology() {
    let runs = shared_runs();
    let mut ok = true;
    for m in 0..=1i64 {
        let dims = dims_of(&runs.map[&("ugc", "lie", m, 3)].0);
        for (p, h) in &dims {
            let expect = if m % 2 == 0 && *p == 2 * (m + 2) { 1 } else { 0 };
            if *h != expect {
                eprintln!("g=3 m={m}: H_{p} = {h}, expected {expect}");
                ok = false;
            }
        }
    }
    println!("criterion 5 (genus-3 Lie homology): {}", verdict(ok));
    assert!(ok);
}

#[test]
fn criterion_06_genus4_lie_homology() {
    let runs = shared_runs();
    let mut ok = true;
    for m in 0..=1i64 {
        let dims = dims_of(&runs.map[&("ugc4", "lie", m, 4)].0);
        for (p, h) in &dims {
            let expect = if m % 2 == 0 {
                if *p == 3 * (m + 2) || *p == 3 * (m + 2) - 4 {
                    1
                } else {
                    0
                }
            } else if *p == 3 * (m + 2) - 3 {
                1
            } else {
                0
            };
            if *h != expect {
                eprintln!("g=4 m={m}: H_{p} = {h}, expected {expect}");
                ok = false;
            }
        }
    }
    println!("criterion 6 (genus-4 Lie homology): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 7: directed vs undirected

#[test]
fn criterion_07_directed_vs_undirected() {
    let runs = shared_runs();
    let mut ok = true;
    for tag in TAGS {
        for m in 0..=1i64 {
            for genus in [2i64, 3] {
                let d = dims_of(&runs.map[&("dgc-trunc", tag_name(tag), m, genus)].0);
                let u = dims_of(&runs.map[&("ugc", tag_name(tag), m, genus)].0);
                for (p, h) in &d {
                    let hu = u.get(p).copied().unwrap_or(0);
                    if *h != hu {
                        eprintln!(
                            "{} m={m} g={genus} p={p}: directed {h} vs undirected {hu}",
                            tag_name(tag)
                        );
                        ok = false;
                    }
                }
            }
        }
    }
    println!("criterion 7 (directed vs undirected homology): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 8: cube acyclicity

#[test]
fn criterion_08_cube_acyclicity() {
    let mut ok = true;
    for tag in TAGS {
        for m in 0..=1i64 {
            for genus in [2usize, 3] {
                for g in graphs::enumerate_undirected(genus, None) {
                    if !cube_check(&g, m, tag) {
                        eprintln!("cube fails: {tag:?} m={m} genus={genus} E={}", g.n_edges());
                        ok = false;
                    }
                }
            }
        }
    }
    println!("criterion 8 (cube homology concentrated in degree 0): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 9: fundamental theorem of coinvariant theory

#[test]
fn criterion_09_fundamental_coinvariant_theorem() {
    let mut ok = true;
    for gv in [2usize, 3, 4] {
        for k in [1usize, 2, 3] {
            if k > gv {
                continue;
            }
            let d = end_tensor_coinv_dim(gv, k);
            let fact: usize = (1..=k).product();
            if d != fact {
                eprintln!("coinv End(V)^(x){k}, dim V = {gv}: {d}, expected {fact}");
                ok = false;
            }
        }
    }
    println!("criterion 9 (coinvariants of End(V)^k have dim k!): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 10: identification theorem oracle

#[test]
fn criterion_10_identification_oracle() {
    let mut ok = true;
    for gv in [1usize, 2] {
        let pmax = 4i64.min(2 * gv as i64); // alpha = 1 at (n, m) = (4, 10)
        for p in 0..=pmax {
            let r = verify_identification(gv, 4, 10, p);
            if !r.equal || !r.intertwine_ok {
                eprintln!(
                    "identification fails: g={gv} p={p} ce={} graph={} intertwine={}",
                    r.dim_ce_coinv, r.dim_dgc_trunc_bounded, r.intertwine_ok
                );
                ok = false;
            }
        }
    }
    println!("criterion 10 (identification oracle, (n,m) = (4,10)): {}", verdict(ok));
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 11: rank cross-checks

#[test]
fn criterion_11_rank_cross_checks() {
    let mut ok = true;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let rows = rng.gen_range(1..=20);
        let cols = rng.gen_range(1..=20);
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.gen_bool(0.4) {
                    let v: i64 = rng.gen_range(-5..=5);
                    if v != 0 {
                        t.push((i, j, rat(v)));
                    }
                }
            }
        }
        let mat = SparseMatrix::new(rows, cols, t);
        if mat.rank() != mat.rank_modular_checked() {
            eprintln!("rank mismatch on a random matrix");
            ok = false;
        }
    }
    let runs = shared_runs();
    let mut n_mats = 0usize;
    for (_, (_, mats)) in runs.map.iter() {
        for mat in mats {
            if mat.rank() != mat.rank_modular_checked() {
                eprintln!("rank mismatch on a differential matrix");
                ok = false;
            }
            n_mats += 1;
        }
    }
    println!(
        "criterion 11 (fraction-free vs dual-prime modular rank, 200 random + {n_mats} differentials): {}",
        verdict(ok)
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// criterion 12: Euler consistency

#[test]
fn criterion_12_euler_consistency() {
    let runs = shared_runs();
    let mut ok = true;
    // runs whose degree range covers the full window, so that
    // sum (-1)^p dim C_p = sum (-1)^p dim H_p
    let full_window: Vec<(&str, &str, i64, i64)> = {
        let mut v = Vec::new();
        for m in 0..=1i64 {
            for tag in TAGS {
                v.push(("ugc", tag_name(tag), m, 2));
                v.push(("ugc", tag_name(tag), m, 3));
                v.push(("dgc-trunc", tag_name(tag), m, 2));
            }
            v.push(("ugc4", "lie", m, 4));
        }
        v
    };
    for key in full_window {
        let (records, _) = &runs.map[&key];
        let mut chi_c = 0i64;
        let mut chi_h = 0i64;
        for r in records {
            let s = if r.degree % 2 == 0 { 1 } else { -1 };
            chi_c += s * r.dim_chains as i64;
            chi_h += s * r.dim_h as i64;
        }
        if chi_c != chi_h {
            eprintln!("euler mismatch {key:?}: chains {chi_c} vs homology {chi_h}");
            ok = false;
        }
    }
    println!("criterion 12 (Euler characteristic consistency): {}", verdict(ok));
    assert!(ok);
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
