use graph_complex::complexes::{homology, Kind};
use graph_complex::operad::OperadTag;

#[test]
fn explore_g4_ugc() {
    for m in [0i64, 1] {
        let (lo, hi) = (3 * m + 1, 3 * m + 6);
        let run = homology(Kind::Ugc, OperadTag::Lie, m, 4, lo, hi);
        for r in &run.records {
            println!(
                "H: UGC Lie m={} g=4 p={}: dim C={} rank_out={} rank_in={} H={}",
                m, r.degree, r.dim_chains, r.rank_d_out, r.rank_d_in, r.dim_h
            );
        }
    }
}
