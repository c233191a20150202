use graph_complex::complexes::{homology, Kind};
use graph_complex::operad::OperadTag;

#[test]
fn explore_g3_ugc() {
    for m in [0i64, 1] {
        let run = homology(Kind::Ugc, OperadTag::Lie, m, 3, 2 * m + 1, 2 * m + 4);
        for r in &run.records {
            println!(
                "H: UGC Lie m={} g=3 p={}: dim C={} rank_out={} rank_in={} H={}",
                m, r.degree, r.dim_chains, r.rank_d_out, r.rank_d_in, r.dim_h
            );
        }
    }
}

#[test]
fn explore_g3_dgct() {
    for m in [0i64, 1] {
        let run = homology(Kind::DgcTrunc, OperadTag::Lie, m, 3, 2 * m + 1, 2 * m + 4);
        for r in &run.records {
            println!(
                "H: DGCt Lie m={} g=3 p={}: dim C={} rank_out={} rank_in={} H={}",
                m, r.degree, r.dim_chains, r.rank_d_out, r.rank_d_in, r.dim_h
            );
        }
    }
}
