//! The two converse probes behind the download lower bound: every (W*, R*)
//! pair must admit a completing single-use set (a necessary condition for
//! any valid scheme), and the brute-force minimum determining set, whose
//! size L pins the download at (K−L) messages' worth of symbols.
//!
//! Run with: cargo run --example converse_probes

use pir_rssi::audit::{
    completion_grid, find_completing_ssi, min_determining_set, DEFAULT_NODE_BUDGET,
};
use pir_rssi::field::smallest_prime_geq;
use pir_rssi::mds::MdsQuery;
use pir_rssi::wire::SchemeKind;

fn main() -> pir_rssi::Result<()> {
    // single pair, by hand: which single-use set completes (W*=4, R*={1})?
    let g = MdsQuery::build(4, 1, 1, 5)?.combination_matrix();
    let s = find_completing_ssi(&g, 4, &[1].into(), 1);
    println!("MDS K=4: completing single-use set for W*=4, R*={{1}}: {s:?}");

    // the grid assertion, both schemes
    for (kind, k, m1, m2) in [
        (SchemeKind::Mds, 5, 1, 1),
        (SchemeKind::Mds, 6, 2, 1),
        (SchemeKind::Partition, 4, 1, 1),
        (SchemeKind::Partition, 5, 1, 2),
    ] {
        let q = smallest_prime_geq(k as u32);
        let grid = completion_grid(kind, k, m1, m2, q, DEFAULT_NODE_BUDGET)?;
        println!(
            "{kind:<9} K={k} M1={m1} M2={m2}: {}/{} pairs OK across {} quer{}",
            grid.pairs - grid.failures.len(),
            grid.pairs,
            grid.matrices,
            if grid.matrices == 1 { "y" } else { "ies" }
        );
    }

    // determining sets: for the MDS scheme the minimum is exactly M1+M2,
    // so the answer carries (K − L) full messages of information
    println!();
    for (k, m1, m2) in [(5, 1, 1), (6, 2, 1), (7, 1, 2)] {
        let q = smallest_prime_geq(k as u32);
        let g = MdsQuery::build(k, m1, m2, q)?.combination_matrix();
        let r = min_determining_set(&g, m1, m2)?;
        println!(
            "MDS K={k} M1={m1} M2={m2}: L={} witness {:?}, bound {} ({})",
            r.size,
            r.witness,
            r.bound,
            if r.bound_ok { "OK" } else { "violated" }
        );
    }
    Ok(())
}
