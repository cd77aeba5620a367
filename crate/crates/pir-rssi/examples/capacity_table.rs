//! Tabulates the conjectured capacity against the two upper bounds and
//! marks where the naive bound (stack both side-information savings) is
//! strictly loose, plus the multi-server conjecture as a calculator.
//!
//! Run with: cargo run --example capacity_table

use pir_rssi::model::{
    conjectured_capacity, multiserver_download_conjecture, naive_upper_bound, proven_upper_bound,
};

fn main() -> pir_rssi::Result<()> {
    println!("{:>3} {:>3} {:>3}  {:>10} {:>12} {:>11}  gap", "K", "M1", "M2", "capacity", "proven-bound", "naive-bound");
    for k in 3..=10usize {
        for m1 in 1..=2usize {
            for m2 in 1..=2usize {
                if k <= m1 + m2 {
                    continue;
                }
                let cap = conjectured_capacity(k, m1, m2)?;
                let proven = proven_upper_bound(k, m1, m2)?;
                let naive = naive_upper_bound(k, m1, m2)?;
                let gap = naive > cap;
                println!(
                    "{k:>3} {m1:>3} {m2:>3}  {:>10} {:>12} {:>11}  {}",
                    cap.to_string(),
                    proven.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into()),
                    naive.to_string(),
                    if gap { "GAP" } else { "-" }
                );
            }
        }
    }

    println!();
    println!("multi-server download-cost conjecture at K=4, M1=1, M2=1 (capacity = reciprocal):");
    for servers in 2..=6u64 {
        let cost = multiserver_download_conjecture(4, 1, 1, servers)?;
        println!("  N={servers}: cost {cost}, capacity {}", cost.recip());
    }
    Ok(())
}
