//! Walks the partition scheme: randomized query, per-part sums, decoding by
//! subtraction, and prints the exact query distribution for one
//! configuration so the randomization is visible.
//!
//! Run with: cargo run --example retrieval_partition

use pir_rssi::choice::{enumerate_tree, RngChooser};
use pir_rssi::model::{Database, SideInfoConfig};
use pir_rssi::partition::{self, PartitionQuery};
use rand::SeedableRng;

fn main() -> pir_rssi::Result<()> {
    let (k, q, n) = (5usize, 5u32, 3usize);
    let cfg = SideInfoConfig::new(2, [4].into(), [1, 5].into())?; // M1=1, M2=2
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
    let db = Database::random(k, n, q, &mut rng)?;

    // one sampled retrieval
    let mut chooser = RngChooser(&mut rng);
    let query = PartitionQuery::build(&cfg, k, &mut chooser)?;
    println!("config {cfg}");
    println!("sampled query {query} (downloads {} sums, rate 1/{})", query.combination_count(), query.combination_count());
    let answer = partition::answer(&query, &db)?;
    let side = db.side_messages(&cfg.side_indices());
    let x = partition::decode(&query, &answer, &cfg, &side)?;
    println!("decoded X_{} = {:?}, matches: {}", cfg.demand(), x.values(), &x == db.message(cfg.demand()));

    // the exact distribution the sampler draws from
    println!("\nexact query distribution for {cfg}:");
    let leaves = enumerate_tree(1_000_000, |ch| PartitionQuery::build(&cfg, k, ch).unwrap())?;
    let mut dist = std::collections::BTreeMap::new();
    for (query, p) in leaves {
        *dist.entry(query).or_insert_with(|| pir_rssi::Rational::from_integer(0.into())) += p;
    }
    for (query, p) in &dist {
        println!("  {query}  with probability {p}");
    }
    println!("({} distinct queries; the demand's part never holds a foreign index)", dist.len());
    Ok(())
}
