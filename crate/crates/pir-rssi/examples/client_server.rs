//! Spins a real TCP server on loopback, retrieves with both schemes plus
//! the automatic selector, and prints the byte/symbol accounting. The
//! measured symbol rate equals the theoretical one exactly.
//!
//! Run with: cargo run --example client_server

use pir_rssi::choice::RngChooser;
use pir_rssi::model::{conjectured_capacity, Database, SideInfoConfig};
use pir_rssi::wire::{retrieve, PirServer, SchemeKind, SchemeSelect};
use rand::SeedableRng;

fn main() -> pir_rssi::Result<()> {
    let (k, q, n) = (8usize, 11u32, 5usize);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
    let db = Database::random(k, n, q, &mut rng)?;

    let server = PirServer::bind("127.0.0.1:0", db.clone())?;
    let handle = server.spawn()?;
    println!("server on {}", handle.addr());

    let cfg = SideInfoConfig::new(6, [2].into(), [3, 5, 7].into())?; // M1=1, M2=3
    let side = db.side_messages(&cfg.side_indices());
    println!("config {cfg}");
    println!("theoretical capacity: {}", conjectured_capacity(k, cfg.m1(), cfg.m2())?);

    for select in [
        SchemeSelect::Force(SchemeKind::Mds),
        SchemeSelect::Force(SchemeKind::Partition),
        SchemeSelect::Auto,
    ] {
        let mut chooser = RngChooser(&mut rng);
        let (x, stats) = retrieve(handle.addr(), k, q, &cfg, &side, select, &mut chooser)?;
        println!(
            "{stats}   decoded correctly: {}",
            &x == db.message(cfg.demand())
        );
    }

    handle.shutdown();
    Ok(())
}
