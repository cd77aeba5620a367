//! Single-server private information retrieval with reusable and single-use
//! side information.
//!
//! A user who already holds some of a server's K messages wants one more,
//! without revealing which one, and without revealing which messages make up
//! the reusable part of their side information, so that part stays usable in
//! later rounds. The single-use part may leak and is spent for download
//! savings.
//!
//! The crate provides:
//!
//! * two retrieval schemes over GF(q): a fixed MDS-generator query
//!   downloading K−M1−M2 combinations ([`mds`]), and a randomized partition
//!   query downloading ⌈K/(M2+1)⌉ per-part sums ([`partition`]);
//! * capacity and bound calculators in exact rationals ([`model`]);
//! * an exact privacy auditor that enumerates a scheme's whole randomness
//!   tree and compares posterior to prior with zero tolerance, plus
//!   brute-force converse probes ([`audit`]);
//! * a framed TCP client/server pair with per-session download accounting
//!   that reproduces the theoretical rates symbol-for-symbol ([`wire`]).
//!
//! Start with the runnable examples (`cargo run --example retrieval_mds`
//! and friends), or the `pir-rssi` binary for the CLI surface.

pub mod audit;
pub mod choice;
pub mod cli;
pub mod error;
pub mod field;
pub mod mds;
pub mod model;
pub mod partition;
pub mod rational;
pub mod wire;

pub use error::{Error, Result};
pub use field::{FieldElement, FieldMatrix, FieldVector};
pub use model::{Database, SideInfoConfig};
pub use rational::Rational;
pub use wire::{Answer, Query, SchemeKind, SchemeSelect, SessionStats};
