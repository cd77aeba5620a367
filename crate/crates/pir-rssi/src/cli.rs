//! Operator entry point behind the `pir-rssi` binary.
//!
//! Subcommands: `gen-db`, `capacity`, `run`, `audit`, `probe`, `serve`,
//! `fetch`. Everything is deterministic for a fixed `--seed`. Exit codes:
//! 0 success/pass, 1 verification failure, 2 usage error, 3 io/network.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::audit::{
    audit_privacy, completion_grid, min_determining_set, DeterminingSetResult,
    DEFAULT_NODE_BUDGET,
};
use crate::choice::{NodeBudget, RngChooser};
use crate::error::{Error, Result};
use crate::field::{is_prime, smallest_prime_geq};
use crate::model::{
    conjectured_capacity, naive_upper_bound, proven_upper_bound, sample_config, Database,
    SideInfoConfig,
};
use crate::wire::{
    retrieve, PirServer, Query, SchemeKind, SchemeSelect, SessionStats,
};

/// Environment variable overriding the default audit node budget.
pub const BUDGET_ENV: &str = "PIR_RSSI_BUDGET";

#[derive(Parser)]
#[command(
    name = "pir-rssi",
    version,
    about = "Single-server private information retrieval with reusable and single-use side information",
    after_help = "Exit codes: 0 success/pass, 1 verification failure, 2 usage error, 3 io/network error."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Structured,
}

/// "N" or inclusive "A..B".
#[derive(Clone, Debug)]
struct RangeArg {
    lo: usize,
    hi: usize,
}

impl RangeArg {
    fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for RangeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| t.parse::<usize>().map_err(|_| format!("bad integer {t:?}"));
        if let Some((a, b)) = s.split_once("..") {
            let (lo, hi) = (parse(a)?, parse(b)?);
            if lo > hi {
                return Err(format!("empty range {s:?}"));
            }
            Ok(RangeArg { lo, hi })
        } else {
            let v = parse(s)?;
            Ok(RangeArg { lo: v, hi: v })
        }
    }
}

/// Comma-separated 1-based index set, e.g. "1,4".
fn parse_index_set(s: &str) -> std::result::Result<BTreeSet<usize>, String> {
    if s.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad index {t:?}")))
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Write a database file of K uniform random messages over GF(q)
    GenDb {
        #[arg(long = "K")]
        k: usize,
        /// Symbols per message
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Field order; defaults to the smallest prime >= K
        #[arg(long)]
        q: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate capacity and bounds over parameter ranges
    Capacity {
        /// K or K range, e.g. 6 or 3..12
        #[arg(long = "K", default_value = "3..12")]
        k: RangeArg,
        #[arg(long = "M1", default_value = "1..3")]
        m1: RangeArg,
        #[arg(long = "M2", default_value = "1..3")]
        m2: RangeArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// End-to-end retrieval demo over an in-process loopback server
    Run {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "M1")]
        m1: usize,
        #[arg(long = "M2")]
        m2: usize,
        /// Field order; defaults to the smallest prime >= K
        #[arg(long)]
        q: Option<u32>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// mds, partition, or auto (rate-optimal, ties to mds)
        #[arg(long, default_value = "auto")]
        scheme: String,
        /// Demand index; sampled from the model prior when omitted
        #[arg(long = "W")]
        w: Option<usize>,
        /// Reusable side-information indices, e.g. 1,4
        #[arg(long = "R", value_parser = parse_index_set)]
        r: Option<BTreeSet<usize>>,
        /// Single-use side-information indices
        #[arg(long = "S", value_parser = parse_index_set)]
        s: Option<BTreeSet<usize>>,
        /// Corrupt the expected value before verifying (forces exit 1)
        #[arg(long)]
        inject_mismatch: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Exact privacy audit: posterior of (W,R) given the query vs the prior
    Audit {
        /// mds or partition
        scheme: String,
        k: usize,
        m1: usize,
        m2: usize,
        /// Field order; defaults to the smallest prime >= K
        #[arg(long)]
        q: Option<u32>,
        /// Choice-node budget (also PIR_RSSI_BUDGET)
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Converse probes: completion condition grid + minimum determining set
    Probe {
        /// mds or partition
        scheme: String,
        k: usize,
        m1: usize,
        m2: usize,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Serve a database file until interrupted
    Serve {
        /// Database file (see gen-db)
        #[arg(long)]
        db: PathBuf,
        /// host:port to bind, e.g. 127.0.0.1:7777
        #[arg(long)]
        endpoint: String,
    },
    /// Retrieve one message from a running server
    Fetch {
        #[arg(long)]
        endpoint: String,
        /// Local database copy supplying the side-information messages
        /// (and the ground truth for verification)
        #[arg(long)]
        db: PathBuf,
        #[arg(long = "W")]
        w: usize,
        #[arg(long = "R", value_parser = parse_index_set, default_value = "")]
        r: BTreeSet<usize>,
        #[arg(long = "S", value_parser = parse_index_set, default_value = "")]
        s: BTreeSet<usize>,
        /// mds, partition, or auto
        #[arg(long, default_value = "auto")]
        scheme: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print only the session statistics, not the message
        #[arg(long)]
        stats_only: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Parses argv and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenDb { k, n, q, seed, out } => cmd_gen_db(k, n, q, seed, &out),
        Command::Capacity { k, m1, m2, format } => cmd_capacity(&k, &m1, &m2, format),
        Command::Run { k, m1, m2, q, n, seed, scheme, w, r, s, inject_mismatch, format } => {
            cmd_run(k, m1, m2, q, n, seed, &scheme, w, r, s, inject_mismatch, format)
        }
        Command::Audit { scheme, k, m1, m2, q, budget, format } => {
            cmd_audit(&scheme, k, m1, m2, q, budget, format)
        }
        Command::Probe { scheme, k, m1, m2, q, budget, format } => {
            cmd_probe(&scheme, k, m1, m2, q, budget, format)
        }
        Command::Serve { db, endpoint } => cmd_serve(&db, &endpoint),
        Command::Fetch { endpoint, db, w, r, s, scheme, seed, stats_only, format } => {
            cmd_fetch(&endpoint, &db, w, r, s, &scheme, seed, stats_only, format)
        }
    }
}

fn default_q(k: usize, q: Option<u32>) -> Result<u32> {
    let q = q.unwrap_or_else(|| smallest_prime_geq(k as u32));
    if !is_prime(q) {
        return Err(Error::InvalidParameter(format!("q must be prime (got {q})")));
    }
    Ok(q)
}

fn effective_budget(budget: Option<u64>) -> u64 {
    budget
        .or_else(|| std::env::var(BUDGET_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_NODE_BUDGET)
}

fn cmd_gen_db(k: usize, n: usize, q: Option<u32>, seed: u64, out: &Path) -> Result<i32> {
    let q = default_q(k, q)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let db = Database::random(k, n, q, &mut rng)?;
    db.save(out)?;
    println!(
        "wrote {} (K={k} n={n} q={q} seed={seed}, {} bytes)",
        out.display(),
        db.to_bytes().len()
    );
    Ok(0)
}

fn cmd_capacity(k: &RangeArg, m1: &RangeArg, m2: &RangeArg, format: Format) -> Result<i32> {
    if format == Format::Text {
        println!(
            "{:>3} {:>3} {:>3}  {:>12} {:>12} {:>12}  gap",
            "K", "M1", "M2", "capacity", "proven-bound", "naive-bound"
        );
    }
    for kk in k.iter() {
        for mm1 in m1.iter() {
            for mm2 in m2.iter() {
                if kk <= mm1 + mm2 {
                    continue;
                }
                let cap = conjectured_capacity(kk, mm1, mm2)?;
                let proven = proven_upper_bound(kk, mm1, mm2)?;
                let naive = naive_upper_bound(kk, mm1, mm2)?;
                let gap = naive > cap;
                match format {
                    Format::Text => {
                        let proven_s =
                            proven.as_ref().map(|b| b.to_string()).unwrap_or_else(|| "n/a".into());
                        println!(
                            "{kk:>3} {mm1:>3} {mm2:>3}  {:>12} {proven_s:>12} {:>12}  {}",
                            cap.to_string(),
                            naive.to_string(),
                            if gap { "GAP" } else { "-" }
                        );
                    }
                    Format::Structured => {
                        let key = format!("capacity.{kk}.{mm1}.{mm2}");
                        println!("{key}.conjectured={cap}");
                        println!(
                            "{key}.proven={}",
                            proven.as_ref().map(|b| b.to_string()).unwrap_or_else(|| "n/a".into())
                        );
                        println!("{key}.naive={naive}");
                        println!("{key}.gap={gap}");
                    }
                }
            }
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    k: usize,
    m1: usize,
    m2: usize,
    q: Option<u32>,
    n: usize,
    seed: u64,
    scheme: &str,
    w: Option<usize>,
    r: Option<BTreeSet<usize>>,
    s: Option<BTreeSet<usize>>,
    inject_mismatch: bool,
    format: Format,
) -> Result<i32> {
    let q = default_q(k, q)?;
    let select: SchemeSelect = scheme.parse()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let db = Database::random(k, n, q, &mut rng)?;

    let cfg = match (w, r, s) {
        (Some(w), Some(r), Some(s)) => {
            let cfg = SideInfoConfig::new(w, r, s)?;
            if cfg.m1() != m1 || cfg.m2() != m2 {
                return Err(Error::InvalidParameter(format!(
                    "explicit sets have sizes ({},{}) but M1={m1}, M2={m2}",
                    cfg.m1(),
                    cfg.m2()
                )));
            }
            cfg.validate_against(k)?;
            cfg
        }
        (None, None, None) => sample_config(k, m1, m2, &mut RngChooser(&mut rng))?,
        _ => {
            return Err(Error::InvalidParameter(
                "give all of --W/--R/--S or none (sampled from the prior)".into(),
            ))
        }
    };

    let server = PirServer::bind("127.0.0.1:0", db.clone())?;
    let handle = server.spawn()?;
    let side = db.side_messages(&cfg.side_indices());
    let result = retrieve(handle.addr(), k, q, &cfg, &side, select, &mut RngChooser(&mut rng));
    handle.shutdown();
    let (message, stats) = result?;

    let mut expected = db.message(cfg.demand()).clone();
    if inject_mismatch {
        let bumped = expected.element(0) + crate::field::FieldElement::one(q);
        let mut values = expected.values().to_vec();
        values[0] = bumped.value();
        expected = crate::field::FieldVector::new(q, values);
    }
    let verified = message == expected;
    let theory = conjectured_capacity(k, m1, m2)?;
    let rate_matches = stats.achieved_rate == theory;

    match format {
        Format::Text => {
            println!("config: {cfg} (K={k} q={q} n={n} seed={seed})");
            println!(
                "scheme={} rate={} ({} theory {theory})",
                stats.scheme,
                stats.achieved_rate,
                if rate_matches { "=" } else { "!=" }
            );
            println!(
                "downloaded {} symbols / {} bytes; uploaded {} bytes",
                stats.symbols_down, stats.bytes_down, stats.bytes_up
            );
            if verified {
                println!("decoded X_{} = {:?} (verified)", cfg.demand(), message.values());
            } else {
                println!(
                    "MISMATCH: decoded {:?}, expected {:?}",
                    message.values(),
                    expected.values()
                );
            }
        }
        Format::Structured => {
            println!("run.K={k}");
            println!("run.M1={m1}");
            println!("run.M2={m2}");
            println!("run.q={q}");
            println!("run.n={n}");
            println!("run.seed={seed}");
            println!("run.config={cfg}");
            println!("run.scheme={}", stats.scheme);
            println!("run.rate={}", stats.achieved_rate);
            println!("run.rate_theory={theory}");
            println!("run.rate_matches_theory={rate_matches}");
            println!("run.symbols_down={}", stats.symbols_down);
            println!("run.bytes_up={}", stats.bytes_up);
            println!("run.bytes_down={}", stats.bytes_down);
            println!("run.verified={verified}");
        }
    }
    Ok(if verified { 0 } else { 1 })
}

fn cmd_audit(
    scheme: &str,
    k: usize,
    m1: usize,
    m2: usize,
    q: Option<u32>,
    budget: Option<u64>,
    format: Format,
) -> Result<i32> {
    let kind: SchemeKind = scheme.parse()?;
    let q = default_q(k, q)?;
    let report = audit_privacy(kind, k, m1, m2, q, effective_budget(budget))?;
    match format {
        Format::Text => print!("{}", report.render_text()),
        Format::Structured => print!("{}", report.render_structured()),
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_probe(
    scheme: &str,
    k: usize,
    m1: usize,
    m2: usize,
    q: Option<u32>,
    budget: Option<u64>,
    format: Format,
) -> Result<i32> {
    const MAX_PROBE_K: usize = 12;
    if k > MAX_PROBE_K {
        return Err(Error::TooLarge(format!(
            "probe runs brute-force rank searches; K={k} exceeds {MAX_PROBE_K}"
        )));
    }
    let kind: SchemeKind = scheme.parse()?;
    let q = default_q(k, q)?;
    let budget = effective_budget(budget);

    let grid = completion_grid(kind, k, m1, m2, q, budget)?;

    // worst-case minimum determining set across the scheme's reachable queries
    let mut worst: Option<DeterminingSetResult> = None;
    let mut node_budget = NodeBudget::new(budget);
    let queries = reachable_queries(kind, k, m1, m2, q, &mut node_budget)?;
    for query in &queries {
        let result = min_determining_set(&query.combination_matrix(q), m1, m2)?;
        if worst.as_ref().is_none_or(|w| result.size > w.size) {
            worst = Some(result);
        }
    }
    let worst = worst.expect("at least one reachable query");

    match format {
        Format::Text => {
            println!(
                "completion condition: {}/{} (W*,R*) pairs OK across {} quer{}",
                grid.pairs - grid.failures.len(),
                grid.pairs,
                grid.matrices,
                if grid.matrices == 1 { "y" } else { "ies" }
            );
            for f in &grid.failures {
                println!("  FAIL {f}");
            }
            println!(
                "minimum determining set: L={}{} witness {{{}}}; bound max{{M1+M2, floor(K*M2/(M2+1))}}={} {}",
                worst.size,
                if worst.size == m1 + m2 { " (= M1+M2)" } else { "" },
                worst.witness.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
                worst.bound,
                if worst.bound_ok { "OK" } else { "VIOLATED" }
            );
        }
        Format::Structured => {
            println!("probe.scheme={kind}");
            println!("probe.K={k}");
            println!("probe.M1={m1}");
            println!("probe.M2={m2}");
            println!("probe.pairs={}", grid.pairs);
            println!("probe.pair_failures={}", grid.failures.len());
            println!("probe.queries={}", grid.matrices);
            println!("probe.L={}", worst.size);
            println!("probe.bound={}", worst.bound);
            println!("probe.bound_ok={}", worst.bound_ok);
        }
    }
    Ok(if grid.pass() && worst.bound_ok { 0 } else { 1 })
}

fn reachable_queries(
    kind: SchemeKind,
    k: usize,
    m1: usize,
    m2: usize,
    q: u32,
    budget: &mut NodeBudget,
) -> Result<Vec<Query>> {
    use crate::audit::enumerate_query_distribution;
    use crate::model::all_configs;
    let mut out = BTreeSet::new();
    match kind {
        SchemeKind::Mds => {
            let cfg = all_configs(k, m1, m2)?.remove(0);
            for (query, _) in enumerate_query_distribution(kind, k, q, &cfg, budget.limit())? {
                out.insert(query);
            }
        }
        SchemeKind::Partition => {
            for cfg in all_configs(k, m1, m2)? {
                for (query, _) in enumerate_query_distribution(kind, k, q, &cfg, budget.limit())? {
                    out.insert(query);
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn cmd_serve(db_path: &Path, endpoint: &str) -> Result<i32> {
    let db = Database::load(db_path)?;
    println!(
        "serving K={} n={} q={} from {} on {endpoint}",
        db.message_count(),
        db.message_len(),
        db.modulus(),
        db_path.display()
    );
    let server = PirServer::bind(endpoint, db)?;
    server.run()?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_fetch(
    endpoint: &str,
    db_path: &Path,
    w: usize,
    r: BTreeSet<usize>,
    s: BTreeSet<usize>,
    scheme: &str,
    seed: u64,
    stats_only: bool,
    format: Format,
) -> Result<i32> {
    let local = Database::load(db_path)?;
    let k = local.message_count();
    let q = local.modulus();
    let cfg = SideInfoConfig::new(w, r, s)?;
    cfg.validate_against(k)?;
    let select: SchemeSelect = scheme.parse()?;
    let side = local.side_messages(&cfg.side_indices());
    let mut chooser = RngChooser(ChaCha12Rng::seed_from_u64(seed));
    let (message, stats) = retrieve(endpoint, k, q, &cfg, &side, select, &mut chooser)?;
    let verified = &message == local.message(w);
    print_fetch(&stats, &message, verified, stats_only, format, w);
    Ok(if verified { 0 } else { 1 })
}

fn print_fetch(
    stats: &SessionStats,
    message: &crate::field::FieldVector,
    verified: bool,
    stats_only: bool,
    format: Format,
    w: usize,
) {
    match format {
        Format::Text => {
            println!("{stats}");
            if !stats_only {
                println!(
                    "decoded X_{w} = {:?} ({})",
                    message.values(),
                    if verified { "matches local copy" } else { "DIFFERS from local copy" }
                );
            }
        }
        Format::Structured => {
            println!("fetch.scheme={}", stats.scheme);
            println!("fetch.rate={}", stats.achieved_rate);
            println!("fetch.symbols_down={}", stats.symbols_down);
            println!("fetch.bytes_up={}", stats.bytes_up);
            println!("fetch.bytes_down={}", stats.bytes_down);
            if !stats_only {
                println!(
                    "fetch.message={}",
                    message.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
                );
            }
            println!("fetch.verified={verified}");
        }
    }
}
