//! Exact verification engine.
//!
//! The auditor enumerates a scheme's whole randomness tree per configuration,
//! integrates the joint distribution over (config, query) under the uniform
//! model prior, and compares posterior to prior in exact rationals. A verdict
//! of `pass` means every deviation is exactly zero; there is no tolerance
//! anywhere.
//!
//! Alongside the audit live the converse probes: the completion condition
//! (every (W*, R*) pair must admit some single-use set that makes the demand
//! recoverable) and the brute-force minimum determining set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use itertools::Itertools;
use num::{One, Zero};
use rand::SeedableRng;

use crate::choice::{enumerate_tree_within, NodeBudget, RngChooser};
use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldVector};
use crate::model::{all_configs, check_params, config_prior, Database, SideInfoConfig};
use crate::rational::Rational;
use crate::wire::{answer_query, decode_answer, Query, SchemeKind};

/// Default cap on choice-tree nodes one audit may visit. Generous for the
/// K ≤ 6 grid; factorial growth hits it quickly beyond that. Override per
/// call, or through the CLI's --budget / PIR_RSSI_BUDGET.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Largest K the subset brute force in [`min_determining_set`] accepts.
pub const MAX_DETERMINING_SET_K: usize = 16;

/// A (demand, reusable-set) pair: what the privacy condition protects.
pub type DemandPair = (usize, Vec<usize>);

/// Exact posterior data for one reachable query.
#[derive(Clone, Debug)]
pub struct PosteriorRow {
    /// P(Q) under the model prior.
    pub query_probability: Rational,
    /// P(W=w, R=r | Q) for every pair with positive posterior.
    pub posterior: BTreeMap<DemandPair, Rational>,
    /// P(S=s | Q) for every set with positive posterior.
    pub ssi_posterior: BTreeMap<Vec<usize>, Rational>,
    /// max |posterior − prior| over all valid (w, r) pairs.
    pub max_deviation: Rational,
    /// max |P(S|Q) − P(S)| over all valid single-use sets.
    pub ssi_max_deviation: Rational,
}

/// Output of [`audit_privacy`]: the full posterior-vs-prior comparison.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub scheme: SchemeKind,
    pub k: usize,
    pub m1: usize,
    pub m2: usize,
    pub modulus: u32,
    /// P(W=w, R=r), identical for every valid pair under the uniform prior.
    pub prior: BTreeMap<DemandPair, Rational>,
    pub ssi_prior: BTreeMap<Vec<usize>, Rational>,
    pub rows: BTreeMap<Query, PosteriorRow>,
    /// Worst |posterior − prior| across all queries and pairs. Zero iff pass.
    pub worst_deviation: Rational,
    /// Worst |P(S|Q) − P(S)|; measured and reported, never a pass/fail.
    pub ssi_worst_deviation: Rational,
    pub pass: bool,
    pub nodes_visited: u64,
}

impl AuditReport {
    /// True when the single-use index set is information-theoretically
    /// hidden as well (the MDS scheme achieves this; the partition scheme
    /// generally does not).
    pub fn ssi_private(&self) -> bool {
        self.ssi_worst_deviation.is_zero()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "privacy audit: scheme={} K={} M1={} M2={} q={}",
            self.scheme, self.k, self.m1, self.m2, self.modulus
        );
        let _ = writeln!(
            out,
            "reachable queries: {}   choice nodes visited: {}",
            self.rows.len(),
            self.nodes_visited
        );
        let pair_prior = self.prior.values().next().cloned().unwrap_or_else(Rational::zero);
        let _ = writeln!(
            out,
            "prior: P(W,R) = {} for each of {} pairs",
            pair_prior,
            self.prior.len()
        );
        let small = self.rows.len() * self.prior.len() <= 200;
        for (query, row) in &self.rows {
            let _ = writeln!(
                out,
                "query {query}   P(Q)={}   max |posterior-prior| = {}",
                row.query_probability, row.max_deviation
            );
            if small {
                for ((w, r), p) in &row.posterior {
                    let _ = writeln!(out, "    P(W={w}, R={{{}}} | Q) = {p}", r.iter().join(","));
                }
            }
        }
        let _ = writeln!(
            out,
            "verdict: {} (worst deviation {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.worst_deviation
        );
        let _ = writeln!(
            out,
            "single-use set posterior: worst |P(S|Q)-P(S)| = {}{}",
            self.ssi_worst_deviation,
            if self.ssi_private() { " (S fully hidden)" } else { " (S leaks; S is not required to stay private)" }
        );
        out
    }

    pub fn render_structured(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "audit.scheme={}", self.scheme);
        let _ = writeln!(out, "audit.K={}", self.k);
        let _ = writeln!(out, "audit.M1={}", self.m1);
        let _ = writeln!(out, "audit.M2={}", self.m2);
        let _ = writeln!(out, "audit.q={}", self.modulus);
        let _ = writeln!(out, "audit.queries={}", self.rows.len());
        let _ = writeln!(out, "audit.nodes={}", self.nodes_visited);
        let _ = writeln!(out, "audit.worst_deviation={}", self.worst_deviation);
        let _ = writeln!(out, "audit.verdict={}", if self.pass { "pass" } else { "fail" });
        let _ = writeln!(out, "audit.ssi_worst_deviation={}", self.ssi_worst_deviation);
        let _ = writeln!(out, "audit.ssi_private={}", self.ssi_private());
        for (i, (query, row)) in self.rows.iter().enumerate() {
            let _ = writeln!(out, "query.{i}.repr={query}");
            let _ = writeln!(out, "query.{i}.prob={}", row.query_probability);
            let _ = writeln!(out, "query.{i}.max_deviation={}", row.max_deviation);
            let _ = writeln!(out, "query.{i}.ssi_max_deviation={}", row.ssi_max_deviation);
        }
        out
    }
}

/// All reachable queries for one configuration with their exact
/// probabilities (which sum to exactly 1). The MDS scheme contributes a
/// single deterministic leaf; this still walks the shared enumeration path.
pub fn enumerate_query_distribution(
    kind: SchemeKind,
    k: usize,
    q: u32,
    cfg: &SideInfoConfig,
    budget: u64,
) -> Result<Vec<(Query, Rational)>> {
    enumerate_query_distribution_within(kind, k, q, cfg, &mut NodeBudget::new(budget))
}

fn enumerate_query_distribution_within(
    kind: SchemeKind,
    k: usize,
    q: u32,
    cfg: &SideInfoConfig,
    budget: &mut NodeBudget,
) -> Result<Vec<(Query, Rational)>> {
    cfg.validate_against(k)?;
    // surface construction errors once, before enumerating
    Query::build(kind, k, q, cfg, &mut probe_chooser())?;
    let leaves = enumerate_tree_within(budget, |chooser| {
        Query::build(kind, k, q, cfg, chooser).expect("query construction was pre-validated")
    })?;
    let mut dist: BTreeMap<Query, Rational> = BTreeMap::new();
    for (query, p) in leaves {
        *dist.entry(query).or_insert_with(Rational::zero) += p;
    }
    debug_assert!(dist.values().cloned().sum::<Rational>().is_one());
    Ok(dist.into_iter().collect())
}

fn probe_chooser() -> RngChooser<rand_chacha::ChaCha12Rng> {
    RngChooser(rand_chacha::ChaCha12Rng::seed_from_u64(0))
}

/// Exact privacy audit over every configuration.
///
/// Computes the joint distribution of (W, R, S, Q) under the uniform model
/// prior, derives P(W,R | Q) for every reachable query, and passes iff the
/// posterior equals the prior everywhere, as exact rational equality. The
/// single-use posterior P(S | Q) is measured and reported alongside, without
/// a verdict of its own.
pub fn audit_privacy(
    kind: SchemeKind,
    k: usize,
    m1: usize,
    m2: usize,
    q: u32,
    budget: u64,
) -> Result<AuditReport> {
    check_params(k, m1, m2)?;
    let cfgs = all_configs(k, m1, m2)?;
    let prior = config_prior(k, m1, m2)?;
    let mut node_budget = NodeBudget::new(budget);

    let mut prior_wr: BTreeMap<DemandPair, Rational> = BTreeMap::new();
    let mut prior_s: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    let mut marginal: BTreeMap<Query, Rational> = BTreeMap::new();
    let mut joint_wr: BTreeMap<Query, BTreeMap<DemandPair, Rational>> = BTreeMap::new();
    let mut joint_s: BTreeMap<Query, BTreeMap<Vec<usize>, Rational>> = BTreeMap::new();

    for cfg in &cfgs {
        let pair: DemandPair = (cfg.demand(), cfg.reusable().iter().copied().collect());
        let s_key: Vec<usize> = cfg.single_use().iter().copied().collect();
        *prior_wr.entry(pair.clone()).or_insert_with(Rational::zero) += prior.clone();
        *prior_s.entry(s_key.clone()).or_insert_with(Rational::zero) += prior.clone();

        let dist = enumerate_query_distribution_within(kind, k, q, cfg, &mut node_budget)?;
        for (query, p) in dist {
            let mass = prior.clone() * p;
            *marginal.entry(query.clone()).or_insert_with(Rational::zero) += mass.clone();
            *joint_wr
                .entry(query.clone())
                .or_default()
                .entry(pair.clone())
                .or_insert_with(Rational::zero) += mass.clone();
            *joint_s
                .entry(query)
                .or_default()
                .entry(s_key.clone())
                .or_insert_with(Rational::zero) += mass;
        }
    }

    let mut rows: BTreeMap<Query, PosteriorRow> = BTreeMap::new();
    let mut worst = Rational::zero();
    let mut ssi_worst = Rational::zero();
    for (query, q_prob) in &marginal {
        let posterior: BTreeMap<DemandPair, Rational> = joint_wr[query]
            .iter()
            .map(|(pair, mass)| (pair.clone(), mass.clone() / q_prob.clone()))
            .collect();
        let ssi_posterior: BTreeMap<Vec<usize>, Rational> = joint_s[query]
            .iter()
            .map(|(s, mass)| (s.clone(), mass.clone() / q_prob.clone()))
            .collect();
        debug_assert!(posterior.values().cloned().sum::<Rational>().is_one());
        debug_assert!(ssi_posterior.values().cloned().sum::<Rational>().is_one());

        let mut max_dev = Rational::zero();
        for (pair, pr) in &prior_wr {
            let post = posterior.get(pair).cloned().unwrap_or_else(Rational::zero);
            let dev = abs_diff(&post, pr);
            if dev > max_dev {
                max_dev = dev;
            }
        }
        let mut ssi_dev = Rational::zero();
        for (s, pr) in &prior_s {
            let post = ssi_posterior.get(s).cloned().unwrap_or_else(Rational::zero);
            let dev = abs_diff(&post, pr);
            if dev > ssi_dev {
                ssi_dev = dev;
            }
        }
        if max_dev > worst {
            worst = max_dev.clone();
        }
        if ssi_dev > ssi_worst {
            ssi_worst = ssi_dev.clone();
        }
        rows.insert(
            query.clone(),
            PosteriorRow {
                query_probability: q_prob.clone(),
                posterior,
                ssi_posterior,
                max_deviation: max_dev,
                ssi_max_deviation: ssi_dev,
            },
        );
    }
    debug_assert!(marginal.values().cloned().sum::<Rational>().is_one());

    let pass = worst.is_zero();
    Ok(AuditReport {
        scheme: kind,
        k,
        m1,
        m2,
        modulus: q,
        prior: prior_wr,
        ssi_prior: prior_s,
        rows,
        worst_deviation: worst,
        ssi_worst_deviation: ssi_worst,
        pass,
        nodes_visited: node_budget.used(),
    })
}

fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone() - b.clone()
    } else {
        b.clone() - a.clone()
    }
}

/// True iff e_W lies in rowspace(matrix) + span{e_j : j in side}, the
/// linear form of "the demand is recoverable from the answer given the side
/// messages". Indices are 1-based.
pub fn rank_recoverable(matrix: &FieldMatrix, demand: usize, side: &BTreeSet<usize>) -> bool {
    let k = matrix.cols();
    let q = matrix.modulus();
    let units: Vec<FieldVector> =
        side.iter().map(|&j| FieldMatrix::unit_row(j - 1, k, q)).collect();
    let base = matrix.with_rows(&units);
    let extended = base.with_rows(&[FieldMatrix::unit_row(demand - 1, k, q)]);
    base.rank() == extended.rank()
}

/// Outcome of [`check_recoverability`].
#[derive(Clone, Debug)]
pub struct RecoverabilityCheck {
    pub pass: bool,
    pub configs: usize,
    pub queries_checked: usize,
    pub decode_trials: usize,
    pub failures: Vec<String>,
}

/// For every configuration and every reachable query: the rank criterion
/// must hold, and decoding must reproduce X_W on `trials_per_query` random
/// databases (message length `n`).
#[allow(clippy::too_many_arguments)]
pub fn check_recoverability(
    kind: SchemeKind,
    k: usize,
    m1: usize,
    m2: usize,
    q: u32,
    n: usize,
    trials_per_query: usize,
    seed: u64,
    budget: u64,
) -> Result<RecoverabilityCheck> {
    check_params(k, m1, m2)?;
    let mut node_budget = NodeBudget::new(budget);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut queries_checked = 0;
    let mut decode_trials = 0;
    let mut failures = Vec::new();

    for cfg in all_configs(k, m1, m2)? {
        let dist = enumerate_query_distribution_within(kind, k, q, &cfg, &mut node_budget)?;
        for (query, _) in dist {
            queries_checked += 1;
            let matrix = query.combination_matrix(q);
            if !rank_recoverable(&matrix, cfg.demand(), &cfg.side_indices()) {
                failures.push(format!("rank criterion fails: cfg {cfg} query {query}"));
                continue;
            }
            for _ in 0..trials_per_query {
                decode_trials += 1;
                let db = Database::random(k, n, q, &mut rng)?;
                let ans = answer_query(&query, &db)?;
                let side = db.side_messages(&cfg.side_indices());
                match decode_answer(&query, &ans, &cfg, &side) {
                    Ok(x) if &x == db.message(cfg.demand()) => {}
                    Ok(_) => failures.push(format!("decode mismatch: cfg {cfg} query {query}")),
                    Err(e) => failures.push(format!("decode error: cfg {cfg} query {query}: {e}")),
                }
            }
        }
    }
    Ok(RecoverabilityCheck {
        pass: failures.is_empty(),
        configs: all_configs(k, m1, m2)?.len(),
        queries_checked,
        decode_trials,
        failures,
    })
}

/// Searches for the lexicographically first M2-subset S* of the indices
/// outside {W*} ∪ R* such that the demand becomes recoverable given
/// X_{R*} ∪ X_{S*}. `None` is a legal outcome for matrices that do not come
/// from a valid scheme; for a valid scheme every (W*, R*) pair must succeed.
pub fn find_completing_ssi(
    matrix: &FieldMatrix,
    w_star: usize,
    r_star: &BTreeSet<usize>,
    m2: usize,
) -> Option<BTreeSet<usize>> {
    assert!(!r_star.contains(&w_star), "W* must not lie in R*");
    let k = matrix.cols();
    let candidates: Vec<usize> =
        (1..=k).filter(|i| *i != w_star && !r_star.contains(i)).collect();
    for s in candidates.into_iter().combinations(m2) {
        let mut side: BTreeSet<usize> = r_star.clone();
        side.extend(s.iter().copied());
        if rank_recoverable(matrix, w_star, &side) {
            return Some(s.into_iter().collect());
        }
    }
    None
}

/// Outcome of the completion-condition grid over all (W*, R*) pairs.
#[derive(Clone, Debug)]
pub struct CompletionGrid {
    pub pairs: usize,
    pub matrices: usize,
    pub failures: Vec<String>,
}

impl CompletionGrid {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs [`find_completing_ssi`] for every (W*, R*) pair against every
/// distinct reachable query of the scheme (one matrix for MDS; the union
/// over configurations for the partition scheme).
pub fn completion_grid(
    kind: SchemeKind,
    k: usize,
    m1: usize,
    m2: usize,
    q: u32,
    budget: u64,
) -> Result<CompletionGrid> {
    check_params(k, m1, m2)?;
    let mut node_budget = NodeBudget::new(budget);
    let mut queries: BTreeSet<Query> = BTreeSet::new();
    match kind {
        SchemeKind::Mds => {
            let cfg = all_configs(k, m1, m2)?.remove(0);
            for (query, _) in
                enumerate_query_distribution_within(kind, k, q, &cfg, &mut node_budget)?
            {
                queries.insert(query);
            }
        }
        SchemeKind::Partition => {
            for cfg in all_configs(k, m1, m2)? {
                for (query, _) in
                    enumerate_query_distribution_within(kind, k, q, &cfg, &mut node_budget)?
                {
                    queries.insert(query);
                }
            }
        }
    }

    let mut pairs = 0;
    let mut failures = Vec::new();
    for query in &queries {
        let matrix = query.combination_matrix(q);
        for w_star in 1..=k {
            for r in (1..=k).filter(|&i| i != w_star).combinations(m1) {
                pairs += 1;
                let r_star: BTreeSet<usize> = r.into_iter().collect();
                if find_completing_ssi(&matrix, w_star, &r_star, m2).is_none() {
                    failures.push(format!(
                        "no completing single-use set for W*={w_star} R*={{{}}} at query {query}",
                        r_star.iter().join(",")
                    ));
                }
            }
        }
    }
    Ok(CompletionGrid { pairs, matrices: queries.len(), failures })
}

/// Smallest set I with rowspace(matrix) + span{e_i : i in I} equal to the
/// whole space, plus the size bound the converse argument guarantees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminingSetResult {
    /// Minimum size L.
    pub size: usize,
    /// Lexicographically first witness (1-based indices).
    pub witness: Vec<usize>,
    /// max{M1+M2, ⌊K·M2/(M2+1)⌋}, the converse's guaranteed ceiling.
    pub bound: usize,
    pub bound_ok: bool,
}

/// The guaranteed ceiling on the minimum determining-set size.
pub fn determining_set_bound(k: usize, m1: usize, m2: usize) -> usize {
    (m1 + m2).max(k * m2 / (m2 + 1))
}

/// Brute-force minimum determining set of an answer matrix (K ≤ 16).
pub fn min_determining_set(
    matrix: &FieldMatrix,
    m1: usize,
    m2: usize,
) -> Result<DeterminingSetResult> {
    let k = matrix.cols();
    if k > MAX_DETERMINING_SET_K {
        return Err(Error::TooLarge(format!(
            "minimum determining set is a subset brute force; K={k} exceeds {MAX_DETERMINING_SET_K}"
        )));
    }
    let q = matrix.modulus();
    let bound = determining_set_bound(k, m1, m2);
    for size in 0..=k {
        for subset in (1..=k).combinations(size) {
            let units: Vec<FieldVector> =
                subset.iter().map(|&j| FieldMatrix::unit_row(j - 1, k, q)).collect();
            if matrix.with_rows(&units).rank() == k {
                return Ok(DeterminingSetResult {
                    size,
                    witness: subset,
                    bound,
                    bound_ok: size <= bound,
                });
            }
        }
    }
    unreachable!("the full index set always determines everything");
}
