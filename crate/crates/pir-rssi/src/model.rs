//! Problem-instance data model and the capacity/bound calculators.
//!
//! A retrieval instance is a database of K equal-length messages over GF(q)
//! plus a side-information configuration: the demand index W, the private
//! reusable set R (size M1) and the non-private single-use set S (size M2).
//! Message indices are 1-based throughout, matching the wire encoding.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use itertools::Itertools;
use num::One;
use rand::{Rng, RngExt};

use crate::choice::{combination_at, Chooser};
use crate::error::{Error, Result};
use crate::field::{is_prime, FieldVector};
use crate::rational::{binomial, ceil_div, ratio, Rational};

/// Messages the user already holds, keyed by 1-based index.
pub type SideMessages = BTreeMap<usize, FieldVector>;

/// K messages, each a length-n vector over GF(q).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    modulus: u32,
    message_len: usize,
    messages: Vec<FieldVector>,
}

const DB_MAGIC: &[u8; 4] = b"PIRR";
const DB_VERSION: u8 = 1;

impl Database {
    pub fn new(modulus: u32, messages: Vec<FieldVector>) -> Result<Self> {
        if !is_prime(modulus) {
            return Err(Error::InvalidParameter(format!("q must be prime (got {modulus})")));
        }
        if messages.is_empty() {
            return Err(Error::InvalidParameter("need at least one message (K >= 1)".into()));
        }
        let message_len = messages[0].len();
        if message_len == 0 {
            return Err(Error::InvalidParameter("messages must be nonempty (n >= 1)".into()));
        }
        for (i, m) in messages.iter().enumerate() {
            if m.len() != message_len {
                return Err(Error::InvalidParameter(format!(
                    "message {} has length {} but n = {message_len}",
                    i + 1,
                    m.len()
                )));
            }
            if m.modulus() != modulus {
                return Err(Error::InvalidParameter(format!(
                    "message {} is over GF({}) but the database is over GF({modulus})",
                    i + 1,
                    m.modulus()
                )));
            }
        }
        Ok(Database { modulus, message_len, messages })
    }

    /// K·n independent uniform symbols; deterministic for a given RNG state.
    pub fn random(k: usize, n: usize, q: u32, rng: &mut impl Rng) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidParameter(format!("q must be prime (got {q})")));
        }
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter("need K >= 1 and n >= 1".into()));
        }
        let messages = (0..k)
            .map(|_| FieldVector::new(q, (0..n).map(|_| rng.random_range(0..q)).collect()))
            .collect();
        Database::new(q, messages)
    }

    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    pub fn message_len(&self) -> usize {
        self.message_len
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Message by 1-based index.
    pub fn message(&self, index: usize) -> &FieldVector {
        assert!(index >= 1 && index <= self.messages.len(), "message index out of range");
        &self.messages[index - 1]
    }

    pub fn messages(&self) -> &[FieldVector] {
        &self.messages
    }

    /// The messages for the given index set, for handing to a decoder.
    pub fn side_messages(&self, indices: &BTreeSet<usize>) -> SideMessages {
        indices.iter().map(|&i| (i, self.message(i).clone())).collect()
    }

    /// Binary form: "PIRR", version u8, K/n/q as u32 LE, then K·n symbols
    /// as u32 LE residues, message by message.
    pub fn to_bytes(&self) -> Vec<u8> {
        let k = self.messages.len();
        let mut out = Vec::with_capacity(17 + 4 * k * self.message_len);
        out.extend_from_slice(DB_MAGIC);
        out.push(DB_VERSION);
        out.extend_from_slice(&(k as u32).to_le_bytes());
        out.extend_from_slice(&(self.message_len as u32).to_le_bytes());
        out.extend_from_slice(&self.modulus.to_le_bytes());
        for m in &self.messages {
            for &v in m.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = crate::wire::ByteReader::new(bytes);
        let magic = r.take(4, "magic")?;
        if magic != DB_MAGIC {
            return Err(Error::Wire("bad magic (expected PIRR)".into()));
        }
        let version = r.u8("version")?;
        if version != DB_VERSION {
            return Err(Error::Wire(format!("unsupported version {version}")));
        }
        let k = r.u32("K")? as usize;
        let n = r.u32("n")? as usize;
        let q = r.u32("q")?;
        if !is_prime(q) {
            return Err(Error::Wire(format!("q must be prime (got {q})")));
        }
        if k == 0 || n == 0 {
            return Err(Error::Wire(format!("degenerate database shape K={k}, n={n}")));
        }
        r.expect_items(k.saturating_mul(n), 4, "message symbols")?;
        let mut messages = Vec::with_capacity(k);
        for idx in 0..k {
            let mut values = Vec::with_capacity(n);
            for sym in 0..n {
                let v = r.u32(&format!("message {} symbol {}", idx + 1, sym + 1))?;
                if v >= q {
                    return Err(Error::Wire(format!(
                        "message {} symbol {} is {v}, not a residue mod {q}",
                        idx + 1,
                        sym + 1
                    )));
                }
                values.push(v);
            }
            messages.push(FieldVector::new(q, values));
        }
        r.finish()?;
        Database::new(q, messages)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Database::from_bytes(&bytes)
    }
}

/// The triple (W, R, S): demand index, reusable side-information index set,
/// single-use side-information index set. R and S are disjoint and exclude W.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SideInfoConfig {
    demand: usize,
    reusable: BTreeSet<usize>,
    single_use: BTreeSet<usize>,
}

impl SideInfoConfig {
    pub fn new(
        demand: usize,
        reusable: BTreeSet<usize>,
        single_use: BTreeSet<usize>,
    ) -> Result<Self> {
        if demand == 0 {
            return Err(Error::InvalidParameter("demand index W must be >= 1".into()));
        }
        if reusable.contains(&0) || single_use.contains(&0) {
            return Err(Error::InvalidParameter("message indices are 1-based".into()));
        }
        if reusable.contains(&demand) || single_use.contains(&demand) {
            return Err(Error::InvalidParameter(format!(
                "demand index {demand} must not appear in R or S"
            )));
        }
        if !reusable.is_disjoint(&single_use) {
            return Err(Error::InvalidParameter("R and S must be disjoint".into()));
        }
        Ok(SideInfoConfig { demand, reusable, single_use })
    }

    pub fn demand(&self) -> usize {
        self.demand
    }

    pub fn reusable(&self) -> &BTreeSet<usize> {
        &self.reusable
    }

    pub fn single_use(&self) -> &BTreeSet<usize> {
        &self.single_use
    }

    pub fn m1(&self) -> usize {
        self.reusable.len()
    }

    pub fn m2(&self) -> usize {
        self.single_use.len()
    }

    /// R ∪ S.
    pub fn side_indices(&self) -> BTreeSet<usize> {
        self.reusable.union(&self.single_use).copied().collect()
    }

    /// {W} ∪ R ∪ S.
    pub fn known_indices(&self) -> BTreeSet<usize> {
        let mut all = self.side_indices();
        all.insert(self.demand);
        all
    }

    /// Checks the config against a database size, naming the violation.
    pub fn validate_against(&self, k: usize) -> Result<()> {
        if self.demand > k {
            return Err(Error::InvalidParameter(format!(
                "demand index {} exceeds K = {k}",
                self.demand
            )));
        }
        if let Some(&bad) = self.side_indices().iter().find(|&&i| i > k) {
            return Err(Error::InvalidParameter(format!("side index {bad} exceeds K = {k}")));
        }
        if k <= self.m1() + self.m2() {
            return Err(Error::InvalidParameter(format!(
                "need K > M1 + M2 (K={k}, M1={}, M2={})",
                self.m1(),
                self.m2()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for SideInfoConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "W={} R={{{}}} S={{{}}}",
            self.demand,
            self.reusable.iter().join(","),
            self.single_use.iter().join(",")
        )
    }
}

/// Fails unless K > M1 + M2, the domain every formula below needs.
pub fn check_params(k: usize, m1: usize, m2: usize) -> Result<()> {
    if k <= m1 + m2 {
        return Err(Error::InvalidParameter(format!(
            "need K > M1 + M2 (K={k}, M1={m1}, M2={m2})"
        )));
    }
    Ok(())
}

/// min{K − M1 − M2, ⌈K/(M2+1)⌉}: the smaller of the two schemes' download
/// counts, i.e. the denominator of the conjectured capacity.
pub fn min_download_count(k: usize, m1: usize, m2: usize) -> Result<u64> {
    check_params(k, m1, m2)?;
    let mds = (k - m1 - m2) as u64;
    let partition = ceil_div(k as u64, m2 as u64 + 1);
    Ok(mds.min(partition))
}

/// Conjectured capacity 1/min{K−M1−M2, ⌈K/(M2+1)⌉}; proven exact for
/// M1 = 1 or M2 = 1 (and for the degenerate M1 = 0 or M2 = 0 cases).
pub fn conjectured_capacity(k: usize, m1: usize, m2: usize) -> Result<Rational> {
    Ok(ratio(1, min_download_count(k, m1, m2)? as i64))
}

/// The proven capacity upper bound: 1/min{K−M2−1, ⌈K/(M2+1)⌉} when M1 = 1,
/// 1/min{K−M1−1, ⌈K/2⌉} when M2 = 1, and None outside those domains.
pub fn proven_upper_bound(k: usize, m1: usize, m2: usize) -> Result<Option<Rational>> {
    check_params(k, m1, m2)?;
    if m1 == 0 || m2 == 0 {
        return Err(Error::InvalidParameter("bound requires M1 >= 1 and M2 >= 1".into()));
    }
    let denom = if m1 == 1 {
        ((k - m2 - 1) as u64).min(ceil_div(k as u64, m2 as u64 + 1))
    } else if m2 == 1 {
        ((k - m1 - 1) as u64).min(ceil_div(k as u64, 2))
    } else {
        return Ok(None);
    };
    Ok(Some(ratio(1, denom as i64)))
}

/// The bound 1/⌈(K−M1)/(M2+1)⌉ obtained by stacking the two single-sided
/// arguments; not tight in general (strictly above the capacity at e.g.
/// K=6, M1=2, M2=1).
pub fn naive_upper_bound(k: usize, m1: usize, m2: usize) -> Result<Rational> {
    check_params(k, m1, m2)?;
    let denom = ceil_div((k - m1) as u64, m2 as u64 + 1);
    Ok(ratio(1, denom as i64))
}

/// Conjectured optimal download cost for N replicated servers:
/// (1 − 1/N^{K*})/(1 − 1/N) with K* = min{K−M1−M2, ⌈K/(M2+1)⌉}, in answer
/// symbols per message symbol. The conjectured capacity is the reciprocal
/// of this value (the cost exceeds 1 whenever K* ≥ 2). Calculator only; no
/// multi-server protocol exists in this crate.
pub fn multiserver_download_conjecture(
    k: usize,
    m1: usize,
    m2: usize,
    servers: u64,
) -> Result<Rational> {
    if servers < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 servers (got {servers})"
        )));
    }
    let k_star = min_download_count(k, m1, m2)? as u32;
    let n = ratio(servers as i64, 1);
    let numer = Rational::one() - (Rational::one() / num::pow::pow(n.clone(), k_star as usize));
    let denom = Rational::one() - (Rational::one() / n);
    Ok(numer / denom)
}

/// All valid (W, R, S) triples for the given parameters, in lexicographic
/// order. The uniform prior puts 1/len() on each.
pub fn all_configs(k: usize, m1: usize, m2: usize) -> Result<Vec<SideInfoConfig>> {
    check_params(k, m1, m2)?;
    let mut out = Vec::new();
    for r in (1..=k).combinations(m1) {
        let rset: BTreeSet<usize> = r.into_iter().collect();
        let rest: Vec<usize> = (1..=k).filter(|i| !rset.contains(i)).collect();
        for s in rest.iter().copied().combinations(m2) {
            let sset: BTreeSet<usize> = s.into_iter().collect();
            for &w in rest.iter().filter(|i| !sset.contains(i)) {
                out.push(SideInfoConfig::new(w, rset.clone(), sset.clone())?);
            }
        }
    }
    Ok(out)
}

/// Exact uniform prior of a single (W, R, S) triple.
pub fn config_prior(k: usize, m1: usize, m2: usize) -> Result<Rational> {
    check_params(k, m1, m2)?;
    let count = binomial(k as u64, m1 as u64)
        * binomial((k - m1) as u64, m2 as u64)
        * (k - m1 - m2) as u64;
    Ok(ratio(1, count as i64))
}

/// Draws (W, R, S) from the model prior: (R, S) uniform over disjoint pairs,
/// then W uniform over the complement. Goes through a [`Chooser`], so the
/// same procedure can be sampled or exactly enumerated.
pub fn sample_config(
    k: usize,
    m1: usize,
    m2: usize,
    chooser: &mut dyn Chooser,
) -> Result<SideInfoConfig> {
    check_params(k, m1, m2)?;
    let all: Vec<usize> = (1..=k).collect();
    let r_rank = chooser.pick(binomial(k as u64, m1 as u64) as usize);
    let rset: BTreeSet<usize> = combination_at(&all, m1, r_rank).into_iter().collect();
    let rest: Vec<usize> = all.iter().copied().filter(|i| !rset.contains(i)).collect();
    let s_rank = chooser.pick(binomial(rest.len() as u64, m2 as u64) as usize);
    let sset: BTreeSet<usize> = combination_at(&rest, m2, s_rank).into_iter().collect();
    let remaining: Vec<usize> = rest.into_iter().filter(|i| !sset.contains(i)).collect();
    let w = remaining[chooser.pick(remaining.len())];
    SideInfoConfig::new(w, rset, sset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{enumerate_tree, RngChooser};
    use num::Zero;
    use rand::SeedableRng;

    fn cfg(w: usize, r: &[usize], s: &[usize]) -> SideInfoConfig {
        SideInfoConfig::new(w, r.iter().copied().collect(), s.iter().copied().collect()).unwrap()
    }

    #[test]
    fn capacity_values() {
        assert_eq!(conjectured_capacity(3, 1, 1).unwrap(), ratio(1, 1));
        assert_eq!(conjectured_capacity(6, 2, 1).unwrap(), ratio(1, 3));
        assert_eq!(conjectured_capacity(5, 1, 2).unwrap(), ratio(1, 2));
    }

    #[test]
    fn capacity_rejects_bad_params() {
        assert!(conjectured_capacity(2, 1, 1).is_err());
        assert!(conjectured_capacity(3, 2, 1).is_err());
    }

    #[test]
    fn proven_bound_values() {
        assert_eq!(proven_upper_bound(4, 1, 1).unwrap(), Some(ratio(1, 2)));
        assert_eq!(proven_upper_bound(7, 2, 1).unwrap(), Some(ratio(1, 4)));
        assert_eq!(proven_upper_bound(6, 2, 2).unwrap(), None);
    }

    #[test]
    fn naive_bound_values() {
        assert_eq!(naive_upper_bound(6, 2, 1).unwrap(), ratio(1, 2));
        assert_eq!(naive_upper_bound(4, 1, 1).unwrap(), ratio(1, 2));
        assert_eq!(naive_upper_bound(3, 1, 1).unwrap(), ratio(1, 1));
    }

    #[test]
    fn bounds_meet_on_proven_domains() {
        for k in 3..=12usize {
            for m1 in 1..k {
                for m2 in 1..k {
                    if k <= m1 + m2 || (m1 != 1 && m2 != 1) {
                        continue;
                    }
                    let cap = conjectured_capacity(k, m1, m2).unwrap();
                    let bound = proven_upper_bound(k, m1, m2).unwrap().unwrap();
                    assert_eq!(cap, bound, "K={k} M1={m1} M2={m2}");
                }
            }
        }
    }

    #[test]
    fn conjectured_never_exceeds_naive_and_gap_exists() {
        for k in 3..=12usize {
            for m1 in 1..k {
                for m2 in 1..k {
                    if k <= m1 + m2 {
                        continue;
                    }
                    let cap = conjectured_capacity(k, m1, m2).unwrap();
                    let naive = naive_upper_bound(k, m1, m2).unwrap();
                    assert!(cap <= naive, "K={k} M1={m1} M2={m2}");
                }
            }
        }
        assert!(
            conjectured_capacity(6, 2, 1).unwrap() < naive_upper_bound(6, 2, 1).unwrap(),
            "the (6,2,1) gap must be strict"
        );
    }

    #[test]
    fn floor_ceil_identity_from_the_converse() {
        // K − ⌊K·M2/(M2+1)⌋ ≥ ⌈K/(M2+1)⌉
        for k in 1..=100u64 {
            for m2 in 1..=10u64 {
                assert!(k - (k * m2) / (m2 + 1) >= ceil_div(k, m2 + 1), "K={k} M2={m2}");
            }
        }
    }

    #[test]
    fn multiserver_values() {
        assert_eq!(multiserver_download_conjecture(3, 1, 1, 2).unwrap(), ratio(1, 1));
        assert_eq!(multiserver_download_conjecture(4, 1, 1, 2).unwrap(), ratio(3, 2));
        assert!(multiserver_download_conjecture(3, 1, 1, 1).is_err());
    }

    #[test]
    fn multiserver_capacity_monotone_toward_one() {
        // K* = 2 here; the conjectured capacity (reciprocal of the cost)
        // increases with the server count and approaches 1 from below.
        let mut prev = Rational::zero();
        for n in 2..=10 {
            let cost = multiserver_download_conjecture(4, 1, 1, n).unwrap();
            let cap = cost.recip();
            assert!(cap < Rational::one());
            assert!(cap > prev, "capacity must increase with N");
            prev = cap;
        }
    }

    #[test]
    fn config_validation() {
        assert!(SideInfoConfig::new(3, [1].into(), [2].into()).is_ok());
        assert!(SideInfoConfig::new(3, [3].into(), [2].into()).is_err());
        assert!(SideInfoConfig::new(3, [1].into(), [1].into()).is_err());
        assert!(cfg(3, &[1], &[2]).validate_against(3).is_ok());
        assert!(cfg(4, &[1], &[2]).validate_against(3).is_err());
        // side index out of range
        assert!(cfg(2, &[1], &[4]).validate_against(3).is_err());
    }

    #[test]
    fn sample_config_is_exactly_uniform() {
        for (k, m1, m2, expect) in [(3usize, 1usize, 1usize, 6usize), (4, 1, 1, 24)] {
            let leaves = enumerate_tree(100_000, |c| sample_config(k, m1, m2, c).unwrap()).unwrap();
            let mut dist: BTreeMap<SideInfoConfig, Rational> = BTreeMap::new();
            for (cfg, p) in leaves {
                *dist.entry(cfg).or_insert_with(Rational::zero) += p;
            }
            assert_eq!(dist.len(), expect);
            let expect_p = config_prior(k, m1, m2).unwrap();
            assert!(dist.values().all(|p| *p == expect_p));
            assert_eq!(dist.into_values().sum::<Rational>(), Rational::one());
        }
    }

    #[test]
    fn sample_config_degenerate_errors() {
        let mut c = RngChooser(rand_chacha::ChaCha12Rng::seed_from_u64(0));
        assert!(sample_config(2, 1, 1, &mut c).is_err());
    }

    #[test]
    fn all_configs_matches_prior_count() {
        let cfgs = all_configs(4, 1, 1).unwrap();
        assert_eq!(cfgs.len(), 24);
        assert_eq!(config_prior(4, 1, 1).unwrap(), ratio(1, 24));
    }

    #[test]
    fn database_roundtrip_and_size() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let db = Database::random(4, 2, 5, &mut rng).unwrap();
        let bytes = db.to_bytes();
        assert_eq!(bytes.len(), 17 + 4 * 4 * 2);
        assert_eq!(Database::from_bytes(&bytes).unwrap(), db);
    }

    #[test]
    fn database_same_seed_same_bytes() {
        let a = Database::random(5, 3, 7, &mut rand_chacha::ChaCha12Rng::seed_from_u64(9)).unwrap();
        let b = Database::random(5, 3, 7, &mut rand_chacha::ChaCha12Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn database_rejects_composite_modulus() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        assert!(Database::random(4, 2, 6, &mut rng).is_err());
    }

    #[test]
    fn database_decode_names_the_failure() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let db = Database::random(2, 2, 5, &mut rng).unwrap();
        let mut bytes = db.to_bytes();
        bytes.truncate(bytes.len() - 1);
        let err = Database::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("message symbols"), "{err}");

        let mut bad = db.to_bytes();
        bad[0] = b'X';
        assert!(Database::from_bytes(&bad).unwrap_err().to_string().contains("magic"));
    }
}
