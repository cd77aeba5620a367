//! The partition-and-code retrieval scheme.
//!
//! The user splits the K indices into P = ⌈K/(M2+1)⌉ labeled parts (the
//! first P−1 of size M2+1, the last taking the remainder) and downloads one
//! per-part sum. Randomization places the demand and the reusable indices
//! uniformly over slots, tops the demand's part up with single-use indices,
//! and scatters the rest, so the demand's part never contains an index the
//! user cannot subtract off.
//!
//! All randomness flows through a [`Chooser`]: the query builder is the same
//! code whether it is being sampled with an RNG or exactly enumerated by the
//! auditor.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::choice::{combination_at, Chooser};
use crate::error::{Error, Result};
use crate::field::{FieldMatrix, FieldVector};
use crate::model::{check_params, Database, SideInfoConfig, SideMessages};
use crate::rational::{binomial, ceil_div};

/// Query payload: the labeled partition, contents sorted (canonical form).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PartitionQuery {
    k: usize,
    m1: usize,
    m2: usize,
    parts: Vec<Vec<usize>>,
}

/// Part sizes for (K, M2): P−1 full parts of M2+1, then the remainder.
pub fn part_sizes(k: usize, m2: usize) -> Vec<usize> {
    let p = ceil_div(k as u64, m2 as u64 + 1) as usize;
    let mut sizes = vec![m2 + 1; p - 1];
    sizes.push(k - (p - 1) * (m2 + 1));
    sizes
}

impl PartitionQuery {
    /// Runs the randomized slot assignment for `cfg` and returns the
    /// canonical partition.
    pub fn build(cfg: &SideInfoConfig, k: usize, chooser: &mut dyn Chooser) -> Result<Self> {
        let (m1, m2) = (cfg.m1(), cfg.m2());
        check_params(k, m1, m2)?;
        if m2 == 0 {
            return Err(Error::InvalidParameter(
                "partition scheme needs M2 >= 1 (with M2 = 0 every part is a singleton; \
                 use the MDS scheme)"
                    .into(),
            ));
        }
        cfg.validate_against(k)?;

        let sizes = part_sizes(k, m2);
        let part_of_slot: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(part, &sz)| std::iter::repeat_n(part, sz))
            .collect();

        // demand and reusable indices take uniformly random distinct slots
        let mut free: Vec<usize> = (0..k).collect();
        let mut assigned: Vec<(usize, usize)> = Vec::with_capacity(k); // (index, slot)
        for &index in std::iter::once(&cfg.demand()).chain(cfg.reusable().iter()) {
            let slot = free.remove(chooser.pick(free.len()));
            assigned.push((index, slot));
        }

        // the demand's part is topped up with single-use indices
        let demand_part = part_of_slot[assigned[0].1];
        let reusable_in_part = assigned[1..]
            .iter()
            .filter(|&&(_, slot)| part_of_slot[slot] == demand_part)
            .count();
        let fill = sizes[demand_part] - reusable_in_part - 1;
        let single_use: Vec<usize> = cfg.single_use().iter().copied().collect();
        let subset_rank = chooser.pick(binomial(m2 as u64, fill as u64) as usize);
        let chosen = combination_at(&single_use, fill, subset_rank);
        let part_free: Vec<usize> =
            free.iter().copied().filter(|&s| part_of_slot[s] == demand_part).collect();
        debug_assert_eq!(part_free.len(), fill);
        for (index, slot) in chosen.iter().copied().zip(part_free.iter().copied()) {
            assigned.push((index, slot));
        }
        free.retain(|s| part_of_slot[*s] != demand_part);

        // everything else (including unplaced single-use indices) scatters
        // uniformly over the remaining slots
        let placed: BTreeSet<usize> = assigned.iter().map(|&(i, _)| i).collect();
        for index in (1..=k).filter(|i| !placed.contains(i)) {
            let slot = free.remove(chooser.pick(free.len()));
            assigned.push((index, slot));
        }
        debug_assert!(free.is_empty());

        let mut parts = vec![Vec::new(); sizes.len()];
        for (index, slot) in assigned {
            parts[part_of_slot[slot]].push(index);
        }
        for part in &mut parts {
            part.sort_unstable();
        }
        Ok(PartitionQuery { k, m1, m2, parts })
    }

    /// Wire-level constructor; enforces the structural invariants (disjoint
    /// cover of 1..=K, prescribed sizes, sorted contents).
    pub fn from_parts(k: usize, m1: usize, m2: usize, parts: Vec<Vec<usize>>) -> Result<Self> {
        check_params(k, m1, m2)?;
        if m2 == 0 {
            return Err(Error::Wire("partition query with M2 = 0".into()));
        }
        let sizes = part_sizes(k, m2);
        if parts.len() != sizes.len() {
            return Err(Error::Wire(format!(
                "expected {} parts for K={k} M2={m2}, got {}",
                sizes.len(),
                parts.len()
            )));
        }
        let mut seen = vec![false; k + 1];
        for (i, part) in parts.iter().enumerate() {
            if part.len() != sizes[i] {
                return Err(Error::Wire(format!(
                    "part {} has size {}, expected {}",
                    i + 1,
                    part.len(),
                    sizes[i]
                )));
            }
            if !part.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Wire(format!("part {} is not sorted ascending", i + 1)));
            }
            for &index in part {
                if index == 0 || index > k {
                    return Err(Error::Wire(format!("index {index} outside 1..={k}")));
                }
                if seen[index] {
                    return Err(Error::Wire(format!("index {index} appears in two parts")));
                }
                seen[index] = true;
            }
        }
        Ok(PartitionQuery { k, m1, m2, parts })
    }

    pub fn message_count(&self) -> usize {
        self.k
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    /// Number of downloaded sums, P = ⌈K/(M2+1)⌉.
    pub fn combination_count(&self) -> usize {
        self.parts.len()
    }

    /// 0-based position of the part containing `index`.
    pub fn part_containing(&self, index: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.binary_search(&index).is_ok())
    }

    /// The P×K 0/1 coefficient matrix the answer realizes, over GF(q).
    pub fn combination_matrix(&self, q: u32) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(self.parts.len(), self.k, q);
        for (i, part) in self.parts.iter().enumerate() {
            for &index in part {
                m.set(i, index - 1, crate::field::FieldElement::one(q));
            }
        }
        m
    }
}

impl std::fmt::Display for PartitionQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({})",
            self.parts.iter().map(|p| format!("{{{}}}", p.iter().join(","))).join(", ")
        )
    }
}

/// Answer payload: one sum per part.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PartitionAnswer {
    sums: Vec<FieldVector>,
}

impl PartitionAnswer {
    pub fn new(sums: Vec<FieldVector>) -> Self {
        PartitionAnswer { sums }
    }

    pub fn sums(&self) -> &[FieldVector] {
        &self.sums
    }

    pub fn combination_count(&self) -> usize {
        self.sums.len()
    }

    pub fn message_len(&self) -> usize {
        self.sums.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn symbol_count(&self) -> usize {
        self.sums.iter().map(|v| v.len()).sum()
    }
}

/// Server side: Y_i = sum of the messages in part i.
pub fn answer(query: &PartitionQuery, db: &Database) -> Result<PartitionAnswer> {
    if query.message_count() != db.message_count() {
        return Err(Error::InvalidParameter(format!(
            "query is for K={} but the database has K={}",
            query.message_count(),
            db.message_count()
        )));
    }
    let sums = query
        .parts()
        .iter()
        .map(|part| {
            let mut acc = FieldVector::zeros(db.modulus(), db.message_len());
            for &index in part {
                acc = acc.add(db.message(index));
            }
            acc
        })
        .collect();
    Ok(PartitionAnswer { sums })
}

/// User side: X_W = Y_{i*} minus the side messages sharing W's part.
///
/// Errors if W's part contains an index outside {W} ∪ R ∪ S; that query was
/// not produced for this configuration.
pub fn decode(
    query: &PartitionQuery,
    answer: &PartitionAnswer,
    cfg: &SideInfoConfig,
    side: &SideMessages,
) -> Result<FieldVector> {
    cfg.validate_against(query.message_count())?;
    if answer.combination_count() != query.combination_count() {
        return Err(Error::Decode(format!(
            "answer has {} sums, query has {} parts",
            answer.combination_count(),
            query.combination_count()
        )));
    }
    let demand_part = query
        .part_containing(cfg.demand())
        .ok_or_else(|| Error::Decode(format!("demand index {} missing from query", cfg.demand())))?;
    let known = cfg.known_indices();
    if let Some(&foreign) =
        query.parts()[demand_part].iter().find(|i| !known.contains(i))
    {
        return Err(Error::Decode(format!(
            "demand part contains index {foreign} outside {{W}} ∪ R ∪ S; \
             query was not produced for this configuration"
        )));
    }
    let mut x = answer.sums()[demand_part].clone();
    for &index in query.parts()[demand_part].iter().filter(|&&i| i != cfg.demand()) {
        let m = side.get(&index).ok_or_else(|| {
            Error::Decode(format!("missing side message {index} needed for decoding"))
        })?;
        if m.len() != x.len() || m.modulus() != x.modulus() {
            return Err(Error::Decode(format!("side message {index} has the wrong shape")));
        }
        x = x.sub(m);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{enumerate_tree, RngChooser};
    use crate::rational::{ratio, Rational};
    use num::{One, Zero};
    use rand::SeedableRng;
    use std::collections::BTreeMap;

    fn cfg(w: usize, r: &[usize], s: &[usize]) -> SideInfoConfig {
        SideInfoConfig::new(w, r.iter().copied().collect(), s.iter().copied().collect()).unwrap()
    }

    fn rng_chooser(seed: u64) -> RngChooser<rand_chacha::ChaCha12Rng> {
        RngChooser(rand_chacha::ChaCha12Rng::seed_from_u64(seed))
    }

    #[test]
    fn sizes() {
        assert_eq!(part_sizes(3, 1), vec![2, 1]);
        assert_eq!(part_sizes(4, 1), vec![2, 2]);
        assert_eq!(part_sizes(5, 2), vec![3, 2]);
        assert_eq!(part_sizes(4, 2), vec![3, 1]);
        assert_eq!(part_sizes(6, 1), vec![2, 2, 2]);
    }

    #[test]
    fn single_part_never_occurs_on_valid_parameters() {
        // K > M1+M2 with M1 >= 1 forces K >= M2+2, hence at least two parts
        for k in 3..=12usize {
            for m1 in 1..k {
                for m2 in 1..k {
                    if k > m1 + m2 {
                        assert!(part_sizes(k, m2).len() >= 2, "K={k} M2={m2}");
                    }
                }
            }
        }
    }

    #[test]
    fn query_distribution_small_case() {
        // K=3, cfg (W=3, R={1}, S={2}): three queries, each probability 1/3
        let c = cfg(3, &[1], &[2]);
        let leaves =
            enumerate_tree(10_000, |ch| PartitionQuery::build(&c, 3, ch).unwrap()).unwrap();
        let mut dist: BTreeMap<PartitionQuery, Rational> = BTreeMap::new();
        for (q, p) in leaves {
            *dist.entry(q).or_insert_with(Rational::zero) += p;
        }
        assert_eq!(dist.len(), 3);
        assert_eq!(dist.values().cloned().sum::<Rational>(), Rational::one());
        let target = PartitionQuery::from_parts(3, 1, 1, vec![vec![1, 2], vec![3]]).unwrap();
        assert_eq!(dist[&target], ratio(1, 3));
        assert!(dist.values().all(|p| *p == ratio(1, 3)));
    }

    #[test]
    fn demand_part_is_never_foreign() {
        let c = cfg(2, &[1], &[3]);
        for seed in 0..200 {
            let mut ch = rng_chooser(seed);
            let q = PartitionQuery::build(&c, 4, &mut ch).unwrap();
            let part = &q.parts()[q.part_containing(2).unwrap()];
            assert!(part.iter().all(|i| [1, 2, 3].contains(i)), "{q}");
        }
    }

    #[test]
    fn emitted_partitions_have_prescribed_shape() {
        let c = cfg(4, &[1], &[2, 5]);
        for seed in 0..100 {
            let mut ch = rng_chooser(seed);
            let q = PartitionQuery::build(&c, 5, &mut ch).unwrap();
            assert_eq!(q.parts().iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2]);
            let mut all: Vec<usize> = q.parts().iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![1, 2, 3, 4, 5]);
            assert!(q.parts().iter().all(|p| p.windows(2).all(|w| w[0] < w[1])));
        }
    }

    #[test]
    fn rejects_m2_zero_and_bad_params() {
        let c = cfg(2, &[1], &[]);
        let mut ch = rng_chooser(0);
        assert!(PartitionQuery::build(&c, 3, &mut ch).is_err());
        let c = cfg(3, &[1], &[2]);
        assert!(PartitionQuery::build(&c, 2, &mut ch).is_err());
    }

    #[test]
    fn answer_values() {
        let q = PartitionQuery::from_parts(3, 1, 1, vec![vec![1, 2], vec![3]]).unwrap();
        let db = Database::new(
            5,
            vec![
                FieldVector::new(5, vec![2]),
                FieldVector::new(5, vec![3]),
                FieldVector::new(5, vec![4]),
            ],
        )
        .unwrap();
        let a = answer(&q, &db).unwrap();
        assert_eq!(a.sums()[0].values(), &[0]); // 2+3 mod 5
        assert_eq!(a.sums()[1].values(), &[4]);
    }

    #[test]
    fn answer_matches_naive_sums_on_random_database() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let db = Database::random(6, 2, 7, &mut rng).unwrap();
        let c = cfg(5, &[2], &[4]);
        let mut ch = rng_chooser(8);
        let q = PartitionQuery::build(&c, 6, &mut ch).unwrap();
        let a = answer(&q, &db).unwrap();
        for (i, part) in q.parts().iter().enumerate() {
            for t in 0..db.message_len() {
                let naive = part
                    .iter()
                    .fold(crate::field::FieldElement::zero(7), |acc, &j| {
                        acc + db.message(j).element(t)
                    });
                assert_eq!(a.sums()[i].element(t), naive);
            }
        }
    }

    #[test]
    fn decode_hand_case() {
        // parts ({2,3},{1,4}), W=2, R={1}, S={3}, X=(5,1,2,0) over GF(7):
        // Y_1 = 1+2 = 3, X_2 = 3 - 2 = 1
        let q = PartitionQuery::from_parts(4, 1, 1, vec![vec![2, 3], vec![1, 4]]).unwrap();
        let db = Database::new(
            7,
            vec![
                FieldVector::new(7, vec![5]),
                FieldVector::new(7, vec![1]),
                FieldVector::new(7, vec![2]),
                FieldVector::new(7, vec![0]),
            ],
        )
        .unwrap();
        let a = answer(&q, &db).unwrap();
        assert_eq!(a.sums()[0].values(), &[3]);
        let c = cfg(2, &[1], &[3]);
        let side = db.side_messages(&c.side_indices());
        let x = decode(&q, &a, &c, &side).unwrap();
        assert_eq!(x.values(), &[1]);
    }

    #[test]
    fn decode_rejects_foreign_demand_part() {
        let q = PartitionQuery::from_parts(4, 1, 1, vec![vec![2, 4], vec![1, 3]]).unwrap();
        let db = Database::new(
            7,
            (0..4).map(|v| FieldVector::new(7, vec![v])).collect(),
        )
        .unwrap();
        let a = answer(&q, &db).unwrap();
        let c = cfg(2, &[1], &[3]); // part of 2 is {2,4}, and 4 is foreign
        let side = db.side_messages(&c.side_indices());
        let err = decode(&q, &a, &c, &side).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn decode_exhaustive_all_configs_leaves_and_databases() {
        // K=4, M1=M2=1, q=3, n=1: every cfg, every randomness leaf, every
        // database decodes to X_W
        use itertools::Itertools;
        for c in crate::model::all_configs(4, 1, 1).unwrap() {
            let leaves =
                enumerate_tree(1_000_000, |ch| PartitionQuery::build(&c, 4, ch).unwrap()).unwrap();
            let queries: BTreeSet<PartitionQuery> = leaves.into_iter().map(|(q, _)| q).collect();
            for q in &queries {
                for assignment in (0..4).map(|_| 0u32..3).multi_cartesian_product() {
                    let db = Database::new(
                        3,
                        assignment.iter().map(|&v| FieldVector::new(3, vec![v])).collect(),
                    )
                    .unwrap();
                    let a = answer(q, &db).unwrap();
                    let side = db.side_messages(&c.side_indices());
                    let x = decode(q, &a, &c, &side).unwrap();
                    assert_eq!(&x, db.message(c.demand()), "cfg {c} query {q}");
                }
            }
        }
    }

    #[test]
    fn wire_constructor_enforces_invariants() {
        assert!(PartitionQuery::from_parts(3, 1, 1, vec![vec![1, 2], vec![3]]).is_ok());
        // wrong sizes
        assert!(PartitionQuery::from_parts(3, 1, 1, vec![vec![1], vec![2, 3]]).is_err());
        // duplicate index
        assert!(PartitionQuery::from_parts(3, 1, 1, vec![vec![1, 1], vec![3]]).is_err());
        // not sorted
        assert!(PartitionQuery::from_parts(3, 1, 1, vec![vec![2, 1], vec![3]]).is_err());
        // out of range
        assert!(PartitionQuery::from_parts(3, 1, 1, vec![vec![1, 4], vec![3]]).is_err());
    }

    #[test]
    fn combination_vectors_are_independent() {
        let c = cfg(3, &[1], &[2]);
        let mut ch = rng_chooser(4);
        let q = PartitionQuery::build(&c, 5, &mut ch).unwrap();
        let m = q.combination_matrix(5);
        assert_eq!(m.rank(), q.combination_count());
    }
}
