//! Property-based invariants: exact linear algebra laws and wire round-trip
//! identity over randomized inputs.

use proptest::prelude::*;

use pir_rssi::choice::RngChooser;
use pir_rssi::field::{FieldMatrix, FieldVector};
use pir_rssi::mds::{MdsAnswer, MdsQuery};
use pir_rssi::model::sample_config;
use pir_rssi::partition::PartitionQuery;
use pir_rssi::wire::{
    deserialize_answer, deserialize_query, serialize_answer, serialize_query, Answer, Query,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const SMALL_PRIMES: &[u32] = &[2, 3, 5, 7, 11, 13];

prop_compose! {
    fn matrix()(q_idx in 0..SMALL_PRIMES.len(), rows in 0..5usize, cols in 1..7usize)
               (entries in proptest::collection::vec(0u32..SMALL_PRIMES[q_idx], rows * cols),
                q in Just(SMALL_PRIMES[q_idx]), rows in Just(rows), cols in Just(cols))
               -> FieldMatrix {
        FieldMatrix::from_entries(rows, cols, q, entries)
    }
}

proptest! {
    #[test]
    fn nullspace_vectors_are_annihilated_and_count_matches_rank(m in matrix()) {
        let basis = m.nullspace();
        prop_assert_eq!(basis.len(), m.cols() - m.rank());
        for v in &basis {
            let image = m.mul_vector(v);
            prop_assert!(image.values().iter().all(|&x| x == 0));
        }
        // basis vectors are linearly independent
        if !basis.is_empty() {
            let stacked = FieldMatrix::from_rows(&basis);
            prop_assert_eq!(stacked.rank(), basis.len());
        }
    }

    #[test]
    fn rank_is_invariant_under_transpose(m in matrix()) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn partition_query_roundtrip(k in 3..9usize, seed in 0u64..500) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let m1 = 1 + (seed as usize % (k - 2));
        let m2_max = k - m1 - 1;
        prop_assume!(m2_max >= 1);
        let m2 = 1 + (seed as usize / 7 % m2_max);
        let cfg = sample_config(k, m1, m2, &mut RngChooser(&mut rng)).unwrap();
        let query = Query::Partition(PartitionQuery::build(&cfg, k, &mut RngChooser(&mut rng)).unwrap());
        let bytes = serialize_query(&query);
        prop_assert_eq!(deserialize_query(&bytes).unwrap(), query);
    }

    #[test]
    fn mds_query_roundtrip(k in 2..10usize, extra in 0u32..10) {
        let q = pir_rssi::field::smallest_prime_geq(k as u32 + extra);
        let query = Query::Mds(MdsQuery::build(k, 1, 0, q).unwrap());
        let bytes = serialize_query(&query);
        prop_assert_eq!(deserialize_query(&bytes).unwrap(), query);
    }

    #[test]
    fn answer_roundtrip(p in 1..5usize, n in 1..6usize, q_idx in 1..SMALL_PRIMES.len(), seed in 0u64..1000) {
        let q = SMALL_PRIMES[q_idx];
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        use rand::RngExt;
        let vectors: Vec<FieldVector> = (0..p)
            .map(|_| FieldVector::new(q, (0..n).map(|_| rng.random_range(0..q)).collect()))
            .collect();
        let answer = Answer::Mds(MdsAnswer::new(vectors));
        let bytes = serialize_answer(&answer);
        prop_assert_eq!(deserialize_answer(&bytes, q).unwrap(), answer);
    }

    #[test]
    fn query_decode_rejects_arbitrary_bytes_or_roundtrips(bytes in proptest::collection::vec(any::<u8>(), 0..80)) {
        // decoding never panics; when it succeeds, re-encoding reproduces
        // the canonical bytes
        if let Ok(query) = deserialize_query(&bytes) {
            prop_assert_eq!(serialize_query(&query), bytes);
        }
    }
}
