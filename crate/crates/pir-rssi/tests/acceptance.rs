//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//! Every comparison is exact (rational equality, byte equality, or rank
//! equality); there are no tolerances.

use std::collections::BTreeSet;
use std::net::TcpStream;

use itertools::Itertools;
use num::Zero;
use pir_rssi::audit::{
    audit_privacy, check_recoverability, completion_grid, min_determining_set,
    DEFAULT_NODE_BUDGET,
};
use pir_rssi::choice::RngChooser;
use pir_rssi::field::{is_mds, smallest_prime_geq, vandermonde_generator};
use pir_rssi::mds::MdsQuery;
use pir_rssi::model::{
    all_configs, conjectured_capacity, naive_upper_bound, proven_upper_bound, sample_config,
    Database,
};
use pir_rssi::partition::PartitionQuery;
use pir_rssi::rational::ratio;
use pir_rssi::wire::{
    answer_query, decode_answer, deserialize_answer, deserialize_query, read_frame, retrieve,
    serialize_answer, serialize_query, write_frame, Answer, PirServer, Query, SchemeKind,
    SchemeSelect, DEFAULT_MAX_FRAME,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn criterion(n: u32, name: &str, pass: bool) {
    println!("[acceptance] criterion {n} ({name}): {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed");
}

/// All (K, M1, M2) with M1, M2 >= 1 and K > M1 + M2, up to k_max.
fn grid(k_max: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 3..=k_max {
        for m1 in 1..k {
            for m2 in 1..k {
                if k > m1 + m2 {
                    out.push((k, m1, m2));
                }
            }
        }
    }
    out
}

#[test]
fn criterion_1_rate_reproduction() {
    let mut ok = true;
    for k in 3..=12usize {
        let q = smallest_prime_geq(k as u32);
        let n = 2;
        let mut rng = ChaCha12Rng::seed_from_u64(k as u64);
        let db = Database::random(k, n, q, &mut rng).unwrap();
        let handle = PirServer::bind("127.0.0.1:0", db.clone()).unwrap().spawn().unwrap();
        for (kk, m1, m2) in grid(12).into_iter().filter(|&(kk, _, _)| kk == k) {
            let cfg = sample_config(kk, m1, m2, &mut RngChooser(&mut rng)).unwrap();
            let side = db.side_messages(&cfg.side_indices());
            let (x, stats) = retrieve(
                handle.addr(),
                kk,
                q,
                &cfg,
                &side,
                SchemeSelect::Auto,
                &mut RngChooser(&mut rng),
            )
            .unwrap();
            let expected_rate = conjectured_capacity(kk, m1, m2).unwrap();
            ok &= stats.achieved_rate == expected_rate;
            ok &= &x == db.message(cfg.demand());
            assert_eq!(
                stats.achieved_rate, expected_rate,
                "K={kk} M1={m1} M2={m2}: measured {} observed vs 1/min{{K-M1-M2, ceil(K/(M2+1))}}",
                stats.achieved_rate
            );
        }
        handle.shutdown();
    }
    criterion(1, "auto-selected rate equals 1/min{K-M1-M2, ceil(K/(M2+1))} on the K<=12 grid", ok);
}

#[test]
fn criterion_2_scheme_level_rates() {
    let mut ok = true;
    for k in 3..=12usize {
        let q = smallest_prime_geq(k as u32);
        let mut rng = ChaCha12Rng::seed_from_u64(100 + k as u64);
        let db = Database::random(k, 2, q, &mut rng).unwrap();
        let handle = PirServer::bind("127.0.0.1:0", db.clone()).unwrap().spawn().unwrap();
        for (kk, m1, m2) in grid(12).into_iter().filter(|&(kk, _, _)| kk == k) {
            let cfg = sample_config(kk, m1, m2, &mut RngChooser(&mut rng)).unwrap();
            let side = db.side_messages(&cfg.side_indices());
            for (kind, denom) in [
                (SchemeKind::Mds, (kk - m1 - m2) as i64),
                (SchemeKind::Partition, (kk as u64).div_ceil(m2 as u64 + 1) as i64),
            ] {
                let (x, stats) = retrieve(
                    handle.addr(),
                    kk,
                    q,
                    &cfg,
                    &side,
                    SchemeSelect::Force(kind),
                    &mut RngChooser(&mut rng),
                )
                .unwrap();
                ok &= stats.achieved_rate == ratio(1, denom);
                ok &= &x == db.message(cfg.demand());
                assert_eq!(stats.achieved_rate, ratio(1, denom), "K={kk} M1={m1} M2={m2} {kind}");
            }
        }
        handle.shutdown();
    }
    criterion(2, "forced-MDS rate 1/(K-M1-M2) and forced-partition rate 1/ceil(K/(M2+1))", ok);
}

#[test]
fn criterion_3_tightness_on_proven_domains() {
    let mut ok = true;
    for k in 3..=12usize {
        let q = smallest_prime_geq(k as u32);
        let mut rng = ChaCha12Rng::seed_from_u64(200 + k as u64);
        let db = Database::random(k, 2, q, &mut rng).unwrap();
        let handle = PirServer::bind("127.0.0.1:0", db.clone()).unwrap().spawn().unwrap();
        for (kk, m1, m2) in
            grid(12).into_iter().filter(|&(kk, m1, m2)| kk == k && (m1 == 1 || m2 == 1))
        {
            let cfg = sample_config(kk, m1, m2, &mut RngChooser(&mut rng)).unwrap();
            let side = db.side_messages(&cfg.side_indices());
            let (_, stats) = retrieve(
                handle.addr(),
                kk,
                q,
                &cfg,
                &side,
                SchemeSelect::Auto,
                &mut RngChooser(&mut rng),
            )
            .unwrap();
            let bound = proven_upper_bound(kk, m1, m2).unwrap().expect("proven domain");
            ok &= stats.achieved_rate == bound;
            assert_eq!(stats.achieved_rate, bound, "K={kk} M1={m1} M2={m2}");
            // the rate meets the proven ceiling: the bound is tight here
        }
        handle.shutdown();
    }

    // the (6,2,1) row: achieved 1/3 strictly below the naive bound 1/2
    {
        let q = smallest_prime_geq(6);
        let mut rng = ChaCha12Rng::seed_from_u64(621);
        let db = Database::random(6, 2, q, &mut rng).unwrap();
        let handle = PirServer::bind("127.0.0.1:0", db.clone()).unwrap().spawn().unwrap();
        let cfg = sample_config(6, 2, 1, &mut RngChooser(&mut rng)).unwrap();
        let side = db.side_messages(&cfg.side_indices());
        let (_, stats) = retrieve(
            handle.addr(),
            6,
            q,
            &cfg,
            &side,
            SchemeSelect::Auto,
            &mut RngChooser(&mut rng),
        )
        .unwrap();
        handle.shutdown();
        ok &= stats.achieved_rate == ratio(1, 3);
        let naive = naive_upper_bound(6, 2, 1).unwrap();
        assert_eq!(naive, ratio(1, 2));
        ok &= stats.achieved_rate < naive;
        assert!(stats.achieved_rate < naive, "the naive bound must be strictly loose at (6,2,1)");
    }
    criterion(3, "achieved rate equals the proven bound for M1=1 or M2=1; (6,2,1) gap strict", ok);
}

#[test]
fn criterion_4_exact_privacy() {
    let mut ok = true;
    for (k, m1, m2) in grid(6) {
        let q = smallest_prime_geq(k as u32);
        for kind in [SchemeKind::Mds, SchemeKind::Partition] {
            let report = audit_privacy(kind, k, m1, m2, q, DEFAULT_NODE_BUDGET).unwrap();
            ok &= report.pass && report.worst_deviation.is_zero();
            assert!(
                report.pass,
                "{kind} K={k} M1={m1} M2={m2}: worst deviation {}",
                report.worst_deviation
            );
            if kind == SchemeKind::Mds {
                ok &= report.ssi_private();
                assert!(
                    report.ssi_private(),
                    "MDS must hide S too, measured {}",
                    report.ssi_worst_deviation
                );
            }
        }
    }
    criterion(4, "zero posterior deviation for both schemes, K<=6; MDS hides S uniformly", ok);
}

#[test]
fn criterion_5_recoverability() {
    let mut ok = true;
    // rank criterion over every config and every randomness leaf
    for (k, m1, m2) in grid(6) {
        let q = smallest_prime_geq(k as u32);
        for kind in [SchemeKind::Mds, SchemeKind::Partition] {
            let check =
                check_recoverability(kind, k, m1, m2, q, 2, 0, 5, DEFAULT_NODE_BUDGET).unwrap();
            ok &= check.pass;
            assert!(check.pass, "{kind} K={k} M1={m1} M2={m2}: {:?}", check.failures);
        }
    }
    // 100 random databases per grid point, fresh config and query each time
    for (k, m1, m2) in grid(6) {
        let q = smallest_prime_geq(k as u32);
        let mut rng = ChaCha12Rng::seed_from_u64((k * 100 + m1 * 10 + m2) as u64);
        for kind in [SchemeKind::Mds, SchemeKind::Partition] {
            for _ in 0..100 {
                let db = Database::random(k, 2, q, &mut rng).unwrap();
                let cfg = sample_config(k, m1, m2, &mut RngChooser(&mut rng)).unwrap();
                let query = Query::build(kind, k, q, &cfg, &mut RngChooser(&mut rng)).unwrap();
                let answer = answer_query(&query, &db).unwrap();
                let side = db.side_messages(&cfg.side_indices());
                let x = decode_answer(&query, &answer, &cfg, &side).unwrap();
                ok &= &x == db.message(cfg.demand());
                assert_eq!(&x, db.message(cfg.demand()), "{kind} K={k} M1={m1} M2={m2}");
            }
        }
    }
    criterion(5, "rank criterion on all configs and leaves K<=6; 100 decode round-trips per point", ok);
}

#[test]
fn criterion_6_mds_structure() {
    let mut ok = true;
    for k in 1..=12usize {
        let q = smallest_prime_geq(k as u32);
        for p in 1..=k {
            let g = vandermonde_generator(p, k, q).unwrap();
            ok &= is_mds(&g);
            assert!(is_mds(&g), "P={p} K={k} q={q}");
        }
    }
    // support-vector uniqueness: the decoding combination depends on the
    // config only through the support T = R ∪ S ∪ {W}, so sweeping every
    // (M1+M2+1)-subset covers every config exactly
    for k in 3..=12usize {
        let q = smallest_prime_geq(k as u32);
        for s in 2..k {
            let (m1, m2) = (1, s - 1); // P depends only on the sum
            let query = MdsQuery::build(k, m1, m2, q).unwrap();
            for support in (1..=k).combinations(s + 1) {
                let support: BTreeSet<usize> = support.into_iter().collect();
                let pivot = *support.iter().next().unwrap();
                let u = query.support_combination(&support, pivot);
                ok &= u.is_ok();
                let u = u.unwrap_or_else(|e| panic!("K={k} sum={s} support {support:?}: {e}"));
                let image = query.generator().vector_mul(&u);
                let got: BTreeSet<usize> = image.support().iter().map(|j| j + 1).collect();
                ok &= got == support;
                assert_eq!(got, support, "support of the combination must be exactly T");
            }
        }
    }
    criterion(6, "Vandermonde generators are MDS for K<=12; support vector unique for every config", ok);
}

#[test]
fn criterion_7_converse_probes() {
    let mut ok = true;
    for (k, m1, m2) in grid(6) {
        let q = smallest_prime_geq(k as u32);
        for kind in [SchemeKind::Mds, SchemeKind::Partition] {
            let grid_result = completion_grid(kind, k, m1, m2, q, DEFAULT_NODE_BUDGET).unwrap();
            ok &= grid_result.pass();
            assert!(
                grid_result.pass(),
                "{kind} K={k} M1={m1} M2={m2}: {:?}",
                grid_result.failures
            );
        }
        // MDS minimum determining set: L = M1+M2 exactly, inside the bound,
        // and the answer size meets the (K-L) messages floor with equality
        let g = MdsQuery::build(k, m1, m2, q).unwrap();
        let result = min_determining_set(&g.combination_matrix(), m1, m2).unwrap();
        ok &= result.size == m1 + m2 && result.bound_ok;
        assert_eq!(result.size, m1 + m2, "K={k} M1={m1} M2={m2}");
        assert!(result.bound_ok);
        let n = 3usize;
        let symbols = g.combination_count() * n;
        ok &= symbols == (k - result.size) * n;
        assert_eq!(symbols, (k - result.size) * n, "answer symbols = (K-L)·n with equality");
    }
    criterion(7, "completion condition holds for every (W*,R*); MDS determining set L=M1+M2", ok);
}

#[test]
fn criterion_8_wire_fidelity() {
    let mut ok = true;
    let mut rng = ChaCha12Rng::seed_from_u64(888);

    // 1000 randomized payload round-trips (queries and answers, both schemes)
    for i in 0..1000usize {
        let k = rng.random_range(3..=9usize);
        let m1 = rng.random_range(1..=(k - 2).min(4));
        let m2 = rng.random_range(1..=(k - m1 - 1).min(4));
        let q = smallest_prime_geq(rng.random_range(k as u32..=k as u32 + 20));
        match i % 4 {
            0 => {
                let query = Query::Mds(MdsQuery::build(k, m1, m2, q).unwrap());
                ok &= deserialize_query(&serialize_query(&query)).unwrap() == query;
            }
            1 => {
                let cfg = sample_config(k, m1, m2, &mut RngChooser(&mut rng)).unwrap();
                let query = Query::Partition(
                    PartitionQuery::build(&cfg, k, &mut RngChooser(&mut rng)).unwrap(),
                );
                ok &= deserialize_query(&serialize_query(&query)).unwrap() == query;
            }
            _ => {
                let n = rng.random_range(1..=5usize);
                let db = Database::random(k, n, q, &mut rng).unwrap();
                let cfg = sample_config(k, m1, m2, &mut RngChooser(&mut rng)).unwrap();
                let kind = if i % 4 == 2 { SchemeKind::Mds } else { SchemeKind::Partition };
                let query = Query::build(kind, k, q, &cfg, &mut RngChooser(&mut rng)).unwrap();
                let answer = answer_query(&query, &db).unwrap();
                ok &= deserialize_answer(&serialize_answer(&answer), q).unwrap() == answer;
            }
        }
        assert!(ok, "round-trip identity broke at payload {i}");
    }

    // loopback serve reproduces the in-process answer byte-for-byte
    {
        let k = 7usize;
        let q = smallest_prime_geq(k as u32);
        let db = Database::random(k, 3, q, &mut rng).unwrap();
        let handle = PirServer::bind("127.0.0.1:0", db.clone()).unwrap().spawn().unwrap();
        for kind in [SchemeKind::Mds, SchemeKind::Partition] {
            let cfg = sample_config(k, 1, 2, &mut RngChooser(&mut rng)).unwrap();
            let query = Query::build(kind, k, q, &cfg, &mut RngChooser(&mut rng)).unwrap();
            let in_process: Answer = answer_query(&query, &db).unwrap();
            let expected_bytes = serialize_answer(&in_process);

            let mut stream = TcpStream::connect(handle.addr()).unwrap();
            write_frame(&mut stream, &serialize_query(&query)).unwrap();
            let wire_bytes = read_frame(&mut stream, DEFAULT_MAX_FRAME).unwrap();
            ok &= wire_bytes == expected_bytes;
            assert_eq!(wire_bytes, expected_bytes, "{kind} answer bytes differ over the wire");
        }
        handle.shutdown();
    }

    // MDS query bytes are identical across every config at fixed parameters
    {
        let (k, m1, m2) = (6usize, 2usize, 1usize);
        let q = smallest_prime_geq(k as u32);
        let reference = serialize_query(&Query::Mds(MdsQuery::build(k, m1, m2, q).unwrap()));
        for cfg in all_configs(k, m1, m2).unwrap() {
            let query =
                Query::build(SchemeKind::Mds, k, q, &cfg, &mut RngChooser(&mut rng)).unwrap();
            ok &= serialize_query(&query) == reference;
            assert_eq!(serialize_query(&query), reference, "query must not depend on {cfg}");
        }
    }
    criterion(8, "1000 round-trips; wire answers byte-equal in-process; MDS query constant", ok);
}
