mod common;

use common::*;
use num_bigint::BigInt;
use paucity::enumeration::{count, list_nontrivial, EnumConfig};
use paucity::systems::{exact_l_signed, exact_l_star, SolutionPair, SystemSpec};

fn cfg(threads: usize) -> EnumConfig {
    EnumConfig::with_threads(threads)
}

#[test]
fn positive_counts_match_pair_loop() {
    for (k, d, pmax) in [(2, 1, 7), (3, 1, 4), (4, 1, 3), (2, 2, 6), (3, 2, 3)] {
        let spec = SystemSpec::positive(k, d).unwrap();
        for p in 1..=pmax {
            let c = count(&spec, p, &cfg(3)).unwrap();
            assert_eq!(c.v, BigInt::from(naive_count(false, k, d, p as i64)), "{spec} P={p}");
            assert_eq!(c.l, BigInt::from(naive_l_star(k, p as i64)));
        }
    }
}

#[test]
fn signed_counts_match_pair_loop() {
    for (k, pmax) in [(2, 3), (3, 2)] {
        let spec = SystemSpec::signed(k).unwrap();
        for p in 1..=pmax {
            let c = count(&spec, p, &cfg(2)).unwrap();
            assert_eq!(c.v, BigInt::from(naive_count(true, k, 1, p as i64)), "{spec} P={p}");
        }
    }
}

#[test]
fn diagonal_counts_match_brute_force() {
    for p in 1..=3 {
        assert_eq!(exact_l_signed(2, p), BigInt::from(naive_l_signed(2, p as i64)));
    }
    for p in 1..=6 {
        assert_eq!(exact_l_star(2, p), BigInt::from(naive_l_star(2, p as i64)));
    }
}

#[test]
fn listing_weights_sum_to_delta() {
    for spec in [
        SystemSpec::positive(2, 1).unwrap(),
        SystemSpec::signed(2).unwrap(),
        SystemSpec::positive(3, 1).unwrap(),
    ] {
        for p in [6, 9, 12] {
            let c = count(&spec, p, &cfg(2)).unwrap();
            let l = list_nontrivial(&spec, p, None, &cfg(2)).unwrap();
            let w: u128 = l.classes.iter().map(|c| c.weight).sum();
            assert_eq!(BigInt::from(w), c.delta, "{spec} P={p}");
            for class in &l.classes {
                assert!(class.solution.solves(&spec));
                assert!(!class.solution.is_trivial());
            }
        }
    }
}

#[test]
fn listing_rows_round_trip_through_csv() {
    let spec = SystemSpec::signed(2).unwrap();
    let l = list_nontrivial(&spec, 8, None, &cfg(1)).unwrap();
    for class in &l.classes {
        let row = class.solution.to_csv_row(&spec, 8);
        let (s, p, sol) = SolutionPair::from_csv_row(&row).unwrap();
        assert_eq!((s, p, &sol), (spec, 8, &class.solution));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = SystemSpec::signed(2).unwrap();
    let base = count(&spec, 15, &cfg(1)).unwrap();
    let list = list_nontrivial(&spec, 15, None, &cfg(1)).unwrap();
    for t in [2, 5, 8] {
        assert!(count(&spec, 15, &cfg(t)).unwrap().agrees_with(&base));
        assert_eq!(list_nontrivial(&spec, 15, None, &cfg(t)).unwrap(), list);
    }
}
