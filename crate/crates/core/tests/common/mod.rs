//! Brute-force oracles shared by the integration tests. They avoid the
//! library's own counting code paths.

#![allow(dead_code)]

use num_bigint::BigInt;

/// Every ordered tuple of length `n` over `lo..=hi`.
pub fn all_tuples(lo: i64, hi: i64, n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (lo..=hi).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn power_sums(t: &[i64], k: usize, d: u32) -> Vec<BigInt> {
    (1..=k as u32)
        .map(|j| t.iter().map(|&v| BigInt::from(v).pow((2 * j - 1) * d)).sum())
        .collect()
}

/// `V` by comparing every pair of tuples.
pub fn naive_count(signed: bool, k: usize, d: u32, p: i64) -> u64 {
    let lo = if signed { -p } else { 1 };
    let sigs: Vec<Vec<BigInt>> = all_tuples(lo, p, k + 1)
        .iter()
        .map(|t| power_sums(t, k, d))
        .collect();
    let mut total = 0u64;
    for a in &sigs {
        for b in &sigs {
            let hit = if signed {
                a.iter().zip(b).all(|(x, y)| *x == -y)
            } else {
                a == b
            };
            total += hit as u64;
        }
    }
    total
}

/// Pairs of tuples with the same multiset of entries.
pub fn naive_l_star(k: usize, p: i64) -> u64 {
    let sorted: Vec<Vec<i64>> = all_tuples(1, p, k + 1)
        .into_iter()
        .map(|mut t| {
            t.sort_unstable();
            t
        })
        .collect();
    let mut total = 0;
    for a in &sorted {
        for b in &sorted {
            total += (a == b) as u64;
        }
    }
    total
}

/// Whether `z` splits into pairs summing to zero, by trying every pairing.
pub fn has_zero_pairing(z: &[i64]) -> bool {
    if z.is_empty() {
        return true;
    }
    let first = z[0];
    (1..z.len()).any(|j| {
        first + z[j] == 0 && {
            let rest: Vec<i64> = z[1..]
                .iter()
                .enumerate()
                .filter(|&(i, _)| i + 1 != j)
                .map(|(_, &v)| v)
                .collect();
            has_zero_pairing(&rest)
        }
    })
}

pub fn naive_l_signed(k: usize, p: i64) -> u64 {
    all_tuples(-p, p, 2 * k + 2)
        .iter()
        .filter(|z| has_zero_pairing(z))
        .count() as u64
}

/// Largest `P` with at most `limit` tuple pairs, starting at 1.
pub fn max_box(signed: bool, k: usize, limit: u128) -> u64 {
    let pairs = |p: u64| {
        let m = if signed { 2 * p + 1 } else { p } as u128;
        m.checked_pow(2 * (k as u32 + 1)).unwrap_or(u128::MAX)
    };
    let mut p = 0;
    while pairs(p + 1) <= limit {
        p += 1;
    }
    p
}
