//! Exact counting of signature collisions.
//!
//! Solutions are collisions of the signature map on `(k+1)`-tuples. Only
//! non-decreasing tuples are generated; each carries the number of its
//! distinct orderings as a weight. The tuple space is split by first entry,
//! each worker fills its own signature histogram, and the histograms are
//! merged by exact addition, so the result does not depend on the worker
//! count.

mod cache;
mod survey;

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;
use std::ops::{AddAssign, Neg};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::systems::{
    exact_l_signed, exact_l_star, is_trivial_signed, ordering_count, SolutionPair, SystemSpec,
    SystemsError, Variant,
};

pub use cache::{CacheError, Journal};
pub use survey::{survey, LogLogFit, SurveyReport};

pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

#[derive(Debug, thiserror::Error)]
pub enum EnumError {
    #[error("memory budget exceeded: estimated {estimate} bytes, budget {budget} bytes")]
    BudgetExceeded { estimate: u64, budget: u64 },
    #[error(transparent)]
    Spec(#[from] SystemsError),
    #[error("box size must be at least 1")]
    EmptyBox,
    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),
    #[error("invalid ladder: {0}")]
    Ladder(String),
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumConfig {
    pub threads: usize,
    pub memory_budget: u64,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            threads: 1,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

impl EnumConfig {
    pub fn with_threads(threads: usize) -> Self {
        EnumConfig {
            threads,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    #[serde(flatten)]
    pub spec: SystemSpec,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "V", with = "crate::decimal")]
    pub v: BigInt,
    #[serde(rename = "L", with = "crate::decimal")]
    pub l: BigInt,
    #[serde(with = "crate::decimal")]
    pub delta: BigInt,
    pub wall_time: f64,
    pub tool_version: String,
}

impl CountResult {
    /// Same counts for the same key; timing is ignored.
    pub fn agrees_with(&self, other: &CountResult) -> bool {
        self.spec == other.spec
            && self.p == other.p
            && self.v == other.v
            && self.l == other.l
            && self.delta == other.delta
    }
}

/// One non-trivial solution class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NontrivialClass {
    pub solution: SolutionPair,
    /// Distinct orderings of each side (`[x, y]`), or of `z` for the signed
    /// system.
    pub orderings: Vec<u64>,
    /// Ordered solutions this class contributes to `V - L`.
    pub weight: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    #[serde(flatten)]
    pub spec: SystemSpec,
    #[serde(rename = "P")]
    pub p: u64,
    pub classes: Vec<NontrivialClass>,
    /// Number of classes before truncation.
    pub total: usize,
}

impl Listing {
    pub fn truncated(&self) -> bool {
        self.classes.len() < self.total
    }
}

// ---------------------------------------------------------------------------
// exact coordinate types

trait Coord:
    Clone + Eq + Hash + Ord + Send + Sync + Zero + for<'a> AddAssign<&'a Self> + Neg<Output = Self>
{
    fn from_big(v: &BigInt) -> Self;
}

impl Coord for i128 {
    fn from_big(v: &BigInt) -> Self {
        v.to_i128().expect("magnitude certified to fit in i128")
    }
}

impl Coord for BigInt {
    fn from_big(v: &BigInt) -> Self {
        v.clone()
    }
}

type Key<T> = SmallVec<[T; 4]>;

struct PowerTable<T> {
    lo: i64,
    k: usize,
    table: Vec<T>,
}

impl<T: Coord> PowerTable<T> {
    fn new(spec: &SystemSpec, lo: i64, hi: i64) -> Self {
        let k = spec.k;
        let mut table = Vec::with_capacity((hi - lo + 1) as usize * k);
        for v in lo..=hi {
            for j in 1..=k {
                let p = num_traits::pow(BigInt::from(v), spec.exponent(j) as usize);
                table.push(T::from_big(&p));
            }
        }
        PowerTable { lo, k, table }
    }

    fn row(&self, v: i64) -> &[T] {
        let start = (v - self.lo) as usize * self.k;
        &self.table[start..start + self.k]
    }
}

fn neg_key<T: Coord>(key: &Key<T>) -> Key<T> {
    key.iter().cloned().map(Neg::neg).collect()
}

/// Largest possible signature entry magnitude: `(k+1) * P^((2k-1)d)`.
fn signature_bound(spec: &SystemSpec, p: u64) -> BigInt {
    BigInt::from(spec.half_len()) * num_traits::pow(BigInt::from(p), spec.exponent(spec.k) as usize)
}

fn fits_i128(spec: &SystemSpec, p: u64) -> bool {
    signature_bound(spec, p) <= BigInt::from(i128::MAX)
}

/// Visits every non-decreasing tuple of length `n` over `[first, hi]` whose
/// first entry is `first`, together with its signature key.
fn for_each_canonical<T: Coord>(
    table: &PowerTable<T>,
    first: i64,
    hi: i64,
    n: usize,
    mut f: impl FnMut(&[i64], &Key<T>),
) {
    let k = table.k;
    let mut tuple = vec![first; n];
    let mut prefix: Vec<Key<T>> = vec![SmallVec::from_elem(T::zero(), k); n + 1];
    let refresh = |prefix: &mut Vec<Key<T>>, tuple: &[i64], from: usize| {
        for j in from..n {
            let mut next = prefix[j].clone();
            for (acc, p) in next.iter_mut().zip(table.row(tuple[j])) {
                *acc += p;
            }
            prefix[j + 1] = next;
        }
    };
    refresh(&mut prefix, &tuple, 0);
    loop {
        f(&tuple, &prefix[n]);
        let Some(i) = (1..n).rev().find(|&i| tuple[i] < hi) else {
            return;
        };
        let v = tuple[i] + 1;
        for t in &mut tuple[i..] {
            *t = v;
        }
        refresh(&mut prefix, &tuple, i);
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, EnumError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EnumError::ThreadPool(e.to_string()))
}

fn binomial(n: u64, r: u64) -> u128 {
    let r = r.min(n.saturating_sub(r));
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Number of non-decreasing `(k+1)`-tuples in the box.
pub fn canonical_tuple_count(spec: &SystemSpec, p: u64) -> u128 {
    let (lo, hi) = spec.value_range(p);
    let m = (hi - lo + 1) as u64;
    let n = spec.half_len() as u64;
    binomial(m + n - 1, n)
}

/// Upper estimate of the peak memory of a scan, in bytes.
pub fn memory_estimate(spec: &SystemSpec, p: u64, listing: bool) -> u64 {
    let coord = if fits_i128(spec, p) {
        16
    } else {
        32 + signature_bound(spec, p).bits() / 8
    };
    let key = 8 + coord * spec.k.max(4) as u64;
    let mut entry = key + 48 + 16;
    if listing {
        entry += 32 + 8 * spec.half_len() as u64;
    }
    // two live maps while merging
    let total = canonical_tuple_count(spec, p).saturating_mul(2 * entry as u128);
    total.min(u64::MAX as u128) as u64
}

fn check_budget(
    spec: &SystemSpec,
    p: u64,
    listing: bool,
    config: &EnumConfig,
) -> Result<(), EnumError> {
    if p == 0 {
        return Err(EnumError::EmptyBox);
    }
    let estimate = memory_estimate(spec, p, listing);
    if estimate > config.memory_budget {
        return Err(EnumError::BudgetExceeded {
            estimate,
            budget: config.memory_budget,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct ClassStats {
    /// ordered tuples with this signature
    n: u128,
    /// sum of squared ordering counts over the multisets in the class
    perm_sq: u128,
}

impl ClassStats {
    fn merge(&mut self, o: &ClassStats) {
        self.n += o.n;
        self.perm_sq += o.perm_sq;
    }
}

fn histogram<T: Coord>(
    spec: &SystemSpec,
    p: u64,
    pool: &rayon::ThreadPool,
) -> HashMap<Key<T>, ClassStats> {
    let (lo, hi) = spec.value_range(p);
    let n = spec.half_len();
    let table = PowerTable::<T>::new(spec, lo, hi);
    pool.install(|| {
        (lo..=hi)
            .into_par_iter()
            .fold(HashMap::new, |mut map: HashMap<Key<T>, ClassStats>, first| {
                for_each_canonical(&table, first, hi, n, |tuple, key| {
                    let w = ordering_count(tuple) as u128;
                    let e = map.entry(key.clone()).or_default();
                    e.n += w;
                    e.perm_sq += w * w;
                });
                map
            })
            .reduce(HashMap::new, merge_maps)
    })
}

fn merge_maps<K: Hash + Eq, V>(
    mut a: HashMap<K, V>,
    mut b: HashMap<K, V>,
) -> HashMap<K, V>
where
    V: Mergeable,
{
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in b {
        match a.entry(k) {
            std::collections::hash_map::Entry::Occupied(mut o) => o.get_mut().merge_from(v),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(v);
            }
        }
    }
    a
}

trait Mergeable {
    fn merge_from(&mut self, other: Self);
}

impl Mergeable for ClassStats {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl<T> Mergeable for Vec<T> {
    fn merge_from(&mut self, mut other: Self) {
        self.append(&mut other);
    }
}

struct RawCounts {
    v: BigInt,
    direct_delta: Option<BigInt>,
}

fn raw_counts<T: Coord>(spec: &SystemSpec, p: u64, pool: &rayon::ThreadPool) -> Result<RawCounts, EnumError> {
    let map = histogram::<T>(spec, p, pool);
    match spec.variant {
        Variant::Positive => {
            let mut v = BigInt::zero();
            let mut direct = BigInt::zero();
            for s in map.values() {
                let sq = BigInt::from(s.n) * BigInt::from(s.n);
                direct += &sq - BigInt::from(s.perm_sq);
                v += sq;
            }
            Ok(RawCounts {
                v,
                direct_delta: Some(direct),
            })
        }
        Variant::Signed => {
            let mut cross = BigInt::zero();
            let mut square = BigInt::zero();
            for (key, s) in &map {
                if let Some(o) = map.get(&neg_key(key)) {
                    cross += BigInt::from(s.n) * BigInt::from(o.n);
                }
                square += BigInt::from(s.n) * BigInt::from(s.n);
            }
            if cross != square {
                return Err(EnumError::CrossCheck(format!(
                    "signed count: sum N(s)N(-s) = {cross} but sum N(s)^2 = {square}"
                )));
            }
            Ok(RawCounts {
                v: cross,
                direct_delta: None,
            })
        }
    }
}

fn diagonal(spec: &SystemSpec, p: u64) -> BigInt {
    match spec.variant {
        Variant::Positive => exact_l_star(spec.k, p),
        Variant::Signed => exact_l_signed(spec.k, p),
    }
}

/// Counts all solutions `V`, the diagonal solutions `L`, and `V - L` for the
/// box of size `p`.
pub fn count(spec: &SystemSpec, p: u64, config: &EnumConfig) -> Result<CountResult, EnumError> {
    check_budget(spec, p, false, config)?;
    let start = Instant::now();
    let pool = thread_pool(config.threads)?;
    let raw = if fits_i128(spec, p) {
        raw_counts::<i128>(spec, p, &pool)?
    } else {
        raw_counts::<BigInt>(spec, p, &pool)?
    };
    let l = diagonal(spec, p);
    let delta = &raw.v - &l;
    if delta < BigInt::zero() {
        return Err(EnumError::CrossCheck(format!(
            "V = {} is smaller than L = {l}",
            raw.v
        )));
    }
    if let Some(direct) = raw.direct_delta {
        if direct != delta {
            return Err(EnumError::CrossCheck(format!(
                "V - L = {delta} but the per-class count gives {direct}"
            )));
        }
    }
    Ok(CountResult {
        spec: *spec,
        p,
        v: raw.v,
        l,
        delta,
        wall_time: start.elapsed().as_secs_f64(),
        tool_version: crate::TOOL_VERSION.to_string(),
    })
}

type Tuple = SmallVec<[i64; 8]>;

fn tuple_groups<T: Coord>(
    spec: &SystemSpec,
    p: u64,
    pool: &rayon::ThreadPool,
) -> HashMap<Key<T>, Vec<Tuple>> {
    let (lo, hi) = spec.value_range(p);
    let n = spec.half_len();
    let table = PowerTable::<T>::new(spec, lo, hi);
    pool.install(|| {
        (lo..=hi)
            .into_par_iter()
            .fold(HashMap::new, |mut map: HashMap<Key<T>, Vec<Tuple>>, first| {
                for_each_canonical(&table, first, hi, n, |tuple, key| {
                    map.entry(key.clone())
                        .or_default()
                        .push(SmallVec::from_slice(tuple));
                });
                map
            })
            .reduce(HashMap::new, merge_maps)
    })
}

/// Arrangement used to report a signed solution: the distinct nonzero values
/// first (positives ascending, then negatives by increasing magnitude), then
/// any zero, then the remaining repeated values in the same order.
pub fn canonical_signed_arrangement(z: &[i64]) -> Vec<i64> {
    let rank = |v: i64| -> (u8, i64) {
        match v {
            v if v > 0 => (0, v),
            v if v < 0 => (1, -v),
            _ => (2, 0),
        }
    };
    let mut sorted = z.to_vec();
    sorted.sort_by_key(|&v| rank(v));
    let mut first = Vec::with_capacity(z.len());
    let mut rest = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if i > 0 && sorted[i - 1] == v {
            rest.push(v);
        } else {
            first.push(v);
        }
    }
    first.extend(rest);
    first
}

fn list_classes<T: Coord>(
    spec: &SystemSpec,
    p: u64,
    pool: &rayon::ThreadPool,
) -> Vec<NontrivialClass> {
    let mut groups = tuple_groups::<T>(spec, p, pool);
    for g in groups.values_mut() {
        g.sort();
    }
    match spec.variant {
        Variant::Positive => {
            let mut out = Vec::new();
            for g in groups.values().filter(|g| g.len() > 1) {
                for (i, x) in g.iter().enumerate() {
                    for y in &g[i + 1..] {
                        let ox = ordering_count(x);
                        let oy = ordering_count(y);
                        out.push(NontrivialClass {
                            solution: SolutionPair::Positive {
                                x: x.to_vec(),
                                y: y.to_vec(),
                            },
                            orderings: vec![ox, oy],
                            weight: 2 * ox as u128 * oy as u128,
                        });
                    }
                }
            }
            out.sort_by(|a, b| a.solution.cmp(&b.solution));
            out
        }
        Variant::Signed => {
            let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
            for (key, left) in &groups {
                let partner = neg_key(key);
                if partner < *key {
                    continue;
                }
                let Some(right) = groups.get(&partner) else {
                    continue;
                };
                for a in left {
                    for b in right {
                        let mut z: Vec<i64> = a.iter().chain(b.iter()).copied().collect();
                        z.sort_unstable();
                        if !is_trivial_signed(&z).expect("even length") {
                            seen.insert(z);
                        }
                    }
                }
            }
            let mut out: Vec<NontrivialClass> = seen
                .into_iter()
                .map(|sorted| {
                    let o = ordering_count(&sorted);
                    NontrivialClass {
                        solution: SolutionPair::Signed {
                            z: canonical_signed_arrangement(&sorted),
                        },
                        orderings: vec![o],
                        weight: o as u128,
                    }
                })
                .collect();
            out.sort_by(|a, b| a.solution.cmp(&b.solution));
            out
        }
    }
}

/// Lists non-trivial solution classes in the box, one representative per
/// multiset class, sorted and cut at `limit`.
pub fn list_nontrivial(
    spec: &SystemSpec,
    p: u64,
    limit: Option<usize>,
    config: &EnumConfig,
) -> Result<Listing, EnumError> {
    check_budget(spec, p, true, config)?;
    let pool = thread_pool(config.threads)?;
    let mut classes = if fits_i128(spec, p) {
        list_classes::<i128>(spec, p, &pool)
    } else {
        list_classes::<BigInt>(spec, p, &pool)
    };
    let total = classes.len();
    if let Some(limit) = limit {
        classes.truncate(limit);
    }
    Ok(Listing {
        spec: *spec,
        p,
        classes,
        total,
    })
}

/// Smallest box size `P <= p_cap` with a non-trivial solution, with the
/// first listed class as witness.
pub fn smallest_nontrivial(
    spec: &SystemSpec,
    p_cap: u64,
    config: &EnumConfig,
) -> Result<Option<(u64, NontrivialClass)>, EnumError> {
    for p in 1..=p_cap {
        let c = count(spec, p, config)?;
        if c.delta > BigInt::zero() {
            let listing = list_nontrivial(spec, p, Some(1), config)?;
            let witness = listing.classes.into_iter().next().ok_or_else(|| {
                EnumError::CrossCheck(format!("delta {} > 0 at P = {p} but nothing listed", c.delta))
            })?;
            return Ok(Some((p, witness)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{signature, SystemSpec};

    fn positive(k: usize) -> SystemSpec {
        SystemSpec::positive(k, 1).unwrap()
    }

    #[test]
    fn canonical_enumeration_visits_every_multiset_once() {
        let spec = positive(2);
        let table = PowerTable::<i128>::new(&spec, 1, 5);
        let mut seen = Vec::new();
        for first in 1..=5 {
            for_each_canonical(&table, first, 5, 3, |t, key| {
                let want: Vec<i128> = signature(t, &spec)
                    .0
                    .iter()
                    .map(|v| v.to_i128().unwrap())
                    .collect();
                assert_eq!(key.to_vec(), want);
                seen.push(t.to_vec());
            });
        }
        assert_eq!(seen.len() as u128, canonical_tuple_count(&spec, 5));
        assert!(seen.iter().all(|t| t.windows(2).all(|w| w[0] <= w[1])));
        let total: u64 = seen.iter().map(|t| ordering_count(t)).sum();
        assert_eq!(total, 125);
    }

    #[test]
    fn small_positive_counts() {
        let c = count(&positive(2), 2, &EnumConfig::default()).unwrap();
        assert_eq!((c.v, c.l, c.delta), (20.into(), 20.into(), 0.into()));
        let c = count(&positive(2), 6, &EnumConfig::default()).unwrap();
        assert_eq!(c.delta, BigInt::from(36));
    }

    #[test]
    fn small_signed_count() {
        let c = count(&SystemSpec::signed(2).unwrap(), 1, &EnumConfig::default()).unwrap();
        assert_eq!((c.v, c.l, c.delta), (141.into(), 141.into(), 0.into()));
    }

    #[test]
    fn budget_refusal_is_deterministic() {
        let cfg = EnumConfig {
            threads: 1,
            memory_budget: 1000,
        };
        for _ in 0..2 {
            match count(&positive(3), 50, &cfg) {
                Err(EnumError::BudgetExceeded { estimate, budget }) => {
                    assert_eq!(budget, 1000);
                    assert_eq!(estimate, memory_estimate(&positive(3), 50, false));
                }
                other => panic!("expected refusal, got {other:?}"),
            }
        }
        assert!(matches!(
            list_nontrivial(&positive(3), 50, None, &cfg),
            Err(EnumError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn bigint_path_agrees_with_i128_path() {
        let pool = thread_pool(2).unwrap();
        for spec in [positive(2), SystemSpec::signed(2).unwrap(), SystemSpec::positive(2, 2).unwrap()] {
            let a = raw_counts::<i128>(&spec, 7, &pool).unwrap();
            let b = raw_counts::<BigInt>(&spec, 7, &pool).unwrap();
            assert_eq!(a.v, b.v);
            assert_eq!(a.direct_delta, b.direct_delta);
        }
    }

    #[test]
    fn wide_signatures_take_the_bigint_path() {
        // 4 * 200^10 fits i128 but 5 * 1000^14 does not
        assert!(fits_i128(&SystemSpec::positive(3, 2).unwrap(), 200));
        assert!(!fits_i128(&SystemSpec::positive(4, 2).unwrap(), 1000));
    }

    #[test]
    fn signed_arrangement_puts_distinct_values_first() {
        assert_eq!(
            canonical_signed_arrangement(&[-5, -5, -1, 2, 3, 6]),
            vec![2, 3, 6, -1, -5, -5]
        );
        assert_eq!(canonical_signed_arrangement(&[0, 4, 4, -3]), vec![4, -3, 0, 4]);
    }

    #[test]
    fn positive_listing_at_six() {
        let l = list_nontrivial(&positive(2), 6, None, &EnumConfig::default()).unwrap();
        assert_eq!(l.total, 1);
        let c = &l.classes[0];
        assert_eq!(
            c.solution,
            SolutionPair::Positive {
                x: vec![1, 5, 5],
                y: vec![2, 3, 6]
            }
        );
        assert_eq!(c.orderings, vec![3, 6]);
        assert_eq!(c.weight, 36);
    }

    #[test]
    fn signed_listing_contains_embedded_positive_solution() {
        let l = list_nontrivial(&SystemSpec::signed(2).unwrap(), 6, None, &EnumConfig::default())
            .unwrap();
        assert!(l.classes.iter().any(|c| c.solution
            == SolutionPair::Signed {
                z: vec![2, 3, 6, -1, -5, -5]
            }));
        let weight: u128 = l.classes.iter().map(|c| c.weight).sum();
        let c = count(&SystemSpec::signed(2).unwrap(), 6, &EnumConfig::default()).unwrap();
        assert_eq!(BigInt::from(weight), c.delta);
    }

    #[test]
    fn limit_truncates() {
        let l = list_nontrivial(&SystemSpec::signed(2).unwrap(), 8, Some(2), &EnumConfig::default())
            .unwrap();
        assert_eq!(l.classes.len(), 2);
        assert!(l.truncated());
    }

    #[test]
    fn smallest_instance() {
        let cfg = EnumConfig::default();
        let (p, w) = smallest_nontrivial(&positive(2), 10, &cfg).unwrap().unwrap();
        assert_eq!(p, 6);
        assert_eq!(w.solution.entries(), vec![1, 5, 5, 2, 3, 6]);
        assert!(smallest_nontrivial(&positive(2), 5, &cfg).unwrap().is_none());
        assert!(smallest_nontrivial(&SystemSpec::signed(3).unwrap(), 1, &cfg)
            .unwrap()
            .is_none());
    }
}
