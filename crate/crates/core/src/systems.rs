//! System definitions, signatures, triviality and exact diagonal counts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SystemsError {
    #[error("invalid system: {0}")]
    InvalidSpec(String),
    #[error("tuple has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: String },
    #[error("malformed solution row: {0}")]
    BadRow(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `sum z_i^(2j-1) = 0` over `2k + 2` variables in `[-P, P]`.
    Signed,
    /// `sum x_i^((2j-1)d) = sum y_i^((2j-1)d)` with `x, y` in `[1, P]^(k+1)`.
    Positive,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Signed => "signed",
            Variant::Positive => "positive",
        })
    }
}

impl FromStr for Variant {
    type Err = SystemsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signed" => Ok(Variant::Signed),
            "positive" => Ok(Variant::Positive),
            other => Err(SystemsError::InvalidSpec(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemSpec {
    pub variant: Variant,
    pub k: usize,
    pub d: u32,
}

impl SystemSpec {
    pub fn new(variant: Variant, k: usize, d: u32) -> Result<Self, SystemsError> {
        if k < 2 {
            return Err(SystemsError::InvalidSpec(format!("k must be at least 2, got {k}")));
        }
        if d < 1 {
            return Err(SystemsError::InvalidSpec("d must be at least 1".into()));
        }
        if variant == Variant::Signed && d != 1 {
            return Err(SystemsError::InvalidSpec(format!(
                "the signed system is only defined for d = 1, got d = {d}"
            )));
        }
        Ok(SystemSpec { variant, k, d })
    }

    pub fn signed(k: usize) -> Result<Self, SystemsError> {
        Self::new(Variant::Signed, k, 1)
    }

    pub fn positive(k: usize, d: u32) -> Result<Self, SystemsError> {
        Self::new(Variant::Positive, k, d)
    }

    /// Length of one side, `k + 1`.
    pub fn half_len(&self) -> usize {
        self.k + 1
    }

    /// Exponent of the `j`-th equation (`j` one-based).
    pub fn exponent(&self, j: usize) -> u32 {
        (2 * j as u32 - 1) * self.d
    }

    /// Inclusive range of admissible values in a box of size `p`.
    pub fn value_range(&self, p: u64) -> (i64, i64) {
        let p = p as i64;
        match self.variant {
            Variant::Signed => (-p, p),
            Variant::Positive => (1, p),
        }
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} k={} d={}", self.variant, self.k, self.d)
    }
}

/// The `k` odd power sums of a tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub Vec<BigInt>);

impl Signature {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn values(&self) -> &[BigInt] {
        &self.0
    }
}

/// Entry `j` is `sum_i v_i^((2j-1)d)`.
pub fn signature(tuple: &[i64], spec: &SystemSpec) -> Signature {
    Signature(
        (1..=spec.k)
            .map(|j| {
                let e = spec.exponent(j) as usize;
                tuple
                    .iter()
                    .map(|&v| num_traits::pow(BigInt::from(v), e))
                    .sum()
            })
            .collect(),
    )
}

/// `y` is a rearrangement of `x`.
pub fn is_trivial_positive(x: &[i64], y: &[i64]) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// `z` splits into pairs summing to zero: every positive value occurs as
/// often as its negation and zero occurs an even number of times.
pub fn is_trivial_signed(z: &[i64]) -> Result<bool, SystemsError> {
    if z.is_empty() || !z.len().is_multiple_of(2) {
        return Err(SystemsError::WrongLength {
            got: z.len(),
            expected: "a positive even length 2k+2".into(),
        });
    }
    let mut mult: BTreeMap<i64, i64> = BTreeMap::new();
    for &v in z {
        *mult.entry(v).or_default() += 1;
    }
    Ok(mult.iter().all(|(&v, &m)| {
        if v == 0 {
            m % 2 == 0
        } else {
            mult.get(&-v).copied().unwrap_or(0) == m
        }
    }))
}

/// Number of distinct orderings of a multiset given as a sorted slice.
pub fn ordering_count(sorted: &[i64]) -> u64 {
    let mut count = factorial_u64(sorted.len());
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            count /= factorial_u64(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        count /= factorial_u64(run);
    }
    count
}

fn factorial_u64(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `c_k = prod_{j=1}^{k+1} (2j - 1)`, cross-checked against
/// `2^{-k-1} (2k+2)! / (k+1)!`.
pub fn count_linear_spaces(k: usize) -> BigInt {
    assert!(k >= 1, "k must be positive");
    let product = (1..=k + 1).fold(BigInt::one(), |acc, j| acc * BigInt::from(2 * j - 1));
    let via_factorials = factorial(2 * k + 2) / factorial(k + 1) / (BigInt::one() << (k + 1));
    assert_eq!(product, via_factorials, "linear space count formulas disagree");
    product
}

/// Coefficients `0..=degree` of `f(x)^p` with `f(x) = sum_t x^t / (t!)^2`.
fn egf_power(p: u64, degree: usize) -> Vec<BigRational> {
    let f: Vec<BigRational> = (0..=degree)
        .map(|t| {
            let ft = factorial(t);
            BigRational::new(BigInt::one(), &ft * &ft)
        })
        .collect();
    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        (0..=degree)
            .map(|n| (0..=n).map(|i| &a[i] * &b[n - i]).sum())
            .collect()
    };
    let mut result = vec![BigRational::zero(); degree + 1];
    result[0] = BigRational::one();
    let mut base = f;
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base);
        }
    }
    result
}

/// Exact number of pairs `(x, y)` in `[1, P]^(k+1)` with `y` a rearrangement
/// of `x`.
pub fn exact_l_star(k: usize, p: u64) -> BigInt {
    assert!(k >= 1 && p >= 1);
    let n = k + 1;
    let coeff = &egf_power(p, n)[n];
    let fact = factorial(n);
    let v = coeff * BigRational::from_integer(&fact * &fact);
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// Exact number of `z` in `[-P, P]^(2k+2)` passing [`is_trivial_signed`].
pub fn exact_l_signed(k: usize, p: u64) -> BigInt {
    assert!(k >= 1 && p >= 1);
    let n = 2 * k + 2;
    let g = egf_power(p, k + 1);
    let total_fact = factorial(n);
    let mut total = BigRational::zero();
    for zeros in (0..=n).step_by(2) {
        let pairs = (n - zeros) / 2;
        total += BigRational::from_integer(&total_fact / factorial(zeros)) * &g[pairs];
    }
    debug_assert!(total.is_integer());
    total.to_integer()
}

/// A solution of one of the systems.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolutionPair {
    Positive { x: Vec<i64>, y: Vec<i64> },
    Signed { z: Vec<i64> },
}

impl SolutionPair {
    pub fn entries(&self) -> Vec<i64> {
        match self {
            SolutionPair::Positive { x, y } => x.iter().chain(y).copied().collect(),
            SolutionPair::Signed { z } => z.clone(),
        }
    }

    /// Checks the signature equality for `spec`.
    pub fn solves(&self, spec: &SystemSpec) -> bool {
        match self {
            SolutionPair::Positive { x, y } => {
                x.len() == spec.half_len()
                    && y.len() == spec.half_len()
                    && signature(x, spec) == signature(y, spec)
            }
            SolutionPair::Signed { z } => {
                z.len() == 2 * spec.half_len() && signature(z, spec).is_zero()
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            SolutionPair::Positive { x, y } => is_trivial_positive(x, y),
            SolutionPair::Signed { z } => is_trivial_signed(z).unwrap_or(false),
        }
    }

    /// `variant,k,d,P,entries...`
    pub fn to_csv_row(&self, spec: &SystemSpec, p: u64) -> String {
        let mut s = format!("{},{},{},{}", spec.variant, spec.k, spec.d, p);
        for v in self.entries() {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s
    }

    pub fn from_csv_row(line: &str) -> Result<(SystemSpec, u64, SolutionPair), SystemsError> {
        let bad = |m: &str| SystemsError::BadRow(format!("{m}: {line:?}"));
        let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(bad("too few fields"));
        }
        let variant: Variant = fields[0].parse()?;
        let k: usize = fields[1].parse().map_err(|_| bad("bad k"))?;
        let d: u32 = fields[2].parse().map_err(|_| bad("bad d"))?;
        let p: u64 = fields[3].parse().map_err(|_| bad("bad P"))?;
        let spec = SystemSpec::new(variant, k, d)?;
        let entries = fields[4..]
            .iter()
            .map(|f| f.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("bad entry"))?;
        if entries.len() != 2 * spec.half_len() {
            return Err(SystemsError::WrongLength {
                got: entries.len(),
                expected: (2 * spec.half_len()).to_string(),
            });
        }
        let sol = match variant {
            Variant::Positive => {
                let (x, y) = entries.split_at(spec.half_len());
                SolutionPair::Positive {
                    x: x.to_vec(),
                    y: y.to_vec(),
                }
            }
            Variant::Signed => SolutionPair::Signed { z: entries },
        };
        Ok((spec, p, sol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Pair-by-pair oracle for the diagonal count.
    fn brute_l_star(k: usize, p: i64) -> u64 {
        let tuples = all_tuples(k + 1, 1, p);
        let mut n = 0;
        for x in &tuples {
            for y in &tuples {
                if is_trivial_positive(x, y) {
                    n += 1;
                }
            }
        }
        n
    }

    fn all_tuples(len: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
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

    #[test]
    fn signature_examples() {
        let s = SystemSpec::positive(2, 1).unwrap();
        assert_eq!(signature(&[2, 3, 6], &s).0, ints(&[11, 251]));
        assert_eq!(signature(&[1, 5, 5], &s).0, ints(&[11, 251]));
        assert!(signature(&[0, 0, 0], &s).is_zero());
        let s2 = SystemSpec::positive(2, 2).unwrap();
        assert_eq!(signature(&[2, 3], &s2).0, ints(&[4 + 9, 64 + 729]));
    }

    #[test]
    fn spec_validation() {
        assert!(SystemSpec::signed(1).is_err());
        assert!(SystemSpec::new(Variant::Signed, 2, 2).is_err());
        assert!(SystemSpec::positive(2, 0).is_err());
        assert!(SystemSpec::positive(3, 2).is_ok());
    }

    #[test]
    fn positive_triviality() {
        assert!(is_trivial_positive(&[1, 2, 3], &[3, 1, 2]));
        assert!(!is_trivial_positive(&[2, 3, 6], &[1, 5, 5]));
        assert!(!is_trivial_positive(&[1, 1, 2], &[1, 2, 2]));
    }

    #[test]
    fn signed_triviality() {
        assert!(is_trivial_signed(&[1, -1, 2, -2, 3, -3]).unwrap());
        assert!(!is_trivial_signed(&[2, 3, 6, -1, -5, -5]).unwrap());
        assert!(is_trivial_signed(&[0, 0, 5, -5, 7, -7]).unwrap());
        assert!(!is_trivial_signed(&[0, 0, 0, 5, -5, 7]).unwrap());
        assert!(is_trivial_signed(&[1, 2, 3]).is_err());
    }

    #[test]
    fn linear_spaces() {
        assert_eq!(count_linear_spaces(2), BigInt::from(15));
        assert_eq!(count_linear_spaces(3), BigInt::from(105));
        for k in 1..=20 {
            count_linear_spaces(k);
        }
    }

    #[test]
    fn diagonal_spot_values() {
        assert_eq!(exact_l_star(2, 1), BigInt::from(1));
        assert_eq!(exact_l_star(2, 2), BigInt::from(20));
        assert_eq!(exact_l_signed(2, 1), BigInt::from(141));
    }

    #[test]
    fn diagonal_count_matches_oracle() {
        for p in 1..=5 {
            assert_eq!(exact_l_star(2, p), BigInt::from(brute_l_star(2, p as i64)), "P = {p}");
        }
        for p in 1..=3 {
            assert_eq!(exact_l_star(3, p), BigInt::from(brute_l_star(3, p as i64)), "P = {p}");
        }
        for p in 1..=2 {
            let n = all_tuples(6, -p, p)
                .iter()
                .filter(|z| is_trivial_signed(z).unwrap())
                .count();
            assert_eq!(exact_l_signed(2, p as u64), BigInt::from(n), "P = {p}");
        }
    }

    #[test]
    fn signed_diagonal_approaches_leading_term() {
        let k = 2;
        let mut last = 0.0;
        for p in [10u64, 20, 40, 80] {
            let lead = count_linear_spaces(k) * num_traits::pow(BigInt::from(2 * p + 1), k + 1);
            let l = exact_l_signed(k, p);
            assert!(l < lead);
            let ratio = BigRational::new(l, lead);
            let r: f64 = num_traits::ToPrimitive::to_f64(&ratio).unwrap();
            assert!(r > last, "ratio must increase");
            last = r;
        }
    }

    #[test]
    fn ordering_counts() {
        assert_eq!(ordering_count(&[1, 2, 3]), 6);
        assert_eq!(ordering_count(&[1, 5, 5]), 3);
        assert_eq!(ordering_count(&[4, 4, 4]), 1);
        assert_eq!(ordering_count(&[]), 1);
    }

    #[test]
    fn csv_row_round_trip() {
        let spec = SystemSpec::positive(2, 1).unwrap();
        let sol = SolutionPair::Positive {
            x: vec![2, 3, 6],
            y: vec![1, 5, 5],
        };
        let row = sol.to_csv_row(&spec, 6);
        assert_eq!(row, "positive,2,1,6,2,3,6,1,5,5");
        assert_eq!(SolutionPair::from_csv_row(&row).unwrap(), (spec, 6, sol));
        assert!(SolutionPair::from_csv_row("signed,2,1,6,1,2").is_err());
    }

    proptest! {
        #[test]
        fn paired_tuples_have_zero_signature(
            half in prop::collection::vec(-30i64..=30, 3),
            perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let spec = SystemSpec::signed(2).unwrap();
            let raw: Vec<i64> = half.iter().copied().chain(half.iter().map(|v| -v)).collect();
            let z: Vec<i64> = perm.iter().map(|&i| raw[i]).collect();
            prop_assert!(is_trivial_signed(&z).unwrap());
            prop_assert!(signature(&z, &spec).is_zero());
            let spec3 = SystemSpec::signed(3).unwrap();
            prop_assert!(signature(&z, &spec3).is_zero());
        }

        #[test]
        fn permutations_share_signatures(x in prop::collection::vec(1i64..=50, 4), shift in 0usize..4, d in 1u32..3) {
            let spec = SystemSpec::positive(3, d).unwrap();
            let mut y = x.clone();
            y.rotate_left(shift);
            y.reverse();
            prop_assert!(is_trivial_positive(&x, &y));
            prop_assert_eq!(signature(&x, &spec), signature(&y, &spec));
        }

        #[test]
        fn diagonal_bounds(k in 1usize..4, p in 1u64..12) {
            let l = exact_l_star(k, p);
            let falling: BigInt = (0..=k as u64).fold(BigInt::one(), |acc, i| acc * BigInt::from(p.saturating_sub(i)));
            prop_assert!(factorial(k + 1) * falling <= l);
            prop_assert!(l >= num_traits::pow(BigInt::from(p), k + 1));
        }
    }
}
