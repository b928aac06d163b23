//! Exact paucity exponents and the discrete AM-GM bound.
//!
//! Every comparison against a square root is done by squaring both sides.
//! No floating point is used.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::decimal::rational as rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentKind {
    Alpha,
    AlphaKd,
    Beta,
}

impl ExponentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExponentKind::Alpha => "alpha",
            ExponentKind::AlphaKd => "alpha_kd",
            ExponentKind::Beta => "beta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub exponent: ExponentKind,
    pub k: u64,
    pub d: u64,
    #[serde(with = "rat")]
    pub value: BigRational,
    /// Minimizing `r`, ascending.
    pub argmin: Vec<u64>,
    /// Squared left side of the closed-form bound.
    #[serde(with = "rat")]
    pub bound_sq_lhs: BigRational,
    #[serde(with = "crate::decimal")]
    pub bound_sq_rhs: BigInt,
    pub bound_holds: bool,
    pub equality: bool,
}

pub const CSV_HEADER: &str = "exponent,k,d,alpha,argmin_r,bound_sq_lhs,bound_sq_rhs,equality_flag";

impl ExponentReport {
    pub fn csv_row(&self) -> String {
        let argmin: Vec<String> = self.argmin.iter().map(u64::to_string).collect();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.exponent.name(),
            self.k,
            self.d,
            rat::to_string(&self.value),
            argmin.join(";"),
            rat::to_string(&self.bound_sq_lhs),
            self.bound_sq_rhs,
            self.equality
        )
    }
}

fn ratio(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Minimum of `num(r) / r` over `r` in `lo..=hi`, with all minimizers.
/// Fractions are compared by cross-multiplication in i128.
fn min_over_r(lo: u64, hi: u64, num: impl Fn(i128) -> i128) -> (BigRational, Vec<u64>) {
    let mut best: Option<(i128, i128)> = None;
    let mut argmin = Vec::new();
    for r in lo..=hi {
        let n = num(r as i128);
        let d = r as i128;
        match best {
            None => {
                best = Some((n, d));
                argmin.push(r);
            }
            Some((bn, bd)) => {
                let (lhs, rhs) = (n * bd, bn * d);
                if lhs < rhs {
                    best = Some((n, d));
                    argmin.clear();
                    argmin.push(r);
                } else if lhs == rhs {
                    argmin.push(r);
                }
            }
        }
    }
    let (n, d) = best.expect("nonempty range");
    (ratio(n, d), argmin)
}

/// `alpha_{k,d} = min_{2 <= r <= 2k+1} r - d + (2k+2)d/r`, checked against
/// `(alpha + d)^2 <= 8d(k+1) + 1`.
pub fn alpha_kd(k: u64, d: u64) -> ExponentReport {
    assert!(k >= 2 && d >= 1, "alpha_kd needs k >= 2 and d >= 1");
    let (kk, dd) = (k as i128, d as i128);
    let (value, argmin) = min_over_r(2, 2 * k + 1, |r| r * (r - dd) + (2 * kk + 2) * dd);
    let shifted = &value + BigRational::from_integer(d.into());
    let lhs = &shifted * &shifted;
    let rhs = BigInt::from(8 * d * (k + 1) + 1);
    let rhs_r = BigRational::from_integer(rhs.clone());
    ExponentReport {
        exponent: if d == 1 {
            ExponentKind::Alpha
        } else {
            ExponentKind::AlphaKd
        },
        k,
        d,
        value,
        argmin,
        bound_holds: lhs <= rhs_r,
        equality: lhs == rhs_r,
        bound_sq_lhs: lhs,
        bound_sq_rhs: rhs,
    }
}

/// `alpha_k = min_{2 <= r <= 2k+1} r - 1 + (2k+2)/r`, checked against
/// `(alpha + 1)^2 <= 8k + 9`.
pub fn alpha_k(k: u64) -> ExponentReport {
    alpha_kd(k, 1)
}

/// `psi_r(kappa) = sum_{i=1}^{kappa-1} i^(r-1)`.
pub fn psi(kappa: u64, r: u64) -> BigInt {
    (1..kappa)
        .map(|i| num_traits::pow(BigInt::from(i), (r - 1) as usize))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCandidate {
    pub r: u64,
    pub kappa: u64,
    #[serde(with = "rat")]
    pub value: BigRational,
    /// `r * psi(kappa) < kappa^r`
    pub psi_bound_holds: bool,
}

/// The candidate values `r + psi(2k+2-r) / (2k+2-r)^(r-1)` for every `r`.
pub fn beta_candidates(k: u64) -> Vec<BetaCandidate> {
    (2..=2 * k + 1)
        .map(|r| {
            let kappa = 2 * k + 2 - r;
            let ps = psi(kappa, r);
            let denom = num_traits::pow(BigInt::from(kappa), (r - 1) as usize);
            let bound = &ps * BigInt::from(r) < &denom * BigInt::from(kappa);
            BetaCandidate {
                r,
                kappa,
                value: BigRational::from_integer(r.into()) + BigRational::new(ps, denom),
                psi_bound_holds: bound,
            }
        })
        .collect()
}

/// The refined exponent `beta_k`. The bound fields compare against the same
/// comparator as `alpha_k`; `bound_holds` also requires the `psi` estimate
/// for every candidate `r`.
pub fn beta_k(k: u64) -> ExponentReport {
    assert!(k >= 2, "beta_k needs k >= 2");
    let cands = beta_candidates(k);
    let value = cands
        .iter()
        .map(|c| &c.value)
        .min()
        .expect("nonempty")
        .clone();
    let argmin = cands
        .iter()
        .filter(|c| c.value == value)
        .map(|c| c.r)
        .collect();
    let shifted = &value + BigRational::one();
    let lhs = &shifted * &shifted;
    let rhs = BigInt::from(8 * k + 9);
    let rhs_r = BigRational::from_integer(rhs.clone());
    ExponentReport {
        exponent: ExponentKind::Beta,
        k,
        d: 1,
        value,
        argmin,
        bound_holds: lhs <= rhs_r && cands.iter().all(|c| c.psi_bound_holds),
        equality: lhs == rhs_r,
        bound_sq_lhs: lhs,
        bound_sq_rhs: rhs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMin {
    #[serde(with = "rat")]
    pub lambda: BigRational,
    /// Minimizing `r`, ascending.
    pub r_star: Vec<u64>,
    #[serde(with = "rat")]
    pub value: BigRational,
    #[serde(with = "rat")]
    pub value_sq: BigRational,
    #[serde(with = "rat")]
    pub bound_sq: BigRational,
    pub bound_holds: bool,
    /// `value^2 == 4 lambda + 1`
    pub equality: bool,
    /// `lambda == m(m-1)` for a positive integer `m`
    pub pronic: Option<u64>,
}

/// `m` with `lambda = m(m-1)`, if any.
pub fn pronic_root(lambda: &BigRational) -> Option<u64> {
    if !lambda.is_integer() || lambda.is_negative() {
        return None;
    }
    let s = BigInt::from(4) * lambda.numer() + 1;
    let root: BigInt = Roots::sqrt(&s);
    if &root * &root != s {
        return None;
    }
    ((root + 1u32) / 2u32).to_u64()
}

fn eval_r_plus(lambda: &BigRational, r: u64) -> BigRational {
    BigRational::from_integer(r.into()) + lambda / BigRational::from_integer(r.into())
}

fn floor_sqrt(lambda: &BigRational) -> u64 {
    lambda.floor().to_integer().sqrt().to_u64().expect("lambda fits")
}

fn minimize(lambda: &BigRational, candidates: impl Iterator<Item = u64>) -> DiscreteMin {
    let mut best: Option<BigRational> = None;
    let mut r_star: Vec<u64> = Vec::new();
    for r in candidates {
        let v = eval_r_plus(lambda, r);
        match &best {
            Some(b) if v > *b => {}
            Some(b) if v == *b => {
                if !r_star.contains(&r) {
                    r_star.push(r)
                }
            }
            _ => {
                best = Some(v);
                r_star = vec![r];
            }
        }
    }
    r_star.sort_unstable();
    let value = best.expect("nonempty candidate set");
    let value_sq = &value * &value;
    let bound_sq = BigRational::from_integer(4.into()) * lambda + BigRational::one();
    DiscreteMin {
        lambda: lambda.clone(),
        r_star,
        bound_holds: value_sq <= bound_sq,
        equality: value_sq == bound_sq,
        pronic: pronic_root(lambda),
        value,
        value_sq,
        bound_sq,
    }
}

/// `min_{r >= 1} r + lambda / r`. The function is convex in `r`, so only a
/// window around `sqrt(lambda)` is scanned.
pub fn discrete_min(lambda: &BigRational) -> DiscreteMin {
    assert!(lambda.is_positive(), "lambda must be positive");
    let s = floor_sqrt(lambda);
    minimize(lambda, s.saturating_sub(1).max(1)..=s + 2)
}

/// The same minimum restricted to `lo..=hi`.
pub fn discrete_min_restricted(lambda: &BigRational, lo: u64, hi: u64) -> DiscreteMin {
    assert!(lambda.is_positive() && lo >= 1 && lo <= hi);
    let s = floor_sqrt(lambda);
    let window = (s.saturating_sub(1).max(lo)..=(s + 2).min(hi)).chain([lo, hi]);
    minimize(lambda, window)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaucityRange {
    pub k: u64,
    /// Largest `d` such that every `1 <= d' <= d` satisfies
    /// `8d'(k+1) + 1 < (k+1+d')^2`; zero if `d = 1` already fails.
    pub d_max: u64,
    /// `floor((3 - 2 sqrt 2)(k - 1))`
    pub beta_floor: u64,
}

fn paucity_holds(k: u64, d: u64) -> bool {
    let (k1, d) = (k as u128 + 1, d as u128);
    8 * d * k1 + 1 < (k1 + d) * (k1 + d)
}

/// Largest `d` with `d <= (3 - 2 sqrt 2)(k-1)`, using
/// `8(k-1)^2 <= (3(k-1) - d)^2` with `3(k-1) - d >= 0`.
pub fn beta_floor(k: u64) -> u64 {
    let km = (k - 1) as u128;
    let ok = |d: u128| d <= 3 * km && 8 * km * km <= (3 * km - d) * (3 * km - d);
    let mut d = 0;
    while ok(d + 1) {
        d += 1;
    }
    d as u64
}

/// The paucity range in `d` for the generalized positive system. Panics if
/// the sufficient condition `d <= (3 - 2 sqrt 2)(k-1)` is not covered.
pub fn paucity_range_d(k: u64) -> PaucityRange {
    assert!(k >= 2);
    let mut d_max = 0;
    while paucity_holds(k, d_max + 1) {
        d_max += 1;
    }
    let bf = beta_floor(k);
    assert!(
        bf <= d_max,
        "k = {k}: d = {bf} satisfies the sufficient condition but not the paucity inequality"
    );
    PaucityRange {
        k,
        d_max,
        beta_floor: bf,
    }
}

/// Checks `alpha_k + 1` against the unrestricted minimum of `r + (2k+2)/r`.
pub fn alpha_matches_unrestricted(k: u64) -> bool {
    let lambda = BigRational::from_integer((2 * k + 2).into());
    let restricted = discrete_min_restricted(&lambda, 2, 2 * k + 1);
    let free = discrete_min(&lambda);
    let alpha = alpha_k(k);
    restricted.value == &alpha.value + BigRational::one() && restricted.value == free.value
}
