//! Multiplicative structure of non-trivial signed solutions.
//!
//! For a solution `z` of length `2k+2` with no vanishing pairwise sum, a
//! prefix of length `r` produces the `u` matrix: row 0 from products over the
//! prefix, rows `1..=kappa` from the sums `z_m + z_{r+l}`. All column
//! products agree. The gcd cascade factors the columns over the lattice
//! `{0..kappa}^r` so that every entry is recovered as a product of the
//! lattice values sharing one coordinate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::systems::{signature, SystemSpec};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CascadeError {
    #[error("expected a tuple of length {expected}, got {got}")]
    Length { got: usize, expected: usize },
    #[error("prefix length r = {r} must satisfy 2 <= r <= {max}")]
    BadR { r: usize, max: usize },
    #[error("z_{i} + z_{j} = 0 (positions are one-based)")]
    VanishingPairSum { i: usize, j: usize },
    #[error("tuple does not solve the signed system of degree {k}")]
    NotASolution { k: usize },
    #[error("invalid prefix: {0}")]
    Prefix(String),
    #[error("u matrix invariant violated: {0}")]
    Invariant(String),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("beta = {beta} does not divide u[{l}][{m}] = {u} at lattice index {index:?}")]
    Divisibility {
        index: Vec<usize>,
        l: usize,
        m: usize,
        beta: BigInt,
        u: BigInt,
    },
    #[error("reconstruction failed:\n{dump}")]
    Reconstruction { dump: String },
    #[error("row {l} gives inconsistent values: {detail}")]
    Inconsistent { l: usize, detail: String },
    #[error("search space of {points} points exceeds the limit {limit}")]
    Budget { points: u128, limit: u128 },
    #[error("bound violated: {0}")]
    Bound(String),
}

fn check_pair_sums(z: &[i64]) -> Result<(), CascadeError> {
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if z[i] + z[j] == 0 {
                return Err(CascadeError::VanishingPairSum { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(())
}

fn prod<'a>(it: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, v| acc * v)
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

/// The three multiplicative identities satisfied by a signed solution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRelations {
    /// Pair-sum products over each half agree up to `(-1)^(k(k+1)/2)`.
    pub halves: bool,
    /// The same after swapping the first entries of the two halves.
    pub swapped_halves: bool,
    /// `prod_{i>=3} (z_1 + z_i) = prod_{i>=3} (z_2 + z_i)`.
    pub first_two: bool,
}

impl ProductRelations {
    pub fn all(&self) -> bool {
        self.halves && self.swapped_halves && self.first_two
    }
}

fn half_pair_product(h: &[i64]) -> BigInt {
    let mut p = BigInt::one();
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            p *= big(h[i] + h[j]);
        }
    }
    p
}

/// Evaluates the product identities on `z` (length `2k+2`). Errors if some
/// pairwise sum vanishes.
pub fn verify_product_relations(z: &[i64], k: usize) -> Result<ProductRelations, CascadeError> {
    let n = 2 * k + 2;
    if z.len() != n {
        return Err(CascadeError::Length {
            got: z.len(),
            expected: n,
        });
    }
    check_pair_sums(z)?;
    let sign = if (k * (k + 1) / 2).is_multiple_of(2) { 1 } else { -1 };
    let (a, b) = z.split_at(k + 1);
    let halves = half_pair_product(a) == big(sign) * half_pair_product(b);
    let (mut a2, mut b2) = (a.to_vec(), b.to_vec());
    std::mem::swap(&mut a2[0], &mut b2[0]);
    let swapped_halves = half_pair_product(&a2) == big(sign) * half_pair_product(&b2);
    let lhs = prod(&z[2..].iter().map(|&v| big(z[0] + v)).collect::<Vec<_>>());
    let rhs = prod(&z[2..].iter().map(|&v| big(z[1] + v)).collect::<Vec<_>>());
    Ok(ProductRelations {
        halves,
        swapped_halves,
        first_two: lhs == rhs,
    })
}

/// A `(kappa+1) x r` grid of nonzero integers whose columns have equal
/// absolute products.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductGrid {
    pub r: usize,
    pub kappa: usize,
    /// `rows[l][m]`, row 0 first.
    #[serde(with = "grid_serde")]
    pub rows: Vec<Vec<BigInt>>,
}

mod grid_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        let text = Vec::<Vec<String>>::deserialize(d)?;
        text.iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.parse().map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

impl ProductGrid {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self, CascadeError> {
        if rows.len() < 2 {
            return Err(CascadeError::BadGrid("need at least two rows".into()));
        }
        let r = rows[0].len();
        if r < 2 || rows.iter().any(|row| row.len() != r) {
            return Err(CascadeError::BadGrid("rows must share a length of at least 2".into()));
        }
        if rows.iter().flatten().any(Zero::is_zero) {
            return Err(CascadeError::BadGrid("entries must be nonzero".into()));
        }
        let g = ProductGrid {
            r,
            kappa: rows.len() - 1,
            rows,
        };
        let products = g.column_products();
        if products.iter().any(|p| p.abs() != products[0].abs()) {
            return Err(CascadeError::BadGrid(format!(
                "column products differ in absolute value: {products:?}"
            )));
        }
        Ok(g)
    }

    pub fn column_products(&self) -> Vec<BigInt> {
        (0..self.r)
            .map(|m| prod(self.rows.iter().map(|row| &row[m])))
            .collect()
    }
}

/// The `u` matrix attached to a solution and a prefix length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UMatrix {
    pub r: usize,
    pub kappa: usize,
    #[serde(rename = "P")]
    pub p: u64,
    pub z_prefix: Vec<i64>,
    #[serde(with = "crate::decimal::vec")]
    pub u0: Vec<BigInt>,
    /// `rows[l-1][m-1] = z_m + z_{r+l}`
    pub rows: Vec<Vec<i64>>,
}

/// Checks the prefix conditions: `1 <= |z_i| <= P` and distinct squares.
pub fn check_prefix(prefix: &[i64], p: u64) -> Result<(), CascadeError> {
    for (i, &v) in prefix.iter().enumerate() {
        if v == 0 || v.unsigned_abs() > p {
            return Err(CascadeError::Prefix(format!(
                "z_{} = {v} is outside 1 <= |z| <= {p}",
                i + 1
            )));
        }
    }
    for i in 0..prefix.len() {
        for j in i + 1..prefix.len() {
            if prefix[i].abs() == prefix[j].abs() {
                return Err(CascadeError::Prefix(format!(
                    "z_{}^2 = z_{}^2 = {}",
                    i + 1,
                    j + 1,
                    prefix[i] * prefix[i]
                )));
            }
        }
    }
    Ok(())
}

/// Row 0 entries for a prefix.
pub fn row_zero(prefix: &[i64]) -> Vec<BigInt> {
    (0..prefix.len())
        .map(|m| {
            let others = prod(
                &prefix
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != m)
                    .map(|(_, &v)| big(v))
                    .collect::<Vec<_>>(),
            );
            let sums = prod(&prefix.iter().map(|&v| big(prefix[m] + v)).collect::<Vec<_>>());
            others * sums
        })
        .collect()
}

impl UMatrix {
    pub fn grid(&self) -> ProductGrid {
        let mut rows = vec![self.u0.clone()];
        rows.extend(self.rows.iter().map(|row| row.iter().map(|&v| big(v)).collect()));
        ProductGrid {
            r: self.r,
            kappa: self.kappa,
            rows,
        }
    }

    pub fn column_products(&self) -> Vec<BigInt> {
        self.grid().column_products()
    }

    /// Nonzero entries, size bounds, the chain relation along each row, and
    /// equal column products.
    pub fn check(&self) -> Result<(), CascadeError> {
        let inv = |m: String| Err(CascadeError::Invariant(m));
        if self.u0.len() != self.r || self.z_prefix.len() != self.r {
            return inv("row 0 or prefix has the wrong length".into());
        }
        if self.rows.len() != self.kappa || self.rows.iter().any(|row| row.len() != self.r) {
            return inv("rows have the wrong shape".into());
        }
        let u0_bound = BigInt::from(2u32).pow(self.r as u32)
            * BigInt::from(self.p).pow(2 * self.r as u32 - 1);
        for (m, v) in self.u0.iter().enumerate() {
            if v.is_zero() || v.abs() > u0_bound {
                return inv(format!("u0[{}] = {v} outside 0 < |u| <= {u0_bound}", m + 1));
            }
        }
        let row_bound = 2 * self.p as i64;
        for (l, row) in self.rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if v == 0 || v.abs() > row_bound {
                    return inv(format!("u[{}][{}] = {v} outside 1 <= |u| <= {row_bound}", l + 1, m + 1));
                }
            }
            let shift = row[0] - self.z_prefix[0];
            if row.iter().zip(&self.z_prefix).any(|(u, z)| u - z != shift) {
                return inv(format!("row {} breaks the chain relation", l + 1));
            }
        }
        let products = self.column_products();
        if products.iter().any(|p| *p != products[0]) {
            return inv(format!("column products differ: {products:?}"));
        }
        Ok(())
    }
}

/// Builds the `u` matrix for solution `z` (length `2k+2`) and prefix length
/// `r`. The box size defaults to `max |z_i|`.
pub fn build_u(z: &[i64], k: usize, r: usize, p: Option<u64>) -> Result<UMatrix, CascadeError> {
    let n = 2 * k + 2;
    if z.len() != n {
        return Err(CascadeError::Length {
            got: z.len(),
            expected: n,
        });
    }
    if r < 2 || r > n - 1 {
        return Err(CascadeError::BadR { r, max: n - 1 });
    }
    let spec = SystemSpec::signed(k).map_err(|e| CascadeError::Prefix(e.to_string()))?;
    if !signature(z, &spec).is_zero() {
        return Err(CascadeError::NotASolution { k });
    }
    check_pair_sums(z)?;
    let p = p.unwrap_or_else(|| z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0));
    if let Some(v) = z.iter().find(|v| v.unsigned_abs() > p) {
        return Err(CascadeError::Prefix(format!("entry {v} exceeds P = {p}")));
    }
    let prefix = &z[..r];
    check_prefix(prefix, p)?;
    let kappa = n - r;
    let rows = (0..kappa)
        .map(|l| prefix.iter().map(|&zm| zm + z[r + l]).collect())
        .collect();
    let u = UMatrix {
        r,
        kappa,
        p,
        z_prefix: prefix.to_vec(),
        u0: row_zero(prefix),
        rows,
    };
    u.check()?;
    Ok(u)
}

/// Recovers the full solution from its prefix and `u` matrix.
pub fn reconstruct_solution(z_prefix: &[i64], u: &UMatrix) -> Result<Vec<i64>, CascadeError> {
    if z_prefix.len() != u.r {
        return Err(CascadeError::Length {
            got: z_prefix.len(),
            expected: u.r,
        });
    }
    let mut z = z_prefix.to_vec();
    for (l, row) in u.rows.iter().enumerate() {
        let vals: Vec<i64> = row.iter().zip(z_prefix).map(|(u, zm)| u - zm).collect();
        if vals.iter().any(|&v| v != vals[0]) {
            return Err(CascadeError::Inconsistent {
                l: l + 1,
                detail: format!("u - z gives {vals:?}"),
            });
        }
        z.push(vals[0]);
    }
    Ok(z)
}

/// Position of a lattice point: `sum_m i_m (kappa+1)^(m-1)`, first
/// coordinate fastest.
pub fn phi(index: &[usize], kappa: usize) -> usize {
    index.iter().rev().fold(0, |acc, &i| acc * (kappa + 1) + i)
}

/// Inverse of [`phi`].
pub fn phi_inverse(mut n: usize, r: usize, kappa: usize) -> Vec<usize> {
    let base = kappa + 1;
    (0..r)
        .map(|_| {
            let d = n % base;
            n /= base;
            d
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeDecomposition {
    pub r: usize,
    pub kappa: usize,
    /// Lattice values in `phi` order.
    pub alphas: Vec<BigInt>,
    /// `signs[l][m]` in `{-1, 1}`, row 0 included.
    pub signs: Vec<Vec<i8>>,
}

impl CascadeDecomposition {
    pub fn lattice_size(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha(&self, index: &[usize]) -> &BigInt {
        &self.alphas[phi(index, self.kappa)]
    }

    /// `sign * prod_{i : i_m = l} alpha_i`
    pub fn entry(&self, l: usize, m: usize) -> BigInt {
        let mut v = BigInt::one();
        for (n, a) in self.alphas.iter().enumerate() {
            if phi_inverse(n, self.r, self.kappa)[m] == l {
                v *= a;
            }
        }
        v * BigInt::from(self.signs[l][m])
    }

    pub fn reconstruct(&self) -> Vec<Vec<BigInt>> {
        (0..=self.kappa)
            .map(|l| (0..self.r).map(|m| self.entry(l, m)).collect())
            .collect()
    }

    /// `{r, kappa, alphas: [[i_1..i_r, "alpha"], ..], signs}` in `phi` order.
    pub fn to_json(&self) -> serde_json::Value {
        let alphas: Vec<serde_json::Value> = self
            .alphas
            .iter()
            .enumerate()
            .map(|(n, a)| {
                let mut row: Vec<serde_json::Value> = phi_inverse(n, self.r, self.kappa)
                    .into_iter()
                    .map(serde_json::Value::from)
                    .collect();
                row.push(serde_json::Value::from(a.to_string()));
                serde_json::Value::Array(row)
            })
            .collect();
        serde_json::json!({
            "r": self.r,
            "kappa": self.kappa,
            "alphas": alphas,
            "signs": self.signs,
        })
    }
}

#[allow(clippy::needless_range_loop)]
fn dump_lattice(grid: &ProductGrid, alphas: &[Option<BigInt>], partial: &[Vec<BigInt>]) -> String {
    let mut s = format!("r = {}, kappa = {}\n", grid.r, grid.kappa);
    for (n, a) in alphas.iter().enumerate() {
        if let Some(a) = a {
            s.push_str(&format!("  alpha{:?} = {a}\n", phi_inverse(n, grid.r, grid.kappa)));
        }
    }
    for l in 0..=grid.kappa {
        for m in 0..grid.r {
            s.push_str(&format!(
                "  u[{l}][{m}] = {}, product so far {}\n",
                grid.rows[l][m], partial[m][l]
            ));
        }
    }
    s
}

/// Runs the gcd cascade over the lattice in `phi` order.
#[allow(clippy::needless_range_loop)]
pub fn gcd_cascade(grid: &ProductGrid) -> Result<CascadeDecomposition, CascadeError> {
    let (r, kappa) = (grid.r, grid.kappa);
    let size = (kappa + 1)
        .checked_pow(r as u32)
        .ok_or_else(|| CascadeError::BadGrid("lattice too large".into()))?;
    // partial[m][l]: product of the alphas assigned so far with i_m = l
    let mut partial = vec![vec![BigInt::one(); kappa + 1]; r];
    let mut alphas: Vec<Option<BigInt>> = vec![None; size];
    for n in 0..size {
        let index = phi_inverse(n, r, kappa);
        let mut g = BigInt::zero();
        for m in 0..r {
            let l = index[m];
            let beta = &partial[m][l];
            let u = grid.rows[l][m].abs();
            let (q, rem) = u.div_rem(beta);
            if !rem.is_zero() {
                return Err(CascadeError::Divisibility {
                    index,
                    l,
                    m,
                    beta: beta.clone(),
                    u,
                });
            }
            g = g.gcd(&q);
        }
        for m in 0..r {
            partial[m][index[m]] *= &g;
        }
        alphas[n] = Some(g);
    }
    for m in 0..r {
        for l in 0..=kappa {
            if partial[m][l] != grid.rows[l][m].abs() {
                return Err(CascadeError::Reconstruction {
                    dump: dump_lattice(grid, &alphas, &partial),
                });
            }
        }
    }
    let signs = grid
        .rows
        .iter()
        .map(|row| row.iter().map(|v| if v.is_negative() { -1 } else { 1 }).collect())
        .collect();
    let dec = CascadeDecomposition {
        r,
        kappa,
        alphas: alphas.into_iter().map(|a| a.expect("assigned")).collect(),
        signs,
    };
    if dec.reconstruct() != grid.rows {
        return Err(CascadeError::Reconstruction {
            dump: "signed reconstruction differs from the grid".into(),
        });
    }
    Ok(dec)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AProducts {
    /// `A_1..A_r`
    #[serde(with = "crate::decimal::vec")]
    pub a: Vec<BigInt>,
    /// One-based index `p` with `A_p^r <= (2P)^kappa`.
    pub witness: usize,
    #[serde(with = "crate::decimal")]
    pub bound: BigInt,
}

/// `A_p = prod alpha_i` over lattice points whose `p`-th coordinate is at
/// least 1 and strictly below every other coordinate.
pub fn a_products(dec: &CascadeDecomposition, p: u64) -> Result<AProducts, CascadeError> {
    let (r, kappa) = (dec.r, dec.kappa);
    let mut a = vec![BigInt::one(); r];
    for (n, alpha) in dec.alphas.iter().enumerate() {
        let index = phi_inverse(n, r, kappa);
        for q in 0..r {
            let ip = index[q];
            if ip >= 1 && (0..r).all(|l| l == q || index[l] > ip) {
                a[q] *= alpha;
            }
        }
    }
    let bound = BigInt::from(2 * p).pow(kappa as u32);
    let first_column = prod(
        &(1..=kappa)
            .map(|l| dec.entry(l, 0).abs())
            .collect::<Vec<_>>(),
    );
    let total = prod(&a);
    if total > first_column || first_column > bound {
        return Err(CascadeError::Bound(format!(
            "prod A_p = {total}, prod |u_l1| = {first_column}, (2P)^kappa = {bound}"
        )));
    }
    let witness = a
        .iter()
        .position(|ap| ap.pow(r as u32) <= bound)
        .ok_or_else(|| CascadeError::Bound(format!("no A_p with A_p^r <= {bound}: {a:?}")))?;
    Ok(AProducts {
        a,
        witness: witness + 1,
        bound,
    })
}

/// Default cap on the number of candidate rows scanned by [`count_psi`].
pub const PSI_POINT_LIMIT: u128 = 100_000_000;

/// All `u` matrices (rows `1..=kappa`) compatible with the prefix: entries in
/// `1 <= |u| <= 2P`, the chain relation along each row, and equal column
/// products together with row 0.
pub fn enumerate_psi(
    z_prefix: &[i64],
    k: usize,
    r: usize,
    p: u64,
    limit: u128,
) -> Result<Vec<Vec<Vec<i64>>>, CascadeError> {
    let n = 2 * k + 2;
    if r != z_prefix.len() {
        return Err(CascadeError::Length {
            got: z_prefix.len(),
            expected: r,
        });
    }
    if r < 2 || r > n - 1 {
        return Err(CascadeError::BadR { r, max: n - 1 });
    }
    check_prefix(z_prefix, p)?;
    let kappa = n - r;
    let points = (4 * p as u128).checked_pow(kappa as u32).unwrap_or(u128::MAX);
    if points > limit {
        return Err(CascadeError::Budget { points, limit });
    }
    let bound = 2 * p as i64;
    // admissible rows: u_{l1} = s + z_1 with every s + z_m in range
    let candidates: Vec<Vec<i64>> = (-bound..=bound)
        .filter(|&u1| u1 != 0)
        .map(|u1| z_prefix.iter().map(|&zm| u1 - z_prefix[0] + zm).collect::<Vec<i64>>())
        .filter(|row| row.iter().all(|&v| v != 0 && v.abs() <= bound))
        .collect();
    let u0 = row_zero(z_prefix);
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(kappa);
    search(&candidates, kappa, &u0, &mut chosen, &mut out);
    Ok(out)
}

fn search(
    candidates: &[Vec<i64>],
    kappa: usize,
    partial: &[BigInt],
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<Vec<i64>>>,
) {
    if chosen.len() == kappa {
        if partial.iter().all(|v| *v == partial[0]) {
            out.push(chosen.iter().map(|&c| candidates[c].clone()).collect());
        }
        return;
    }
    for (c, row) in candidates.iter().enumerate() {
        let next: Vec<BigInt> = partial.iter().zip(row).map(|(a, &b)| a * b).collect();
        chosen.push(c);
        search(candidates, kappa, &next, chosen, out);
        chosen.pop();
    }
}

/// Number of `u` matrices compatible with the prefix; see [`enumerate_psi`].
pub fn count_psi(
    z_prefix: &[i64],
    k: usize,
    r: usize,
    p: u64,
    limit: u128,
) -> Result<u64, CascadeError> {
    Ok(enumerate_psi(z_prefix, k, r, p, limit)?.len() as u64)
}

/// Builds a grid from random lattice values; used for fuzzing the cascade.
pub fn grid_from_lattice(
    r: usize,
    kappa: usize,
    alphas: &[BigInt],
    signs: &[Vec<i8>],
) -> Vec<Vec<BigInt>> {
    let dec = CascadeDecomposition {
        r,
        kappa,
        alphas: alphas.to_vec(),
        signs: signs.to_vec(),
    };
    dec.reconstruct()
}
