//! The polynomial relation among the odd power sums of `k - 1` variables.
//!
//! For `k - 1` variables the `k` odd power sums `t_1, .., t_k` are
//! algebraically dependent. The relation `Y(w_1, .., w_k)` is found as the
//! one-dimensional integer nullspace of a sample-evaluation matrix over the
//! weighted monomial basis, then certified. Composing `Y` with the power sums
//! of `k + 1` variables gives `C_k * prod_{i<j} (x_i + x_j)`.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::integer_nullspace;
use crate::poly::{Monomial, PolyError, SparsePoly};

/// Largest `k` for which the relation can be constructed.
pub const UPSILON_MAX_K: usize = 6;
/// Largest `k` for which the factorisation identity is expanded symbolically.
pub const IDENTITY_MAX_K: usize = 4;
/// Sample coordinates are drawn from `[-SAMPLE_RANGE, SAMPLE_RANGE]`.
pub const SAMPLE_RANGE: i64 = 20;
const MAX_DRAWS: usize = 8;

pub const NORMALIZATION: &str = "primitive, positive graded-lex leading coefficient";

#[derive(Debug, thiserror::Error)]
pub enum UpsilonError {
    #[error("k = {k} is outside the supported range 2..={max}")]
    UnsupportedDegree { k: usize, max: usize },
    #[error("relation nullspace for k = {k} has dimension {dim}, expected 1")]
    NullspaceDimension { k: usize, dim: usize },
    #[error("identity check failed for k = {k}: {reason}")]
    IdentityFailed { k: usize, reason: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `[p_1, .., p_k]` with `p_j = sum_{i=1}^{nvars} x_i^(2j-1)`.
pub fn power_sum_polys(k: usize, nvars: usize) -> Vec<SparsePoly> {
    assert!(k >= 1 && nvars >= 1, "need k >= 1 and nvars >= 1");
    (1..=k)
        .map(|j| {
            let exp = (2 * j - 1) as u32;
            SparsePoly::from_terms(
                nvars,
                (0..nvars).map(|i| {
                    let mut e = vec![0; nvars];
                    e[i] = exp;
                    (e, BigInt::from(1))
                }),
            )
            .expect("exponent vectors have length nvars")
        })
        .collect()
}

/// Exponent vectors `(a_1, .., a_k)` with `sum (2i - 1) a_i = k(k+1)/2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedMonomialBasis {
    pub k: usize,
    pub monomials: Vec<Vec<u32>>,
}

impl WeightedMonomialBasis {
    pub fn weight(&self) -> u32 {
        (self.k * (self.k + 1) / 2) as u32
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn contains(&self, exponents: &[u32]) -> bool {
        self.monomials.iter().any(|m| m == exponents)
    }
}

pub fn weighted_degree(exponents: &[u32]) -> u32 {
    exponents
        .iter()
        .enumerate()
        .map(|(i, &a)| (2 * i as u32 + 1) * a)
        .sum()
}

/// Complete list of admissible exponent vectors, graded-lex largest first.
pub fn weighted_basis(k: usize) -> WeightedMonomialBasis {
    assert!(k >= 2, "weighted basis needs k >= 2");
    fn rec(i: usize, k: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == k {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = 2 * i as u32 + 1;
        for a in 0..=rem / w {
            cur.push(a);
            rec(i + 1, k, rem - a * w, cur, out);
            cur.pop();
        }
    }
    let weight = (k * (k + 1) / 2) as u32;
    let mut out = Vec::new();
    rec(0, k, weight, &mut Vec::with_capacity(k), &mut out);
    out.sort_by(|a, b| Monomial::new(b.clone()).cmp(&Monomial::new(a.clone())));
    WeightedMonomialBasis { k, monomials: out }
}

/// The constructed relation together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct Upsilon {
    pub k: usize,
    pub poly: SparsePoly,
    pub basis_size: usize,
    pub sample_points: usize,
    pub draws: usize,
    /// True when `Y(t_1, .., t_k) = 0` was confirmed by full expansion.
    pub symbolically_verified: bool,
}

fn check_k(k: usize) -> Result<(), UpsilonError> {
    if !(2..=UPSILON_MAX_K).contains(&k) {
        return Err(UpsilonError::UnsupportedDegree {
            k,
            max: UPSILON_MAX_K,
        });
    }
    Ok(())
}

fn odd_power_sums(point: &[BigInt], k: usize) -> Vec<BigInt> {
    (1..=k)
        .map(|j| {
            point
                .iter()
                .map(|x| num_traits::pow(x.clone(), 2 * j - 1))
                .sum()
        })
        .collect()
}

fn basis_row(basis: &WeightedMonomialBasis, sums: &[BigInt]) -> Vec<BigInt> {
    basis
        .monomials
        .iter()
        .map(|m| {
            m.iter()
                .zip(sums)
                .fold(BigInt::from(1), |acc, (&a, s)| {
                    acc * num_traits::pow(s.clone(), a as usize)
                })
        })
        .collect()
}

/// Dimension of the space of relations supported on the weighted basis,
/// from the full coefficient matrix of the basis monomials composed with
/// `t_1, .., t_k` (no sampling).
pub fn exact_relation_dimension(k: usize) -> Result<usize, UpsilonError> {
    check_k(k)?;
    Ok(relation_dimension(k, &weighted_basis(k)))
}

fn relation_dimension(k: usize, basis: &WeightedMonomialBasis) -> usize {
    let t = power_sum_polys(k, k - 1);
    let composed: Vec<SparsePoly> = basis
        .monomials
        .iter()
        .map(|m| {
            SparsePoly::from_terms(k, [(m.clone(), BigInt::from(1))])
                .and_then(|mono| mono.compose(&t))
                .expect("basis monomials have k exponents")
        })
        .collect();
    let mut keys: Vec<Monomial> = composed
        .iter()
        .flat_map(|p| p.terms().map(|(m, _)| m.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let rows: Vec<Vec<BigInt>> = keys
        .iter()
        .map(|key| {
            composed
                .iter()
                .map(|p| p.coeff(key.exponents()))
                .collect()
        })
        .collect();
    integer_nullspace(&rows, basis.len()).len()
}

/// Builds the relation for `k`. Sample points come from a ChaCha stream
/// seeded with `seed`, so the construction is reproducible.
pub fn construct_upsilon(k: usize, seed: u64) -> Result<Upsilon, UpsilonError> {
    check_k(k)?;
    let basis = weighted_basis(k);
    let n = basis.len();
    let nsamples = 3 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for draw in 1..=MAX_DRAWS {
        let rows: Vec<Vec<BigInt>> = (0..nsamples)
            .map(|_| {
                let point: Vec<BigInt> = (0..k - 1)
                    .map(|_| BigInt::from(rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE)))
                    .collect();
                basis_row(&basis, &odd_power_sums(&point, k))
            })
            .collect();
        let ns = integer_nullspace(&rows, n);
        match ns.len() {
            1 => {
                let coeffs = &ns[0];
                let poly = SparsePoly::from_terms(
                    k,
                    basis
                        .monomials
                        .iter()
                        .zip(coeffs)
                        .map(|(m, c)| (m.clone(), c.clone())),
                )?
                .primitive();
                let symbolically_verified = if k <= IDENTITY_MAX_K {
                    let t = power_sum_polys(k, k - 1);
                    if !poly.compose(&t)?.is_zero() {
                        return Err(UpsilonError::IdentityFailed {
                            k,
                            reason: "relation does not vanish on the power sums".into(),
                        });
                    }
                    true
                } else {
                    false
                };
                return Ok(Upsilon {
                    k,
                    poly,
                    basis_size: n,
                    sample_points: nsamples,
                    draws: draw,
                    symbolically_verified,
                });
            }
            0 => return Err(UpsilonError::NullspaceDimension { k, dim: 0 }),
            _ => {
                // Sampling can only lose rank. Redraw unless the exact
                // system itself has a larger nullspace.
                let exact = relation_dimension(k, &basis);
                if exact != 1 {
                    return Err(UpsilonError::NullspaceDimension { k, dim: exact });
                }
            }
        }
    }
    Err(UpsilonError::IdentityFailed {
        k,
        reason: format!("sample matrix stayed rank deficient after {MAX_DRAWS} draws"),
    })
}

/// `prod_{1 <= i < j <= n} (x_i + x_j)` in `n` variables.
pub fn pairwise_sum_product(n: usize) -> SparsePoly {
    let mut out = SparsePoly::constant(n, 1);
    for i in 0..n {
        for j in i + 1..n {
            let f = SparsePoly::var(n, i)
                .checked_add(&SparsePoly::var(n, j))
                .expect("same nvars");
            out = out.checked_mul(&f).expect("same nvars");
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorIdentity {
    pub k: usize,
    #[serde(with = "crate::decimal")]
    pub constant: BigInt,
    pub normalization: &'static str,
    /// Number of terms in the expansion of `Y(tau_1, .., tau_k)`.
    pub expanded_terms: usize,
}

/// Expands `Y(tau_1, .., tau_k)` in `k + 1` variables and divides it exactly
/// by every factor `x_i + x_j`. The quotient must be a nonzero constant.
pub fn factor_identity_constant(upsilon: &Upsilon) -> Result<FactorIdentity, UpsilonError> {
    let k = upsilon.k;
    if k > IDENTITY_MAX_K {
        return Err(UpsilonError::UnsupportedDegree {
            k,
            max: IDENTITY_MAX_K,
        });
    }
    let n = k + 1;
    let tau = power_sum_polys(k, n);
    let expanded = upsilon.poly.compose(&tau)?;
    let expanded_terms = expanded.len();
    let mut quotient = expanded;
    for i in 0..n {
        for j in i + 1..n {
            let f = SparsePoly::var(n, i).checked_add(&SparsePoly::var(n, j))?;
            quotient = quotient
                .div_exact(&f)
                .map_err(|e| UpsilonError::IdentityFailed {
                    k,
                    reason: format!("dividing by x{} + x{}: {e}", i + 1, j + 1),
                })?;
        }
    }
    if !quotient.is_constant() || quotient.is_zero() {
        return Err(UpsilonError::IdentityFailed {
            k,
            reason: format!("quotient {quotient} is not a nonzero constant"),
        });
    }
    let constant = quotient.coeff(&vec![0; n]);
    debug_assert!(!constant.is_zero());
    Ok(FactorIdentity {
        k,
        constant,
        normalization: NORMALIZATION,
        expanded_terms,
    })
}

/// Evaluates `Y` at the odd power sums of `point` (any length).
pub fn eval_at_power_sums(upsilon: &SparsePoly, point: &[BigInt]) -> Result<BigInt, PolyError> {
    let sums = odd_power_sums(point, upsilon.nvars());
    upsilon.eval(&sums)
}

/// Checks `Y(tau(x)) == C * prod (x_i + x_j)` at one point of length `k + 1`.
pub fn identity_holds_at(upsilon: &SparsePoly, constant: &BigInt, point: &[BigInt]) -> bool {
    let lhs = match eval_at_power_sums(upsilon, point) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let mut rhs = constant.clone();
    for i in 0..point.len() {
        for j in i + 1..point.len() {
            rhs *= &point[i] + &point[j];
            if rhs.is_zero() {
                break;
            }
        }
    }
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(nvars: usize, terms: &[(&[u32], i64)]) -> SparsePoly {
        SparsePoly::from_terms(
            nvars,
            terms.iter().map(|(e, c)| (e.to_vec(), BigInt::from(*c))),
        )
        .unwrap()
    }

    /// Exhaustive oracle for the weighted basis: every vector in the box
    /// `a_i <= W` is tested directly.
    fn brute_basis(k: usize) -> Vec<Vec<u32>> {
        let w = (k * (k + 1) / 2) as u32;
        let mut out = Vec::new();
        let mut cur = vec![0u32; k];
        loop {
            if weighted_degree(&cur) == w {
                out.push(cur.clone());
            }
            let mut i = 0;
            loop {
                if i == k {
                    return out;
                }
                cur[i] += 1;
                if cur[i] <= w {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn power_sums() {
        let p = power_sum_polys(2, 3);
        assert_eq!(p[0], poly(3, &[(&[1, 0, 0], 1), (&[0, 1, 0], 1), (&[0, 0, 1], 1)]));
        assert_eq!(p[1], poly(3, &[(&[3, 0, 0], 1), (&[0, 3, 0], 1), (&[0, 0, 3], 1)]));
        assert_eq!(power_sum_polys(2, 1), vec![poly(1, &[(&[1], 1)]), poly(1, &[(&[3], 1)])]);
        let q = power_sum_polys(3, 2);
        assert_eq!(q[2], poly(2, &[(&[5, 0], 1), (&[0, 5], 1)]));
    }

    #[test]
    fn basis_small_cases() {
        let mut b2 = weighted_basis(2).monomials;
        b2.sort();
        assert_eq!(b2, vec![vec![0, 1], vec![3, 0]]);
        let mut b3 = weighted_basis(3).monomials;
        b3.sort();
        let mut want = vec![vec![6, 0, 0], vec![3, 1, 0], vec![0, 2, 0], vec![1, 0, 1]];
        want.sort();
        assert_eq!(b3, want);
    }

    #[test]
    fn basis_matches_brute_force() {
        for k in 2..=6 {
            let mut got = weighted_basis(k).monomials;
            got.sort();
            let mut want = brute_basis(k);
            want.sort();
            assert_eq!(got, want, "k = {k}");
            let mut lead = vec![0; k];
            lead[0] = (k * (k + 1) / 2) as u32;
            assert!(got.contains(&lead));
        }
    }

    #[test]
    fn relation_k2() {
        let u = construct_upsilon(2, 1).unwrap();
        assert_eq!(u.poly, poly(2, &[(&[3, 0], 1), (&[0, 1], -1)]));
        assert!(u.symbolically_verified);
    }

    #[test]
    fn relation_k3() {
        let u = construct_upsilon(3, 1).unwrap();
        let want = poly(
            3,
            &[(&[6, 0, 0], 1), (&[3, 1, 0], -5), (&[0, 2, 0], -5), (&[1, 0, 1], 9)],
        );
        assert_eq!(u.poly, want);
    }

    #[test]
    fn relation_is_seed_independent() {
        for k in 2..=4 {
            assert_eq!(construct_upsilon(k, 1).unwrap().poly, construct_upsilon(k, 99).unwrap().poly);
        }
    }

    #[test]
    fn unsupported_k() {
        assert!(matches!(
            construct_upsilon(1, 0),
            Err(UpsilonError::UnsupportedDegree { k: 1, .. })
        ));
        assert!(matches!(
            construct_upsilon(7, 0),
            Err(UpsilonError::UnsupportedDegree { k: 7, .. })
        ));
    }

    #[test]
    fn factor_constant_k2() {
        // (x1+x2+x3)^3 - (x1^3+x2^3+x3^3) = 3 (x1+x2)(x1+x3)(x2+x3)
        let u = construct_upsilon(2, 1).unwrap();
        let f = factor_identity_constant(&u).unwrap();
        assert_eq!(f.constant, BigInt::from(3));
    }

    #[test]
    fn factor_constant_k3() {
        let u = construct_upsilon(3, 1).unwrap();
        let ones = vec![BigInt::from(1); 4];
        // Y(4, 4, 4) = 4096 - 1280 - 80 + 144
        assert_eq!(eval_at_power_sums(&u.poly, &ones).unwrap(), BigInt::from(2880));
        let f = factor_identity_constant(&u).unwrap();
        assert_eq!(f.constant, BigInt::from(45));
        assert!(identity_holds_at(&u.poly, &f.constant, &ones));
        let pt: Vec<BigInt> = [3, -1, 4, 7].iter().map(|&v| BigInt::from(v)).collect();
        assert!(identity_holds_at(&u.poly, &f.constant, &pt));
    }

    #[test]
    fn non_relation_fails_the_identity() {
        let fake = Upsilon {
            k: 2,
            poly: poly(2, &[(&[3, 0], 1), (&[0, 1], -2)]),
            basis_size: 2,
            sample_points: 0,
            draws: 0,
            symbolically_verified: false,
        };
        assert!(matches!(
            factor_identity_constant(&fake),
            Err(UpsilonError::IdentityFailed { .. })
        ));
    }
}
