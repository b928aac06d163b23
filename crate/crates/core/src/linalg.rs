//! Fraction-free (Bareiss) elimination and exact integer nullspaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Row echelon form produced by Bareiss elimination.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rows: Vec<Vec<BigInt>>,
    pub pivots: Vec<usize>,
    pub ncols: usize,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Fraction-free forward elimination. Every intermediate entry is a minor of
/// the input, so each division by the previous pivot is exact.
pub fn bareiss(matrix: &[Vec<BigInt>], ncols: usize) -> Echelon {
    let mut m: Vec<Vec<BigInt>> = matrix.to_vec();
    debug_assert!(m.iter().all(|r| r.len() == ncols));
    let nrows = m.len();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        // smallest nonzero magnitude keeps the minors short
        let Some(p) = (r..nrows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by_key(|&i| m[i][c].bits())
        else {
            continue;
        };
        m.swap(r, p);
        let (head, tail) = m.split_at_mut(r + 1);
        let pivot_row = &head[r];
        let pivot = &pivot_row[c];
        for row in tail.iter_mut() {
            let factor = row[c].clone();
            for j in c + 1..ncols {
                let num = pivot * &row[j] - &factor * &pivot_row[j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                row[j] = q;
            }
            row[c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    Echelon {
        rows: m,
        pivots,
        ncols,
    }
}

/// Primitive integer basis of the right nullspace, one vector per free
/// column. Each vector has content 1 and a positive first nonzero entry.
pub fn integer_nullspace(matrix: &[Vec<BigInt>], ncols: usize) -> Vec<Vec<BigInt>> {
    let ech = bareiss(matrix, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !ech.pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![BigRational::zero(); ncols];
            x[f] = BigRational::one();
            for (i, &pc) in ech.pivots.iter().enumerate().rev() {
                let row = &ech.rows[i];
                let mut s = BigRational::zero();
                for j in pc + 1..ncols {
                    if !row[j].is_zero() && !x[j].is_zero() {
                        s += BigRational::from_integer(row[j].clone()) * &x[j];
                    }
                }
                x[pc] = -s / BigRational::from_integer(row[pc].clone());
            }
            primitive_integer_vector(&x)
        })
        .collect()
}

fn primitive_integer_vector(x: &[BigRational]) -> Vec<BigInt> {
    let lcm = x
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = x.iter().map(|v| (v * &lcm).to_integer()).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return ints;
    }
    if ints.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
        g = -g;
    }
    ints.into_iter().map(|v| v / &g).collect()
}
