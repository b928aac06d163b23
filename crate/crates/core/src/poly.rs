//! Exact sparse multivariate polynomials over the integers.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic. The largest key is the leading term, and every
//! serialized form lists terms leading-first, so equal polynomials always
//! produce identical bytes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("exponent vector has length {got}, expected {expected}")]
    ExponentLength { got: usize, expected: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("expected {expected} substitutions, got {got}")]
    SubstitutionCount { got: usize, expected: usize },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("division is not exact")]
    InexactDivision,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Exponent vector of a single term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divide(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "PolyDoc", try_from = "PolyDoc")]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c.into());
        p
    }

    /// The polynomial `x_index` (zero-based).
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range");
        let mut e = vec![0; nvars];
        e[index] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(Monomial(e), BigInt::one());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Repeated
    /// exponent vectors are summed and zero coefficients dropped.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, BigInt)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::ExponentLength {
                    got: e.len(),
                    expected: nvars,
                });
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms, leading (graded-lex largest) first.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter().rev()
    }

    pub fn coeff(&self, exponents: &[u32]) -> BigInt {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &BigInt)> {
        self.terms.iter().next_back()
    }

    /// True when every term has total degree zero.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    /// Gcd of the coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    /// Divides out the content and flips the sign so the leading coefficient
    /// is positive.
    pub fn primitive(&self) -> SparsePoly {
        let Some((_, lead)) = self.leading_term() else {
            return self.clone();
        };
        let mut g = self.content();
        if lead.is_negative() {
            g = -g;
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c / &g))
                .collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_nvars(&self, other: &SparsePoly) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_nvars(other)?;
        let mut acc: HashMap<Monomial, BigInt> = HashMap::with_capacity(self.len() * other.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_default() += ca * cb;
            }
        }
        Ok(SparsePoly {
            nvars: self.nvars,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    pub fn neg(&self) -> SparsePoly {
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, factor: &BigInt) -> SparsePoly {
        if factor.is_zero() {
            return Self::zero(self.nvars);
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> SparsePoly {
        let mut result = Self::constant(self.nvars, 1);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = result.checked_mul(&base).expect("same nvars");
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base).expect("same nvars");
            }
        }
        result
    }

    pub fn eval(&self, point: &[BigInt]) -> Result<BigInt, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength {
                got: point.len(),
                expected: self.nvars,
            });
        }
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m.exponents()) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Substitutes `subs[i]` for variable `i`. All substitutions must share
    /// one variable count, which becomes the variable count of the result.
    pub fn compose(&self, subs: &[SparsePoly]) -> Result<SparsePoly, PolyError> {
        if subs.len() != self.nvars {
            return Err(PolyError::SubstitutionCount {
                got: subs.len(),
                expected: self.nvars,
            });
        }
        let target = subs.first().map_or(0, SparsePoly::nvars);
        for s in subs {
            if s.nvars != target {
                return Err(PolyError::NvarsMismatch {
                    left: target,
                    right: s.nvars,
                });
            }
        }
        // powers[i][e] = subs[i]^e, grown on demand
        let mut powers: Vec<Vec<SparsePoly>> = subs
            .iter()
            .map(|_| vec![SparsePoly::constant(target, 1)])
            .collect();
        let mut out = SparsePoly::zero(target);
        for (m, c) in &self.terms {
            let mut term = SparsePoly::constant(target, c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let cache = &mut powers[i];
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap().checked_mul(&subs[i])?;
                    cache.push(next);
                }
                term = term.checked_mul(&cache[e as usize])?;
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Exact division; fails unless `divisor` divides `self` with zero
    /// remainder over the integers.
    pub fn div_exact(&self, divisor: &SparsePoly) -> Result<SparsePoly, PolyError> {
        self.check_nvars(divisor)?;
        let (lead_m, lead_c) = divisor.leading_term().ok_or(PolyError::DivisionByZero)?;
        let (lead_m, lead_c) = (lead_m.clone(), lead_c.clone());
        let mut rem = self.clone();
        let mut quot = SparsePoly::zero(self.nvars);
        while let Some((m, c)) = rem.leading_term() {
            let qm = m.divide(&lead_m).ok_or(PolyError::InexactDivision)?;
            let (qc, r) = c.div_rem(&lead_c);
            if !r.is_zero() {
                return Err(PolyError::InexactDivision);
            }
            for (dm, dc) in &divisor.terms {
                rem.add_term(qm.mul(dm), -(&qc * dc));
            }
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    /// Line-oriented text form: the variable count, then one line per term
    /// holding the exponents and the decimal coefficient.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.nvars);
        for (m, c) in self.terms() {
            for e in m.exponents() {
                s.push_str(&e.to_string());
                s.push(' ');
            }
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SparsePoly, PolyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(PolyError::Parse {
            line: 1,
            msg: "missing variable count".into(),
        })?;
        let nvars: usize = head.trim().parse().map_err(|_| PolyError::Parse {
            line: 1,
            msg: format!("bad variable count {head:?}"),
        })?;
        let mut p = SparsePoly::zero(nvars);
        for (idx, line) in lines {
            let perr = |msg: String| PolyError::Parse { line: idx + 1, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != nvars + 1 {
                return Err(perr(format!(
                    "expected {} fields, found {}",
                    nvars + 1,
                    toks.len()
                )));
            }
            let exps = toks[..nvars]
                .iter()
                .map(|t| t.parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| perr(e.to_string()))?;
            let c: BigInt = toks[nvars]
                .parse()
                .map_err(|_| perr(format!("bad coefficient {:?}", toks[nvars])))?;
            if c.is_zero() {
                return Err(perr("zero coefficient".into()));
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    /// Human-readable form such as `w1^3 - w2`, using `var` as the variable
    /// name prefix and one-based indices.
    pub fn display_with(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("{var}{}", j + 1)
                    } else {
                        format!("{var}{}^{e}", j + 1)
                    }
                })
                .collect();
            if factors.is_empty() {
                s.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    s.push_str(&mag.to_string());
                    s.push('*');
                }
                s.push_str(&factors.join("*"));
            }
        }
        s
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("x"))
    }
}

pub fn poly_arith(a: &SparsePoly, b: &SparsePoly, op: ArithOp) -> Result<SparsePoly, PolyError> {
    match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
        ArithOp::Mul => a.checked_mul(b),
    }
}

/// JSON document shape: `{"nvars": n, "terms": [[[e1, ..], "coeff"], ..]}`.
#[derive(Serialize, Deserialize)]
struct PolyDoc {
    nvars: usize,
    terms: Vec<(Vec<u32>, String)>,
}

impl From<SparsePoly> for PolyDoc {
    fn from(p: SparsePoly) -> Self {
        PolyDoc {
            nvars: p.nvars,
            terms: p
                .terms()
                .map(|(m, c)| (m.exponents().to_vec(), c.to_string()))
                .collect(),
        }
    }
}

impl TryFrom<PolyDoc> for SparsePoly {
    type Error = PolyError;

    fn try_from(doc: PolyDoc) -> Result<Self, Self::Error> {
        let mut terms = Vec::with_capacity(doc.terms.len());
        for (i, (e, c)) in doc.terms.into_iter().enumerate() {
            let c: BigInt = c.parse().map_err(|_| PolyError::Parse {
                line: i + 1,
                msg: format!("bad coefficient {c:?}"),
            })?;
            terms.push((e, c));
        }
        SparsePoly::from_terms(doc.nvars, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(nvars: usize, terms: &[(&[u32], i64)]) -> SparsePoly {
        SparsePoly::from_terms(
            nvars,
            terms.iter().map(|(e, c)| (e.to_vec(), BigInt::from(*c))),
        )
        .unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn monomial_square() {
        let w1 = SparsePoly::var(1, 0);
        let sq = poly_arith(&w1, &w1, ArithOp::Mul).unwrap();
        assert_eq!(sq, p(1, &[(&[2], 1)]));
    }

    #[test]
    fn self_subtraction_cancels() {
        let s = SparsePoly::var(2, 0).checked_add(&SparsePoly::var(2, 1)).unwrap();
        let z = poly_arith(&s, &s, ArithOp::Sub).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.len(), 0);
    }

    #[test]
    fn difference_of_squares() {
        let a = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let b = p(2, &[(&[1, 0], 1), (&[0, 1], -1)]);
        let prod = a.checked_mul(&b).unwrap();
        assert_eq!(prod, p(2, &[(&[2, 0], 1), (&[0, 2], -1)]));
    }

    #[test]
    fn nvars_mismatch_is_an_error() {
        let a = SparsePoly::var(2, 0);
        let b = SparsePoly::var(3, 0);
        assert_eq!(
            poly_arith(&a, &b, ArithOp::Add),
            Err(PolyError::NvarsMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn eval_examples() {
        let f = p(2, &[(&[3, 0], 1), (&[0, 1], -1)]);
        assert_eq!(f.eval(&ints(&[2, 8])).unwrap(), BigInt::zero());
        let g = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        assert_eq!(g.eval(&ints(&[3, 4])).unwrap(), BigInt::from(7));
        let h = p(2, &[(&[2, 1], 5), (&[0, 0], -11)]);
        assert_eq!(h.eval(&ints(&[0, 0])).unwrap(), BigInt::from(-11));
        assert_eq!(
            h.eval(&ints(&[1])),
            Err(PolyError::PointLength {
                got: 1,
                expected: 2
            })
        );
    }

    #[test]
    fn grlex_orders_by_degree_first() {
        let f = p(2, &[(&[0, 1], 1), (&[3, 0], 1), (&[1, 1], 1), (&[0, 2], 1)]);
        let order: Vec<Vec<u32>> = f.terms().map(|(m, _)| m.exponents().to_vec()).collect();
        assert_eq!(order, vec![vec![3, 0], vec![1, 1], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn exact_division() {
        // (x + y)^3 / (x + y) = (x + y)^2
        let s = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let q = s.pow(3).div_exact(&s).unwrap();
        assert_eq!(q, s.pow(2));
        let t = p(2, &[(&[1, 0], 1), (&[0, 1], 2)]);
        assert_eq!(s.pow(2).div_exact(&t), Err(PolyError::InexactDivision));
        assert_eq!(
            s.div_exact(&SparsePoly::zero(2)),
            Err(PolyError::DivisionByZero)
        );
    }

    #[test]
    fn compose_substitutes() {
        // w1^3 - w2 at (x, x^3) vanishes
        let f = p(2, &[(&[3, 0], 1), (&[0, 1], -1)]);
        let x = SparsePoly::var(1, 0);
        let composed = f.compose(&[x.clone(), x.pow(3)]).unwrap();
        assert!(composed.is_zero());
    }

    #[test]
    fn primitive_normalizes_sign_and_content() {
        let f = p(2, &[(&[2, 0], -6), (&[0, 1], 4)]);
        assert_eq!(f.primitive(), p(2, &[(&[2, 0], 3), (&[0, 1], -2)]));
    }

    #[test]
    fn text_format() {
        let f = p(2, &[(&[3, 0], 1), (&[0, 1], -1)]);
        assert_eq!(f.to_text(), "2\n3 0 1\n0 1 -1\n");
        assert_eq!(SparsePoly::from_text(&f.to_text()).unwrap(), f);
        assert!(matches!(
            SparsePoly::from_text("2\n1 1\n"),
            Err(PolyError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn json_uses_decimal_strings() {
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        let f = SparsePoly::from_terms(2, vec![(vec![1, 2], big)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"nvars":2,"terms":[[[1,2],"123456789012345678901234567890"]]}"#);
        let back: SparsePoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn display() {
        let f = p(3, &[(&[6, 0, 0], 1), (&[3, 1, 0], -5), (&[0, 2, 0], -5), (&[1, 0, 1], 9)]);
        assert_eq!(f.display_with("w"), "w1^6 - 5*w1^3*w2 + 9*w1*w3 - 5*w2^2");
    }

    fn arb_poly() -> impl Strategy<Value = SparsePoly> {
        prop::collection::vec((prop::collection::vec(0u32..4, 3), -50i64..50), 0..8).prop_map(
            |ts| SparsePoly::from_terms(3, ts.into_iter().map(|(e, c)| (e, BigInt::from(c)))).unwrap(),
        )
    }

    proptest! {
        #[test]
        fn text_and_json_round_trip(f in arb_poly()) {
            prop_assert_eq!(SparsePoly::from_text(&f.to_text()).unwrap(), f.clone());
            let js = serde_json::to_string(&f).unwrap();
            prop_assert_eq!(serde_json::from_str::<SparsePoly>(&js).unwrap(), f);
        }

        #[test]
        fn no_zero_coefficients_survive(f in arb_poly(), g in arb_poly()) {
            for h in [f.checked_add(&g).unwrap(), f.checked_sub(&g).unwrap(), f.checked_mul(&g).unwrap()] {
                prop_assert!(h.terms().all(|(m, c)| !c.is_zero() && m.exponents().len() == 3));
            }
        }

        #[test]
        fn product_divides_back(f in arb_poly(), g in arb_poly()) {
            prop_assume!(!g.is_zero());
            let prod = f.checked_mul(&g).unwrap();
            prop_assert_eq!(prod.div_exact(&g).unwrap(), f);
        }

        #[test]
        fn eval_is_a_ring_homomorphism(f in arb_poly(), g in arb_poly(), x in prop::collection::vec(-9i64..9, 3)) {
            let pt = ints(&x);
            let prod = f.checked_mul(&g).unwrap().eval(&pt).unwrap();
            prop_assert_eq!(prod, f.eval(&pt).unwrap() * g.eval(&pt).unwrap());
        }
    }
}
