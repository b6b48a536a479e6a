use num::rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul};

/// Sparse exact polynomial in the two formal variables `D` and `q`.
///
/// Only what the coefficient cross-check needs: addition, multiplication,
/// exact coefficient extraction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyDq {
    // (d_power, q_power) -> coefficient; zero coefficients are never stored
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl PolyDq {
    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        PolyDq { terms }
    }

    pub fn var_d() -> Self {
        Self::monomial(1, 0, BigRational::one())
    }

    pub fn var_q() -> Self {
        Self::monomial(0, 1, BigRational::one())
    }

    pub fn monomial(d_pow: u32, q_pow: u32, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((d_pow, q_pow), c);
        }
        PolyDq { terms }
    }

    /// Coefficient of `D^d_pow q^q_pow` (zero if absent).
    pub fn coeff(&self, d_pow: u32, q_pow: u32) -> BigRational {
        self.terms
            .get(&(d_pow, q_pow))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &BigRational)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(d, q)| d + q).max()
    }

    pub fn eval(&self, d: &BigRational, q: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(dp, qp), c) in &self.terms {
            let mut t = c.clone();
            for _ in 0..dp {
                t *= d;
            }
            for _ in 0..qp {
                t *= q;
            }
            acc += t;
        }
        acc
    }
}

impl Add for PolyDq {
    type Output = PolyDq;

    fn add(self, rhs: PolyDq) -> PolyDq {
        let mut terms = self.terms;
        for (k, v) in rhs.terms {
            let entry = terms.entry(k).or_insert_with(BigRational::zero);
            *entry += v;
            if entry.is_zero() {
                terms.remove(&k);
            }
        }
        PolyDq { terms }
    }
}

impl Mul for PolyDq {
    type Output = PolyDq;

    fn mul(self, rhs: PolyDq) -> PolyDq {
        let mut terms: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
        for (&(d1, q1), c1) in &self.terms {
            for (&(d2, q2), c2) in &rhs.terms {
                let key = (d1 + d2, q1 + q2);
                let entry = terms.entry(key).or_insert_with(BigRational::zero);
                *entry += c1 * c2;
                if entry.is_zero() {
                    terms.remove(&key);
                }
            }
        }
        PolyDq { terms }
    }
}

impl Zero for PolyDq {
    fn zero() -> Self {
        PolyDq::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for PolyDq {
    fn one() -> Self {
        PolyDq::constant(BigRational::one())
    }
}

impl FromPrimitive for PolyDq {
    fn from_i64(n: i64) -> Option<Self> {
        Some(PolyDq::constant(BigRational::from_i64(n)?))
    }

    fn from_u64(n: u64) -> Option<Self> {
        Some(PolyDq::constant(BigRational::from_u64(n)?))
    }

    fn from_u128(n: u128) -> Option<Self> {
        Some(PolyDq::constant(BigRational::from_u128(n)?))
    }
}
