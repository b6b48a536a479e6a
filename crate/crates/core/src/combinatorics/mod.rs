//! Exact set-partition combinatorics: partition enumeration in restricted
//! growth string order, complete Bell polynomials, the total-partition
//! sequence, the closed-form coefficient family and the convergence-radius
//! constants derived from them.
//!
//! Everything in this module is exact (big integers / big rationals);
//! floating point only appears in [`constants`] when values are evaluated
//! for reporting.

mod constants;
mod poly;

pub use constants::{
    calibrated_m, q0_for_d, superstable_constants, tilde_integral_bound, zeta,
    ConvergenceConstants, SuperstableConstants,
};
pub use poly::PolyDq;

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use std::ops::{Add, Mul};
use std::sync::{Mutex, OnceLock};

/// Exact scalar used throughout the combinatorics layer.
pub type ExactScalar = BigRational;

/// Partition enumeration refuses ground sets larger than this unless the
/// caller raises the cap explicitly (Bell(12) is ~4.2 million partitions).
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// A partition of `{0, .., n-1}` into non-empty disjoint blocks.
///
/// Blocks are kept in canonical order, sorted by their minimum element, and
/// each block is internally sorted. This is the order produced by restricted
/// growth string enumeration, so streams are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Build from a restricted growth string: `rgs[i]` is the block index of
    /// element `i`, with `rgs[0] == 0` and each value at most one larger than
    /// every value before it.
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (elem, &b) in rgs.iter().enumerate() {
            blocks[b].push(elem);
        }
        SetPartition {
            n: rgs.len(),
            blocks,
        }
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().map(|b| b.len())
    }
}

/// Stream of all partitions of `{0, .., n-1}`, optionally restricted to a
/// fixed block count, in restricted growth string order.
#[derive(Debug)]
pub struct Partitions {
    rgs: Vec<usize>,
    prefix_max: Vec<usize>,
    want_k: Option<usize>,
    started: bool,
    done: bool,
}

impl Partitions {
    fn new(n: usize, want_k: Option<usize>) -> Self {
        Partitions {
            rgs: vec![0; n],
            prefix_max: vec![0; n],
            want_k,
            started: false,
            done: n == 0,
        }
    }

    /// Advance to the next restricted growth string; returns false when
    /// exhausted.
    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        if !self.started {
            self.started = true;
            // all-zero string is the first RGS
            return true;
        }
        // rightmost position that can still be incremented
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[j - 1];
                }
                return true;
            }
        }
        self.done = true;
        false
    }
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        loop {
            if !self.advance() {
                return None;
            }
            let k = self.prefix_max.last().map_or(0, |m| m + 1);
            if self.want_k.map_or(true, |w| w == k) {
                return Some(SetPartition::from_rgs(&self.rgs));
            }
        }
    }
}

/// Enumerate every partition of `{0, .., n-1}` exactly once.
///
/// `n == 0` yields the empty stream by convention.
pub fn partitions(n: usize) -> Result<Partitions> {
    partitions_with_cap(n, DEFAULT_PARTITION_CAP)
}

/// Enumerate partitions with exactly `k` blocks (Stirling subset stream).
pub fn partitions_into(n: usize, k: usize) -> Result<Partitions> {
    if n > 0 && !(1..=n).contains(&k) {
        return Err(Error::Validation(format!(
            "block count k = {k} out of range 1..={n}"
        )));
    }
    check_cap(n, DEFAULT_PARTITION_CAP)?;
    Ok(Partitions::new(n, Some(k)))
}

/// Like [`partitions`] with an explicit size cap.
pub fn partitions_with_cap(n: usize, cap: usize) -> Result<Partitions> {
    check_cap(n, cap)?;
    Ok(Partitions::new(n, None))
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::SizeLimit {
            what: "partition ground-set size",
            got: n,
            cap,
        });
    }
    Ok(())
}

/// Shared, lazily filled table of all partitions of `{0..n-1}` for small `n`.
///
/// The partition recursions in the correlation layer enumerate the same small
/// partition lists once per evaluation point; this keeps them amortized.
pub fn partition_table(n: usize) -> Result<std::sync::Arc<Vec<SetPartition>>> {
    const TABLE_CAP: usize = 9;
    check_cap(n, TABLE_CAP)?;
    static TABLES: OnceLock<Mutex<Vec<Option<std::sync::Arc<Vec<SetPartition>>>>>> =
        OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(vec![None; TABLE_CAP + 1]));
    let mut guard = tables.lock().unwrap();
    if guard[n].is_none() {
        let list: Vec<SetPartition> = Partitions::new(n, None).collect();
        guard[n] = Some(std::sync::Arc::new(list));
    }
    Ok(guard[n].as_ref().unwrap().clone())
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact factorial.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Complete Bell polynomial `B_k(x_1, .., x_k)` over any commutative
/// semiring, via the binomial recursion
/// `B_{k+1} = sum_i C(k, i) B_{k-i} x_{i+1}` with `B_0 = 1`.
///
/// The same code path serves exact rationals and the symbolic
/// [`PolyDq`] monomials used to cross-check the coefficient closed form.
pub fn bell_polynomial<T>(x: &[T]) -> T
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + FromPrimitive,
{
    let n = x.len();
    let mut b: Vec<T> = Vec::with_capacity(n + 1);
    b.push(T::one());
    for k in 0..n {
        let mut acc = T::zero();
        for i in 0..=k {
            let c = binomial(k, i);
            let c = T::from_u128(u128::try_from(&c).expect("binomial fits u128"))
                .expect("binomial representable");
            acc = acc + c * b[k - i].clone() * x[i].clone();
        }
        b.push(acc);
    }
    b.pop().unwrap()
}

/// The total-partition sequence `b_0 = 0, b_1 = b_2 = 1`,
/// `b_{v+1} = (v+2) b_v + 2 sum_{j=2}^{v-1} C(v, j) b_j b_{v-j+1}`.
///
/// `b_m` counts hierarchies of `m` elements: set partitions in which every
/// block of two or more elements is itself recursively partitioned.
pub fn total_partition_sequence(m_max: usize) -> Vec<BigInt> {
    let mut b = vec![BigInt::zero(); m_max + 1];
    if m_max >= 1 {
        b[1] = BigInt::one();
    }
    if m_max >= 2 {
        b[2] = BigInt::one();
    }
    for nu in 2..m_max {
        let mut sum = BigInt::zero();
        for j in 2..nu {
            sum += binomial(nu, j) * &b[j] * &b[nu - j + 1];
        }
        b[nu + 1] = BigInt::from(nu + 2) * &b[nu] + BigInt::from(2) * sum;
    }
    b
}

/// Closed-form coefficient `a_nu^(k) = (k!/nu!) C(k-1, nu-1) b_nu`;
/// zero when `nu == 0` or `nu > k`.
pub fn a_coefficient(nu: usize, k: usize) -> ExactScalar {
    if nu == 0 || nu > k {
        return ExactScalar::zero();
    }
    let b = total_partition_sequence(nu);
    let num = factorial(k) * binomial(k - 1, nu - 1) * &b[nu];
    ExactScalar::new(num, factorial(nu))
}

/// The recursive majorant sequence `w_1 = D q`,
/// `w_k = B_k(w_1, .., w_{k-1}, k! D q^k)`, over any semiring containing
/// `D` and `q`.
pub fn w_sequence<T>(k_max: usize, d: &T, q: &T) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + FromPrimitive,
{
    let mut w: Vec<T> = Vec::with_capacity(k_max + 1);
    w.push(T::zero()); // unused slot 0
    if k_max == 0 {
        return w;
    }
    w.push(d.clone() * q.clone());
    let mut q_pow = q.clone(); // q^k while building order k
    for k in 2..=k_max {
        q_pow = q_pow * q.clone();
        let kfact = T::from_u128(u128::try_from(&factorial(k)).expect("factorial fits u128"))
            .expect("factorial representable");
        let mut x: Vec<T> = w[1..k].to_vec();
        x.push(kfact * d.clone() * q_pow.clone());
        w.push(bell_polynomial(&x));
    }
    w
}

/// Exact value of `w_k` at rational `D`, `q`.
pub fn w_bound(k: usize, d: &ExactScalar, q: &ExactScalar) -> ExactScalar {
    w_sequence(k, d, q).pop().unwrap()
}

/// `w_k` as a symbolic polynomial in `D` and `q`.
pub fn w_bound_symbolic(k: usize) -> PolyDq {
    w_sequence(k, &PolyDq::var_d(), &PolyDq::var_q())
        .pop()
        .unwrap()
}
