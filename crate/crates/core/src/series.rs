//! Truncated formal power series in one bookkeeping variable.
//!
//! Coefficients live in any field-like scalar type (exact rationals or f64);
//! arithmetic never consults orders beyond the fixed truncation.

use num_traits::{FromPrimitive, One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar types usable as series coefficients.
pub trait Coeff:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + FromPrimitive
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + std::fmt::Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>
        + FromPrimitive
{
}

/// Series `c_0 + c_1 t + ... + c_K t^K`, truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> GradedSeries<T> {
    /// The zero series truncated at order `k_max`.
    pub fn zero(k_max: usize) -> Self {
        GradedSeries {
            coeffs: vec![T::zero(); k_max + 1],
        }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the order-0 slot");
        GradedSeries { coeffs }
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, v: T) {
        self.coeffs[k] = v;
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.truncation_order(), rhs.truncation_order());
        GradedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.truncation_order(), rhs.truncation_order());
        let k_max = self.truncation_order();
        let mut out = vec![T::zero(); k_max + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > k_max {
                    break;
                }
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        GradedSeries { coeffs: out }
    }

    /// Exponential of a series with zero constant term:
    /// `b_0 = 1`, `m b_m = sum_{j=1..m} j a_j b_{m-j}`.
    ///
    /// Panics if the constant term is nonzero; the exponential would then not
    /// be polynomial in the coefficients.
    pub fn exp(&self) -> Self {
        assert!(
            self.coeffs[0].is_zero(),
            "exp needs a vanishing constant term"
        );
        let k_max = self.truncation_order();
        let mut out = vec![T::zero(); k_max + 1];
        out[0] = T::one();
        for m in 1..=k_max {
            let mut acc = T::zero();
            for j in 1..=m {
                if self.coeffs[j].is_zero() {
                    continue;
                }
                let jf = T::from_usize(j).expect("small integer");
                acc = acc + jf * self.coeffs[j].clone() * out[m - j].clone();
            }
            out[m] = acc / T::from_usize(m).expect("small integer");
        }
        GradedSeries { coeffs: out }
    }

    /// Rescale the grading variable: `c_k -> lambda^k c_k`.
    pub fn scale_variable(&self, lambda: &T) -> Self {
        let mut pow = T::one();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c.clone() * pow.clone();
                pow = pow.clone() * lambda.clone();
                v
            })
            .collect();
        GradedSeries { coeffs }
    }
}
