use super::total_partition_sequence;
use crate::error::{Error, Result};
use num_traits::ToPrimitive;
use std::sync::OnceLock;

/// `zeta = 1 / (2 ln 2 - 1) = 2.5886994...`, the growth base of the
/// total-partition sequence.
pub fn zeta() -> f64 {
    1.0 / (2.0 * std::f64::consts::LN_2 - 1.0)
}

/// Convergence radius `q0(D) = 1 / (2 (2 + zeta D))`; equals `1/4` at
/// `D = 0` and decreases strictly in `D`.
pub fn q0_for_d(d: f64) -> f64 {
    1.0 / (2.0 * (2.0 + zeta() * d))
}

/// Smallest prefactor `M` consistent with `b_m <= M m^{m-1} zeta^m e^{-m}`
/// on `m <= 20`, i.e. the calibrated maximum of `b_m e^m / (m^{m-1} zeta^m)`.
pub fn calibrated_m() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        let b = total_partition_sequence(20);
        let zeta = zeta();
        (1..=20)
            .map(|m| {
                let bm = b[m].to_f64().expect("b_m fits f64 for m <= 20");
                bm * (m as f64).exp() / ((m as f64).powi(m as i32 - 1) * zeta.powi(m as i32))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

/// The constants entering the expansion-convergence predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConstants {
    /// Prefactor of the truncated-kernel integral bound.
    pub d: f64,
    /// Geometric ratio of the truncated-kernel integral bound.
    pub q: f64,
    /// Prefactor of the rooted-kernel bound; defaults to [`calibrated_m`].
    pub m: f64,
}

impl ConvergenceConstants {
    pub fn new(d: f64, q: f64) -> Result<Self> {
        Self::with_m(d, q, calibrated_m())
    }

    pub fn with_m(d: f64, q: f64, m: f64) -> Result<Self> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::Validation(format!("D must be >= 0, got {d}")));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Validation(format!("q must be > 0, got {q}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Validation(format!("M must be > 0, got {m}")));
        }
        Ok(ConvergenceConstants { d, q, m })
    }

    pub fn zeta(&self) -> f64 {
        zeta()
    }

    pub fn q0(&self) -> f64 {
        q0_for_d(self.d)
    }

    pub fn convergent(&self) -> bool {
        self.q < self.q0()
    }
}

/// Bound `(k-1)! M (1 + zeta D)^k q^k` on the integral of the order-`k`
/// rooted kernel.
pub fn tilde_integral_bound(k: usize, c: &ConvergenceConstants) -> f64 {
    let mut fact = 1.0;
    for i in 1..k {
        fact *= i as f64;
    }
    fact * c.m * (1.0 + zeta() * c.d).powi(k as i32) * c.q.powi(k as i32)
}

/// Constants for a superstable pair interaction at chemical potential `mu`,
/// stability constant `B` and Mayer integral `C(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperstableConstants {
    /// `q_bar = e^mu e^{2B+1} C(u)`.
    pub q_bar: f64,
    /// `D = e^mu e^{-2B} / (1 - 2 q_bar)`; undefined once `q_bar >= 1/2`.
    pub d: Option<f64>,
    /// `q = q_bar / (1 - q_bar)`; undefined once `q_bar >= 1`.
    pub q: Option<f64>,
    /// `q0(D)` for the `D` above.
    pub q0: Option<f64>,
    /// Activity small enough for the expansion to hold at the true chemical
    /// potential: `q_bar < min(1/3, 1/(1 + 2/(2 + zeta D)))`, strictly.
    pub admissible: bool,
    /// Whether `q < q0(D)`.
    pub convergent: Option<bool>,
}

/// Derive `(q_bar, D, q)` and the admissibility flags for a superstable pair
/// interaction.
///
/// `D` is stored in the simplified single-fraction form
/// `e^mu e^{-2B} / (1 - 2 q_bar)`. The source expresses the same quantity as
/// the product `e^mu e^{-2B}/(1 - q_bar) * (1 - q_bar)/(1 - 2 q_bar)`; the
/// shared `(1 - q_bar)` factor cancels, so the two readings agree wherever
/// both are defined.
pub fn superstable_constants(mu: f64, b_stability: f64, c_u: f64) -> Result<SuperstableConstants> {
    if !(b_stability >= 0.0) {
        return Err(Error::Validation(format!(
            "stability constant B must be >= 0, got {b_stability}"
        )));
    }
    if !(c_u > 0.0) {
        return Err(Error::Validation(format!(
            "Mayer integral C(u) must be > 0, got {c_u}"
        )));
    }
    let fugacity = mu.exp();
    let q_bar = fugacity * (2.0 * b_stability + 1.0).exp() * c_u;
    if q_bar >= 0.5 {
        // constants undefined past the half-way point
        return Ok(SuperstableConstants {
            q_bar,
            d: None,
            q: if q_bar < 1.0 {
                Some(q_bar / (1.0 - q_bar))
            } else {
                None
            },
            q0: None,
            admissible: false,
            convergent: None,
        });
    }
    let d = fugacity * (-2.0 * b_stability).exp() / (1.0 - 2.0 * q_bar);
    let q = q_bar / (1.0 - q_bar);
    let q0 = q0_for_d(d);
    let admissible = q_bar < (1.0f64 / 3.0).min(1.0 / (1.0 + 2.0 / (2.0 + zeta() * d)));
    Ok(SuperstableConstants {
        q_bar,
        d: Some(d),
        q: Some(q),
        q0: Some(q0),
        admissible,
        convergent: Some(q < q0),
    })
}
