//! The algebra of correlation families: truncation to connected (Ursell)
//! kernels, its inverse, the rooted `F_k` family, the tilde-family, the
//! split identity, the finite-volume density inversion and the
//! chemical-potential / pressure expansions built from them.
//!
//! Kernels are pure evaluation callbacks plus metadata, so one algebra
//! serves analytic, closed-form and empirical inputs. Every recursion over
//! the partition lattice is evaluated with a per-call dynamic program over
//! argument subsets; partitions of each subset come from the shared cached
//! tables in [`crate::combinatorics`].

mod expansion;

pub use expansion::{
    assumption_b_diagnostic, janossy, log_j0, mu_expansion, pressure_expansion, AssumptionBFit,
    AssumptionBOptions, ExpansionOptions, ExpansionReport, JanossyReport, PressureReport,
    TermEstimate,
};

use crate::combinatorics::partition_table;
use crate::error::{Error, Result};
use crate::Point;
use std::sync::Arc;

/// Partition recursions in the continuum layer stop here: integrand cost
/// grows with the Bell numbers.
pub const CONTINUUM_ORDER_CAP: usize = 6;

/// Shared evaluation callback for a symmetric `n`-point kernel.
#[derive(Clone)]
pub struct Kernel {
    f: Arc<dyn Fn(&[Point]) -> f64 + Send + Sync>,
}

impl Kernel {
    pub fn new(f: impl Fn(&[Point]) -> f64 + Send + Sync + 'static) -> Self {
        Kernel { f: Arc::new(f) }
    }

    pub fn eval(&self, pts: &[Point]) -> f64 {
        (self.f)(pts)
    }
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Kernel(..)")
    }
}

/// Family of correlation functions `rho^(n)` up to a truncation order, with
/// `rho^(0) = 1` implicit.
#[derive(Clone, Debug)]
pub struct CorrelationFamily {
    kernels: Vec<Kernel>,
    d: usize,
    translation_invariant: bool,
    ruelle_xi: Option<f64>,
    rho: f64,
}

impl CorrelationFamily {
    /// `kernels[n-1]` is the `n`-point function; `d` is the ambient
    /// dimension. The one-point function is evaluated once at the origin to
    /// fix `rho`.
    pub fn new(kernels: Vec<Kernel>, d: usize, translation_invariant: bool) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Validation("family needs at least rho^(1)".into()));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::Validation(format!("dimension {d} not in 1..=3")));
        }
        let rho = kernels[0].eval(&[crate::ORIGIN]);
        if !rho.is_finite() {
            return Err(Error::Degenerate(format!("rho^(1)(0) = {rho}")));
        }
        Ok(CorrelationFamily {
            kernels,
            d,
            translation_invariant,
            ruelle_xi: None,
            rho,
        })
    }

    pub fn with_ruelle_xi(mut self, xi: f64) -> Self {
        self.ruelle_xi = Some(xi);
        self
    }

    /// Ideal-gas family `rho^(n) = rho^n`.
    pub fn poisson(rho: f64, k_max: usize, d: usize) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::Validation(format!("rho must be >= 0, got {rho}")));
        }
        let kernels = (1..=k_max.max(1))
            .map(|_| Kernel::new(move |pts| pts.iter().fold(1.0, |acc, _| acc * rho)))
            .collect();
        Ok(CorrelationFamily::new(kernels, d, true)?.with_ruelle_xi(rho))
    }

    pub fn k_max(&self) -> usize {
        self.kernels.len()
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    pub fn ruelle_xi(&self) -> Option<f64> {
        self.ruelle_xi
    }

    /// The density `rho = rho^(1)(0)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kernel(&self, n: usize) -> &Kernel {
        &self.kernels[n - 1]
    }

    /// Evaluate `rho^(n)` at an `n`-tuple; the empty tuple gives 1.
    pub fn eval(&self, pts: &[Point]) -> f64 {
        if pts.is_empty() {
            return 1.0;
        }
        self.kernels[pts.len() - 1].eval(pts)
    }
}

/// Connected-kernel recursion over subsets of an evaluation tuple:
/// `kappa(S) = moment(S) - sum over partitions of S with >= 2 blocks of
/// prod kappa(block)`, filled in increasing subset size.
///
/// Products run over blocks in canonical order so that factorized moments
/// cancel bit-exactly (a Poisson family truncates to exact zeros).
fn connected_from_moments(moment: &[f64], n: usize) -> Result<Vec<f64>> {
    let full = (1usize << n) - 1;
    let mut kappa = vec![0.0f64; 1 << n];
    let mut order: Vec<usize> = (1..=full).collect();
    order.sort_by_key(|m| m.count_ones());
    for &mask in &order {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let m = idx.len();
        if m == 1 {
            kappa[mask] = moment[mask];
            continue;
        }
        let parts = partition_table(m)?;
        let mut correction = 0.0;
        for p in parts.iter() {
            if p.block_count() < 2 {
                continue;
            }
            let mut prod = 1.0;
            for block in p.blocks() {
                let mut bm = 0usize;
                for &i in block {
                    bm |= 1 << idx[i];
                }
                prod *= kappa[bm];
            }
            correction += prod;
        }
        kappa[mask] = moment[mask] - correction;
    }
    Ok(kappa)
}

fn subset_points(pts: &[Point], mask: usize, out: &mut Vec<Point>) {
    out.clear();
    for (i, p) in pts.iter().enumerate() {
        if mask >> i & 1 == 1 {
            out.push(*p);
        }
    }
}

/// Where a truncated family gets its values from.
#[derive(Clone, Debug)]
enum TruncatedSource {
    /// Computed from a correlation family by the partition recursion.
    FromCorrelation(CorrelationFamily),
    /// Supplied directly (closed forms, synthetic test families).
    Direct(Vec<Kernel>),
}

/// Family of truncated (connected / Ursell) correlation functions
/// `rho_T^(n)`, with `rho_T^(1) = rho^(1) = rho`.
#[derive(Clone, Debug)]
pub struct TruncatedFamily {
    source: TruncatedSource,
    k_max: usize,
    d: usize,
    rho: f64,
    translation_invariant: bool,
}

impl TruncatedFamily {
    /// Build directly from kernels (`kernels[n-1]` is `rho_T^(n)`).
    pub fn from_kernels(kernels: Vec<Kernel>, d: usize, translation_invariant: bool) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Validation("family needs at least rho_T^(1)".into()));
        }
        let rho = kernels[0].eval(&[crate::ORIGIN]);
        Ok(TruncatedFamily {
            k_max: kernels.len(),
            source: TruncatedSource::Direct(kernels),
            d,
            rho,
            translation_invariant,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    /// Evaluate `rho_T^(n)` at an `n`-tuple, `n <= k_max`.
    pub fn eval(&self, pts: &[Point]) -> Result<f64> {
        let n = pts.len();
        if n == 0 || n > self.k_max {
            return Err(Error::Validation(format!(
                "tuple length {n} outside 1..={}",
                self.k_max
            )));
        }
        match &self.source {
            TruncatedSource::Direct(kernels) => Ok(kernels[n - 1].eval(pts)),
            TruncatedSource::FromCorrelation(family) => {
                let full = (1usize << n) - 1;
                let mut moment = vec![0.0f64; 1 << n];
                let mut buf = Vec::with_capacity(n);
                for mask in 1..=full {
                    subset_points(pts, mask, &mut buf);
                    moment[mask] = family.eval(&buf);
                }
                Ok(connected_from_moments(&moment, n)?[full])
            }
        }
    }

    /// The `n`-point truncated kernel as a standalone callback.
    pub fn kernel(&self, n: usize) -> Result<Kernel> {
        if n == 0 || n > self.k_max {
            return Err(Error::Validation(format!(
                "order {n} outside 1..={}",
                self.k_max
            )));
        }
        let me = self.clone();
        Ok(Kernel::new(move |pts| {
            me.eval(pts).expect("order validated")
        }))
    }
}

/// Truncate a correlation family: `rho_T^(n) = rho^(n) - sum_{k=2}^{n}
/// sum_{pi in Pi_k} prod rho_T^(|pi_i|)(pi_i)`, computed by increasing `n`.
pub fn truncate(family: &CorrelationFamily) -> Result<TruncatedFamily> {
    if family.k_max() > CONTINUUM_ORDER_CAP + 1 {
        return Err(Error::SizeLimit {
            what: "truncation order",
            got: family.k_max(),
            cap: CONTINUUM_ORDER_CAP + 1,
        });
    }
    Ok(TruncatedFamily {
        k_max: family.k_max(),
        d: family.dimension(),
        rho: family.rho(),
        translation_invariant: family.translation_invariant(),
        source: TruncatedSource::FromCorrelation(family.clone()),
    })
}

/// Invert [`truncate`]: `rho^(n) = sum_{k=1}^{n} sum_{pi in Pi_k} prod
/// rho_T^(|pi_i|)(pi_i)`.
pub fn untruncate(rho_t: &TruncatedFamily) -> Result<CorrelationFamily> {
    let k_max = rho_t.k_max();
    let mut kernels = Vec::with_capacity(k_max);
    for n in 1..=k_max {
        let src = rho_t.clone();
        kernels.push(Kernel::new(move |pts: &[Point]| {
            debug_assert_eq!(pts.len(), n);
            let n = pts.len();
            let full = (1usize << n) - 1;
            let mut kappa = vec![0.0f64; 1 << n];
            let mut buf = Vec::with_capacity(n);
            for mask in 1..=full {
                subset_points(pts, mask, &mut buf);
                kappa[mask] = src.eval(&buf).expect("orders within family");
            }
            let parts = partition_table(n).expect("order within cap");
            let mut total = 0.0;
            for p in parts.iter() {
                let mut prod = 1.0;
                for block in p.blocks() {
                    let mut bm = 0usize;
                    for &i in block {
                        bm |= 1 << i;
                    }
                    prod *= kappa[bm];
                }
                total += prod;
            }
            total
        }));
    }
    CorrelationFamily::new(kernels, rho_t.dimension(), rho_t.translation_invariant())
}

/// Rooted connected recursion shared by the `F_k` and tilde families:
/// `T(S) = base(x, S) - sum over partitions of S with >= 2 blocks of
/// prod T(x, block)`.
fn rooted_eval(
    base: &dyn Fn(&[Point]) -> Result<f64>,
    x: Point,
    ys: &[Point],
) -> Result<f64> {
    let k = ys.len();
    if k == 0 {
        return Err(Error::Validation("rooted kernel needs k >= 1".into()));
    }
    let full = (1usize << k) - 1;
    let mut tilde = vec![0.0f64; 1 << k];
    let mut order: Vec<usize> = (1..=full).collect();
    order.sort_by_key(|m| m.count_ones());
    let mut buf: Vec<Point> = Vec::with_capacity(k + 1);
    for &mask in &order {
        buf.clear();
        buf.push(x);
        for (i, y) in ys.iter().enumerate() {
            if mask >> i & 1 == 1 {
                buf.push(*y);
            }
        }
        let base_val = base(&buf)?;
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let m = idx.len();
        if m == 1 {
            tilde[mask] = base_val;
            continue;
        }
        let parts = partition_table(m)?;
        let mut correction = 0.0;
        for p in parts.iter() {
            if p.block_count() < 2 {
                continue;
            }
            let mut prod = 1.0;
            for block in p.blocks() {
                let mut bm = 0usize;
                for &i in block {
                    bm |= 1 << idx[i];
                }
                prod *= tilde[bm];
            }
            correction += prod;
        }
        tilde[mask] = base_val - correction;
    }
    Ok(tilde[full])
}

/// The rooted family `F_k(x, y_k)`: `F_1 = rho^(2)/rho` and
/// `F_k = rho^(1+k)/rho - sum_{l=2}^{k} sum_{pi in Pi_l(y_k)} prod
/// F_{|pi_i|}(x, pi_i)`.
#[derive(Clone, Debug)]
pub struct RootedFamily {
    family: CorrelationFamily,
}

impl RootedFamily {
    /// Largest k for which `F_k` is available.
    pub fn k_max(&self) -> usize {
        self.family.k_max() - 1
    }

    pub fn eval(&self, x: Point, ys: &[Point]) -> Result<f64> {
        if ys.len() > self.k_max() {
            return Err(Error::Validation(format!(
                "k = {} exceeds available order {}",
                ys.len(),
                self.k_max()
            )));
        }
        let rho = self.family.rho();
        let fam = &self.family;
        rooted_eval(&|pts| Ok(fam.eval(pts) / rho), x, ys)
    }
}

/// Build the `F_k` family from a correlation family with `K >= 2`.
pub fn f_family(family: &CorrelationFamily) -> Result<RootedFamily> {
    if family.k_max() < 2 {
        return Err(Error::Validation("F family needs K >= 2".into()));
    }
    if !(family.rho() > 0.0) {
        return Err(Error::Degenerate(format!(
            "density rho = {} must be > 0",
            family.rho()
        )));
    }
    Ok(RootedFamily {
        family: family.clone(),
    })
}

/// The tilde-family `rho~_T^(1+k)(x, y_k)`: `rho~_T^(2) = rho_T^(2)/rho` and
/// `rho~_T^(1+k) = rho_T^(1+k)/rho - sum_{l=2}^{k} sum_{pi in Pi_l(y_k)}
/// prod rho~_T^(1+|pi_i|)(x, pi_i)`.
///
/// Its integrals are the terms of the chemical-potential expansion.
#[derive(Clone, Debug)]
pub struct TildeFamily {
    rho_t: TruncatedFamily,
}

impl TildeFamily {
    /// Largest k for which `tilde_k` is available.
    pub fn k_max(&self) -> usize {
        self.rho_t.k_max() - 1
    }

    pub fn rho(&self) -> f64 {
        self.rho_t.rho()
    }

    pub fn dimension(&self) -> usize {
        self.rho_t.dimension()
    }

    pub fn translation_invariant(&self) -> bool {
        self.rho_t.translation_invariant()
    }

    /// The truncated family this tilde-family was built from.
    pub fn truncated(&self) -> &TruncatedFamily {
        &self.rho_t
    }

    pub fn eval(&self, x: Point, ys: &[Point]) -> Result<f64> {
        if ys.len() > self.k_max() {
            return Err(Error::Validation(format!(
                "k = {} exceeds available order {}",
                ys.len(),
                self.k_max()
            )));
        }
        let rho = self.rho_t.rho();
        let rho_t = &self.rho_t;
        rooted_eval(&|pts| Ok(rho_t.eval(pts)? / rho), x, ys)
    }
}

/// Build the tilde-family from a truncated family with `K >= 2` and
/// `rho > 0`.
pub fn tilde_family(rho_t: &TruncatedFamily) -> Result<TildeFamily> {
    if rho_t.k_max() < 2 {
        return Err(Error::Validation("tilde family needs K >= 2".into()));
    }
    if !(rho_t.rho() > 0.0) {
        return Err(Error::Degenerate(format!(
            "density rho = {} must be > 0",
            rho_t.rho()
        )));
    }
    Ok(TildeFamily { rho_t: rho_t.clone() })
}

/// Check the split identity `F_k(x, y_k) = rho_T^(k)(y_k) +
/// rho~_T^(1+k)(x, y_k)` on probe tuples; returns the largest relative
/// residual.
///
/// The two sides are computed by independent recursions (`F_k` from the raw
/// correlations, the right side from the truncated kernels).
pub fn split_check(
    family: &CorrelationFamily,
    probes: &[(Point, Vec<Point>)],
) -> Result<f64> {
    let f = f_family(family)?;
    let rho_t = truncate(family)?;
    let tilde = tilde_family(&rho_t)?;
    let mut worst: f64 = 0.0;
    for (x, ys) in probes {
        let lhs = f.eval(*x, ys)?;
        let rt = rho_t.eval(ys)?;
        let tl = tilde.eval(*x, ys)?;
        let rhs = rt + tl;
        let scale = lhs.abs().max(rt.abs()).max(tl.abs()).max(1e-30);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
