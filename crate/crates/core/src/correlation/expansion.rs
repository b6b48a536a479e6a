//! Expansion drivers: the finite-volume density inversion, its logarithm,
//! the chemical-potential expansion from the tilde-family, the pressure
//! remainder and the integral-bound diagnostic.

use super::{CorrelationFamily, TildeFamily, TruncatedFamily, CONTINUUM_ORDER_CAP};
use crate::combinatorics::q0_for_d;
use crate::error::{Error, Result};
use crate::integrate::{Domain, IntegratorSpec};
use crate::Point;

/// One expansion term `(-1)^k/k! int f_k`, together with the same integral
/// at half the cutoff radius.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TermEstimate {
    pub k: usize,
    pub value: f64,
    pub std_err: f64,
    /// Same term integrated over the radius-halved domain.
    pub halved_value: f64,
    pub n_evals: u64,
}

impl TermEstimate {
    /// Relative change when the cutoff radius doubles from R/2 to R.
    pub fn r_change(&self) -> f64 {
        (self.value - self.halved_value).abs() / self.value.abs().max(1e-14)
    }
}

/// Options shared by the expansion drivers.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionOptions {
    /// Highest expansion order `k`.
    pub k_max: usize,
    /// Half-extent of the integration box per argument.
    pub radius: f64,
    pub integrator: IntegratorSpec,
    /// A term is R-converged when doubling the radius moves it by less than
    /// this relative amount.
    pub r_doubling_threshold: f64,
}

impl ExpansionOptions {
    pub fn quadrature(k_max: usize, radius: f64, nodes_per_axis: usize) -> Self {
        ExpansionOptions {
            k_max,
            radius,
            integrator: IntegratorSpec::Quadrature { nodes_per_axis },
            r_doubling_threshold: 0.01,
        }
    }

    pub fn monte_carlo(k_max: usize, radius: f64, samples: u64, seed: u64, workers: usize) -> Self {
        ExpansionOptions {
            k_max,
            radius,
            integrator: IntegratorSpec::MonteCarlo {
                samples,
                seed,
                workers,
            },
            r_doubling_threshold: 0.01,
        }
    }
}

/// Per-order report of an expansion around `log rho`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExpansionReport {
    pub log_rho: f64,
    pub terms: Vec<TermEstimate>,
    /// `partial_sums[k] = log rho + sum_{j <= k} terms[j]`; entry 0 is
    /// `log rho` itself.
    pub partial_sums: Vec<f64>,
    /// The last partial sum.
    pub mu: f64,
    /// Root-sum-square of the term standard errors (zero for quadrature).
    pub se_mu: f64,
    /// Every term moved by less than the doubling threshold when the cutoff
    /// radius was doubled.
    pub r_convergent: bool,
    pub diagnostics: Option<AssumptionBFit>,
}

fn check_continuum_order(k_max: usize) -> Result<()> {
    if k_max > CONTINUUM_ORDER_CAP {
        return Err(Error::SizeLimit {
            what: "continuum expansion order",
            got: k_max,
            cap: CONTINUUM_ORDER_CAP,
        });
    }
    Ok(())
}

fn signed_over_factorial(k: usize) -> f64 {
    let mut fact = 1.0;
    for i in 1..=k {
        fact *= i as f64;
    }
    if k % 2 == 0 {
        1.0 / fact
    } else {
        -1.0 / fact
    }
}

/// Chemical-potential expansion `mu = log rho + sum_k (-1)^k/k!
/// int tilde_k(0, y_k) dy_k`, truncated to a box of half-extent `radius`.
///
/// Only translation-invariant families are supported: the rooted kernel is
/// probed at the origin, which is representative exactly in that case.
pub fn mu_expansion(tilde: &TildeFamily, opts: &ExpansionOptions) -> Result<ExpansionReport> {
    if !tilde.translation_invariant() {
        return Err(Error::Unsupported(
            "mu expansion needs a translation-invariant family".into(),
        ));
    }
    check_continuum_order(opts.k_max)?;
    if opts.k_max > tilde.k_max() {
        return Err(Error::Validation(format!(
            "expansion order {} exceeds family order {}",
            opts.k_max,
            tilde.k_max()
        )));
    }
    let rho = tilde.rho();
    if !(rho > 0.0) {
        return Err(Error::Degenerate(format!("rho = {rho} must be > 0")));
    }
    let mut terms = Vec::with_capacity(opts.k_max);
    for k in 1..=opts.k_max {
        let coeff = signed_over_factorial(k);
        let integrand = |ys: &[Point]| tilde.eval(crate::ORIGIN, ys).expect("order within caps");
        let full = opts
            .integrator
            .integrate(&integrand, &Domain::cube(tilde.dimension(), 2.0 * opts.radius)?, k)?;
        let halved = opts
            .integrator
            .integrate(&integrand, &Domain::cube(tilde.dimension(), opts.radius)?, k)?;
        terms.push(TermEstimate {
            k,
            value: coeff * full.value,
            std_err: coeff.abs() * full.std_err,
            halved_value: coeff * halved.value,
            n_evals: full.n_evals + halved.n_evals,
        });
    }
    let log_rho = rho.ln();
    let mut partial_sums = vec![log_rho];
    for t in &terms {
        partial_sums.push(partial_sums.last().unwrap() + t.value);
    }
    let mu = *partial_sums.last().unwrap();
    let se_mu = terms
        .iter()
        .map(|t| t.std_err * t.std_err)
        .sum::<f64>()
        .sqrt();
    let r_convergent = terms
        .iter()
        .all(|t| t.r_change() < opts.r_doubling_threshold);
    Ok(ExpansionReport {
        log_rho,
        terms,
        partial_sums,
        mu,
        se_mu,
        r_convergent,
        diagnostics: None,
    })
}

/// Pressure remainder report: `p = rho - sum_k (-1)^{k+1}/(k+1)!
/// int rho_T^(k+1)(0, y_k) dy_k`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PressureReport {
    pub rho: f64,
    pub terms: Vec<TermEstimate>,
    /// `pressure_partials[k] = rho - sum_{j <= k} terms[j]`.
    pub pressure_partials: Vec<f64>,
    pub pressure: f64,
    pub se_pressure: f64,
    pub r_convergent: bool,
}

/// Expand the grand-canonical pressure from the truncated family.
pub fn pressure_expansion(
    rho_t: &TruncatedFamily,
    opts: &ExpansionOptions,
) -> Result<PressureReport> {
    if !rho_t.translation_invariant() {
        return Err(Error::Unsupported(
            "pressure expansion needs a translation-invariant family".into(),
        ));
    }
    check_continuum_order(opts.k_max)?;
    if opts.k_max + 1 > rho_t.k_max() {
        return Err(Error::Validation(format!(
            "pressure order {} needs truncated kernels up to {}, have {}",
            opts.k_max,
            opts.k_max + 1,
            rho_t.k_max()
        )));
    }
    let rho = rho_t.rho();
    let mut terms = Vec::with_capacity(opts.k_max);
    for k in 1..=opts.k_max {
        // (-1)^{k+1} / (k+1)!
        let coeff = signed_over_factorial(k + 1);
        let integrand = |ys: &[Point]| {
            let mut pts = Vec::with_capacity(ys.len() + 1);
            pts.push(crate::ORIGIN);
            pts.extend_from_slice(ys);
            rho_t.eval(&pts).expect("order within caps")
        };
        let full = opts
            .integrator
            .integrate(&integrand, &Domain::cube(rho_t.dimension(), 2.0 * opts.radius)?, k)?;
        let halved = opts
            .integrator
            .integrate(&integrand, &Domain::cube(rho_t.dimension(), opts.radius)?, k)?;
        terms.push(TermEstimate {
            k,
            value: coeff * full.value,
            std_err: coeff.abs() * full.std_err,
            halved_value: coeff * halved.value,
            n_evals: full.n_evals + halved.n_evals,
        });
    }
    let mut pressure_partials = vec![rho];
    for t in &terms {
        pressure_partials.push(pressure_partials.last().unwrap() - t.value);
    }
    let pressure = *pressure_partials.last().unwrap();
    let se_pressure = terms
        .iter()
        .map(|t| t.std_err * t.std_err)
        .sum::<f64>()
        .sqrt();
    let r_convergent = terms
        .iter()
        .all(|t| t.r_change() < opts.r_doubling_threshold);
    Ok(PressureReport {
        rho,
        terms,
        pressure_partials,
        pressure,
        se_pressure,
        r_convergent,
    })
}

/// Partial sums of the inversion formula for the finite-volume densities:
/// `j_Lambda^(n)(x) ~ sum_k (-1)^k/k! int_{Lambda^k} rho^(n+k)(x, y_k)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct JanossyReport {
    pub n: usize,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// Evaluate the inversion partial sums for `j_Lambda^(n)` at probe points
/// `x_n` (empty for `n = 0`).
pub fn janossy(
    family: &CorrelationFamily,
    domain: &Domain,
    probe: &[Point],
    k_max: usize,
    integrator: &IntegratorSpec,
) -> Result<JanossyReport> {
    let n = probe.len();
    if n + k_max > family.k_max() {
        return Err(Error::Validation(format!(
            "need rho up to order {} but family stops at {}",
            n + k_max,
            family.k_max()
        )));
    }
    let mut terms = Vec::with_capacity(k_max + 1);
    let mut std_errs = Vec::with_capacity(k_max + 1);
    terms.push(family.eval(probe));
    std_errs.push(0.0);
    for k in 1..=k_max {
        let coeff = signed_over_factorial(k);
        let integrand = |ys: &[Point]| {
            let mut pts = Vec::with_capacity(n + ys.len());
            pts.extend_from_slice(probe);
            pts.extend_from_slice(ys);
            family.eval(&pts)
        };
        let est = integrator.integrate(&integrand, domain, k)?;
        terms.push(coeff * est.value);
        std_errs.push(coeff.abs() * est.std_err);
    }
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    Ok(JanossyReport {
        n,
        terms,
        partial_sums,
        std_errs,
    })
}

/// Per-order terms of `log j_Lambda^(0) = sum_k (-1)^k/k! int_{Lambda^k}
/// rho_T^(k)`.
pub fn log_j0(
    rho_t: &TruncatedFamily,
    domain: &Domain,
    k_max: usize,
    integrator: &IntegratorSpec,
) -> Result<Vec<f64>> {
    if k_max > rho_t.k_max() {
        return Err(Error::Validation(format!(
            "need truncated kernels up to {} but family stops at {}",
            k_max,
            rho_t.k_max()
        )));
    }
    let mut terms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let coeff = signed_over_factorial(k);
        let integrand = |ys: &[Point]| rho_t.eval(ys).expect("order within caps");
        let est = integrator.integrate(&integrand, domain, k)?;
        terms.push(coeff * est.value);
    }
    Ok(terms)
}

/// Options for the integral-bound diagnostic.
#[derive(Debug, Clone)]
pub struct AssumptionBOptions {
    /// Fit orders `1..=n_max`.
    pub n_max: usize,
    pub domain: Domain,
    pub integrator: IntegratorSpec,
    /// Probe points for the sup over the root argument; empty means the
    /// origin (plus a consistency grid for non-translation-invariant input).
    pub probes: Vec<Point>,
}

/// Least-squares fit of `log(I_n / n!) = log D + n log q` to the rooted
/// truncated-kernel integrals, with the convergence comparison `q < q0(D)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionBFit {
    /// `I_n = sup_x int |rho_T^(1+n)(x, .)| / rho` over the probe set.
    pub i_n: Vec<f64>,
    pub d: f64,
    pub q: f64,
    pub q0: f64,
    pub convergent: bool,
}

/// Fit the integral-bound constants `(D, q)` of a truncated family and
/// compare `q` against the convergence radius `q0(D)`.
///
/// The sup over the root is replaced by a max over the probe grid; for
/// translation-invariant families the origin suffices and extra probes act
/// as a consistency check.
pub fn assumption_b_diagnostic(
    rho_t: &TruncatedFamily,
    opts: &AssumptionBOptions,
) -> Result<AssumptionBFit> {
    if opts.n_max + 1 > rho_t.k_max() {
        return Err(Error::Validation(format!(
            "diagnostic order {} needs truncated kernels up to {}, have {}",
            opts.n_max,
            opts.n_max + 1,
            rho_t.k_max()
        )));
    }
    let rho = rho_t.rho();
    if !(rho > 0.0) {
        return Err(Error::Degenerate(format!("rho = {rho} must be > 0")));
    }
    let mut probes = opts.probes.clone();
    if probes.is_empty() {
        probes.push(crate::ORIGIN);
        if !rho_t.translation_invariant() {
            // default 8-point consistency grid on the domain diagonal
            let h = opts.domain.bounding_half();
            for i in 0..8 {
                let t = (i as f64 + 0.5) / 8.0 * 2.0 - 1.0;
                let mut p = [0.0f64; 3];
                for a in 0..rho_t.dimension() {
                    p[a] = t * h * 0.9;
                }
                probes.push(p);
            }
        }
    }
    let mut i_n = Vec::with_capacity(opts.n_max);
    for n in 1..=opts.n_max {
        let mut sup = 0.0f64;
        for x in &probes {
            let x = *x;
            let integrand = move |ys: &[Point]| {
                let mut pts = Vec::with_capacity(ys.len() + 1);
                pts.push(x);
                pts.extend_from_slice(ys);
                rho_t.eval(&pts).expect("order within caps").abs() / rho
            };
            let est = opts.integrator.integrate(&integrand, &opts.domain, n)?;
            sup = sup.max(est.value);
        }
        i_n.push(sup);
    }
    // least squares on the usable (positive) orders
    let usable: Vec<(f64, f64)> = i_n
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| {
            let n = (i + 1) as f64;
            let mut fact = 1.0;
            for j in 1..=(i + 1) {
                fact *= j as f64;
            }
            (n, (v / fact).ln())
        })
        .collect();
    let (d, q) = match usable.len() {
        0 => (0.0, 0.0), // identically vanishing kernels: trivially convergent
        1 => {
            return Err(Error::FitUndetermined(
                "only one non-vanishing order; cannot fit (D, q)".into(),
            ))
        }
        _ => {
            let n_pts = usable.len() as f64;
            let sum_n: f64 = usable.iter().map(|(n, _)| n).sum();
            let sum_y: f64 = usable.iter().map(|(_, y)| y).sum();
            let sum_nn: f64 = usable.iter().map(|(n, _)| n * n).sum();
            let sum_ny: f64 = usable.iter().map(|(n, y)| n * y).sum();
            let denom = n_pts * sum_nn - sum_n * sum_n;
            let slope = (n_pts * sum_ny - sum_n * sum_y) / denom;
            let intercept = (sum_y - slope * sum_n) / n_pts;
            (intercept.exp(), slope.exp())
        }
    };
    let q0 = q0_for_d(d);
    Ok(AssumptionBFit {
        i_n,
        d,
        q,
        q0,
        convergent: q < q0,
    })
}
