//! Deterministic tensor quadrature and seeded Monte Carlo over `Lambda^k`
//! for box and ball domains in d <= 3.
//!
//! The midpoint rule is used throughout: the key integrands carry hard-core
//! indicators, where higher-order rules lose their advantage and midpoint
//! keeps nodes off discontinuity-aligned boundaries. Monte Carlo workers own
//! disjoint counter-based RNG streams and are reduced in fixed worker order,
//! so a run is bit-reproducible given `(seed, workers)`.

use crate::error::{Error, Result};
use crate::Point;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Hard limit on the total tensor dimension `d * k` of a quadrature.
pub const QUAD_DIM_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DomainKind {
    Box,
    Ball,
}

/// Integration domain: a box `[-L/2, L/2)^d` of side `L`, or a ball of
/// radius `R`, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub d: usize,
    /// Side `L` for a box, radius `R` for a ball.
    pub extent: f64,
    pub periodic: bool,
}

impl Domain {
    pub fn cube(d: usize, side: f64) -> Result<Self> {
        Self::new(DomainKind::Box, d, side, false)
    }

    pub fn ball(d: usize, radius: f64) -> Result<Self> {
        Self::new(DomainKind::Ball, d, radius, false)
    }

    pub fn new(kind: DomainKind, d: usize, extent: f64, periodic: bool) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Validation(format!("dimension {d} not in 1..=3")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Validation(format!(
                "extent must be > 0, got {extent}"
            )));
        }
        Ok(Domain {
            kind,
            d,
            extent,
            periodic,
        })
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            DomainKind::Box => self.extent.powi(self.d as i32),
            DomainKind::Ball => {
                let r = self.extent;
                match self.d {
                    1 => 2.0 * r,
                    2 => std::f64::consts::PI * r * r,
                    _ => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
                }
            }
        }
    }

    /// Half-extent of the bounding box.
    pub fn bounding_half(&self) -> f64 {
        match self.kind {
            DomainKind::Box => self.extent / 2.0,
            DomainKind::Ball => self.extent,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self.kind {
            DomainKind::Box => {
                let h = self.extent / 2.0;
                (0..self.d).all(|i| p[i] >= -h && p[i] < h)
            }
            DomainKind::Ball => {
                let r2: f64 = (0..self.d).map(|i| p[i] * p[i]).sum();
                r2 <= self.extent * self.extent
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// Result of a `Lambda^k` integral.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub std_err: f64,
    pub n_evals: u64,
    pub method: Method,
    pub seed: Option<u64>,
}

/// Midpoint tensor quadrature of `f` over `Lambda^k`.
///
/// `f` receives `k` points. Cost guard: `d * k <= 6`.
pub fn quad_k(
    f: &(dyn Fn(&[Point]) -> f64 + Sync),
    domain: &Domain,
    k: usize,
    nodes_per_axis: usize,
) -> Result<IntegralEstimate> {
    if k == 0 {
        return Err(Error::Validation("k must be >= 1".into()));
    }
    let dim = domain.d * k;
    if dim > QUAD_DIM_CAP {
        return Err(Error::CostGuard(format!(
            "tensor quadrature dimension d*k = {dim} exceeds cap {QUAD_DIM_CAP}"
        )));
    }
    if nodes_per_axis == 0 {
        return Err(Error::Validation("nodes_per_axis must be >= 1".into()));
    }
    let n = nodes_per_axis;
    let total = (n as u128).pow(dim as u32);
    if total > 2_000_000_000 {
        return Err(Error::CostGuard(format!(
            "quadrature would need {total} evaluations"
        )));
    }
    let h = 2.0 * domain.bounding_half() / n as f64;
    let lo = -domain.bounding_half();
    let cell_weight = h.powi(dim as i32);
    let is_ball = domain.kind == DomainKind::Ball;

    let mut sum = 0.0;
    let mut idx = vec![0usize; dim];
    let mut pts = vec![[0.0f64; 3]; k];
    let mut evals: u64 = 0;
    loop {
        for j in 0..k {
            let mut p = [0.0f64; 3];
            for a in 0..domain.d {
                p[a] = lo + (idx[j * domain.d + a] as f64 + 0.5) * h;
            }
            pts[j] = p;
        }
        let inside = !is_ball || pts.iter().all(|p| domain.contains(p));
        if inside {
            sum += f(&pts);
            evals += 1;
        }
        // odometer
        let mut carry = dim;
        loop {
            if carry == 0 {
                return Ok(IntegralEstimate {
                    value: sum * cell_weight,
                    std_err: 0.0,
                    n_evals: evals,
                    method: Method::Quadrature,
                    seed: None,
                });
            }
            carry -= 1;
            idx[carry] += 1;
            if idx[carry] < n {
                break;
            }
            idx[carry] = 0;
        }
    }
}

fn sample_point<R: Rng>(domain: &Domain, rng: &mut R) -> Point {
    let h = domain.bounding_half();
    loop {
        let mut p = [0.0f64; 3];
        for a in 0..domain.d {
            p[a] = rng.gen_range(-h..h);
        }
        // rejection from the bounding box for balls; acceptance >= 52% for d <= 3
        if domain.kind == DomainKind::Box || domain.contains(&p) {
            return p;
        }
    }
}

/// Uniform Monte Carlo estimate of `f` over `Lambda^k` with `n_samples`
/// total draws split across `workers` disjoint RNG streams.
pub fn mc_k(
    f: &(dyn Fn(&[Point]) -> f64 + Sync),
    domain: &Domain,
    k: usize,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<IntegralEstimate> {
    if k == 0 {
        return Err(Error::Validation("k must be >= 1".into()));
    }
    if n_samples < 2 {
        return Err(Error::Validation("n_samples must be >= 2".into()));
    }
    let workers = workers.max(1);
    let chunk = n_samples / workers as u64;
    let remainder = n_samples % workers as u64;

    let partials: Vec<(f64, f64, u64)> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let mine = chunk + if (w as u64) < remainder { 1 } else { 0 };
            let mut pts = vec![[0.0f64; 3]; k];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..mine {
                for p in pts.iter_mut() {
                    *p = sample_point(domain, &mut rng);
                }
                let v = f(&pts);
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq, mine)
        })
        .collect();

    // fixed reduction order over workers
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0u64;
    for (s, s2, m) in partials {
        sum += s;
        sum_sq += s2;
        n += m;
    }
    let vol_k = domain.volume().powi(k as i32);
    let mean = sum / n as f64;
    let var = ((sum_sq / n as f64) - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    Ok(IntegralEstimate {
        value: vol_k * mean,
        std_err: vol_k * (var / n as f64).sqrt(),
        n_evals: n,
        method: Method::MonteCarlo,
        seed: Some(seed),
    })
}

/// How a term integral should be carried out; shared by the expansion
/// drivers and the CLI.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub enum IntegratorSpec {
    Quadrature {
        nodes_per_axis: usize,
    },
    MonteCarlo {
        samples: u64,
        seed: u64,
        workers: usize,
    },
}

impl IntegratorSpec {
    pub fn integrate(
        &self,
        f: &(dyn Fn(&[Point]) -> f64 + Sync),
        domain: &Domain,
        k: usize,
    ) -> Result<IntegralEstimate> {
        match *self {
            IntegratorSpec::Quadrature { nodes_per_axis } => quad_k(f, domain, k, nodes_per_axis),
            IntegratorSpec::MonteCarlo {
                samples,
                seed,
                workers,
            } => mc_k(f, domain, k, samples, seed, workers),
        }
    }
}
