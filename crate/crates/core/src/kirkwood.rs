//! The Kirkwood-closure process: closed-form correlation families built from
//! a density and a pair function, the closed-form rooted kernels, the
//! connected-graph (Mayer) expansion of the chemical potential, and the
//! existence bound. Serves as the independent oracle for the recursion-based
//! expansion machinery.

use crate::correlation::{
    CorrelationFamily, ExpansionReport, Kernel, TermEstimate, TruncatedFamily,
};
use crate::error::{Error, Result};
use crate::integrate::{Domain, IntegratorSpec};
use crate::Point;
use std::sync::Arc;

/// Hard cap on graph enumeration (26704 connected graphs at six vertices).
pub const GRAPH_VERTEX_CAP: usize = 6;
/// Deterministic quadrature handles the graph expansion up to this order in
/// d = 1; Monte Carlo one order further.
pub const GRAPH_ORDER_CAP_QUAD: usize = 3;
pub const GRAPH_ORDER_CAP_MC: usize = 4;

/// Even non-negative pair function `g` with its Mayer integral
/// `C_g = int |g - 1|` and uniformity bound `b` (1 whenever `g <= 1`).
#[derive(Clone)]
pub struct PairFunction {
    radial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    d: usize,
    c_g: f64,
    b: f64,
    /// `g - 1` vanishes outside this radius (`inf` when unknown).
    support_radius: f64,
    /// Radius of a hard core (`g = 0` inside), if one is declared.
    hard_core: Option<f64>,
}

impl std::fmt::Debug for PairFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairFunction")
            .field("d", &self.d)
            .field("c_g", &self.c_g)
            .field("b", &self.b)
            .finish()
    }
}

impl PairFunction {
    /// Hard rods in d = 1: `g = 1{|r| >= sigma}`, `C_g = 2 sigma`.
    pub fn hard_rod(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Validation(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(PairFunction {
            radial: Arc::new(move |r| if r.abs() < sigma { 0.0 } else { 1.0 }),
            d: 1,
            c_g: 2.0 * sigma,
            b: 1.0,
            support_radius: sigma,
            hard_core: Some(sigma),
        })
    }

    /// Hard spheres in d = 2 or 3.
    pub fn hard_sphere(d: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Validation(format!("sigma must be > 0, got {sigma}")));
        }
        if !(2..=3).contains(&d) {
            return Err(Error::Validation(format!(
                "hard spheres live in d = 2 or 3, got {d}"
            )));
        }
        let c_g = match d {
            2 => std::f64::consts::PI * sigma * sigma,
            _ => 4.0 / 3.0 * std::f64::consts::PI * sigma.powi(3),
        };
        Ok(PairFunction {
            radial: Arc::new(move |r| if r.abs() < sigma { 0.0 } else { 1.0 }),
            d,
            c_g,
            b: 1.0,
            support_radius: sigma,
            hard_core: Some(sigma),
        })
    }

    /// Gaussian Mayer function `g = 1 - a exp(-r^2/s^2)` with `0 < a <= 1`,
    /// so `g <= 1` and `b = 1`.
    pub fn gauss_mayer(d: usize, a: f64, s: f64) -> Result<Self> {
        if !(0.0 < a && a <= 1.0) {
            return Err(Error::Validation(format!("need 0 < a <= 1, got {a}")));
        }
        if !(s > 0.0) {
            return Err(Error::Validation(format!("scale must be > 0, got {s}")));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::Validation(format!("dimension {d} not in 1..=3")));
        }
        let c_g = a * (std::f64::consts::PI.sqrt() * s).powi(d as i32);
        Ok(PairFunction {
            radial: Arc::new(move |r| 1.0 - a * (-r * r / (s * s)).exp()),
            d,
            c_g,
            b: 1.0,
            support_radius: f64::INFINITY,
            hard_core: None,
        })
    }

    /// Wrap an arbitrary radial profile (used for empirically estimated
    /// pair correlations).
    pub fn from_radial(
        radial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d: usize,
        c_g: f64,
        b: f64,
        support_radius: f64,
        hard_core: Option<f64>,
    ) -> Self {
        PairFunction {
            radial,
            d,
            c_g,
            b,
            support_radius,
            hard_core,
        }
    }

    pub fn eval_radial(&self, r: f64) -> f64 {
        (self.radial)(r)
    }

    pub fn eval(&self, dx: &Point) -> f64 {
        let r2: f64 = (0..self.d).map(|i| dx[i] * dx[i]).sum();
        (self.radial)(r2.sqrt())
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn mayer_integral(&self) -> f64 {
        self.c_g
    }

    pub fn uniformity_bound(&self) -> f64 {
        self.b
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn hard_core(&self) -> Option<f64> {
        self.hard_core
    }
}

fn diff(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Closure family `rho^(n)(x_n) = rho^n prod_{i<j} g(x_i - x_j)`.
///
/// The existence bound `rho < (e b C_g)^{-1}` is checked and logged as a
/// warning, not an error: the closure stays a well-defined kernel family
/// either way.
pub fn kirkwood_family(rho: f64, g: &PairFunction, k_max: usize) -> Result<CorrelationFamily> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Validation(format!("rho must be >= 0, got {rho}")));
    }
    if k_max < 1 {
        return Err(Error::Validation("k_max must be >= 1".into()));
    }
    let bound = existence_bound(rho, g, 1.0)?;
    if !bound.inside {
        log::warn!(
            "Kirkwood closure outside its existence regime: rho = {rho} >= {:.6}",
            bound.radius
        );
    }
    let kernels: Vec<Kernel> = (1..=k_max)
        .map(|_| {
            let g = g.clone();
            Kernel::new(move |pts: &[Point]| {
                let mut v = pts.iter().fold(1.0, |acc, _| acc * rho);
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        v *= g.eval(&diff(&pts[i], &pts[j]));
                    }
                }
                v
            })
        })
        .collect();
    Ok(CorrelationFamily::new(kernels, g.dimension(), true)?
        .with_ruelle_xi(rho * g.uniformity_bound().sqrt()))
}

/// Closed-form rooted kernel of the closure process:
/// `tilde_k(x, y_k) = (prod_m g(x - y_m) - 1) rho_T^(k)(y_k)`,
/// with `rho_T^(k)` the truncated family of the same process.
pub fn tilde_closed_form(g: &PairFunction, rho_t: &TruncatedFamily, k: usize) -> Result<Kernel> {
    if k == 0 || k > rho_t.k_max() {
        return Err(Error::Validation(format!(
            "order {k} outside 1..={}",
            rho_t.k_max()
        )));
    }
    let g = g.clone();
    let rho_t = rho_t.clone();
    Ok(Kernel::new(move |pts: &[Point]| {
        // pts = (x, y_1..y_k)
        let x = pts[0];
        let ys = &pts[1..];
        let mut prod = 1.0;
        for y in ys {
            prod *= g.eval(&diff(&x, y));
        }
        (prod - 1.0) * rho_t.eval(ys).expect("order validated")
    }))
}

/// Labeled graph on `{0, .., v-1}`, connected, no self-loops or multi-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectedGraph {
    v: usize,
    edges: Vec<(u8, u8)>,
}

impl ConnectedGraph {
    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }
}

/// Enumerate every connected labeled graph on `v` vertices exactly once,
/// in edge-bitmask order.
pub fn connected_graphs(v: usize) -> Result<Vec<ConnectedGraph>> {
    if v == 0 {
        return Err(Error::Validation("need at least one vertex".into()));
    }
    if v > GRAPH_VERTEX_CAP {
        return Err(Error::SizeLimit {
            what: "graph vertex count",
            got: v,
            cap: GRAPH_VERTEX_CAP,
        });
    }
    let pairs: Vec<(u8, u8)> = (0..v as u8)
        .flat_map(|i| (i + 1..v as u8).map(move |j| (i, j)))
        .collect();
    let m = pairs.len();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << m) {
        // union-find connectivity over the selected edges
        let mut parent: Vec<usize> = (0..v).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut components = v;
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                let ri = find(&mut parent, i as usize);
                let rj = find(&mut parent, j as usize);
                if ri != rj {
                    parent[ri] = rj;
                    components -= 1;
                }
            }
        }
        if components == 1 {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            out.push(ConnectedGraph { v, edges });
        }
    }
    Ok(out)
}

/// Chemical-potential expansion of the closure process by its Mayer-graph
/// form: term `k` is `(-rho)^k/k! int sum_{C in C_{k+1}} prod_{(i,j) in E(C)}
/// (g(y_i - y_j) - 1) dy_k` with vertex 0 pinned at the origin.
pub fn mu_graph_expansion(
    rho: f64,
    g: &PairFunction,
    k_max: usize,
    radius: f64,
    integrator: &IntegratorSpec,
) -> Result<ExpansionReport> {
    if !(rho > 0.0) {
        return Err(Error::Degenerate(format!("rho must be > 0, got {rho}")));
    }
    let cap = match integrator {
        IntegratorSpec::Quadrature { .. } => GRAPH_ORDER_CAP_QUAD,
        IntegratorSpec::MonteCarlo { .. } => GRAPH_ORDER_CAP_MC,
    };
    if k_max > cap {
        return Err(Error::SizeLimit {
            what: "graph expansion order",
            got: k_max,
            cap,
        });
    }
    let mut terms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let graphs = connected_graphs(k + 1)?;
        let g_edge = g.clone();
        let integrand = move |ys: &[Point]| {
            let mut tilde_pts: Vec<Point> = Vec::with_capacity(ys.len() + 1);
            tilde_pts.push(crate::ORIGIN);
            tilde_pts.extend_from_slice(ys);
            let mut total = 0.0;
            for graph in &graphs {
                let mut prod = 1.0;
                for &(i, j) in graph.edges() {
                    prod *=
                        g_edge.eval(&diff(&tilde_pts[i as usize], &tilde_pts[j as usize])) - 1.0;
                    if prod == 0.0 {
                        break;
                    }
                }
                total += prod;
            }
            total
        };
        // (-rho)^k / k!
        let mut coeff = 1.0;
        for i in 1..=k {
            coeff *= -rho / i as f64;
        }
        let full = integrator.integrate(
            &integrand,
            &Domain::cube(g.dimension(), 2.0 * radius)?,
            k,
        )?;
        let halved =
            integrator.integrate(&integrand, &Domain::cube(g.dimension(), radius)?, k)?;
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
    let r_convergent = terms.iter().all(|t| t.r_change() < 0.01);
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

/// Existence check for the closure process.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExistenceBound {
    /// `(e b C_g)^{-1}`.
    pub radius: f64,
    /// Strictly inside the existence regime.
    pub inside: bool,
    /// `1 / ((2 + zeta D) e b C_g)`, the stricter radius under which the
    /// expansion holds at the true chemical potential.
    pub expansion_radius: f64,
    pub expansion_inside: bool,
    /// `radius - rho`.
    pub margin: f64,
}

/// Check `rho < (e b C_g)^{-1}` and the stricter expansion radius.
///
/// `d_constant` is the prefactor of the closure's integral bound; the
/// source leaves it unquantified, so it is a parameter (1 by default in the
/// CLI).
pub fn existence_bound(rho: f64, g: &PairFunction, d_constant: f64) -> Result<ExistenceBound> {
    if !(rho >= 0.0) {
        return Err(Error::Validation(format!("rho must be >= 0, got {rho}")));
    }
    let ebc = std::f64::consts::E * g.uniformity_bound() * g.mayer_integral();
    if !(ebc > 0.0) {
        return Err(Error::Degenerate(
            "pair function has vanishing Mayer integral".into(),
        ));
    }
    let radius = 1.0 / ebc;
    let zeta = crate::combinatorics::zeta();
    let expansion_radius = 1.0 / ((2.0 + zeta * d_constant) * ebc);
    Ok(ExistenceBound {
        radius,
        inside: rho < radius,
        expansion_radius,
        expansion_inside: rho < expansion_radius,
        margin: radius - rho,
    })
}
