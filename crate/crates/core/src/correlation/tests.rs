use super::*;
use crate::integrate::{Domain, IntegratorSpec};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const QUAD: IntegratorSpec = IntegratorSpec::Quadrature { nodes_per_axis: 8 };

fn pt(x: f64) -> Point {
    [x, 0.0, 0.0]
}

fn random_points(n: usize, rng: &mut StdRng) -> Vec<Point> {
    (0..n).map(|_| pt(rng.gen_range(-2.0..2.0))).collect()
}

/// Synthetic smooth symmetric truncated family; untruncating it yields a
/// well-defined random correlation family for identity tests.
fn random_truncated(k_max: usize, rng: &mut StdRng) -> TruncatedFamily {
    let rho = rng.gen_range(0.5..1.5);
    let mut kernels = vec![Kernel::new(move |_: &[Point]| rho)];
    for n in 2..=k_max {
        let a = rng.gen_range(-0.8..0.8);
        let b = rng.gen_range(-0.5..0.5);
        let s = rng.gen_range(1.0..2.0);
        kernels.push(Kernel::new(move |pts: &[Point]| {
            let _ = n;
            let sq: f64 = pts.iter().map(|p| p[0] * p[0]).sum();
            let mut cross = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    cross += pts[i][0] * pts[j][0];
                }
            }
            a * (-sq / (s * s)).exp() * (1.0 + b * cross)
        }));
    }
    TruncatedFamily::from_kernels(kernels, 1, false).unwrap()
}

fn random_family(k_max: usize, rng: &mut StdRng) -> CorrelationFamily {
    untruncate(&random_truncated(k_max, rng)).unwrap()
}

/// Independent oracle for the truncation: the fixed-element cumulant
/// recursion kappa(S) = m(S) - sum_{T proper subset of S, min(S) in T}
/// kappa(T) m(S \ T), a different route than the partition-lattice sum.
fn truncated_by_fixed_element(family: &CorrelationFamily, pts: &[Point]) -> f64 {
    fn rec(family: &CorrelationFamily, pts: &[Point], mask: usize, n: usize) -> f64 {
        let mut sub = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sub.push(*p);
            }
        }
        let m_full = family.eval(&sub);
        if sub.len() == 1 {
            return m_full;
        }
        let first = (0..n).find(|i| mask >> i & 1 == 1).unwrap();
        let rest = mask & !(1 << first);
        // enumerate proper sub-masks T of mask containing `first`
        let mut acc = 0.0;
        let mut t = rest;
        loop {
            t = (t.wrapping_sub(1)) & rest;
            let t_mask = t | (1 << first);
            if t_mask != mask {
                let comp = mask & !t_mask;
                let mut comp_pts = Vec::new();
                for (i, p) in pts.iter().enumerate() {
                    if comp >> i & 1 == 1 {
                        comp_pts.push(*p);
                    }
                }
                acc += rec(family, pts, t_mask, n) * family.eval(&comp_pts);
            }
            if t == 0 {
                break;
            }
        }
        m_full - acc
    }
    let n = pts.len();
    rec(family, pts, (1 << n) - 1, n)
}

#[test]
fn truncation_first_orders() {
    let mut rng = StdRng::seed_from_u64(11);
    let fam = random_family(3, &mut rng);
    let rho_t = truncate(&fam).unwrap();
    // rho_T^(1) = rho^(1)
    let x = pt(0.3);
    assert_eq!(rho_t.eval(&[x]).unwrap(), fam.eval(&[x]));
    // rho_T^(2)(x,y) = rho^(2)(x,y) - rho(x) rho(y)
    let y = pt(-0.9);
    let expect = fam.eval(&[x, y]) - fam.eval(&[x]) * fam.eval(&[y]);
    assert!((rho_t.eval(&[x, y]).unwrap() - expect).abs() < 1e-15);
}

#[test]
fn poisson_truncates_to_exact_zero() {
    let fam = CorrelationFamily::poisson(0.7, 5, 1).unwrap();
    let rho_t = truncate(&fam).unwrap();
    let mut rng = StdRng::seed_from_u64(12);
    for n in 2..=5 {
        let pts = random_points(n, &mut rng);
        assert_eq!(rho_t.eval(&pts).unwrap(), 0.0, "n = {n}");
    }
}

#[test]
fn truncation_matches_fixed_element_recursion() {
    let mut rng = StdRng::seed_from_u64(13);
    for trial in 0..20 {
        let fam = random_family(5, &mut rng);
        let rho_t = truncate(&fam).unwrap();
        let n = rng.gen_range(2..=5);
        let pts = random_points(n, &mut rng);
        let a = rho_t.eval(&pts).unwrap();
        let b = truncated_by_fixed_element(&fam, &pts);
        assert!(
            (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0),
            "trial {trial}, n {n}: {a} vs {b}"
        );
    }
}

#[test]
fn untruncate_round_trip() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..10 {
        let fam = random_family(5, &mut rng);
        let back = untruncate(&truncate(&fam).unwrap()).unwrap();
        let n = rng.gen_range(1..=5);
        let pts = random_points(n, &mut rng);
        let a = fam.eval(&pts);
        let b = back.eval(&pts);
        assert!(
            (a - b).abs() <= 1e-12 * a.abs().max(1.0),
            "n {n}: {a} vs {b}"
        );
    }
}

#[test]
fn untruncate_of_pure_density_is_poisson() {
    // only rho_T^(1) = rho nonzero: rho^(n) = rho^n
    let rho = 0.6;
    let mut kernels = vec![Kernel::new(move |_: &[Point]| rho)];
    for _ in 2..=5 {
        kernels.push(Kernel::new(|_: &[Point]| 0.0));
    }
    let rho_t = TruncatedFamily::from_kernels(kernels, 1, true).unwrap();
    let fam = untruncate(&rho_t).unwrap();
    let mut rng = StdRng::seed_from_u64(15);
    for n in 1..=5 {
        let pts = random_points(n, &mut rng);
        assert!((fam.eval(&pts) - rho.powi(n as i32)).abs() < 1e-15);
    }
}

#[test]
fn k1_truncation_is_identity() {
    let fam = CorrelationFamily::poisson(0.3, 1, 1).unwrap();
    let back = untruncate(&truncate(&fam).unwrap()).unwrap();
    assert_eq!(back.eval(&[pt(0.2)]), fam.eval(&[pt(0.2)]));
}

#[test]
fn f_family_first_orders() {
    let mut rng = StdRng::seed_from_u64(16);
    let fam = random_family(3, &mut rng);
    let f = f_family(&fam).unwrap();
    let rho = fam.rho();
    let x = pt(0.4);
    let y = pt(-0.7);
    let z = pt(1.1);
    // F_1 = rho^(2)/rho
    assert!((f.eval(x, &[y]).unwrap() - fam.eval(&[x, y]) / rho).abs() < 1e-15);
    // F_2 = rho^(3)/rho - F_1 F_1 (the single two-block partition of a pair)
    let f1y = fam.eval(&[x, y]) / rho;
    let f1z = fam.eval(&[x, z]) / rho;
    let expect = fam.eval(&[x, y, z]) / rho - f1y * f1z;
    assert!((f.eval(x, &[y, z]).unwrap() - expect).abs() < 1e-14);
}

#[test]
fn poisson_f_family_collapses_to_density() {
    let fam = CorrelationFamily::poisson(0.8, 5, 1).unwrap();
    let f = f_family(&fam).unwrap();
    let mut rng = StdRng::seed_from_u64(17);
    for k in 1..=4 {
        let ys = random_points(k, &mut rng);
        let got = f.eval(pt(0.0), &ys).unwrap();
        let expect = if k == 1 { 0.8 } else { 0.0 };
        assert!((got - expect).abs() < 1e-15, "k = {k}: {got}");
    }
}

#[test]
fn zero_density_is_a_hard_error() {
    let fam = CorrelationFamily::poisson(0.0, 3, 1).unwrap();
    assert!(matches!(f_family(&fam), Err(crate::Error::Degenerate(_))));
    let rho_t = truncate(&fam).unwrap();
    assert!(matches!(
        tilde_family(&rho_t),
        Err(crate::Error::Degenerate(_))
    ));
}

#[test]
fn tilde_first_order_is_truncated_pair_over_rho() {
    let mut rng = StdRng::seed_from_u64(18);
    let fam = random_family(4, &mut rng);
    let rho_t = truncate(&fam).unwrap();
    let tilde = tilde_family(&rho_t).unwrap();
    let x = pt(0.1);
    let y = pt(0.8);
    let expect = rho_t.eval(&[x, y]).unwrap() / fam.rho();
    assert!((tilde.eval(x, &[y]).unwrap() - expect).abs() < 1e-15);
}

#[test]
fn poisson_tilde_vanishes_identically() {
    let fam = CorrelationFamily::poisson(1.3, 6, 1).unwrap();
    let tilde = tilde_family(&truncate(&fam).unwrap()).unwrap();
    let mut rng = StdRng::seed_from_u64(19);
    for k in 1..=5 {
        let ys = random_points(k, &mut rng);
        assert_eq!(tilde.eval(pt(0.3), &ys).unwrap(), 0.0, "k = {k}");
    }
}

#[test]
fn split_identity_algebra_at_k1() {
    // F_1 = rho_T^(1) + tilde_1 is rho^(2)/rho = rho + rho_T^(2)/rho
    let mut rng = StdRng::seed_from_u64(20);
    let fam = random_family(3, &mut rng);
    let resid = split_check(
        &fam,
        &[(pt(0.5), vec![pt(-0.2)]), (pt(-1.0), vec![pt(0.9)])],
    )
    .unwrap();
    assert!(resid < 1e-12, "residual {resid}");
}

#[test]
fn split_identity_random_families() {
    let mut rng = StdRng::seed_from_u64(21);
    for trial in 0..20 {
        let fam = random_family(6, &mut rng);
        let mut probes = Vec::new();
        for _ in 0..10 {
            let k = rng.gen_range(1..=5);
            probes.push((pt(rng.gen_range(-2.0..2.0)), random_points(k, &mut rng)));
        }
        let resid = split_check(&fam, &probes).unwrap();
        assert!(resid <= 1e-10, "trial {trial}: residual {resid}");
    }
}

#[test]
fn produced_kernels_are_symmetric() {
    let mut rng = StdRng::seed_from_u64(22);
    let fam = random_family(5, &mut rng);
    let rho_t = truncate(&fam).unwrap();
    let tilde = tilde_family(&rho_t).unwrap();
    for _ in 0..10 {
        let n = rng.gen_range(2..=4);
        let mut pts = random_points(n, &mut rng);
        let a = rho_t.eval(&pts).unwrap();
        let t_a = tilde.eval(pt(0.2), &pts).unwrap();
        // random transposition
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        pts.swap(i, j);
        let b = rho_t.eval(&pts).unwrap();
        let t_b = tilde.eval(pt(0.2), &pts).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert!((t_a - t_b).abs() <= 1e-12 * t_a.abs().max(1.0));
    }
}

#[test]
fn tilde_translation_invariance_for_ti_families() {
    let rho = 0.05;
    let sigma = 1.0;
    let g = move |r: f64| if r.abs() < sigma { 0.0 } else { 1.0 };
    let kernels: Vec<Kernel> = (1..=4)
        .map(|_| {
            Kernel::new(move |pts: &[Point]| {
                let mut v = pts.iter().fold(1.0, |acc, _| acc * rho);
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        v *= g(pts[i][0] - pts[j][0]);
                    }
                }
                v
            })
        })
        .collect();
    let fam = CorrelationFamily::new(kernels, 1, true).unwrap();
    let tilde = tilde_family(&truncate(&fam).unwrap()).unwrap();
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let ys = random_points(k, &mut rng);
        let shift = rng.gen_range(-3.0..3.0);
        let shifted: Vec<Point> = ys.iter().map(|p| pt(p[0] + shift)).collect();
        let a = tilde.eval(crate::ORIGIN, &ys).unwrap();
        let b = tilde.eval(pt(shift), &shifted).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn janossy_poisson_converges_to_void_probability() {
    // n = 0 partial sums approach exp(-rho |Lambda|); K = 6 at rho|Lambda| =
    // 0.5 is within 1e-4 by the alternating-series remainder
    let rho = 0.05;
    let fam = CorrelationFamily::poisson(rho, 7, 1).unwrap();
    let dom = Domain::cube(1, 10.0).unwrap();
    let rep = janossy(&fam, &dom, &[], 6, &QUAD).unwrap();
    let expect = (-rho * 10.0f64).exp();
    let got = *rep.partial_sums.last().unwrap();
    assert!((got - expect).abs() < 1e-4, "{got} vs {expect}");
    // K = 0 partial sum is rho^(0) = 1
    assert!((rep.partial_sums[0] - 1.0).abs() < 1e-15);
}

#[test]
fn janossy_poisson_one_point() {
    let rho = 0.05;
    let fam = CorrelationFamily::poisson(rho, 7, 1).unwrap();
    let dom = Domain::cube(1, 10.0).unwrap();
    let rep = janossy(&fam, &dom, &[pt(0.0)], 6, &QUAD).unwrap();
    let expect = rho * (-rho * 10.0f64).exp();
    let got = *rep.partial_sums.last().unwrap();
    assert!((got - expect).abs() < 1e-4 * rho, "{got} vs {expect}");
    assert!((rep.partial_sums[0] - rho).abs() < 1e-15);
}

#[test]
fn log_j0_poisson_is_minus_rho_volume_exactly() {
    let rho = 0.41;
    let fam = CorrelationFamily::poisson(rho, 4, 1).unwrap();
    let rho_t = truncate(&fam).unwrap();
    let dom = Domain::cube(1, 3.0).unwrap();
    let terms = log_j0(&rho_t, &dom, 4, &QUAD).unwrap();
    assert!((terms[0] + rho * 3.0).abs() < 1e-12);
    for (i, t) in terms.iter().enumerate().skip(1) {
        assert_eq!(*t, 0.0, "order {}", i + 1);
    }
}

#[test]
fn exp_of_log_j0_matches_janossy_gradedly_on_sites() {
    // discretize a box into 4 sites and compare exp(sum (-1)^k/k! S_k[rho_T])
    // against sum (-1)^m/m! S_m[rho] order by order via the site-space
    // machinery, with F_k = (-1)^k rho_T^(k) and Phi = (-1)^n rho^(n)
    use crate::exprep::{verify_exp_identity, SiteFamily, SiteSpace, SymmetricTable};
    let mut rng = StdRng::seed_from_u64(24);
    let fam = random_family(6, &mut rng);
    let rho_t = truncate(&fam).unwrap();
    let sites: Vec<Point> = vec![pt(-1.5), pt(-0.5), pt(0.5), pt(1.5)];
    let weights = vec![1.0f64; 4];
    let space = SiteSpace::new(sites.clone(), weights).unwrap();
    let tables: Vec<SymmetricTable<f64>> = (1..=6)
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            SymmetricTable::from_fn(n, 4, |idx| {
                let pts: Vec<Point> = idx.iter().map(|&i| sites[i]).collect();
                sign * rho_t.eval(&pts).unwrap()
            })
        })
        .collect();
    let site_family = SiteFamily::new(tables).unwrap();
    for check in verify_exp_identity(&site_family, &space, 6).unwrap() {
        assert!(
            check.relative_residual() <= 1e-12,
            "order {}: {:e}",
            check.order,
            check.relative_residual()
        );
    }
}

#[test]
fn mu_expansion_poisson_is_log_rho_exactly() {
    let rho = 0.05;
    let fam = CorrelationFamily::poisson(rho, 5, 1).unwrap();
    let tilde = tilde_family(&truncate(&fam).unwrap()).unwrap();
    let opts = ExpansionOptions::quadrature(4, 5.0, 24);
    let rep = mu_expansion(&tilde, &opts).unwrap();
    for t in &rep.terms {
        assert_eq!(t.value, 0.0, "k = {}", t.k);
    }
    assert_eq!(rep.mu, rho.ln());
    assert!(rep.r_convergent);
}

#[test]
fn mu_expansion_rejects_non_translation_invariant_input() {
    let mut rng = StdRng::seed_from_u64(25);
    let rho_t = random_truncated(3, &mut rng);
    let tilde = tilde_family(&rho_t).unwrap();
    let opts = ExpansionOptions::quadrature(2, 2.0, 50);
    assert!(matches!(
        mu_expansion(&tilde, &opts),
        Err(crate::Error::Unsupported(_))
    ));
}

#[test]
fn hard_rod_first_term_is_twice_rho_sigma() {
    let rho = 0.05;
    let kernels: Vec<Kernel> = (1..=2)
        .map(|_| {
            Kernel::new(move |pts: &[Point]| {
                let mut v = pts.iter().fold(1.0, |acc, _| acc * rho);
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        if (pts[i][0] - pts[j][0]).abs() < 1.0 {
                            v = 0.0;
                        }
                    }
                }
                v
            })
        })
        .collect();
    let fam = CorrelationFamily::new(kernels, 1, true).unwrap();
    let tilde = tilde_family(&truncate(&fam).unwrap()).unwrap();
    // aligned grid: half-integer sigma/h keeps pair separations off nodes
    let opts = ExpansionOptions::quadrature(1, 3.0, 363);
    let rep = mu_expansion(&tilde, &opts).unwrap();
    assert!(
        (rep.terms[0].value - 2.0 * rho).abs() < 1e-12,
        "term = {}",
        rep.terms[0].value
    );
}

#[test]
fn pressure_poisson_is_rho() {
    let rho = 0.23;
    let fam = CorrelationFamily::poisson(rho, 5, 1).unwrap();
    let rho_t = truncate(&fam).unwrap();
    let opts = ExpansionOptions::quadrature(3, 4.0, 40);
    let rep = pressure_expansion(&rho_t, &opts).unwrap();
    assert_eq!(rep.pressure, rho);
    for t in &rep.terms {
        assert_eq!(t.value, 0.0);
    }
    // zeroth partial sum is rho itself
    assert_eq!(rep.pressure_partials[0], rho);
}

#[test]
fn assumption_b_recovers_exact_geometric_integrals() {
    // construct rho_T^(1+n) with I_n = n! D0 q0^n exactly: constants over a
    // unit-volume domain divided by the measure
    let rho = 1.0;
    let d0 = 0.4;
    let q0 = 0.15f64;
    let side = 2.0f64;
    let mut kernels = vec![Kernel::new(move |_: &[Point]| rho)];
    for n in 1..=3usize {
        let mut fact = 1.0;
        for i in 1..=n {
            fact *= i as f64;
        }
        let value = fact * d0 * q0.powi(n as i32) / side.powi(n as i32);
        kernels.push(Kernel::new(move |_: &[Point]| value));
    }
    let rho_t = TruncatedFamily::from_kernels(kernels, 1, true).unwrap();
    let opts = AssumptionBOptions {
        n_max: 3,
        domain: Domain::cube(1, side).unwrap(),
        integrator: IntegratorSpec::Quadrature { nodes_per_axis: 64 },
        probes: vec![],
    };
    let fit = assumption_b_diagnostic(&rho_t, &opts).unwrap();
    assert!((fit.d - d0).abs() < 1e-9, "D = {}", fit.d);
    assert!((fit.q - q0).abs() < 1e-9, "q = {}", fit.q);
    assert!(fit.convergent);
}

#[test]
fn assumption_b_poisson_is_trivially_convergent() {
    let fam = CorrelationFamily::poisson(0.4, 4, 1).unwrap();
    let rho_t = truncate(&fam).unwrap();
    let opts = AssumptionBOptions {
        n_max: 3,
        domain: Domain::cube(1, 4.0).unwrap(),
        integrator: IntegratorSpec::Quadrature { nodes_per_axis: 32 },
        probes: vec![],
    };
    let fit = assumption_b_diagnostic(&rho_t, &opts).unwrap();
    assert_eq!(fit.q, 0.0);
    assert!(fit.convergent);
    assert!(fit.i_n.iter().all(|&v| v == 0.0));
}

#[test]
fn assumption_b_single_order_is_undetermined() {
    let rho = 1.0;
    let kernels = vec![
        Kernel::new(move |_: &[Point]| rho),
        Kernel::new(|_: &[Point]| 0.3),
        Kernel::new(|_: &[Point]| 0.0),
    ];
    let rho_t = TruncatedFamily::from_kernels(kernels, 1, true).unwrap();
    let opts = AssumptionBOptions {
        n_max: 2,
        domain: Domain::cube(1, 2.0).unwrap(),
        integrator: IntegratorSpec::Quadrature { nodes_per_axis: 16 },
        probes: vec![],
    };
    assert!(matches!(
        assumption_b_diagnostic(&rho_t, &opts),
        Err(crate::Error::FitUndetermined(_))
    ));
}

#[test]
fn continuum_order_cap_guards_expansions() {
    let fam = CorrelationFamily::poisson(0.1, 8, 1).unwrap();
    assert!(matches!(
        truncate(&fam),
        Err(crate::Error::SizeLimit { .. })
    ));
}
