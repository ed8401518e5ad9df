//! Library results against independent computations.

mod common;

use std::sync::Arc;

use nlap_galerkin::galerkin::{solve_pd, solve_sublinear, solve_weighted_sublinear, Certification, PdProblem, Schedule, SolveOptions};
use nlap_galerkin::nonlinearity::phi;
use nlap_galerkin::thresholds::{principal_eigenvalue, q_eval, rayleigh_quotient, solve_t1, EigenOptions};
use nlap_galerkin::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn eigenvalue_matches_shooting_on_unit_disc() {
    let mesh = Arc::new(RadialMesh::build(1.0, 400, 1.0, 2).unwrap());
    let (s, _) = principal_eigenvalue(&mesh, &EigenOptions::default()).unwrap();
    let oracle = common::shooting_sigma1(2);
    assert!((s - oracle).abs() < 1e-3 * oracle, "{s} vs {oracle}");
}

#[test]
fn eigenfunction_is_a_local_minimizer() {
    let mesh = Arc::new(RadialMesh::build(1.0, 200, 1.0, 3).unwrap());
    let (s, phi1) = principal_eigenvalue(&mesh, &EigenOptions::default()).unwrap();
    assert!((rayleigh_quotient(&phi1) - s).abs() <= 1e-9 * s);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = mesh.elements();
    for _ in 0..100 {
        let mut v = phi1.values().to_vec();
        for x in &mut v[..m] {
            *x += 1e-3 * rng.gen_range(-1.0..1.0);
        }
        let w = GridFunction::new(mesh.clone(), v).unwrap();
        assert!(rayleigh_quotient(&w) >= s * (1.0 - 1e-10));
    }
}

#[test]
fn t1_is_the_single_crossing_and_minimizes_q() {
    let p = ProblemParams::baseline();
    let cap = 50.0;
    let t1 = solve_t1(cap, &p, 1e-12).unwrap();
    let target = cap * (p.n as f64 - p.q);
    // independent H on a log grid
    let h = |t: f64| {
        let s = p.alpha * t * t;
        2.0 * t.powf(2.5) * (s.exp() - 1.0) + 2.0 * p.alpha * t.powf(4.5) * s.exp()
    };
    let grid: Vec<f64> = (0..4000).map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 3999.0)).collect();
    let signs: Vec<bool> = grid.iter().map(|t| h(*t) > target).collect();
    let crossings: Vec<usize> = (1..grid.len()).filter(|&i| signs[i] != signs[i - 1]).collect();
    assert_eq!(crossings.len(), 1);
    let i = crossings[0];
    assert!(grid[i - 1] <= t1 && t1 <= grid[i], "{t1} not in [{}, {}]", grid[i - 1], grid[i]);

    let qs: Vec<f64> = grid.iter().map(|t| q_eval(*t, cap, &p).unwrap()).collect();
    let j = (0..qs.len()).min_by(|a, b| qs[*a].total_cmp(&qs[*b])).unwrap();
    assert!(grid[j.saturating_sub(1)] <= t1 && t1 <= grid[(j + 1).min(grid.len() - 1)]);
    assert!(qs[..=j].windows(2).all(|w| w[1] < w[0]));
    assert!(qs[j..].windows(2).all(|w| w[1] > w[0]));
    assert!(q_eval(1e-12, cap, &p).unwrap() > 1e6 && q_eval(1e-30, cap, &p).unwrap() > 1e12);
    assert!(q_eval(5.0, cap, &p).unwrap() > 1e10);
}

#[test]
fn phi_power_is_below_phi_of_scaled_argument() {
    // φ_N(t)^r <= φ_N(rt) for r >= 1
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let n = rng.gen_range(2..5);
        let t = rng.gen_range(0.0..40.0);
        let r = rng.gen_range(1.0..8.0);
        let lhs = phi(n, t).unwrap().powf(r);
        let rhs = phi(n, r * t).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-12), "N={n} t={t} r={r}: {lhs} > {rhs}");
    }
}

#[test]
fn sublinear_solution_satisfies_energy_identity() {
    let mesh = Arc::new(RadialMesh::build(6.0, 600, 1.0, 2).unwrap());
    let w = Weight::exponential(1.0);
    let q = 1.5;
    let u = solve_weighted_sublinear(&w, mesh, q, &SolveOptions::default()).unwrap().solution;
    let r = u.mesh().radius();
    let lhs = u.integrate_on(0.0, r, |_, v, d| Ok(d.abs().powi(2) + v.abs().powi(2))).unwrap();
    let rhs = u.integrate_on(0.0, r, |x, v, _| Ok(w.eval(x) * v.abs().powf(q))).unwrap();
    assert!((lhs - rhs).abs() <= 1e-8 * rhs, "{lhs} vs {rhs}");
}

fn bessel_i0(x: f64) -> f64 {
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > 1e-17 * sum {
        term *= (x / (2.0 * k)).powi(2);
        sum += term;
        k += 1.0;
    }
    sum
}

#[test]
fn sublinear_center_value_on_large_ball() {
    // N = 2: linearizing about u* = b^{1/(2−q)} gives −Δv + (2−q)v = 0, so the
    // center deficit u* − u(0) decays like 1/I₀(√(2−q) R)
    let (b, q) = (2.0f64, 1.5);
    let ustar = b.powf(1.0 / (2.0 - q));
    let kappa = (2.0 - q).sqrt();
    let deficit = |r: f64| {
        let mesh = Arc::new(RadialMesh::build(r, (80.0 * r) as usize, 1.0, 2).unwrap());
        ustar - solve_sublinear(b, mesh, q, 1e-10).unwrap().values()[0]
    };
    let (d16, d20) = (deficit(16.0), deficit(20.0));
    assert!(d20 > 0.0 && d20 < 1e-4 * ustar);
    let predicted = bessel_i0(kappa * 20.0) / bessel_i0(kappa * 16.0);
    assert!((d16 / d20 / predicted - 1.0).abs() < 0.02, "{} vs {predicted}", d16 / d20);
}

#[test]
fn zero_nonlinearity_schedule_matches_scaled_sublinear_problem() {
    let lambda = 0.3;
    let mesh = Arc::new(RadialMesh::build(5.0, 200, 1.0, 2).unwrap());
    let w = Weight::exponential(1.0);
    let params = ProblemParams::baseline().with_lambda(lambda);
    let pb = PdProblem {
        mesh: mesh.clone(),
        nl: Nonlinearity::new(NonlinearityKind::Zero, params),
        params,
        weight: w.clone(),
        cert: Certification { rho: 5.0, varsigma: 1e-6 },
    };
    let opts = SolveOptions::default();
    let pd = solve_pd(&pb, &Schedule::default(), None, &opts).unwrap();
    let direct = solve_weighted_sublinear(&w.with_amplitude(lambda), mesh, params.q, &opts).unwrap().solution;
    let d = pd.report.solution.sub(&direct).unwrap().w1n_norm();
    assert!(d <= 1e-6 * direct.w1n_norm(), "difference {d}");
}
