use std::sync::Arc;

use nlap_galerkin::apriori::{build_ledger, AuxConstants};
use nlap_galerkin::brouwer::{certify_boundary, euclid, find_zero, ClosureField, CertifyOptions, ZeroOptions};
use nlap_galerkin::config::RunConfig;
use nlap_galerkin::nonlinearity::phi;
use nlap_galerkin::thresholds::{compute_rho_lambda_star, h_eval, ConstantInputs};
use nlap_galerkin::*;
use proptest::prelude::*;

fn kinds() -> Vec<NonlinearityKind> {
    vec![NonlinearityKind::Canonical, NonlinearityKind::SineModulated, NonlinearityKind::PositivePartSine]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strauss_sign(k in 1u64..2000, s in -15.0f64..15.0, which in 0usize..3) {
        let nl = Nonlinearity::new(kinds()[which].clone(), ProblemParams::baseline());
        prop_assert!(s * nl.strauss(k, s).unwrap() >= 0.0);
    }

    #[test]
    fn strauss_below_envelope(k in 1u64..200, s in -20.0f64..20.0, sine in any::<bool>()) {
        let kind = if sine { NonlinearityKind::SineModulated } else { NonlinearityKind::Canonical };
        let nl = Nonlinearity::new(kind, ProblemParams::baseline());
        let sf = s * nl.strauss(k, s).unwrap();
        if sf > 0.0 {
            let env = nl.strauss_envelope(k, s).unwrap();
            prop_assert!(sf.ln() <= env.ln_value + 1e-12);
        }
    }

    #[test]
    fn phi_increasing_below_exp(n in 2usize..5, a in 0.0f64..600.0, d in 1e-6f64..50.0) {
        let (x, y) = (phi_n(n, a).unwrap(), phi_n(n, a + d).unwrap());
        prop_assert!(y > x);
        prop_assert!(x <= a.exp());
    }

    #[test]
    fn norms_are_homogeneous(vals in prop::collection::vec(-2.0f64..2.0, 20), c in -5.0f64..5.0, n in 2usize..4) {
        let mesh = Arc::new(RadialMesh::build(3.0, 20, 1.0, n).unwrap());
        let mut v = vals.clone();
        v.push(0.0);
        let u = GridFunction::new(mesh, v).unwrap();
        let cu = u.scaled(c);
        let tol = 1e-12 * (1.0 + u.w1n_norm());
        prop_assert!((cu.w1n_norm() - c.abs() * u.w1n_norm()).abs() <= tol * (1.0 + c.abs()));
        let (l, cl) = (u.ls_norm(3.5), cu.ls_norm(3.5));
        prop_assert!((cl - c.abs() * l).abs() <= 1e-12 * (1.0 + l) * (1.0 + c.abs()));
    }

    #[test]
    fn tm_functional_monotone_in_alpha(amp in 0.01f64..1.5, a in 0.1f64..5.0, d in 0.01f64..5.0) {
        let mesh = Arc::new(RadialMesh::build(2.0, 40, 1.0, 2).unwrap());
        let u = GridFunction::from_fn(mesh, |r| amp * (1.0 - r / 2.0));
        prop_assert!(u.tm_functional(a + d).unwrap() >= u.tm_functional(a).unwrap());
    }

    #[test]
    fn certified_zero_lies_in_ball(b in prop::collection::vec(-0.8f64..0.8, 1..6), eps in 0.0f64..0.2) {
        let d = b.len();
        let bb = b.clone();
        let f = ClosureField::new(d, move |x: &[f64]| {
            x.iter().zip(&bb).map(|(xi, bi)| xi - bi + eps * xi.sin()).collect()
        });
        let radius = 2.0;
        let cert = certify_boundary(&f, radius, &CertifyOptions { samples: 2 * d + 64, ..Default::default() }).unwrap();
        prop_assume!(cert.passed());
        let opts = ZeroOptions::default();
        let z = find_zero(&f, radius, &opts).unwrap();
        prop_assert!(euclid(&z.point) <= radius + opts.tol_norm);
        prop_assert!(z.residual <= opts.tol);
    }

    #[test]
    fn zero_is_scale_invariant(b in prop::collection::vec(-0.8f64..0.8, 1..5), c in 0.1f64..10.0) {
        let d = b.len();
        let (b1, b2) = (b.clone(), b.clone());
        let f = ClosureField::new(d, move |x: &[f64]| x.iter().zip(&b1).map(|(xi, bi)| xi - bi + 0.1 * xi * xi).collect());
        let g = ClosureField::new(d, move |x: &[f64]| x.iter().zip(&b2).map(|(xi, bi)| c * (xi - bi + 0.1 * xi * xi)).collect());
        let opts = ZeroOptions { tol: 1e-12, ..Default::default() };
        let (zf, zg) = (find_zero(&f, 2.0, &opts).unwrap(), find_zero(&g, 2.0, &opts).unwrap());
        for (a, b) in zf.point.iter().zip(&zg.point) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn h_increasing(t in 0.0f64..10.0, d in 1e-6f64..1.0) {
        let p = ProblemParams::baseline();
        prop_assert!(h_eval(t + d, &p).unwrap() > h_eval(t, &p).unwrap());
    }

    #[test]
    fn lambda_star_identity(k1 in 0.01f64..10.0, k2 in 0.01f64..10.0, c in 0.5f64..10.0, q in 1.05f64..1.95) {
        let p = ProblemParams { q, ..ProblemParams::baseline() };
        let s = compute_rho_lambda_star(&p, &ConstantInputs { k1, k2, k3: 1.0, c_alpha_n: c, c_star: 1.0 }).unwrap();
        prop_assert!(s.lambda_star > 0.0);
        let lhs = s.lambda_star * 4.0 * k1;
        let rhs = s.rho.powf(2.0 - q);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs);
    }

    #[test]
    fn ledger_invariants(n in 2usize..5, extra in 0.1f64..20.0, frac in 0.05f64..0.95) {
        let nf = n as f64;
        let pbar = 2.0 * nf * nf + extra;
        let ptilde = 2.0 * nf + frac * (pbar / nf - 2.0 * nf);
        let aux = AuxConstants { c_rho: 1.0, lambda_star: 0.1, a_norm: 1.0, r_star: 1.0 };
        let l = build_ledger(n, pbar, ptilde, 0.5, &aux).unwrap();
        // P near 1 overflows Q∞ in f64
        prop_assume!(l.q_inf.is_finite());
        for k in 1..30 {
            let lhs = l.beta(k) + nf;
            prop_assert!((lhs - (nf + l.beta(k - 1)) / l.p).abs() <= 1e-10 * lhs);
        }
        prop_assert!((l.q_partial(1) - 1.0 / (1.0 - l.p * l.p)).abs() <= 1e-12 * l.q_partial(1));
        prop_assert!(l.q_partial(1) <= l.q_inf * (1.0 + 1e-12));
        prop_assert!(l.theta > 0.0 && l.theta < l.beta0 / (nf + l.beta0));
        prop_assert!(l.sup_bound(3.0) >= l.sup_bound(1.0));
        prop_assert!(l.decay_bound(0.3) >= l.decay_bound(0.2));
    }

    #[test]
    fn inf_on_ball_nonincreasing(r1 in 0.1f64..10.0, d in 0.0f64..5.0, kind in 0usize..3) {
        let w = match kind {
            0 => Weight::exponential(0.7),
            1 => Weight::power(3.0),
            _ => Weight::constant_on_ball(2.0),
        };
        let mesh = RadialMesh::build(20.0, 200, 1.0, 2).unwrap();
        prop_assert!(w.inf_on_ball(r1 + d, &mesh) <= w.inf_on_ball(r1, &mesh));
    }

    #[test]
    fn power_weight_window(gamma in 0.01f64..3.0, q in 1.05f64..1.95) {
        let ok = Weight::power(gamma).validate(2, q).is_ok();
        prop_assert_eq!(ok, gamma > 2.0 - q);
    }

    #[test]
    fn config_rejects_q_outside_window(q in prop_oneof![2.0f64..5.0, 0.0f64..1.0]) {
        let text = format!(
            "[problem]\nn = 2\np = 6.0\nq = {q}\nalpha = 1.0\na1 = 1.0\n[weight]\nkind = \"exponential\"\nrate = 1.0\n[mesh]\nradius = 4.0\nelements = 10\n"
        );
        let e = RunConfig::parse(&text).unwrap_err().to_string();
        prop_assert!(e.contains("1<q<N"), "{}", e);
    }
}

#[test]
fn phi_tail_matches_direct_sum_for_small_t() {
    for t in [1e-300f64, 1e-20, 1e-3, 0.5] {
        // φ₂(t) = e^t − 1
        let direct: f64 = (1..40).map(|j| t.powi(j) / (1..=j).map(|i| i as f64).product::<f64>()).sum();
        let v = phi(2, t).unwrap();
        assert!((v - direct).abs() <= 1e-14 * direct, "t = {t}: {v} vs {direct}");
    }
}
